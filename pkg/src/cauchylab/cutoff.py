"""Time cutoff equal to 1 on the inner interval and 0 outside [-T, T].

Each transition band has width delta*T/2 and follows the quintic smoothstep
S(s) = 6 s^5 - 15 s^4 + 10 s^3, so the profile is C^2 with
sup|chi'| = (15/4)/(delta T) and sup|chi''| = (40/sqrt 3)/(delta T)^2.
The single universal constant bounding both is varpi = 40/sqrt(3).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SUP_S1 = 15.0 / 8.0  # at s = 1/2
SUP_S2 = 10.0 / math.sqrt(3.0)  # at s = (1 -+ 1/sqrt 3)/2
VARPI_ANALYTIC = max(SUP_S1 * 2.0, SUP_S2 * 4.0)


def smoothstep(s):
    s = np.clip(s, 0.0, 1.0)
    return s ** 3 * (10 - 15 * s + 6 * s ** 2)


def smoothstep_d1(s):
    s = np.clip(s, 0.0, 1.0)
    return 30 * s ** 2 * (1 - s) ** 2


def smoothstep_d2(s):
    s = np.clip(s, 0.0, 1.0)
    return 60 * s * (1 - s) * (1 - 2 * s)


def certify_varpi(samples: int = 100_001) -> float:
    """Dense-sampling maximum of the scaled derivative bounds; must agree with the calculus value."""
    s = np.linspace(0.0, 1.0, samples)
    # include the exact maximizers so sampling does not sit just below them
    s = np.concatenate([s, [0.5, (1 - 1 / math.sqrt(3)) / 2, (1 + 1 / math.sqrt(3)) / 2]])
    d1 = 2.0 * np.abs(smoothstep_d1(s)).max()
    d2 = 4.0 * np.abs(smoothstep_d2(s)).max()
    return float(max(d1, d2))


@dataclass(frozen=True)
class CutoffProfile:
    delta: float
    T: float
    varpi: float

    @property
    def plateau(self) -> float:
        return (1 - self.delta / 2) * self.T

    @property
    def width(self) -> float:
        return self.delta * self.T / 2

    @property
    def bands(self) -> list[tuple[float, float]]:
        """Closed supports of chi' and chi'': the two transition bands."""
        return [(-self.T, -self.plateau), (self.plateau, self.T)]

    def evaluate(self, t):
        """(chi, chi', chi'') at t."""
        t = np.asarray(t, dtype=float)
        a = np.abs(t)
        s = (a - self.plateau) / self.width
        inside = (s > 0) & (s < 1)
        sgn = np.sign(t)
        chi = np.where(a <= self.plateau, 1.0, np.where(a >= self.T, 0.0, 1 - smoothstep(s)))
        d1 = np.where(inside, -sgn * smoothstep_d1(s) / self.width, 0.0)
        d2 = np.where(inside, -smoothstep_d2(s) / self.width ** 2, 0.0)
        return chi, d1, d2

    def __call__(self, t):
        return self.evaluate(t)[0]

    def derivative(self, t, order: int = 1):
        return self.evaluate(t)[order]


def build_cutoff(delta: float, T: float) -> CutoffProfile:
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not T > 0:
        raise ValueError("T must be positive")
    sampled = certify_varpi()
    if abs(sampled - VARPI_ANALYTIC) > 1e-10:
        raise ArithmeticError(f"cutoff constant mismatch: sampled {sampled}, analytic {VARPI_ANALYTIC}")
    return CutoffProfile(float(delta), float(T), VARPI_ANALYTIC)
