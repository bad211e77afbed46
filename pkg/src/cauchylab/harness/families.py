"""Seeded manufactured families used by the certificates and the CLI."""
from __future__ import annotations

import math

import numpy as np
import sympy as sp

from ..fields import SPACE, T_SYM, Manufactured, X, Y
from ..multiplier import standing_wave

FAMILIES = ("standing-waves", "travelling-waves", "harmonic-polynomials", "hadamard", "random-smooth")


def _num(v: float, digits: int = 6):
    """Rational-looking constant so symbolic expressions stay short and exact."""
    return sp.Rational(str(round(float(v), digits)))


def _time_factor(rng: np.random.Generator, T: float, allow_complex: bool):
    kind = rng.integers(0, 4 if allow_complex else 3)
    w = _num(rng.uniform(0.5, 3.0), 3)
    ph = _num(rng.uniform(0, 2 * math.pi), 3)
    if kind == 0:
        return sp.cos(w * T_SYM + ph)
    if kind == 1:
        c = _num(rng.uniform(-1, 1), 3)
        return 1 + c * T_SYM / _num(T) + _num(rng.uniform(-0.5, 0.5), 3) * (T_SYM / _num(T)) ** 2
    if kind == 2:
        return sp.exp(-(T_SYM / _num(T)) ** 2) * sp.sin(w * T_SYM + ph)
    return sp.exp(sp.I * w * T_SYM)


def _space_factor(rng: np.random.Generator, n: int):
    xs = SPACE[:n]
    kind = rng.integers(0, 3)
    if kind == 0:
        out = sp.Integer(1)
        for s in xs:
            out *= 1 + _num(rng.uniform(-1, 1), 3) * s
        return out
    if kind == 1:
        out = sp.Integer(1)
        for s in xs:
            out *= sp.cos(_num(rng.uniform(0.5, 3.0), 3) * s + _num(rng.uniform(0, 3), 3))
        return out
    return sp.exp(-sum((s - _num(rng.uniform(0.2, 0.8), 3)) ** 2 for s in xs))


def transform_family(rng: np.random.Generator, size: int, T: float, n: int = 1) -> list[Manufactured]:
    """Products and sums of smooth space and time profiles, some complex."""
    out = []
    for i in range(size):
        terms = int(rng.integers(1, 3))
        expr = sum(_num(rng.uniform(0.5, 2.0), 3) * _space_factor(rng, n) * _time_factor(rng, T, True)
                   for _ in range(terms))
        out.append(Manufactured(expr, n, True, f"transform[{i}]"))
    return out


def kink_field(omega: float = 2.0, t0: float = 0.0, n: int = 1) -> Manufactured:
    """exp(i omega t)(1 + |t - t0|)(1 + x): Lipschitz in t at t0, so inversion tails decay like 1/lam."""
    return Manufactured(sp.exp(sp.I * omega * T_SYM) * (1 + sp.Abs(T_SYM - t0)) * (1 + X), n, True,
                        f"kink(omega={omega:g})")


def plane_exponential(omega: float = 2.0, n: int = 1) -> Manufactured:
    return Manufactured(sp.exp(sp.I * omega * T_SYM) * (1 + X), n, True, f"exp(i {omega:g} t)")


def boundary_vanishing_family(rng: np.random.Generator, size: int, n: int = 2) -> list[Manufactured]:
    """Fields vanishing on the boundary of the unit box with generic time dependence (Pu != 0)."""
    out = []
    for i in range(size):
        terms = int(rng.integers(1, 3))
        expr = sp.Integer(0)
        for _ in range(terms):
            prod = sp.Integer(1)
            for s in SPACE[:n]:
                prod *= sp.sin(int(rng.integers(1, 3)) * sp.pi * s)
            w = _num(rng.uniform(0.5, 4.0), 3)
            ph = _num(rng.uniform(0, 2 * math.pi), 3)
            q = sp.cos(w * T_SYM + ph) + _num(rng.uniform(-0.3, 0.3), 3) * T_SYM / 8
            expr += _num(rng.uniform(0.5, 1.5), 3) * prod * q
        out.append(Manufactured(expr, n, True, f"vanishing[{i}]"))
    return out


def standing_waves(n: int = 2, count: int = 4) -> list[Manufactured]:
    modes = [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3), (3, 1)]
    return [standing_wave(n, m) for m in modes[:count]]


def travelling_waves(rng: np.random.Generator, count: int = 4, n: int = 2) -> list[Manufactured]:
    """cos(k.x - |k| t): exact solutions of the constant-coefficient wave equation with A = I."""
    out = []
    for i in range(count):
        k = [_num(rng.uniform(-3, 3), 3) for _ in range(n)]
        speed = sp.sqrt(sum(kk ** 2 for kk in k))
        phase = sum(kk * s for kk, s in zip(k, SPACE[:n]))
        out.append(Manufactured(sp.cos(phase - speed * T_SYM), n, True, f"travelling[{i}]"))
    return out


def harmonic_polynomial(degree: int, part: str = "re", center=(0.0, 0.0)) -> Manufactured:
    """Re or Im of (z - center)^degree, harmonic in the plane."""
    z = (X - _num(center[0])) + sp.I * (Y - _num(center[1]))
    poly = sp.expand(z ** degree)
    expr = sp.re(poly) if part == "re" else sp.im(poly)
    return Manufactured(sp.expand(expr), 2, False, f"{part}(z^{degree})")


def harmonic_polynomials(rng: np.random.Generator, count: int = 12, max_degree: int = 6,
                         center=(0.0, 0.0)) -> list[Manufactured]:
    """Random combinations of planar harmonic polynomials of degree 1..max_degree."""
    out = []
    for i in range(count):
        deg = 1 + i % max_degree
        expr = sp.Integer(0)
        for d in range(1, deg + 1):
            for part in ("re", "im"):
                expr += _num(rng.normal(), 4) * harmonic_polynomial(d, part, center).expr
        out.append(Manufactured(sp.expand(expr), 2, False, f"harmonic[{i}](deg<={deg})"))
    return out


def hadamard(k: int) -> Manufactured:
    """exp(-sqrt k) sin(k x) sinh(k y) on [0, pi] x [0, 1]: tiny Cauchy data on y = 0, large solution."""
    return Manufactured(sp.exp(-sp.sqrt(k)) * sp.sin(k * X) * sp.sinh(k * Y), 2, False, f"hadamard(k={k})")


def random_smooth(rng: np.random.Generator, n: int = 2, time: bool = False, modes: int = 3,
                  name: str = "random-smooth") -> Manufactured:
    """Low-order trigonometric sum with random amplitudes and frequencies."""
    expr = _num(rng.normal(), 4)
    for _ in range(modes):
        arg = sum(_num(rng.uniform(-3, 3), 3) * s for s in SPACE[:n]) + _num(rng.uniform(0, 3), 3)
        if time:
            arg += _num(rng.uniform(-2, 2), 3) * T_SYM
        expr += _num(rng.normal(), 4) * sp.sin(arg)
    return Manufactured(expr, n, time, name)


def manufacture(family: str, rng: np.random.Generator, count: int = 4, n: int = 2) -> list[Manufactured]:
    """Dispatch used by the CLI ``manufacture`` command."""
    if family == "standing-waves":
        return standing_waves(n, count)
    if family == "travelling-waves":
        return travelling_waves(rng, count, n)
    if family == "harmonic-polynomials":
        return harmonic_polynomials(rng, count)
    if family == "hadamard":
        return [hadamard(k) for k in (4, 8, 16, 32, 64)[:max(1, count)]]
    if family == "random-smooth":
        return [random_smooth(rng, n, True, name=f"random-smooth[{i}]") for i in range(count)]
    raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
