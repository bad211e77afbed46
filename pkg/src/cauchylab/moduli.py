"""Stability moduli, iterated exponentials in log space, parameter choices and the final bound.

Quantities like exp(exp(c delta^-14)) overflow any float long before delta
is small, so they are carried as :class:`LogScalar` towers: a sign, a float
``top`` and a ``depth`` such that ln|value| = exp^depth(top).
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .report import FAIL, PASS, SKIPPED, CheckReport

EXP_MAX = 709.0  # exp(x) is a finite float for x below this
RHO_STAR = math.exp(-math.e)


@dataclass(frozen=True)
class LogScalar:
    """sign * exp(exp^depth(top)); depth 0 means ln|value| = top.

    Kept normalized: depth > 0 only when exp(top) would overflow.
    """

    sign: int
    top: float
    depth: int = 0

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError("sign must be -1, 0 or 1")
        top, depth = float(self.top), int(self.depth)
        while depth > 0 and top < EXP_MAX:
            top, depth = math.exp(top), depth - 1
        if self.sign == 0 or top == -math.inf:
            object.__setattr__(self, "sign", 0)
            top, depth = -math.inf, 0
        object.__setattr__(self, "top", top)
        object.__setattr__(self, "depth", depth)

    @classmethod
    def from_float(cls, x: float) -> "LogScalar":
        x = float(x)
        if x == 0:
            return cls(0, -math.inf)
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_log(cls, log_mag: float, sign: int = 1) -> "LogScalar":
        return cls(sign, float(log_mag))

    @property
    def saturated(self) -> bool:
        """True when even ln|value| is not a finite float."""
        return self.depth > 0

    @property
    def log_mag(self) -> float:
        """ln|value|, +inf once saturated."""
        return math.inf if self.depth else self.top

    def log(self) -> "LogScalar":
        """Natural log of |value| as a LogScalar."""
        if self.sign == 0:
            return LogScalar(-1, math.inf)
        if self.depth:
            return LogScalar(1, self.top, self.depth - 1)
        return LogScalar.from_float(self.top)

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.depth or self.top > EXP_MAX + 0.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.top)

    def __float__(self) -> float:
        return self.to_float()

    def _key(self):
        return (self.depth, self.top)

    def __lt__(self, other) -> bool:
        return compare(self, _as(other)) < 0

    def __le__(self, other) -> bool:
        return compare(self, _as(other)) <= 0

    def __gt__(self, other) -> bool:
        return compare(self, _as(other)) > 0

    def __ge__(self, other) -> bool:
        return compare(self, _as(other)) >= 0

    def __mul__(self, other) -> "LogScalar":
        other = _as(other)
        s = self.sign * other.sign
        if s == 0:
            return LogScalar(0, -math.inf)
        return exp_of(add(self.log(), other.log()), s)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "LogScalar":
        other = _as(other)
        if other.sign == 0:
            raise ZeroDivisionError("LogScalar division by zero")
        return exp_of(add(self.log(), negate(other.log())), self.sign * other.sign) if self.sign else self

    def __add__(self, other) -> "LogScalar":
        return add(self, _as(other))

    __radd__ = __add__

    def __pow__(self, p: float) -> "LogScalar":
        if self.sign < 0:
            raise ValueError("power of a negative LogScalar")
        if self.sign == 0:
            return self if p > 0 else LogScalar(1, math.inf)
        return exp_of(self.log() * p, 1)

    def __repr__(self) -> str:
        if self.depth:
            return f"LogScalar({'-' if self.sign < 0 else ''}exp^{self.depth + 1}({self.top:.6g}))"
        return f"LogScalar({'-' if self.sign < 0 else ''}exp({self.top:.6g}))"


def _as(x) -> LogScalar:
    return x if isinstance(x, LogScalar) else LogScalar.from_float(x)


def negate(x: LogScalar) -> LogScalar:
    return LogScalar(-x.sign, x.top, x.depth)


def exp_of(x: LogScalar, sign: int = 1) -> LogScalar:
    """sign * exp(x)."""
    if x.sign >= 0 or x.depth == 0:
        if x.sign > 0 and (x.depth or x.top > math.log(EXP_MAX)):
            # x itself is huge: ln(result) = x, so the tower grows by one level
            return LogScalar(sign, x.top, x.depth + 1)
        return LogScalar(sign, x.to_float())
    return LogScalar(0, -math.inf)  # exp of a hugely negative number underflows to zero


def compare(a: LogScalar, b: LogScalar) -> int:
    """-1, 0, 1 as a <, =, > b; exact whenever both values are representable."""
    if a.sign != b.sign:
        return -1 if a.sign < b.sign else 1
    if a.sign == 0:
        return 0
    c = _compare_mag(a, b)
    return c if a.sign > 0 else -c


def _compare_mag(a: LogScalar, b: LogScalar) -> int:
    if a.depth == b.depth:
        return (a.top > b.top) - (a.top < b.top)
    # the deeper tower has ln|value| >= exp(709); compare logs one level down
    return compare(a.log(), b.log())


def add(a: LogScalar, b: LogScalar) -> LogScalar:
    if a.sign == 0:
        return b
    if b.sign == 0:
        return a
    big, small = (a, b) if _compare_mag(a, b) >= 0 else (b, a)
    if big.depth or small.depth:
        # the smaller term changes ln|big| by less than one part in e^700
        return big
    r = math.exp(small.top - big.top)
    if a.sign == b.sign:
        return LogScalar(big.sign, big.top + math.log1p(r))
    if r == 1.0:
        return LogScalar(0, -math.inf)
    return LogScalar(big.sign, big.top + math.log1p(-r))


def iterated_exp(k: int, x: float) -> LogScalar:
    """exp applied k times to x, for k in {1, 2, 3}."""
    if k not in (1, 2, 3):
        raise ValueError("k must be 1, 2 or 3")
    return LogScalar(1, float(x), k - 1)


def e2(x: float) -> LogScalar:
    return iterated_exp(2, x)


def e3(x: float) -> LogScalar:
    return iterated_exp(3, x)


KINDS = ("Phi", "Theta", "Psi")


@dataclass(frozen=True)
class ModulusSpec:
    """Phi_{c,beta} (breakpoint e^-c), Theta_{rho0,beta} (rho0 <= 1/e), Psi_{rho0,beta} (rho0 <= e^-e)."""

    kind: str
    param: float
    beta: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.kind == "Phi" and not self.param > 0:
            raise ValueError("c must be positive")
        if self.kind == "Theta" and not 0 < self.param <= math.exp(-1):
            raise ValueError("Theta breakpoint must lie in (0, 1/e]")
        if self.kind == "Psi" and not 0 < self.param <= RHO_STAR:
            raise ValueError("Psi breakpoint must lie in (0, e^-e]")

    @property
    def breakpoint(self) -> float:
        return math.exp(-self.param) if self.kind == "Phi" else self.param


def modulus_eval(spec: ModulusSpec, rho: float, log_rho: float | None = None) -> float:
    """Piecewise modulus; ``log_rho`` lets callers pass values below float range."""
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    given = log_rho is None
    if log_rho is None:
        if rho == 0:
            return 0.0
        log_rho = math.log(rho)
    elif log_rho == -math.inf:
        return 0.0
    bp = spec.breakpoint
    if spec.kind == "Phi":
        if log_rho >= -spec.param:
            return float(rho) if given else math.exp(log_rho)
        return abs(log_rho) ** (-spec.beta)
    if log_rho > math.log(bp):
        return float(rho) if given else math.exp(log_rho)
    inner = math.log(abs(log_rho))
    if spec.kind == "Psi":
        inner = math.log(inner) if inner > 0 else -math.inf
    if inner <= 0:
        return math.inf
    return inner ** (-spec.beta)


def solve_epsilon(beta: float, c: float, b: float | None = None, log_b: float | None = None) -> float:
    """Root in (0, 1) of eps^beta exp(-c/eps) = b, solved as beta ln eps - c/eps = ln b."""
    if not (beta > 0 and c > 0):
        raise ValueError("beta and c must be positive")
    lb = math.log(b) if log_b is None else float(log_b)
    if not lb < -c:
        raise ValueError("no root: b is at or above the breakpoint e^-c; use the identity branch")
    f = lambda e: beta * math.log(e) - c / e - lb
    # the root lies between c/|ln b| (where -c/eps alone reaches ln b) and (c+beta)/|ln b|
    hi = min(1.0, (c + beta) / abs(lb) * (1 + 1e-12))
    lo = c / abs(lb) * 0.5
    while f(lo) > 0:
        lo *= 0.5
    return brentq(f, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def epsilon_residual(beta: float, c: float, eps: float, log_b: float) -> float:
    """Relative residual |eps^beta e^{-c/eps} - b| / b, computed in log form."""
    return abs(math.expm1(beta * math.log(eps) - c / eps - log_b))


@dataclass(frozen=True)
class ParameterSelection:
    lam: float
    lam_log: LogScalar
    eps: LogScalar
    mu: LogScalar
    rate_exponent: float  # lambda (delta T)^2 / 16


def parameter_selection(delta: float, T: float, c0: float, c: float, s: float,
                        beta: float = 1.0) -> ParameterSelection:
    """lambda = 16 delta^-16 / T^2, eps = exp(-2 c0 delta^-14 / beta), mu = (e2(c delta^-14) delta^-s)^4."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not T > 0:
        raise ValueError("T must be positive")
    lam_log = LogScalar(1, math.log(16) - 16 * math.log(delta) - 2 * math.log(T))
    try:
        lam = 16 * delta ** -16.0 / T ** 2  # direct, so dyadic inputs give the exact value
    except OverflowError:
        lam = math.inf
    x = c * delta ** -14.0
    eps = LogScalar(1, -2 * c0 * delta ** -14.0 / beta)
    mu = (e2(x) * LogScalar(1, -s * math.log(delta))) ** 4
    return ParameterSelection(lam, lam_log, eps, mu, delta ** -14.0)


def mu_equation_residual(sel: ParameterSelection, delta: float, c: float, s: float) -> float:
    """Relative error of ln(mu) / 4 against ln e2(c delta^-14) - s ln delta.

    Both sides are towers; the error is taken on the float actually stored at
    the top (relative to its size), which is all the representation can
    resolve once e2 is far beyond float range.
    """
    pred = add(e2(c * delta ** -14.0).log(), LogScalar.from_float(-s * math.log(delta)))
    got = sel.mu.log() * 0.25
    if pred.sign <= 0 or got.sign <= 0:
        return math.inf
    if pred.depth != got.depth:
        return math.inf
    return abs(got.top - pred.top) / max(1.0, abs(pred.top))


def composed_coefficient(delta: float, c: float, s: float) -> LogScalar:
    """e2(c delta^-14) (1 + exp(c mu)): the data coefficient before it is absorbed into e3."""
    mu = parameter_selection(delta, 1.0, 1.0, c, s).mu
    return e2(c * delta ** -14.0) * (LogScalar.from_float(1.0) + exp_of(mu * c))


def absorption_check(deltas, c: float, s: float) -> list[float]:
    """Log-log-log margins of e3((c + ln 4) delta^-14) over the composed coefficient."""
    out = []
    for d in deltas:
        lhs = composed_coefficient(d, c, s)
        rhs = e3((c + math.log(4)) * d ** -14.0)
        out.append(_lll_margin(rhs, lhs))
    return out


def _lll_margin(rhs: LogScalar, lhs: LogScalar) -> float:
    """Signed distance between the values at the deepest level where both are finite floats."""
    a, b = rhs, lhs
    while True:
        if not (a.depth or b.depth):
            return a.top - b.top
        if a.sign <= 0 or b.sign <= 0 or a.top <= 0 or b.top <= 0:
            return math.copysign(math.inf, compare(rhs, lhs))
        a, b = a.log(), b.log()


@dataclass
class FinalBound:
    log_lhs: float
    rhs: LogScalar
    vacuous: bool
    path: str
    admissible: tuple[float, float] | None


def final_rhs(N: float, data: float, delta: float, s: float, c: float, path: str = "e3") -> LogScalar:
    """delta^s N + e_k(c delta^-14) * data with k = 3 (general) or 2 (small coefficients)."""
    ek = e3 if path == "e3" else e2
    return LogScalar.from_float(delta ** s * N) + ek(c * delta ** -14.0) * LogScalar.from_float(data)


def admissible_interval(N: float, data: float, s: float, c: float, path: str = "e3",
                        samples: int = 400) -> tuple[float, float] | None:
    """Deltas in (0, 1) where the right side drops below N, bracketed on a log grid then refined."""
    if N <= 0:
        return None
    ds = np.geomspace(1e-3, 1 - 1e-9, samples)
    good = np.array([final_rhs(N, data, d, s, c, path) < N for d in ds])
    if not good.any():
        return None
    idx = np.flatnonzero(good)
    lo_i, hi_i = idx[0], idx[-1]

    def edge(i_bad, i_good):
        a, b = ds[i_bad], ds[i_good]
        for _ in range(60):
            mid = math.sqrt(a * b)
            if final_rhs(N, data, mid, s, c, path) < N:
                b = mid
            else:
                a = mid
        return b

    lo = ds[lo_i] if lo_i == 0 else edge(lo_i - 1, lo_i)
    hi = ds[hi_i] if hi_i == len(ds) - 1 else edge(hi_i + 1, hi_i)
    return (float(lo), float(hi))


def assemble_final_bound(components: list[CheckReport], functionals: dict, delta: float, s: float,
                         c: float, path: str = "e3", C: float = 1.0,
                         data_override: float | None = None) -> CheckReport:
    """Log-space right side of the final estimate against the measured left side.

    ``functionals`` provides ``L2H1`` (the left side), ``N`` and the data
    terms: ``D`` + ``data_delta`` on the general path, ``data_tilde_bar`` on
    the small-coefficient path (which uses ``X_alpha`` as N). The report is
    flagged VACUOUS when the right side is not below N.
    """
    t0 = time.perf_counter()
    if not components:
        raise ValueError("missing component certificates")
    failed = [r.id for r in components if not (r.passed or r.skipped)]
    if path not in ("e2", "e3"):
        raise ValueError("path must be 'e2' or 'e3'")
    if path == "e2":
        N = functionals["X_alpha"]
        data = functionals["data_tilde_bar"]
    else:
        N = functionals["N"]
        data = functionals["D"] + functionals["data_delta"]
    if data_override is not None:
        data = data_override
    rhs = final_rhs(N, data, delta, s, c, path)
    lhs = C * functionals["L2H1"]
    log_lhs = math.log(lhs) if lhs > 0 else -math.inf
    margin = _lll_margin(rhs, LogScalar.from_float(lhs)) if lhs > 0 else math.inf
    vacuous = not (rhs < N)
    interval = admissible_interval(N, data, s, c, path)
    verdict = PASS if (margin >= 0 and not failed) else FAIL
    tower = rhs.log()
    details = {
        "path": path, "delta": delta, "s": s, "c": c, "N": N, "data": data, "lhs": lhs,
        "log_rhs": rhs.log_mag, "rhs_depth": rhs.depth, "rhs_top": rhs.top,
        "log_rhs_tower": {"depth": tower.depth, "top": tower.top},
        "vacuous": vacuous, "admissible_delta": interval, "failed_components": failed,
        "structure_only": data_override is not None,
    }
    return CheckReport(id="C-ASSEMBLY-MAIN", anchor="final stability estimate, log-space assembly",
                       mode="explicit-constant", margins=[margin], verdict=verdict,
                       reason="VACUOUS" if vacuous else "", details=details,
                       runtime_ms=1e3 * (time.perf_counter() - t0))
