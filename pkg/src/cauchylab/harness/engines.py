"""Generic verification engines shared by the certificates."""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy.fft import dstn
from scipy.special import logsumexp

from ..fields import Manufactured
from ..geometry import Ball, BallChain, annulus_points, ball_points
from ..report import FAIL, PASS, CheckReport

DEGENERATE = 1e-12


# ---------------------------------------------------------------- rate fits

def fit_rate(points) -> tuple[float, float, float]:
    """Least squares of ln(value) against the parameter: (slope, intercept, R^2)."""
    pts = np.asarray(list(points), dtype=float)
    if pts.ndim != 2 or len(pts) < 4:
        raise ValueError("need at least 4 (parameter, value) points")
    x, v = pts[:, 0], pts[:, 1]
    if np.any(v <= 0):
        raise ValueError("values must be positive")
    return fit_log_rate(x, np.log(v))


def fit_log_rate(x, logs) -> tuple[float, float, float]:
    """Same fit when the logarithms are already known (values may underflow)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(logs, dtype=float)
    if len(x) < 4:
        raise ValueError("need at least 4 points")
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1 - ss_res / ss_tot
    return float(slope), float(intercept), float(r2)


# ---------------------------------------------------------- fitted constants

@dataclass
class FittedConstant:
    """A constant fitted as the extreme ratio over a family, with its stability diagnostics."""

    value: float
    coarse: float | None
    refinement_change: float
    spread: float
    ratios: list

    def passed(self, refine_tol: float = 0.2, spread_tol: float = 10.0) -> bool:
        return (math.isfinite(self.value) and self.value > 0
                and self.refinement_change < refine_tol and self.spread < spread_tol)

    def to_fitted(self) -> dict:
        return {"value": self.value, "spread": self.spread, "refinement_change": self.refinement_change}


def fit_constant(fine, coarse=None, kind: str = "min", rng: np.random.Generator | None = None,
                 resamples: int = 200) -> FittedConstant:
    """Fit C as the min (or max) of per-instance ratios.

    ``spread`` is the P95/P5 ratio of the fitted constant over bootstrap
    resamples of the family; ``refinement_change`` the relative change
    between the fits on the two finest grids.
    """
    fine = np.asarray(fine, dtype=float)
    pick = np.min if kind == "min" else np.max
    value = float(pick(fine))
    change = 0.0
    cval = None
    if coarse is not None:
        cval = float(pick(np.asarray(coarse, dtype=float)))
        change = abs(value - cval) / max(abs(value), 1e-300)
    rng = rng or np.random.default_rng(0)
    if len(fine) > 1:
        boot = np.array([pick(fine[rng.integers(0, len(fine), len(fine))]) for _ in range(resamples)])
        lo, hi = np.percentile(boot, [5, 95])
        spread = float(hi / lo) if lo > 0 else math.inf
    else:
        spread = 1.0
    return FittedConstant(value, cval, change, spread, fine.tolist())


# ------------------------------------------------------------- disk norms

@dataclass
class DiskNorms:
    """L2 norms of v, grad v and Lv on a disk."""

    v: float
    grad: float
    L: float


def disk_norms(v: Manufactured, ball: Ball, Lv: Manufactured | None = None,
               n_r: int = 48, n_theta: int = 96) -> DiskNorms:
    (x, y), w = ball_points(ball, n_r, n_theta)
    vals = v(x, y)
    g2 = sum(np.abs(d(x, y)) ** 2 for d in v.grad())
    L2 = 0.0 if Lv is None else float(np.sum(w * np.abs(Lv(x, y)) ** 2))
    return DiskNorms(math.sqrt(float(np.sum(w * np.abs(vals) ** 2))),
                     math.sqrt(float(np.sum(w * g2))), math.sqrt(L2))


# ------------------------------------------------------------ three balls

@dataclass
class ThreeBallResult:
    gamma: float
    C: float
    used: int
    excluded: int
    ratios: list


def _three_ball_log_ratios(rows, gamma):
    small, mid, big = rows[:, 0], rows[:, 1], rows[:, 2]
    return np.log(mid) - gamma * np.log(small) - (1 - gamma) * np.log(big)


def three_ball_exponent(solutions, operator=None, center=(0.0, 0.0), r: float = 1.0,
                        radii=(1.5, 2.0, 3.5), gradient: bool = False, cap: float = 10.0,
                        tol: float = 1e-3, n_r: int = 48, n_theta: int = 96) -> ThreeBallResult:
    """Largest gamma with |v|_{B_l} <= C (|v|_{B_k} + |Lv|_{B_m})^gamma |v|_{B_m}^{1-gamma}, C <= cap.

    ``operator`` is a medium (its symbolic divergence form gives Lv) or None
    for the Laplacian; ``gradient`` switches every norm of v to the gradient
    norm. Constant solutions and near-zero instances are excluded.
    """
    from ..media import identity
    med = operator or identity(2)
    balls = [Ball(tuple(center), k * r) for k in radii]
    rows, excluded = [], 0
    for v in solutions:
        Lv = v.elliptic_residual(med)
        norms = [disk_norms(v, b, Lv if i == 2 else None, n_r, n_theta) for i, b in enumerate(balls)]
        pick = (lambda d: d.grad) if gradient else (lambda d: d.v)
        a_k, a_l, a_m = (pick(d) for d in norms)
        if a_m < DEGENERATE or norms[2].grad < DEGENERATE * max(1.0, norms[2].v):
            excluded += 1
            continue
        rows.append((a_k + norms[2].L, a_l, a_m))
    if not rows:
        raise ValueError("degenerate family: every instance vanishes on the largest ball")
    rows = np.array(rows)
    lc = math.log(cap)

    def worst(g):
        return float(np.max(_three_ball_log_ratios(rows, g)))

    lo, hi = 0.0, 1.0
    if worst(lo) > lc:
        gamma = 0.0
    elif worst(hi) <= lc:
        gamma = 1.0
    else:
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            lo, hi = (mid, hi) if worst(mid) <= lc else (lo, mid)
        gamma = lo
    C = math.exp(worst(gamma))
    return ThreeBallResult(gamma, C, len(rows), excluded,
                           np.exp(_three_ball_log_ratios(rows, gamma)).tolist())


def proof_gamma(lam: float = 1.0) -> float:
    """Exponent produced by the interior Carleman weight 9 - |x|^2 at parameter lam."""
    alpha = math.exp(9 * lam) - math.exp(5 * lam)
    beta = math.exp(5 * lam) - math.exp(11 * lam / 4)
    return alpha / (alpha + beta)


# --------------------------------------------------------------- Carleman

@dataclass
class CarlemanSample:
    tau: float
    log_lhs: float
    log_rhs: float

    @property
    def log_ratio(self) -> float:
        return self.log_rhs - self.log_lhs


def _weight_interior(x, y, lam):
    psi = 9 - x ** 2 - y ** 2
    gpsi = np.hypot(2 * x, 2 * y)
    return psi, gpsi


def _weight_boundary(x, y, lam, x0, R):
    d2 = (x - x0[0]) ** 2 + (y - x0[1]) ** 2
    return np.log(R ** 2 / d2), 2 / np.sqrt(d2)


def carleman_ratio_sweep(v: Manufactured, medium, lam: float, taus, annulus=(0.5, 3.0),
                         weight: str = "interior", x0=(-1.5, 0.0), R: float = 3.0,
                         n_r: int = 160, n_theta: int = 256, cid: str = "C-A-Carleman") -> CheckReport:
    """RHS/LHS of the weighted estimate over a tau sweep, in the log domain.

    LHS = int (lam^4 tau^3 phi^3 v^2 + lam^2 tau phi |grad v|^2) e^{2 tau phi},
    RHS = int (Lv)^2 e^{2 tau phi} + boundary terms (lam^3 tau^3 phi^3 v^2 + lam tau phi |grad v|^2) e^{2 tau phi},
    phi = e^{lam psi}. ``weight="interior"`` uses psi = 9 - |x|^2 on the annulus
    (boundary terms vanish for v supported inside); ``"boundary"`` uses
    psi = ln(R^2 / |x - x0|^2) on the disk of radius annulus[1] with its circle as boundary.
    """
    t0 = time.perf_counter()
    inner, outer = annulus
    x, y, w = annulus_points(inner, outer, n_r, n_theta)
    if weight == "interior":
        psi, gpsi = _weight_interior(x, y, lam)
    elif weight == "boundary":
        psi, gpsi = _weight_boundary(x, y, lam, x0, R)
    else:
        raise ValueError("weight must be 'interior' or 'boundary'")
    if np.min(gpsi) <= 0 or np.min(psi) < 0:
        raise ValueError("weight has a critical point (or is negative) in the domain")
    vv = v(x, y)
    g2 = sum(np.abs(d(x, y)) ** 2 for d in v.grad())
    Lv2 = np.abs(v.elliptic_residual(medium)(x, y)) ** 2
    phi = np.exp(lam * psi)
    bdry = None
    if weight == "boundary" or inner > 0:
        th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
        pieces = []
        for rad in ([outer] if weight == "boundary" else [inner, outer]):
            bx, by = rad * np.cos(th), rad * np.sin(th)
            bpsi = (_weight_interior(bx, by, lam) if weight == "interior"
                    else _weight_boundary(bx, by, lam, x0, R))[0]
            pieces.append((bx, by, np.full(n_theta, rad * 2 * np.pi / n_theta), np.exp(lam * bpsi)))
        bdry = pieces
    samples = []
    with np.errstate(divide="ignore"):
        for tau in taus:
            e = 2 * tau * phi
            lhs_terms = np.log(w * (lam ** 4 * tau ** 3 * phi ** 3 * np.abs(vv) ** 2
                                    + lam ** 2 * tau * phi * g2)) + e
            rhs_terms = [np.log(w * Lv2) + e]
            if bdry is not None:
                for bx, by, bw, bphi in bdry:
                    bv2 = np.abs(v(bx, by)) ** 2
                    bg2 = sum(np.abs(d(bx, by)) ** 2 for d in v.grad())
                    rhs_terms.append(np.log(bw * (lam ** 3 * tau ** 3 * bphi ** 3 * bv2
                                                  + lam * tau * bphi * bg2)) + 2 * tau * bphi)
            samples.append(CarlemanSample(float(tau), float(logsumexp(lhs_terms)),
                                          float(logsumexp(np.concatenate(rhs_terms)))))
    logs = np.array([s.log_ratio for s in samples])
    finite = np.isfinite(logs)
    ok = bool(finite.all()) and len(samples) > 0
    C = float(np.exp(np.min(logs))) if ok else 0.0
    return CheckReport(
        id=cid, anchor="weighted estimate with large parameter", mode="fitted-constant",
        margins=logs.tolist(), fitted={"value": C, "spread": float(np.exp(np.ptp(logs))) if ok else math.inf},
        verdict=PASS if ok and C > 0 else FAIL, runtime_ms=1e3 * (time.perf_counter() - t0),
        details={"lam": lam, "taus": [s.tau for s in samples], "log_lhs": [s.log_lhs for s in samples],
                 "log_rhs": [s.log_rhs for s in samples], "weight": weight,
                 "min_grad_psi": float(np.min(gpsi)),
                 "note": "the constants are existential; a positive stable lower ratio is evidence only"})


# ------------------------------------------------------ propagation of smallness

def propagate_smallness(u: Manufactured, chain: BallChain, gamma: float, C: float, domain_norm: float,
                        L_norm: float = 0.0, radii=(1.0, 2.0, 3.0), n_r: int = 48,
                        n_theta: int = 96) -> CheckReport:
    """Chain the three-ball step and compare the final predicted bound with measured norms.

    With M = |u|_{L2(D)}, eta_k = |u|_{B_k} / M and b = |Lu| / M, every step gives
    eta_{k+1} <= C (eta_k + b)^gamma, hence eta_K <= (2C)^{1/(1-gamma)} (eta_0 + b)^{gamma^K}.
    Margins are log(predicted) - log(measured) for K = 0..len(chain)-1 and the
    per-step margins of the hypothesis itself.
    """
    t0 = time.perf_counter()
    if not 0 < gamma < 1 or C < 1:
        raise ValueError("need 0 < gamma < 1 and C >= 1")
    r = chain.balls[0].radius
    if any(abs(b.radius - r) > 1e-12 * r for b in chain.balls):
        raise ValueError("chain/certificate mismatch: propagation needs equal radii")
    M = domain_norm
    b = L_norm / M
    eta = np.array([disk_norms(u, Ball(bl.center, radii[0] * r), None, n_r, n_theta).v / M
                    for bl in chain.balls])
    step = [math.log(C) + gamma * math.log(eta[k] + b) - math.log(eta[k + 1])
            for k in range(len(eta) - 1)]
    logC = math.log(2 * C) / (1 - gamma)
    final = []
    for K in range(len(eta)):
        pred = eta[0] if K == 0 else math.exp(logC + gamma ** K * math.log(eta[0] + b))
        final.append(math.log(pred) - math.log(eta[K]) if eta[K] > 0 else math.inf)
    ok = min(step, default=0.0) >= -1e-9 and min(final) >= -1e-9
    return CheckReport(
        id="propagation", anchor="smallness propagated along a ball chain", mode="explicit-constant",
        margins=final, verdict=PASS if ok else FAIL, runtime_ms=1e3 * (time.perf_counter() - t0),
        details={"step_margins": step, "eta": eta.tolist(), "b": b, "gamma": gamma, "C": C,
                 "hypothesis_holds": min(step, default=0.0) >= -1e-9})


# ----------------------------------------------------------- sequence lemma

def sequence_bound_trials(rng: np.random.Generator, trials: int, steps: int = 40,
                          rtol: float = 1e-12) -> dict:
    """Random sequences with eta_{k+1} <= c (eta_k + b)^gamma, 0 < eta_k <= 1, against C (eta_0 + b)^{gamma^k}.

    Every third trial uses the extremal recursion (equality, capped at 1).
    Returns the count of violations and the smallest log margin.
    """
    violations, worst = 0, math.inf
    for i in range(trials):
        c = 1 + rng.exponential(2.0)
        gamma = rng.uniform(0.02, 0.98)
        b = 10 ** rng.uniform(-8, 0)
        eta = rng.uniform(1e-6, 1.0)
        eta0 = eta
        logC = math.log(2 * c) / (1 - gamma)
        base = math.log(eta0 + b)
        extremal = i % 3 == 0
        for k in range(1, steps + 1):
            cap = c * (eta + b) ** gamma
            eta = min(1.0, cap if extremal else cap * rng.uniform(1e-12, 1))
            margin = logC + gamma ** k * base - math.log(eta)
            worst = min(worst, margin)
            if margin < -rtol:
                violations += 1
    return {"trials": trials, "violations": violations, "worst_log_margin": worst}


# ------------------------------------------------------ Poincare-Wirtinger

def poincare_wirtinger_check(f_vals, grad_sq, mask, weights, aleph: float) -> tuple[float, float]:
    """(lhs, rhs) of |f - M_E f|_{L2(O)} <= aleph |O|^{1/2} |E|^{-1/2} |grad f|_{L2(O)}."""
    vol = float(np.sum(weights))
    volE = float(np.sum(weights * mask))
    if volE <= 0:
        raise ValueError("E must have positive measure")
    mean_E = float(np.sum(weights * mask * f_vals) / volE)
    lhs = math.sqrt(float(np.sum(weights * (f_vals - mean_E) ** 2)))
    rhs = aleph * math.sqrt(vol / volE) * math.sqrt(float(np.sum(weights * grad_sq)))
    return lhs, rhs


# ------------------------------------------------------ spectral Sobolev norms

def dirichlet_spectral_norms(v: np.ndarray, spacing) -> tuple[float, float, float]:
    """(|v|_{-1}, |v|_0, |v|_1) of interior nodal values for the discrete Dirichlet Laplacian.

    The sine transform diagonalizes the 5-point (or 3-point) Laplacian with
    eigenvalues sum_i (4 / h_i^2) sin^2(k_i pi h_i / 2L_i); the norms are
    sum mu^s |v_k|^2 with the grid volume element.
    """
    v = np.asarray(v)
    coef = dstn(v, type=1, norm="ortho")
    mu = np.zeros(v.shape)
    for ax, (n, h) in enumerate(zip(v.shape, spacing)):
        k = np.arange(1, n + 1)
        lam = 4 / h ** 2 * np.sin(k * np.pi / (2 * (n + 1))) ** 2
        shape = [1] * v.ndim
        shape[ax] = n
        mu = mu + lam.reshape(shape)
    dv = float(np.prod(spacing))
    a2 = np.abs(coef) ** 2 * dv
    return (math.sqrt(float(np.sum(a2 / mu))), math.sqrt(float(np.sum(a2))),
            math.sqrt(float(np.sum(a2 * mu))))


def interpolation_margin(v: np.ndarray, spacing) -> float:
    """log(|v|_{-1}^{1/2} |v|_1^{1/2}) - log|v|: nonnegative, zero on eigenfunctions."""
    m1, m0, p1 = dirichlet_spectral_norms(v, spacing)
    if m0 == 0:
        return math.inf
    return 0.5 * (math.log(m1) + math.log(p1)) - math.log(m0)
