"""Multiplier-method energy identity and the estimates built from it.

With m = x - x0 and w = 2 m.grad u + (n-1) u, every solution of the wave
problem that vanishes on the lateral boundary satisfies

    E_u = T_B - [int u_t w]_a^b - T_source + T_flux,

where E_u is the time-integrated energy. All terms are integrated slice by
slice in time so that fine grids stay within memory.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .fields import Manufactured, SpaceTimeField, TensorGrid, trapezoid_weights
from .geometry import Box, diameter
from .media import AnisotropicMedium, smallness_margin
from .report import FAIL, PASS, SKIPPED, CheckReport, log_margin, margin_verdict, safe_log
from .solvers import FluxStencil, _extrapolate_boundary

TRACE_TOL = 1e-10
GATE_CLOSED = "smallness gate closed"
INTERVAL_SHORT = "observation interval too short"

PROFILE_KEYS = ("energy", "T_B", "ut_w", "source", "flux", "Pu_sq", "dnu_sq",
                "grad_sq", "full_grad_sq", "w_sq", "mgrad_sq", "u_sq")


class TraceError(ValueError):
    """The field does not vanish on the lateral boundary."""


@dataclass
class MultiplierDecomposition:
    x0: tuple
    interval: tuple[float, float]
    T_B: float
    T_bdry_time: float
    T_source: float
    T_flux: float
    energy_integral: float
    times: np.ndarray = field(repr=False)
    profiles: dict = field(repr=False)

    @property
    def residual(self) -> float:
        return self.energy_integral - (self.T_B - self.T_bdry_time - self.T_source + self.T_flux)

    @property
    def scale(self) -> float:
        return max(abs(self.energy_integral), abs(self.T_B), abs(self.T_bdry_time),
                   abs(self.T_source), abs(self.T_flux))

    @property
    def energy_a(self) -> float:
        return float(self.profiles["energy"][0])

    @property
    def energy_b(self) -> float:
        return float(self.profiles["energy"][-1])

    def integral(self, key: str) -> float:
        return float(np.sum(trapezoid_weights(self.times) * self.profiles[key]))


class _SliceSource:
    """Values, gradients, time derivative and Pu of u at one time index."""

    def __init__(self, u: SpaceTimeField, medium: AnisotropicMedium | None, discrete: bool):
        self.u = u
        self.g = u.grid
        self.medium = medium
        self.discrete = discrete or u.exact is None
        self.X = self.g.space_mesh()
        if self.discrete and medium is not None:
            self.stencil = FluxStencil(medium, self.g.space_axes)
        if not self.discrete:
            ex = u.exact
            self.grad_fns = ex.grad()
            self.ut_fn = ex.dt(1)
            self.P_fn = ex.wave_residual(medium) if medium is not None else None

    def _space_shape(self):
        return tuple(self.g.counts)

    def at(self, k: int, need_P: bool = True):
        g = self.g
        t = g.t[k]
        shape = self._space_shape()
        if not self.discrete:
            ex = self.u.exact
            ev = lambda f: np.broadcast_to(f(*self.X, t), shape)
            uu = ev(ex)
            grads = [ev(f) for f in self.grad_fns]
            ut = ev(self.ut_fn)
            P = ev(self.P_fn) if (need_P and self.P_fn is not None) else None
            return uu, grads, ut, P
        v = self.u.values
        dt = g.t[1] - g.t[0]
        nt = g.nt
        uu = v[..., k]
        grads = [np.gradient(uu, g.space_axes[i], axis=i, edge_order=2) for i in range(g.n)]
        if 0 < k < nt - 1:
            ut = (v[..., k + 1] - v[..., k - 1]) / (2 * dt)
        elif k == 0:
            ut = (-3 * v[..., 0] + 4 * v[..., 1] - v[..., 2]) / (2 * dt)
        else:
            ut = (3 * v[..., -1] - 4 * v[..., -2] + v[..., -3]) / (2 * dt)
        P = None
        if need_P and self.medium is not None:
            if 0 < k < nt - 1:
                utt = (v[..., k + 1] - 2 * uu + v[..., k - 1]) / dt ** 2
            elif k == 0:
                utt = (2 * v[..., 0] - 5 * v[..., 1] + 4 * v[..., 2] - v[..., 3]) / dt ** 2
            else:
                utt = (2 * v[..., -1] - 5 * v[..., -2] + 4 * v[..., -3] - v[..., -4]) / dt ** 2
            sl = tuple(slice(1, -1) for _ in range(g.n))
            P = _extrapolate_boundary(self.stencil.apply(uu) - utt[sl], shape, g.n)
        return uu, grads, ut, P


def default_origin(domain: Box) -> tuple:
    return tuple(domain.lower)


def _faces_data(g: TensorGrid):
    """For each face: index tuple into a space array, outward normal, weights."""
    out = []
    for face in g.box.faces():
        idx = [slice(None)] * g.n
        idx[face.axis] = -1 if face.side else 0
        w = np.ones(1) if g.n == 1 else trapezoid_weights(g.space_axes[1 - face.axis])
        out.append((tuple(idx), face.outward_normal(g.n), w))
    return out


def lateral_trace(u: SpaceTimeField) -> float:
    """Largest |u| on the lateral boundary over all time nodes."""
    g = u.grid
    worst = 0.0
    for idx, _, _ in _faces_data(g):
        worst = max(worst, float(np.abs(u.values[idx]).max()))
    return worst


def _check_trace(u: SpaceTimeField, tol: float = TRACE_TOL):
    tr = lateral_trace(u)
    if tr > tol * max(1.0, float(np.abs(u.values).max())):
        raise TraceError(f"lateral trace {tr:.3g} exceeds {tol:g}; the identity needs u = 0 on the boundary")


def _time_indices(g: TensorGrid, a, b):
    t = g.t
    a = t[0] if a is None else a
    b = t[-1] if b is None else b
    ia = int(np.argmin(np.abs(t - a)))
    ib = int(np.argmin(np.abs(t - b)))
    tol = 1e-9 * max(1.0, abs(a), abs(b))
    if abs(t[ia] - a) > tol or abs(t[ib] - b) > tol or ib - ia < 2:
        raise ValueError("interval endpoints must be time nodes at least two steps apart")
    return ia, ib


def decompose(u: SpaceTimeField, medium: AnisotropicMedium, x0=None, a: float | None = None,
              b: float | None = None, discrete: bool | None = None) -> MultiplierDecomposition:
    """The five terms of the multiplier identity, by trapezoid quadrature in space and time.

    ``discrete=True`` ignores any attached symbolic field and differentiates
    the samples (second order), which is how the identity's grid convergence
    is measured.
    """
    g = u.grid
    if not g.has_time:
        raise ValueError("need a space-time field")
    if u.is_complex:
        raise ValueError("the multiplier identity is for real fields")
    _check_trace(u)
    x0 = tuple(float(v) for v in (default_origin(g.box) if x0 is None else x0))
    ia, ib = _time_indices(g, a, b)
    src = _SliceSource(u, medium, bool(discrete))
    n = g.n
    shape = tuple(g.counts)
    X = [np.broadcast_to(x, shape) for x in g.space_mesh()]
    m = [X[i] - x0[i] for i in range(n)]
    A = medium.matrix(*X)
    dA = medium.derivatives(X)
    B = sum(dA[k] * m[k][..., None, None] for k in range(n))
    wsp = g.space_weights()
    faces = []
    for idx, nu, wf in _faces_data(g):
        Anu = np.einsum("...ij,i,j->...", A[idx], nu, nu)
        mnu = sum(m[i][idx] * nu[i] for i in range(n))
        faces.append((idx, nu, wf, Anu, mnu))
    prof = {k: np.zeros(ib - ia + 1) for k in PROFILE_KEYS}
    for j, k in enumerate(range(ia, ib + 1)):
        uu, grads, ut, P = src.at(k)
        quad = lambda M: sum(M[..., p, q] * grads[p] * grads[q] for p in range(n) for q in range(n))
        mgrad = sum(m[i] * grads[i] for i in range(n))
        w = 2 * mgrad + (n - 1) * uu
        gsq = sum(gr ** 2 for gr in grads)
        integ = lambda arr: float(np.sum(wsp * arr))
        prof["energy"][j] = integ(quad(A) + ut ** 2)
        prof["T_B"][j] = integ(quad(B))
        prof["ut_w"][j] = integ(ut * w)
        prof["source"][j] = integ(P * w)
        prof["Pu_sq"][j] = integ(P ** 2)
        prof["grad_sq"][j] = integ(gsq)
        prof["full_grad_sq"][j] = integ(gsq + ut ** 2)
        prof["w_sq"][j] = integ(w ** 2)
        prof["mgrad_sq"][j] = integ(4 * mgrad ** 2)
        prof["u_sq"][j] = integ(uu ** 2)
        fl = dn = 0.0
        for idx, nu, wf, Anu, mnu in faces:
            dnu = sum(grads[i][idx] * nu[i] for i in range(n))
            fl += float(np.sum(wf * dnu ** 2 * Anu * mnu))
            dn += float(np.sum(wf * dnu ** 2))
        prof["flux"][j] = fl
        prof["dnu_sq"][j] = dn
    times = g.t[ia:ib + 1]
    wt = trapezoid_weights(times)
    tot = lambda key: float(np.sum(wt * prof[key]))
    return MultiplierDecomposition(
        x0=x0, interval=(float(times[0]), float(times[-1])),
        T_B=tot("T_B"), T_bdry_time=float(prof["ut_w"][-1] - prof["ut_w"][0]),
        T_source=tot("source"), T_flux=tot("flux"), energy_integral=tot("energy"),
        times=times, profiles=prof)


def identity_convergence(make_field, medium: AnisotropicMedium, levels, x0=None, a=None, b=None,
                         discrete: bool = True, min_order: float = 1.8) -> CheckReport:
    """Residual of the identity on successively refined grids, with observed orders.

    ``make_field(level)`` returns the sampled field on grid level ``level``.
    Passes when the finest observed order reaches ``min_order`` or every
    residual already sits at rounding level.
    """
    t0 = time.perf_counter()
    rows = []
    for lev in levels:
        u = make_field(lev)
        d = decompose(u, medium, x0, a, b, discrete=discrete)
        h = max(u.grid.spacing[: u.grid.n])
        rows.append({"level": lev, "h": h, "residual": abs(d.residual), "scale": d.scale,
                     "T_B": d.T_B, "T_bdry_time": d.T_bdry_time, "T_source": d.T_source,
                     "T_flux": d.T_flux, "energy_integral": d.energy_integral})
    orders = []
    for r0, r1 in zip(rows, rows[1:]):
        if r0["residual"] > 0 and r1["residual"] > 0:
            orders.append(math.log(r0["residual"] / r1["residual"]) / math.log(r0["h"] / r1["h"]))
        else:
            orders.append(math.inf)
        r1["order"] = orders[-1]
    floor = all(r["residual"] <= 1e-12 * max(r["scale"], 1e-300) for r in rows)
    ok = floor or (orders and orders[-1] >= min_order)
    return CheckReport(
        id="C-B07", anchor="multiplier energy identity", mode="identity",
        margins=[orders[-1] - min_order] if orders else [], convergence=rows,
        verdict=PASS if ok else FAIL, runtime_ms=1e3 * (time.perf_counter() - t0),
        details={"orders": orders, "rounding_floor": floor, "min_order": min_order})


def _report(cid: str, anchor: str, margins, tol: float, t0: float, **details) -> CheckReport:
    margins = [float(x) for x in margins]
    return CheckReport(id=cid, anchor=anchor, mode="explicit-constant", margins=margins,
                       verdict=margin_verdict(margins, tol),
                       runtime_ms=1e3 * (time.perf_counter() - t0), details=details)


def _lm(rhs: float, lhs: float) -> float:
    return log_margin(safe_log(rhs), safe_log(lhs))


def w_norm_bound(u: SpaceTimeField, x0=None, t: float | None = None, tol: float = 1e-8) -> CheckReport:
    """|w(., t)| <= |2 m.grad u(., t)| in L2, at one time or at every time node."""
    t0 = time.perf_counter()
    g = u.grid
    _check_trace(u)
    from .media import identity
    idx = range(g.nt) if t is None else [int(np.argmin(np.abs(g.t - t)))]
    x0 = tuple(default_origin(g.box) if x0 is None else x0)
    src = _SliceSource(u, None, False)
    shape = tuple(g.counts)
    m = [np.broadcast_to(x, shape) - x0[i] for i, x in enumerate(g.space_mesh())]
    wsp = g.space_weights()
    margins, gaps = [], []
    for k in idx:
        uu, grads, _, _ = src.at(k, need_P=False)
        mgrad = sum(mi * gi for mi, gi in zip(m, grads))
        w = 2 * mgrad + (g.n - 1) * uu
        lhs = float(np.sum(wsp * w ** 2))
        rhs = float(np.sum(wsp * 4 * mgrad ** 2))
        margins.append(0.5 * _lm(rhs, lhs))
        gaps.append(lhs - rhs - (1 - g.n ** 2) * float(np.sum(wsp * uu ** 2)))
    return _report("C-B11", "multiplier weight bound", margins, tol, t0,
                   identity_gap=max(np.abs(gaps)) if gaps else 0.0)


def two_point_energy_bounds(u: SpaceTimeField, medium: AnisotropicMedium, a=None, b=None, x0=None,
                            eps=None, delta=None, tol: float = 1e-8,
                            decomposition: MultiplierDecomposition | None = None) -> CheckReport:
    """Endpoint energy bounds: averaging (eps), the time-boundary term (delta), and their combination.

    Margins are labelled in ``details["labels"]``; defaults are eps = 2/(b-a)
    and delta = the domain diameter, and sequences of eps or delta values may
    be passed to test several at once.
    """
    t0 = time.perf_counter()
    d = decomposition or decompose(u, medium, x0, a, b)
    a_, b_ = d.interval
    L = b_ - a_
    d0 = diameter(u.grid.box)
    eps_list = np.atleast_1d(2 / L if eps is None else eps).astype(float)
    delta_list = np.atleast_1d(d0 if delta is None else delta).astype(float)
    if np.any(eps_list <= 0) or np.any(delta_list <= 0):
        raise ValueError("eps and delta must be positive")
    Ea, Eb, Eu = d.energy_a, d.energy_b, d.energy_integral
    P2 = d.integral("Pu_sq")
    margins, labels = [], []
    for e in eps_list:
        margins.append(_lm((2 / L + e) * Eu + (2 / e) * P2, Ea + Eb))
        labels.append(f"endpoint-average eps={e:.6g}")
    jump = abs(d.T_bdry_time)
    for dl in delta_list:
        dbar = max(dl, d0 ** 2 / dl)
        margins.append(_lm(dbar * (Ea + Eb), jump))
        labels.append(f"time-boundary delta={dl:.6g}")
    margins.append(_lm((4 * d0 / L) * Eu + L * d0 * P2, jump))
    labels.append("time-boundary combined")
    return _report("C-B08", "endpoint energy bounds", margins, tol, t0, labels=labels,
                   energy_a=Ea, energy_b=Eb, energy_integral=Eu, Pu_sq=P2, jump=jump, d0=d0)


@dataclass(frozen=True)
class ObservabilityGate:
    rho0: float
    d0: float
    length: float
    c_min: float

    @property
    def open(self) -> bool:
        return self.rho0 > 0 and self.length > self.c_min

    @property
    def reason(self) -> str:
        if self.rho0 <= 0:
            return GATE_CLOSED
        if self.length <= self.c_min:
            return INTERVAL_SHORT
        return ""


def observability_gate(medium: AnisotropicMedium, domain: Box, length: float) -> ObservabilityGate:
    rho0 = smallness_margin(medium, domain)
    d0 = diameter(domain)
    c_min = (4 + medium.kappa) * d0 / rho0 if rho0 > 0 else math.inf
    return ObservabilityGate(rho0, d0, float(length), c_min)


def explicit_pr1_constant(kappa: float, d0: float, rho0: float, length: float) -> float:
    """Constant of the boundary observability estimate obtained by chaining the explicit bounds."""
    rho_t = 1 - (4 + kappa) * d0 / (rho0 * length)
    if rho_t <= 0:
        return math.inf
    KP = 2 * d0 * length / (rho0 * rho_t)
    Kn = d0 * kappa / (rho0 * rho_t)
    return math.sqrt(2 * kappa * max(4 * KP / length + length, 4 * Kn / length))


def coefficient_source_margins(d: MultiplierDecomposition, medium: AnisotropicMedium,
                               d0: float) -> tuple[float, float]:
    """Log margins of |T_B| <= varkappa kappa d0 E_u and |T_source| <= (kappa d0/(b-a)) E_u + d0 (b-a) |Pu|^2.

    Neither bound needs the smallness condition.
    """
    L = d.interval[1] - d.interval[0]
    k, vk = medium.kappa, medium.varkappa
    Eu = d.energy_integral
    P2 = d.integral("Pu_sq")
    return (_lm(vk * k * d0 * Eu, abs(d.T_B)),
            _lm((k * d0 / L) * Eu + d0 * L * P2, abs(d.T_source)))


def observability_bound(u: SpaceTimeField, medium: AnisotropicMedium, a=None, b=None, x0=None,
                        tol: float = 1e-8,
                        decomposition: MultiplierDecomposition | None = None) -> CheckReport:
    """Coefficient, source, flux and observability estimates for one field, gated on smallness.

    Margins, in order: B-term, flux, source, energy-from-observation, and the
    endpoint-gradient bound with the explicit chained constant. The fitted
    constant ratio is in ``details["pr1_ratio"]``.
    """
    t0 = time.perf_counter()
    g = u.grid
    ta = g.t[0] if a is None else a
    tb = g.t[-1] if b is None else b
    gate = observability_gate(medium, g.box, tb - ta)
    if not gate.open:
        return CheckReport(id="C-B018", anchor="boundary observability estimate", verdict=SKIPPED,
                           reason=gate.reason, details={"rho0": gate.rho0, "c_min": gate.c_min,
                                                        "length": gate.length})
    d = decomposition or decompose(u, medium, x0, a, b)
    L = gate.length
    k, vk, d0, r0 = medium.kappa, medium.varkappa, gate.d0, gate.rho0
    Eu = d.energy_integral
    P2 = d.integral("Pu_sq")
    N2 = d.integral("dnu_sq")
    b_term, source = coefficient_source_margins(d, medium, d0)
    margins = [
        b_term,
        _lm(k * d0 * N2, abs(d.T_flux)),
        source,
        _lm((4 + k) * d0 / (r0 * L) * Eu + 2 * d0 * L / r0 * P2 + d0 * k / r0 * N2, Eu),
    ]
    lhs = math.sqrt(d.profiles["full_grad_sq"][0]) + math.sqrt(d.profiles["full_grad_sq"][-1])
    obs = math.sqrt(P2) + math.sqrt(N2)
    C = explicit_pr1_constant(k, d0, r0, L)
    margins.append(_lm(C * obs, lhs))
    ratio = lhs / obs if obs > 0 else (0.0 if lhs == 0 else math.inf)
    labels = ["B-term", "flux", "source", "energy-from-observation", "endpoint-gradient"]
    return _report("C-B018", "boundary observability estimate", margins, tol, t0, labels=labels,
                   pr1_ratio=ratio, pr1_explicit_constant=C, rho0=r0, c_min=gate.c_min, length=L)


def standing_wave(n: int = 2, modes=(1, 1), phase: float = 0.0) -> Manufactured:
    """sin(k1 pi x)[sin(k2 pi y)] cos(omega t + phase) on the unit box; Pu = 0 for A = I."""
    import sympy as sp
    from .fields import SPACE, T_SYM
    k = modes[:n]
    omega = sp.pi * sp.sqrt(sum(kk ** 2 for kk in k))
    prod = sp.Integer(1)
    for kk, s in zip(k, SPACE[:n]):
        prod *= sp.sin(kk * sp.pi * s)
    return Manufactured(prod * sp.cos(omega * T_SYM + phase), n, True, f"standing{tuple(k)}")
