"""Discrete wave and elliptic operators, a leapfrog wave solver, harmonic extension, energy.

The divergence-form part div(A grad u) is discretized in flux form: diagonal
coefficients are evaluated at half nodes, mixed terms with centered
differences, so the stencil is symmetric whenever A is. Manufactured fields
carry exact residuals, which the operator returns unless asked otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import splu

from .fields import Manufactured, SpaceTimeField, TensorGrid, trapezoid_weights
from .geometry import Box
from .media import AnisotropicMedium
from .norms import bochner_norm

KINDS = ("wave", "elliptic", "elliptic-tau")


class CFLError(ValueError):
    pass


@dataclass(frozen=True)
class DiscreteOperator:
    """P = div(A grad) - d_t^2 ("wave"), L = div(A grad) ("elliptic"), or L + d_tau^2 ("elliptic-tau")."""

    medium: AnisotropicMedium
    grid: TensorGrid
    kind: str = "wave"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")
        if min(self.grid.counts) < 3 or (self.grid.has_time and self.grid.nt < 3 and self.kind != "elliptic"):
            raise ValueError("grid too coarse: need at least 3 nodes per axis")


class FluxStencil:
    """Precomputed coefficients of the flux-form div(A grad) on a space grid."""

    def __init__(self, medium: AnisotropicMedium, space_axes: list[np.ndarray]):
        self.n = len(space_axes)
        self.axes = space_axes
        self.h = [a[1] - a[0] for a in space_axes]
        if self.n == 1:
            x = space_axes[0]
            self.a_half = medium.matrix((x[1:] + x[:-1]) / 2)[..., 0, 0]
        else:
            x, y = space_axes
            xm = (x[1:] + x[:-1]) / 2
            ym = (y[1:] + y[:-1]) / 2
            self.a11 = medium.matrix(xm[:, None], y[None, :])[..., 0, 0]    # (nx-1, ny)
            self.a22 = medium.matrix(x[:, None], ym[None, :])[..., 1, 1]    # (nx, ny-1)
            A = medium.matrix(x[:, None], y[None, :])
            self.a12 = A[..., 0, 1]
            self.a21 = A[..., 1, 0]

    def apply(self, u: np.ndarray) -> np.ndarray:
        """div(A grad u) at interior nodes; extra trailing axes are batch axes."""
        if self.n == 1:
            h = self.h[0]
            a = self.a_half.reshape(self.a_half.shape + (1,) * (u.ndim - 1))
            flux = a * (u[1:] - u[:-1])
            return (flux[1:] - flux[:-1]) / h ** 2
        hx, hy = self.h
        ex = (1,) * (u.ndim - 2)
        a11 = self.a11.reshape(self.a11.shape + ex)
        a22 = self.a22.reshape(self.a22.shape + ex)
        a12 = self.a12.reshape(self.a12.shape + ex)
        a21 = self.a21.reshape(self.a21.shape + ex)
        fx = a11 * (u[1:, :] - u[:-1, :])
        fy = a22 * (u[:, 1:] - u[:, :-1])
        out = (fx[1:, 1:-1] - fx[:-1, 1:-1]) / hx ** 2 + (fy[1:-1, 1:] - fy[1:-1, :-1]) / hy ** 2
        dy = u[:, 2:] - u[:, :-2]            # (nx, ny-2)
        out += (a12[2:, 1:-1] * dy[2:] - a12[:-2, 1:-1] * dy[:-2]) / (4 * hx * hy)
        dx = u[2:, :] - u[:-2, :]            # (nx-2, ny)
        out += (a21[1:-1, 2:] * dx[:, 2:] - a21[1:-1, :-2] * dx[:, :-2]) / (4 * hx * hy)
        return out

    def matrix(self) -> sps.csr_matrix:
        """Sparse matrix of the interior rows acting on all nodes (row-major node order)."""
        shape = tuple(len(a) for a in self.axes)
        size = int(np.prod(shape))
        idx = np.arange(size).reshape(shape)
        rows, cs, vals = [], [], []
        if self.n == 1:
            h2 = self.h[0] ** 2
            a = self.a_half
            r = idx[1:-1]
            rows += [r, r, r]
            cs += [idx[:-2], idx[1:-1], idx[2:]]
            vals += [a[:-1] / h2, -(a[:-1] + a[1:]) / h2, a[1:] / h2]
            interior = idx[1:-1].ravel()
        else:
            hx, hy = self.h
            r = idx[1:-1, 1:-1]
            ax_m, ax_p = self.a11[:-1, 1:-1], self.a11[1:, 1:-1]
            ay_m, ay_p = self.a22[1:-1, :-1], self.a22[1:-1, 1:]
            rows += [r] * 5
            cs += [idx[:-2, 1:-1], idx[2:, 1:-1], idx[1:-1, :-2], idx[1:-1, 2:], r]
            vals += [ax_m / hx ** 2, ax_p / hx ** 2, ay_m / hy ** 2, ay_p / hy ** 2,
                     -(ax_m + ax_p) / hx ** 2 - (ay_m + ay_p) / hy ** 2]
            c = 4 * hx * hy
            a12p, a12m = self.a12[2:, 1:-1], self.a12[:-2, 1:-1]
            a21p, a21m = self.a21[1:-1, 2:], self.a21[1:-1, :-2]
            for rr, cc, vv in [
                (r, idx[2:, 2:], a12p / c + a21p / c), (r, idx[2:, :-2], -a12p / c - a21m / c),
                (r, idx[:-2, 2:], -a12m / c - a21p / c), (r, idx[:-2, :-2], a12m / c + a21m / c),
            ]:
                rows.append(rr)
                cs.append(cc)
                vals.append(vv)
            interior = r.ravel()
        M = sps.coo_matrix((np.concatenate([v.ravel() for v in vals]),
                            (np.concatenate([x.ravel() for x in rows]),
                             np.concatenate([x.ravel() for x in cs]))), shape=(size, size)).tocsr()
        return M[interior]


def _extrapolate_boundary(inner: np.ndarray, full_shape, axes: int) -> np.ndarray:
    """Embed interior values and fill boundary layers by quadratic extrapolation."""
    out = np.zeros(full_shape, dtype=inner.dtype)
    sl = tuple(slice(1, -1) for _ in range(axes))
    out[sl] = inner
    for ax in range(axes):
        lo = [slice(None)] * len(full_shape)
        def take(i):
            s = list(lo)
            s[ax] = i
            return out[tuple(s)]
        first = 3 * take(1) - 3 * take(2) + take(3) if full_shape[ax] > 3 else take(1)
        last = 3 * take(-2) - 3 * take(-3) + take(-4) if full_shape[ax] > 3 else take(-2)
        s0, s1 = list(lo), list(lo)
        s0[ax], s1[ax] = 0, -1
        out[tuple(s0)] = first
        out[tuple(s1)] = last
    return out


def apply_operator(op: DiscreteOperator, u: SpaceTimeField, discrete: bool | None = None) -> SpaceTimeField:
    """Pu (or Lu) on the grid of u.

    With an attached symbolic field and symbolic medium the result is exact
    (``discrete=None`` or False). Otherwise flux-form differences are used at
    interior nodes and boundary layers are filled by quadratic extrapolation.
    """
    g = u.grid
    if g != op.grid:
        raise ValueError("operator and field grids differ")
    use_exact = (u.exact is not None and op.medium.symbolic is not None) if discrete is None else not discrete
    if use_exact:
        if u.exact is None:
            raise ValueError("exact evaluation requested but the field has no symbolic form")
        ex = u.exact
        if op.kind == "wave":
            res = ex.wave_residual(op.medium)
        elif op.kind == "elliptic":
            res = ex.elliptic_residual(op.medium)
        else:
            res = Manufactured(ex.divergence_form(op.medium) + ex.dt(2).expr, ex.n, ex.time)
        return SpaceTimeField.sample(res, g)

    st = FluxStencil(op.medium, g.space_axes)
    vals = u.values
    inner = st.apply(vals)
    sl = tuple(slice(1, -1) for _ in range(g.n))
    if g.has_time and op.kind != "elliptic":
        dt = g.t[1] - g.t[0]
        d2 = np.zeros_like(vals)
        d2[..., 1:-1] = (vals[..., 2:] - 2 * vals[..., 1:-1] + vals[..., :-2]) / dt ** 2
        d2[..., 0] = 2 * d2[..., 1] - d2[..., 2]
        d2[..., -1] = 2 * d2[..., -2] - d2[..., -3]
        sign = -1.0 if op.kind == "wave" else 1.0
        inner = inner + sign * d2[sl]
    full = _extrapolate_boundary(inner, vals.shape, g.n)
    return SpaceTimeField(g, full)


def interior_mask(grid: TensorGrid) -> np.ndarray:
    m = np.zeros(grid.shape, dtype=bool)
    m[tuple(slice(1, -1) for _ in range(grid.n))] = True
    return m


def _as_callable(obj, time: bool):
    if obj is None:
        return None
    if isinstance(obj, Manufactured):
        return obj
    if callable(obj):
        return obj
    c = float(obj)
    return lambda *a: np.full(np.broadcast_shapes(*[np.shape(x) for x in a]), c)


def wave_solve(medium: AnisotropicMedium, domain: Box, T: float, counts, nt: int | None = None,
               source=None, u0=None, u1=None, boundary=None, t_start: float = 0.0,
               cfl: float = 0.9) -> SpaceTimeField:
    """Leapfrog for div(A grad u) - u_tt = F with Dirichlet data, on [t_start, t_start + T].

    ``source`` F(x[, y], t), ``u0``, ``u1`` (initial value and velocity) and
    ``boundary`` g(x[, y], t) are callables or Manufactured fields; None means 0.
    The time step must satisfy dt <= h_min / sqrt(n kappa).
    """
    grid = TensorGrid(domain, counts)
    h_min = min(grid.spacing)
    limit = h_min / math.sqrt(domain.n * medium.kappa)
    if nt is None:
        steps = max(1, math.ceil(T / (cfl * limit)))
        nt = steps + 1
    dt = T / (nt - 1)
    if dt > limit * (1 + 1e-12):
        raise CFLError(f"time step {dt:.4g} exceeds CFL limit {limit:.4g}")
    st = FluxStencil(medium, grid.space_axes)
    X = grid.space_mesh()
    zero = np.zeros(grid.shape)
    F = _as_callable(source, True)
    g = _as_callable(boundary, True)
    f0 = _as_callable(u0, False)
    f1 = _as_callable(u1, False)

    def field_at(fun, t=None):
        if fun is None:
            return zero.copy()
        args = list(X) + ([np.full(grid.shape, t)] if t is not None else [])
        return np.broadcast_to(np.asarray(fun(*args), dtype=float), grid.shape).copy()

    sl = tuple(slice(1, -1) for _ in range(domain.n))
    edge = ~interior_mask(grid)
    t = t_start + dt * np.arange(nt)
    out = np.empty(grid.shape + (nt,))
    u_prev = field_at(f0)
    out[..., 0] = u_prev
    lap = np.zeros(grid.shape)
    lap[sl] = st.apply(u_prev)
    acc = lap - field_at(F, t[0])
    u_cur = u_prev + dt * field_at(f1) + 0.5 * dt ** 2 * acc
    u_cur[edge] = field_at(g, t[1])[edge]
    out[..., 1] = u_cur
    for k in range(1, nt - 1):
        lap[sl] = st.apply(u_cur)
        u_next = 2 * u_cur - u_prev + dt ** 2 * (lap - field_at(F, t[k]))
        u_next[edge] = field_at(g, t[k + 1])[edge]
        out[..., k + 1] = u_next
        u_prev, u_cur = u_cur, u_next
    return SpaceTimeField(grid.with_time(t[0], t[-1], nt), out)


@dataclass
class HarmonicExtension:
    field: SpaceTimeField
    residual: float


def _laplace_factor(grid: TensorGrid):
    from .media import identity
    st = FluxStencil(identity(grid.n), grid.space_axes)
    M = st.matrix().tocsc()
    mask = interior_mask(TensorGrid(grid.box, grid.counts)).ravel()
    Mi = M[:, mask]
    Mb = M[:, ~mask]
    return st, splu(Mi.tocsc()), Mb, mask


def harmonic_extension(phi, grid: TensorGrid, tol: float = 1e-10) -> HarmonicExtension:
    """Solve the discrete Laplace problem psi = phi on the boundary, slice by slice in time.

    ``phi`` is a SpaceTimeField (only its boundary nodes are used) or a
    callable phi(x[, y], t) evaluated on the boundary nodes of ``grid``.
    One sparse LU factorization serves every time slice.
    """
    if isinstance(phi, SpaceTimeField):
        if phi.grid != grid:
            raise ValueError("trace field must live on the target grid")
        vals = phi.values
    else:
        vals = np.asarray(phi(*grid.mesh()), dtype=float) * np.ones(grid.shape)
    st, lu, Mb, mask = _laplace_factor(grid)
    space_shape = tuple(grid.counts)
    nt = grid.nt if grid.has_time else 1
    flat = vals.reshape(int(np.prod(space_shape)), nt)
    bvals = flat[~mask]
    rhs = -(Mb @ bvals)
    sol = lu.solve(np.asarray(rhs, dtype=float))
    out = flat.astype(float).copy()
    out[mask] = sol
    out = out.reshape(grid.shape)
    res = st.apply(out.reshape(space_shape + (nt,)))
    scale = max(float(np.abs(bvals).max()), 1e-300)
    residual = float(np.abs(res).max()) / scale * min(grid.spacing[: grid.n]) ** 2
    if residual > tol:
        raise ArithmeticError(f"harmonic extension residual {residual:.3g} above {tol:g}")
    return HarmonicExtension(SpaceTimeField(grid, out), residual)


def extension_ratio(phi: Manufactured, grid: TensorGrid) -> float:
    """|E phi|_{H2(Omega x I)} / |phi|_{H2(I, H3/2-boundary)} with the surrogate boundary norm."""
    ext = harmonic_extension(lambda *a: phi(*a), grid).field
    w = grid.weights()
    total = 0.0
    variables = list(range(grid.n)) + ["t"]
    total += np.sum(w * ext.values ** 2)
    firsts = {v: ext.derivative(v) for v in variables}
    for v in variables:
        total += np.sum(w * firsts[v].values ** 2)
        for v2 in variables:
            total += np.sum(w * firsts[v].derivative(v2).values ** 2)
    trace = SpaceTimeField.sample(phi, grid)
    return float(math.sqrt(total)) / bochner_norm(trace, 2, "H3/2-boundary")


@dataclass
class EnergyProfile:
    times: np.ndarray
    values: np.ndarray


def _energy_density(u: SpaceTimeField, medium: AnisotropicMedium, t_index=None, t=None):
    g = u.grid
    X = g.space_mesh()
    A = medium.matrix(*[np.broadcast_to(x, tuple(g.counts)) for x in X])
    if u.exact is not None:
        ts = np.atleast_1d(t if t is not None else g.t)
        coords = [x[..., None] for x in X]
        tt = ts[(None,) * g.n]
        grad = [u.exact.diff(i)(*coords, tt) for i in range(g.n)]
        ut = u.exact.dt(1)(*coords, tt)
    else:
        grad = [u.derivative(i).values for i in range(g.n)]
        ut = u.derivative("t").values
        if t_index is not None:
            grad = [d[..., t_index] for d in grad]
            ut = ut[..., t_index]
    pad = (None,) * (np.ndim(grad[0]) - g.n)
    q = sum(A[(..., i, j) + pad] * np.real(np.conj(grad[i]) * grad[j])
            for i in range(g.n) for j in range(g.n))
    return q + np.abs(ut) ** 2


def energy(u: SpaceTimeField, medium: AnisotropicMedium, t: float) -> float:
    """int_Omega A grad u . grad u + (d_t u)^2 dx at time t (trapezoid)."""
    g = u.grid
    w = g.space_weights()
    if u.exact is not None:
        dens = _energy_density(u, medium, t=np.array([float(t)]))[..., 0]
    else:
        i = int(np.argmin(np.abs(g.t - t)))
        if abs(g.t[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError("t is not a grid time of the sampled field")
        dens = _energy_density(u, medium, t_index=i)
    return float(np.sum(w * dens))


def energy_profile(u: SpaceTimeField, medium: AnisotropicMedium) -> EnergyProfile:
    g = u.grid
    w = g.space_weights()[..., None]
    dens = _energy_density(u, medium)
    return EnergyProfile(g.t.copy(), np.sum(w * dens, axis=tuple(range(g.n))))


def integrated_energy(profile: EnergyProfile) -> float:
    return float(np.sum(trapezoid_weights(profile.times) * profile.values))
