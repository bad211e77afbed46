"""Discrete norms on tensor grids.

Every norm is a composite trapezoid rule. Derivatives come from the attached
symbolic field when there is one, otherwise from second-order differences.
Intersection spaces carry the sum of the constituent norms. Boundary norms
use the trace on whole box faces; fractional boundary norms use the
interpolation surrogates sqrt(|phi|_0 |phi|_1) and sqrt(|phi|_1 |phi|_2).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .fields import SpaceTimeField, TensorGrid, trapezoid_weights, outer_weights
from .geometry import Face, parse_faces

SPACE_NORMS = ("L2", "H1", "H2", "L2-boundary", "H1-boundary", "H2-boundary",
               "H1/2-boundary", "H3/2-boundary")


def holder_seminorm(field, alpha: float, values=None, chunk: int = 512) -> float:
    """Max over distinct sample pairs of |f(p) - f(q)| / |p - q|^alpha.

    ``field`` is a SpaceTimeField (all grid axes are coordinates) or an
    (N, d) array of points with ``values`` alongside.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if isinstance(field, SpaceTimeField):
        pts = field.grid.points()
        vals = field.values.ravel()
    else:
        pts = np.asarray(field, dtype=float)
        pts = pts[:, None] if pts.ndim == 1 else pts
        vals = np.asarray(values).ravel()
    if len(pts) < 2:
        raise ValueError("need at least two sample points")
    best = 0.0
    for start in range(0, len(pts), chunk):
        d = cdist(pts[start:start + chunk], pts)
        dv = np.abs(vals[start:start + chunk, None] - vals[None, :])
        ok = d > 0
        if np.any(ok):
            best = max(best, float(np.max(dv[ok] / d[ok] ** alpha)))
    return best


def subsample(field: SpaceTimeField, max_points: int) -> SpaceTimeField:
    """Keep every s-th node per axis (endpoints kept) so at most ~max_points remain."""
    shape = field.values.shape
    if np.prod(shape) <= max_points:
        return field
    stride = 1
    while np.prod([math.ceil((s - 1) / stride) + 1 for s in shape]) > max_points:
        stride += 1
    idx = [np.unique(np.r_[np.arange(0, s, stride), s - 1]) for s in shape]
    vals = field.values[np.ix_(*idx)]
    pts_axes = [a[i] for a, i in zip(field.grid.axes, idx)]
    return _PointField(pts_axes, vals)


class _PointField(SpaceTimeField):
    """Values on a non-uniform tensor of axes, only used by the Hölder kernel."""

    def __init__(self, axes, values):
        self._axes = axes
        self.values = values
        self.exact = None
        self.grid = _AxesGrid(axes)


@dataclass
class _AxesGrid:
    axes_list: list

    @property
    def axes(self):
        return self.axes_list

    def points(self):
        g = np.meshgrid(*self.axes_list, indexing="ij")
        return np.stack([a.ravel() for a in g], axis=1)


def holder_norm(field: SpaceTimeField, alpha: float, j: int = 1, max_points: int = 4000) -> float:
    """C^{j,alpha} norm (j in {0, 1}) over all grid coordinates, space and time.

    sup|f| plus, for j = 1, sup|d f| + [d f]_alpha for each coordinate
    derivative; for j = 0 the seminorm of f itself.
    """
    out = float(np.abs(field.values).max())
    if j == 0:
        return out + holder_seminorm(subsample(field, max_points), alpha)
    variables = list(range(field.grid.n)) + (["t"] if field.grid.has_time else [])
    for v in variables:
        d = field.derivative(v)
        out += float(np.abs(d.values).max()) + holder_seminorm(subsample(d, max_points), alpha)
    return out


def grid_sobolev_norm(field: SpaceTimeField, order: str = "L2") -> float:
    """L2 or H1 norm over every axis of the grid."""
    w = field.grid.weights()
    total = np.sum(w * np.abs(field.values) ** 2)
    if order == "H1":
        variables = list(range(field.grid.n)) + (["t"] if field.grid.has_time else [])
        for v in variables:
            total += np.sum(w * np.abs(field.derivative(v).values) ** 2)
    elif order != "L2":
        raise ValueError(f"unknown order {order!r}")
    return float(math.sqrt(total))


def band_window(delta: float, T: float) -> list[tuple[float, float]]:
    """J_delta = {(1 - delta) T < |t| < T} as two intervals."""
    return [(-T, -(1 - delta) * T), ((1 - delta) * T, T)]


class _Sampler:
    """Space-grid arrays of d^alpha_x d_t^j u at chosen times."""

    def __init__(self, field: SpaceTimeField):
        self.field = field
        self.grid = field.grid
        self._fd_cache: dict = {}

    def windows(self, window) -> list[tuple[np.ndarray, np.ndarray, np.ndarray | None]]:
        """(times, weights, node indices or None) per interval."""
        g = self.grid
        if not g.has_time:
            raise ValueError("field has no time axis")
        t0, t1 = g.time
        if window is None:
            window = [(t0, t1)]
        elif isinstance(window[0], (int, float)):
            window = [tuple(window)]
        out = []
        h = (t1 - t0) / (g.nt - 1)
        for lo, hi in window:
            if lo < t0 - 1e-12 or hi > t1 + 1e-12 or hi <= lo:
                raise ValueError(f"window ({lo}, {hi}) outside the grid time interval ({t0}, {t1})")
            if self.field.exact is not None:
                m = max(3, int(math.ceil((hi - lo) / h)) + 1)
                ts = np.linspace(lo, hi, m)
                out.append((ts, trapezoid_weights(ts), None))
            else:
                idx = np.nonzero((g.t >= lo - 1e-9 * h) & (g.t <= hi + 1e-9 * h))[0]
                if len(idx) < 2:
                    raise ValueError("window contains fewer than two grid times")
                ts = g.t[idx]
                out.append((ts, trapezoid_weights(ts), idx))
        return out

    def get(self, spatial: tuple[int, ...], j: int, ts, idx) -> np.ndarray:
        f = self.field
        if f.exact is not None:
            ex = f.exact.diff(*spatial).dt(j) if (spatial or j) else f.exact
            coords = self.grid.space_mesh()
            coords = [c[..., None] for c in coords]
            return ex(*coords, ts[(None,) * self.grid.n])
        key = (spatial, j)
        if key not in self._fd_cache:
            self._fd_cache[key] = f.derivative(*spatial, *(["t"] * j)).values
        return self._fd_cache[key][..., idx]


def _multi_indices(n: int, order: int):
    for k in range(order + 1):
        yield from itertools.combinations_with_replacement(range(n), k)


def _face_slice(grid: TensorGrid, face: Face, arr: np.ndarray):
    """Trace of a (*space, nt) array on a face, with the face's quadrature weights."""
    n = grid.n
    idx = [slice(None)] * n
    idx[face.axis] = -1 if face.side else 0
    tr = arr[tuple(idx)]
    if n == 1:
        return tr[None, ...], np.ones(1)
    free_axis = grid.space_axes[1 - face.axis]
    w = trapezoid_weights(free_axis)
    if face.span is not None:
        lo, hi = face.span
        mask = (free_axis >= lo - 1e-12) & (free_axis <= hi + 1e-12)
        tr = tr[mask]
        w = trapezoid_weights(free_axis[mask])
    return tr, w


def _space_sq(sampler: _Sampler, j: int, space_norm: str, faces, trace: str, ts, idx) -> np.ndarray:
    """Squared space norm of d_t^j u (or of its normal trace) at each time in ts."""
    g = sampler.grid
    n = g.n
    if space_norm in ("L2", "H1", "H2"):
        order = {"L2": 0, "H1": 1, "H2": 2}[space_norm]
        w = g.space_weights()[..., None]
        total = np.zeros(len(ts))
        for mi in _multi_indices(n, order):
            v = sampler.get(mi, j, ts, idx)
            total += np.sum(w * np.abs(v) ** 2, axis=tuple(range(n)))
        return total

    if space_norm not in SPACE_NORMS:
        raise ValueError(f"unknown space norm {space_norm!r}")
    levels = {"L2-boundary": 0, "H1-boundary": 1, "H2-boundary": 2,
              "H1/2-boundary": 1, "H3/2-boundary": 2}[space_norm]
    per_level = np.zeros((levels + 1, len(ts)))
    for face in faces:
        tang = (1 - face.axis,) if n == 2 else ()
        for lev in range(levels + 1):
            if lev > 0 and n == 1:
                continue
            spatial = tang * lev
            if trace == "normal":
                sign = 1.0 if face.side else -1.0
                arr = sign * sampler.get(tuple(sorted(spatial + (face.axis,))), j, ts, idx)
            else:
                arr = sampler.get(spatial, j, ts, idx)
            tr, w = _face_slice(g, face, arr)
            per_level[lev] += np.sum(w[:, None] * np.abs(tr) ** 2, axis=0)
    cum = np.cumsum(per_level, axis=0)
    if space_norm == "H1/2-boundary":
        return np.sqrt(cum[0] * cum[1])
    if space_norm == "H3/2-boundary":
        return np.sqrt(cum[1] * cum[2])
    return cum[levels]


def bochner_norm(field: SpaceTimeField, k: int = 0, space_norm: str = "L2", window=None,
                 faces=None, trace: str = "value") -> float:
    """(sum_{j<=k} int_window |d_t^j u(., t)|^2_space dt)^(1/2).

    ``window`` is None (whole grid interval), one (lo, hi) pair, or a list of
    pairs whose contributions are summed. ``trace="normal"`` uses the outward
    normal derivative on the faces instead of the value.
    """
    if k not in (0, 1, 2, 3):
        raise ValueError("time order must be 0..3")
    sampler = _Sampler(field)
    face_list = parse_faces(field.grid.box, faces) if "boundary" in space_norm else []
    total = 0.0
    for ts, wt, idx in sampler.windows(window):
        for j in range(k + 1):
            total += float(np.sum(wt * _space_sq(sampler, j, space_norm, face_list, trace, ts, idx)))
    return math.sqrt(total)


def space_norm_at(field: SpaceTimeField, t: float, space_norm: str = "L2", j: int = 0,
                  faces=None) -> float:
    sampler = _Sampler(field)
    ts = np.array([float(t)])
    idx = None
    if field.exact is None:
        i = int(np.argmin(np.abs(field.grid.t - t)))
        if abs(field.grid.t[i] - t) > 1e-9:
            raise ValueError("time is not a grid node of the sampled field")
        idx = np.array([i])
    face_list = parse_faces(field.grid.box, faces) if "boundary" in space_norm else []
    return math.sqrt(float(_space_sq(sampler, j, space_norm, face_list, "value", ts, idx)[0]))


def h11_sigma(field: SpaceTimeField, gamma="all", window=None) -> float:
    """Norm of L2(I, H1(Gamma)) intersected with H1(I, L2(Gamma))."""
    return (bochner_norm(field, 0, "H1-boundary", window, gamma)
            + bochner_norm(field, 1, "L2-boundary", window, gamma))


def full_gradient_norm_at(field: SpaceTimeField, t: float, j: int = 0) -> float:
    """|grad_(x,t) d_t^j u(., t)|_{L2(Omega)}."""
    sampler = _Sampler(field)
    ts = np.array([float(t)])
    idx = None
    if field.exact is None:
        idx = np.array([int(np.argmin(np.abs(field.grid.t - t)))])
    w = field.grid.space_weights()[..., None]
    axes = tuple(range(field.grid.n))
    total = float(np.sum(w * np.abs(sampler.get((), j + 1, ts, idx)) ** 2, axis=axes)[0])
    for i in range(field.grid.n):
        total += float(np.sum(w * np.abs(sampler.get((i,), j, ts, idx)) ** 2, axis=axes)[0])
    return math.sqrt(total)


@dataclass(frozen=True)
class FunctionalParams:
    delta: float
    T: float
    alpha: float = 0.5
    gamma: object = "all"
    delta_bar: float | None = None
    holder_max_points: int = 3000


@dataclass
class NormReport:
    values: dict[str, float] = field(default_factory=dict)
    grid: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]


def x_alpha_norm(u: SpaceTimeField, alpha: float, max_points: int = 3000) -> float:
    """C^{1,alpha}(closed Q_T) plus H1(I_T, H1(Omega))."""
    return holder_norm(u, alpha, 1, max_points) + bochner_norm(u, 1, "H1")


def composite_functionals(u: SpaceTimeField, medium, params: FunctionalParams,
                          residual: SpaceTimeField | None = None) -> NormReport:
    """Solution and data functionals built from the constituent norms.

    ``residual`` is P u; when omitted it is computed exactly from the attached
    symbolic field, or with the discrete operator for sampled data.
    """
    T = params.T
    db = params.delta_bar if params.delta_bar is not None else params.delta
    if residual is None:
        if u.exact is not None:
            residual = SpaceTimeField.sample(u.exact.wave_residual(medium), u.grid)
        else:
            from .solvers import DiscreteOperator, apply_operator
            residual = apply_operator(DiscreteOperator(medium, u.grid, "wave"), u)

    x_norm = x_alpha_norm(u, params.alpha, params.holder_max_points)
    N = bochner_norm(u, 2, "H2") + bochner_norm(u, 3, "H1") + x_norm
    D = bochner_norm(residual, 1, "L2")
    J = band_window(params.delta / 2, T)
    Jb = band_window(db / 2, T)
    sigma = h11_sigma(u, params.gamma) + bochner_norm(u, 0, "L2-boundary", None, params.gamma, "normal")
    band = bochner_norm(u, 3, "H3/2-boundary", J) + bochner_norm(u, 1, "L2-boundary", J, None, "normal")
    band_bar = bochner_norm(u, 3, "H3/2-boundary", Jb) + bochner_norm(u, 1, "L2-boundary", Jb, None, "normal")
    endpoint = sum(full_gradient_norm_at(u, s * T, j) for s in (-1, 1) for j in (0, 1))

    from .solvers import energy_profile
    prof = energy_profile(u, medium)
    vals = {
        "N": N,
        "X_alpha": x_norm,
        "D": D,
        "data_delta": band + sigma,
        "data_endpoint": endpoint,
        "data_hat": sigma,
        "data_tilde_bar": D + sigma + band_bar,
        "L2H1": bochner_norm(u, 0, "H1"),
        "energy_min": float(np.min(prof.values)),
        "energy_max": float(np.max(prof.values)),
    }
    return NormReport(vals, {"shape": list(u.grid.shape), "time": list(u.grid.time)})


def scale_check(field: SpaceTimeField, c: float, fn, *args, **kwargs) -> tuple[float, float]:
    """(|c| fn(u), fn(c u)) for homogeneity tests."""
    return abs(c) * fn(field, *args, **kwargs), fn(field.scaled(c), *args, **kwargs)


__all__ = [
    "holder_seminorm", "holder_norm", "grid_sobolev_norm", "bochner_norm", "band_window",
    "space_norm_at", "h11_sigma", "full_gradient_norm_at", "composite_functionals",
    "FunctionalParams", "NormReport", "x_alpha_norm", "subsample", "outer_weights",
]
