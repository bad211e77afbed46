"""Sampled fields on tensor grids, with optional symbolic evaluators.

A :class:`Manufactured` field wraps a sympy expression in the spatial
symbols ``x`` (and ``y``) and optionally the time symbol ``t``. Derivatives
and the wave/elliptic residuals are computed symbolically and lambdified, so
certificates can evaluate both sides of an inequality without stencil error.
:class:`SpaceTimeField` pairs a :class:`TensorGrid` with sampled values and,
when available, the symbolic field it came from.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import sympy as sp

from .geometry import Box

X, Y = sp.symbols("x y", real=True)
T_SYM = sp.Symbol("t", real=True)
SPACE = (X, Y)


class Manufactured:
    """Analytic field u(x[, y][, t]) with cached symbolic derivatives."""

    def __init__(self, expr, n: int, time: bool = True, name: str = ""):
        self.expr = sp.sympify(expr)
        self.n = n
        self.time = time
        self.name = name or str(self.expr)
        self._cache: dict = {}

    @property
    def symbols(self) -> tuple:
        return SPACE[: self.n] + ((T_SYM,) if self.time else ())

    @cached_property
    def _fn(self):
        return sp.lambdify(self.symbols, self.expr, modules="numpy")

    @cached_property
    def is_complex(self) -> bool:
        return bool(self.expr.has(sp.I))

    def __call__(self, *coords) -> np.ndarray:
        coords = [np.asarray(c, dtype=float) for c in coords]
        shape = np.broadcast_shapes(*[c.shape for c in coords]) if coords else ()
        out = np.asarray(self._fn(*coords))
        dtype = complex if (self.is_complex or np.iscomplexobj(out)) else float
        return np.broadcast_to(out, shape).astype(dtype)

    def diff(self, *variables) -> "Manufactured":
        """Derivative along spatial indices (0, 1) or ``"t"``, applied in order."""
        key = tuple(variables)
        if key not in self._cache:
            syms = [T_SYM if v == "t" else SPACE[v] for v in variables]
            expr = sp.diff(self.expr, *syms) if syms else self.expr
            self._cache[key] = Manufactured(expr, self.n, self.time, f"d{key}({self.name})")
        return self._cache[key]

    def dt(self, k: int = 1) -> "Manufactured":
        return self.diff(*(["t"] * k)) if k else self

    def grad(self) -> list["Manufactured"]:
        return [self.diff(i) for i in range(self.n)]

    def divergence_form(self, medium) -> sp.Expr:
        if medium.symbolic is None:
            raise ValueError("medium has no symbolic form; exact residual unavailable")
        A = medium.symbolic
        g = [sp.diff(self.expr, SPACE[j]) for j in range(self.n)]
        return sum(sp.diff(sum(A[i, j] * g[j] for j in range(self.n)), SPACE[i]) for i in range(self.n))

    def wave_residual(self, medium) -> "Manufactured":
        """P u = div(A grad u) - u_tt, exact."""
        key = ("P", medium.key)
        if key not in self._cache:
            expr = self.divergence_form(medium) - sp.diff(self.expr, T_SYM, 2)
            self._cache[key] = Manufactured(expr, self.n, self.time, f"P({self.name})")
        return self._cache[key]

    def elliptic_residual(self, medium) -> "Manufactured":
        """L u = div(A grad u) for a time-free field."""
        key = ("L", medium.key)
        if key not in self._cache:
            self._cache[key] = Manufactured(self.divergence_form(medium), self.n, self.time,
                                            f"L({self.name})")
        return self._cache[key]

    def scaled(self, c) -> "Manufactured":
        return Manufactured(c * self.expr, self.n, self.time, f"{c}*{self.name}")

    def __add__(self, other: "Manufactured") -> "Manufactured":
        return Manufactured(self.expr + other.expr, self.n, self.time, f"{self.name}+{other.name}")


@dataclass(frozen=True)
class TensorGrid:
    """Uniform nodes on a box, optionally times a uniform time interval (time is the last axis)."""

    box: Box
    counts: tuple[int, ...]
    time: tuple[float, float] | None = None
    nt: int = 0

    def __post_init__(self):
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        if len(counts) == 1 and self.box.n == 2:
            counts = counts * 2
        if len(counts) != self.box.n or min(counts) < 2:
            raise ValueError("need at least 2 nodes per spatial axis")
        if self.time is not None and self.nt < 2:
            raise ValueError("need at least 2 time nodes")
        object.__setattr__(self, "counts", counts)

    @property
    def n(self) -> int:
        return self.box.n

    @property
    def has_time(self) -> bool:
        return self.time is not None

    @cached_property
    def space_axes(self) -> list[np.ndarray]:
        return [np.linspace(l, h, c) for l, h, c in zip(self.box.lower, self.box.upper, self.counts)]

    @cached_property
    def t(self) -> np.ndarray | None:
        return None if self.time is None else np.linspace(self.time[0], self.time[1], self.nt)

    @property
    def axes(self) -> list[np.ndarray]:
        return self.space_axes + ([self.t] if self.has_time else [])

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(a) for a in self.axes)

    @property
    def spacing(self) -> list[float]:
        return [a[1] - a[0] for a in self.axes]

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.axes, indexing="ij", sparse=True)

    def space_mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*self.space_axes, indexing="ij", sparse=True)

    def space_weights(self) -> np.ndarray:
        return outer_weights([trapezoid_weights(a) for a in self.space_axes])

    def weights(self) -> np.ndarray:
        return outer_weights([trapezoid_weights(a) for a in self.axes])

    def with_time(self, t0: float, t1: float, nt: int) -> "TensorGrid":
        return TensorGrid(self.box, self.counts, (t0, t1), nt)

    def refined(self, factor: int = 2) -> "TensorGrid":
        counts = tuple((c - 1) * factor + 1 for c in self.counts)
        nt = (self.nt - 1) * factor + 1 if self.has_time else 0
        return TensorGrid(self.box, counts, self.time, nt)

    def points(self) -> np.ndarray:
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)


def trapezoid_weights(axis: np.ndarray) -> np.ndarray:
    h = np.diff(axis)
    w = np.zeros_like(axis)
    w[:-1] += h / 2
    w[1:] += h / 2
    return w


def outer_weights(ws) -> np.ndarray:
    out = np.ones(())
    for w in ws:
        out = np.multiply.outer(out, w)
    return out


@dataclass
class SpaceTimeField:
    grid: TensorGrid
    values: np.ndarray
    exact: Manufactured | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sampled values must be finite")

    @classmethod
    def sample(cls, exact: Manufactured, grid: TensorGrid) -> "SpaceTimeField":
        if exact.time != grid.has_time or exact.n != grid.n:
            raise ValueError("field and grid disagree on dimensions")
        return cls(grid, exact(*grid.mesh()), exact)

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def derivative(self, *variables) -> "SpaceTimeField":
        """Exact derivative when a symbolic field is attached, else 2nd-order differences."""
        if self.exact is not None:
            return SpaceTimeField.sample(self.exact.diff(*variables), self.grid)
        vals = self.values
        for v in variables:
            ax = self.grid.n if v == "t" else v
            vals = np.gradient(vals, self.grid.axes[ax], axis=ax, edge_order=2)
        return SpaceTimeField(self.grid, vals)

    def dt(self, k: int = 1) -> "SpaceTimeField":
        return self.derivative(*(["t"] * k)) if k else self

    def scaled(self, c) -> "SpaceTimeField":
        ex = None if self.exact is None else self.exact.scaled(c)
        return SpaceTimeField(self.grid, c * self.values, ex)

    def to_csv(self, path, header_extra: dict | None = None):
        """Write one row per node: coordinates then value (real, imag for complex)."""
        pts = self.grid.points()
        vals = self.values.ravel()
        names = ["x", "y"][: self.grid.n] + (["t"] if self.grid.has_time else [])
        cols = [pts]
        if self.is_complex:
            cols += [vals.real[:, None], vals.imag[:, None]]
            names += ["re", "im"]
        else:
            cols.append(vals[:, None])
            names.append("u")
        meta = {
            "format": "cauchylab.field/1",
            "box": f"{list(self.grid.box.lower)}x{list(self.grid.box.upper)}",
            "counts": list(self.grid.counts),
            "time": list(self.grid.time) if self.grid.time else None,
            "nt": self.grid.nt,
            "analytic": self.exact is not None,
            "expr": None if self.exact is None else str(self.exact.expr),
        }
        meta.update(header_extra or {})
        header = "\n".join(f"{k}: {v}" for k, v in meta.items()) + "\n" + ",".join(names)
        np.savetxt(path, np.hstack(cols), delimiter=",", header=header, fmt="%.17g")
