"""Axis-aligned boxes, balls and ball chains.

Boxes keep every distance Euclidean, so the domain depth, the depth from a
piece of the boundary and the diameter all have closed forms or cheap
samplers. The two chain builders produce the overlapping balls along which
smallness is propagated: a shrinking chain inside a cone that ends at a
boundary point, and a straight chain of equal balls between two interior
points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi) or len(lo) not in (1, 2):
            raise GeometryError("box corners must both have length 1 or 2")
        if any(h <= l for l, h in zip(lo, hi)):
            raise GeometryError("upper corner must exceed lower corner componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def unit(cls, n: int = 2) -> "Box":
        return cls((0.0,) * n, (1.0,) * n)

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def sides(self) -> np.ndarray:
        return np.subtract(self.upper, self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.sides))

    def faces(self) -> list["Face"]:
        return [Face(axis, side) for axis in range(self.n) for side in (0, 1)]

    def contains(self, points, clearance: float = 0.0, strict: bool = False) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        d = self.distance_to_boundary(p)
        inside = np.all((p >= np.array(self.lower) - 1e-14) & (p <= np.array(self.upper) + 1e-14), axis=1)
        return inside & ((d > clearance) if strict else (d >= clearance - 1e-12))

    def distance_to_boundary(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.min(np.minimum(p - np.array(self.lower), np.array(self.upper) - p), axis=1)

    def grid_points(self, per_axis: int) -> np.ndarray:
        axes = [np.linspace(l, h, per_axis) for l, h in zip(self.lower, self.upper)]
        return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)


FACE_NAMES = {(0, 0): "left", (0, 1): "right", (1, 0): "bottom", (1, 1): "top"}


@dataclass(frozen=True)
class Face:
    """One side of a box: coordinate ``axis`` frozen at its lower (0) or upper (1) value.

    ``span`` optionally restricts the free coordinate (2-D boxes only) to a
    sub-interval, which is how a proper piece of a side is described.
    """

    axis: int
    side: int
    span: tuple[float, float] | None = None

    @property
    def name(self) -> str:
        return FACE_NAMES[(self.axis, self.side)]

    def outward_normal(self, n: int) -> np.ndarray:
        nu = np.zeros(n)
        nu[self.axis] = 1.0 if self.side == 1 else -1.0
        return nu

    def distance(self, box: Box, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        level = box.upper[self.axis] if self.side else box.lower[self.axis]
        d_normal = p[:, self.axis] - level
        if box.n == 1:
            return np.abs(d_normal)
        free = 1 - self.axis
        lo, hi = self.span if self.span is not None else (box.lower[free], box.upper[free])
        d_free = p[:, free] - np.clip(p[:, free], lo, hi)
        return np.hypot(d_normal, d_free)


def parse_faces(box: Box, gamma) -> list[Face]:
    """Accept ``"all"``, a face name, a Face, or a list of those."""
    if gamma is None or (isinstance(gamma, str) and gamma == "all"):
        return box.faces()
    if isinstance(gamma, (str, Face)):
        gamma = [gamma]
    by_name = {f.name: f for f in box.faces()}
    out = []
    for g in gamma:
        if isinstance(g, Face):
            out.append(g)
        elif g in by_name:
            out.append(by_name[g])
        else:
            raise GeometryError(f"unknown boundary face {g!r}")
    if not out:
        raise GeometryError("empty boundary piece")
    return out


def diameter(domain: Box) -> float:
    return float(np.linalg.norm(domain.sides))


def depth(domain: Box) -> float:
    """Largest distance from an interior point to the boundary."""
    return float(np.min(domain.sides) / 2)


def depth_from_subboundary(domain: Box, gamma, points_per_axis: int = 64) -> float:
    """Sampled sup over the closed box of the distance to ``gamma``.

    The result is a lower bound that converges under refinement; for whole
    faces of a box the farthest point is a grid corner, so it is exact.
    """
    faces = parse_faces(domain, gamma)
    pts = domain.grid_points(points_per_axis)
    dist = np.min(np.stack([f.distance(domain, pts) for f in faces]), axis=0)
    return float(dist.max())


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("ball radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))

    def contains_ball(self, other: "Ball", rtol: float = 1e-12) -> bool:
        gap = np.linalg.norm(np.subtract(other.center, self.center)) + other.radius
        return gap <= self.radius * (1 + rtol)

    def scaled(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)


@dataclass(frozen=True)
class BallChain:
    balls: tuple[Ball, ...]
    kind: str
    theta: float | None = None
    R: float | None = None
    xi: tuple[float, ...] | None = None
    mu: float | None = None
    varpi_chain: float | None = None
    deltas: tuple[float, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.balls)

    def inclusion_margins(self) -> np.ndarray:
        """2 rho_k - (|x_{k+1} - x_k| + rho_{k+1}) for consecutive balls."""
        out = []
        for a, b in zip(self.balls[:-1], self.balls[1:]):
            step = np.linalg.norm(np.subtract(b.center, a.center))
            out.append(2 * a.radius - (step + b.radius))
        return np.array(out)


def chain_mu(theta: float) -> float:
    s = math.sin(theta)
    return (3 - 2 * s) / (3 - s)


def boundary_ball_chain(x_tilde, theta: float, R: float, xi, k_max: int,
                        domain: Box | None = None) -> BallChain:
    """Shrinking chain inside the cone with apex ``x_tilde``, axis ``xi``, aperture ``theta``.

    Consecutive balls satisfy B(x_{k+1}, rho_{k+1}) in B(x_k, 2 rho_k), and the
    tripled balls B(x_k, 3 rho_k) stay in the cone: they touch its lateral side.
    """
    if not 0 < theta < math.pi / 2:
        raise GeometryError("cone aperture must lie in (0, pi/2)")
    if k_max < 1:
        raise GeometryError("k_max must be at least 1")
    if R <= 0:
        raise GeometryError("cone height must be positive")
    apex = np.asarray(x_tilde, dtype=float)
    axis = np.asarray(xi, dtype=float)
    axis = axis / np.linalg.norm(axis)
    if domain is not None:
        _check_cone(domain, apex, axis, theta, R)

    s = math.sin(theta)
    mu = chain_mu(theta)
    varpi = s / 3
    delta = R / 2
    x = apex + delta * axis
    balls, deltas = [], []
    for _ in range(k_max):
        balls.append(Ball(tuple(x), varpi * delta))
        deltas.append(delta)
        x = x - (1 - mu) * delta * axis
        delta = mu * delta
    return BallChain(tuple(balls), "boundary-cone", theta, R, tuple(axis), mu, varpi, tuple(deltas))


def _check_cone(domain: Box, apex, axis, theta, R):
    n = domain.n
    if n == 1:
        pts = np.array([apex, apex + R * axis])
    else:
        phi0 = math.atan2(axis[1], axis[0])
        ang = phi0 + np.linspace(-theta, theta, 65)
        cap = apex + R * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        pts = np.vstack([apex[None, :], cap])
    if not np.all(domain.contains(pts)):
        raise GeometryError("cone escapes the domain")


def interior_ball_chain(x0, x_target, r: float, domain: Box) -> BallChain:
    """Equal balls along the segment from ``x0`` to ``x_target`` with step at most r."""
    if r <= 0:
        raise GeometryError("radius must be positive")
    a = np.asarray(x0, dtype=float)
    b = np.asarray(x_target, dtype=float)
    length = float(np.linalg.norm(b - a))
    steps = 0 if length == 0 else math.ceil(length / r - 1e-12)
    centers = [a + (b - a) * j / steps for j in range(steps + 1)] if steps else [a]
    clear = domain.distance_to_boundary(np.array(centers))
    if np.any(clear <= 3 * r):
        j = int(np.argmin(clear))
        raise GeometryError(
            f"clearance violated: B(x_{j}, 3r) with 3r={3 * r:.6g} leaves the domain "
            f"(distance to boundary {clear[j]:.6g})"
        )
    return BallChain(tuple(Ball(tuple(c), r) for c in centers), "interior")


def annulus_points(inner: float, outer: float, n_r: int, n_theta: int, center=(0.0, 0.0)):
    """Polar Gauss-Legendre x trapezoid nodes and weights on a 2-D annulus."""
    xr, wr = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * (outer - inner) * (xr + 1) + inner
    wr = 0.5 * (outer - inner) * wr
    th = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    rr, tt = np.meshgrid(r, th, indexing="ij")
    w = (wr * r)[:, None] * np.full(n_theta, 2 * np.pi / n_theta)[None, :]
    x = center[0] + rr * np.cos(tt)
    y = center[1] + rr * np.sin(tt)
    return x.ravel(), y.ravel(), w.ravel()


def ball_points(ball: Ball, n_r: int = 48, n_theta: int = 96):
    """Quadrature nodes and weights on a 2-D disk (or a 1-D interval)."""
    if len(ball.center) == 1:
        xg, wg = np.polynomial.legendre.leggauss(n_r)
        return (ball.center[0] + ball.radius * xg,), ball.radius * wg
    x, y, w = annulus_points(0.0, ball.radius, n_r, n_theta, ball.center)
    return (x, y), w

