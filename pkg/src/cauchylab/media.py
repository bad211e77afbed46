"""Coefficient fields A(x): checks of the declared bounds, and anisotropic rescaling.

A medium carries a symmetric matrix evaluator, optionally the derivative
tensor d_k a_ij, the declared ellipticity constant ``kappa`` and the declared
gradient bound ``varkappa``. Catalog media also carry a sympy matrix so that
manufactured residuals are exact.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import sympy as sp
from scipy.stats import qmc

from .fields import SPACE
from .geometry import Box, diameter
from .report import FAIL, PASS, CheckReport


@dataclass(frozen=True)
class AnisotropicMedium:
    """``matrix(*coords)`` returns shape coords.shape + (n, n); ``jacobian`` adds a leading k axis."""

    name: str
    n: int
    kappa: float
    varkappa: float
    matrix: Callable = field(repr=False, compare=False)
    jacobian: Callable | None = field(default=None, repr=False, compare=False)
    symbolic: sp.ImmutableMatrix | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kappa < 1:
            raise ValueError("kappa must be at least 1")
        if not self.varkappa > 0:
            raise ValueError("varkappa must be positive")

    @property
    def key(self) -> str:
        return f"{self.name}:{self.kappa:.17g}:{self.varkappa:.17g}"

    @property
    def is_constant(self) -> bool:
        return self.symbolic is not None and not any(
            self.symbolic[i, j].free_symbols for i in range(self.n) for j in range(self.n))

    def derivatives(self, coords, step: float | None = None, domain: Box | None = None) -> np.ndarray:
        """d_k a_ij at coords, shape (n,) + coords.shape + (n, n).

        Uses the analytic jacobian when present, else central differences with
        step 1e-5 times the domain diameter (1e-5 without a domain).
        """
        if self.jacobian is not None and step is None:
            return np.asarray(self.jacobian(*coords))
        h = step if step is not None else 1e-5 * (diameter(domain) if domain is not None else 1.0)
        out = []
        for k in range(self.n):
            plus = [c + (h if j == k else 0.0) for j, c in enumerate(coords)]
            minus = [c - (h if j == k else 0.0) for j, c in enumerate(coords)]
            out.append((self.matrix(*plus) - self.matrix(*minus)) / (2 * h))
        return np.stack(out)


def from_symbolic(name: str, A, kappa: float, varkappa: float) -> AnisotropicMedium:
    A = sp.ImmutableMatrix(A)
    n = A.shape[0]
    syms = SPACE[:n]
    entries = _entrywise(A, syms)
    jac = [_entrywise(A.diff(s), syms) for s in syms]

    def matrix(*coords):
        return _evaluate(entries, coords, n)

    def jacobian(*coords):
        return np.stack([_evaluate(e, coords, n) for e in jac])

    return AnisotropicMedium(name, n, float(kappa), float(varkappa), matrix, jacobian, A)


def _entrywise(A, syms):
    n = A.shape[0]
    return [[sp.lambdify(syms, A[i, j], modules="numpy") for j in range(n)] for i in range(n)]


def _evaluate(entries, coords, n):
    coords = [np.asarray(c, dtype=float) for c in coords]
    shape = np.broadcast_shapes(*[c.shape for c in coords])
    out = np.empty(shape + (n, n))
    for i in range(n):
        for j in range(n):
            out[..., i, j] = np.broadcast_to(np.asarray(entries[i][j](*coords), dtype=float), shape)
    return out


def identity(n: int = 2, varkappa: float = 1e-2) -> AnisotropicMedium:
    return from_symbolic("identity", sp.eye(n), 1.0, varkappa)


def diagonal(values, varkappa: float = 1e-2, kappa: float | None = None) -> AnisotropicMedium:
    values = [float(v) for v in values]
    k = kappa if kappa is not None else max(max(values), 1 / min(values))
    return from_symbolic("diagonal", sp.diag(*[sp.nsimplify(v) for v in values]), k, varkappa)


def sinusoidal(n: int = 2, eps: float = 0.05) -> AnisotropicMedium:
    """A = (1 + eps sin x) I: kappa = 1/(1 - eps), varkappa = eps."""
    e = sp.nsimplify(eps)
    A = (1 + e * sp.sin(SPACE[0])) * sp.eye(n)
    return from_symbolic("sinusoidal-perturbation", A, 1 / (1 - eps), eps)


def random_smooth(n: int = 2, seed: int = 0, eps: float = 0.1, modes: int = 3) -> AnisotropicMedium:
    """I plus a small smooth symmetric perturbation with certified kappa, varkappa.

    Each mode is c_j sin(k_j . x + phi_j) S_j with S_j symmetric and unit
    spectral norm, so |A - I| <= eps sum|c_j| and the derivative quadratic form
    is at most eps sum_j |c_j| |k_j|_1.
    """
    rng = np.random.default_rng(seed)
    A = sp.eye(n)
    amp = 0.0
    grad = 0.0
    for _ in range(modes):
        S = rng.normal(size=(n, n))
        S = S + S.T
        S /= np.linalg.norm(S, 2)
        k = rng.integers(1, 4, size=n).astype(float)
        phi = rng.uniform(0, 2 * np.pi)
        c = rng.uniform(-1, 1) / modes
        wave = sp.sin(sum(sp.Float(kk) * s for kk, s in zip(k, SPACE[:n])) + sp.Float(phi))
        A = A + sp.Float(eps * c) * wave * sp.Matrix(S.round(12))
        amp += abs(eps * c)
        grad += abs(eps * c) * float(np.sum(np.abs(k)))
    kappa = 1 / (1 - amp)
    return from_symbolic(f"random-smooth[{seed}]", A, kappa, grad)


CATALOG = {
    "identity": identity,
    "diagonal": diagonal,
    "sinusoidal-perturbation": sinusoidal,
    "random-smooth": random_smooth,
}


def catalog(name: str, n: int = 2, **params) -> AnisotropicMedium:
    if name not in CATALOG:
        raise KeyError(f"unknown medium {name!r}; known: {sorted(CATALOG)}")
    if name == "diagonal":
        values = params.pop("values", [2.0, 0.5][:n] if n == 2 else [2.0])
        return diagonal(values, **params)
    return CATALOG[name](n=n, **params)


def _samples(domain: Box, count: int, seed: int):
    sampler = qmc.Halton(d=domain.n + 1, seed=seed)
    u = sampler.random(count)
    x = qmc.scale(u[:, : domain.n], domain.lower, domain.upper)
    if domain.n == 1:
        xi = np.ones((count, 1))
    else:
        ang = 2 * np.pi * u[:, -1]
        xi = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return x, xi


def verify_ellipticity(medium: AnisotropicMedium, domain: Box, sample_count: int = 256,
                       seed: int = 0) -> CheckReport:
    """kappa^-1 <= A(x) xi . xi <= kappa at quasi-random (x, xi), |xi| = 1."""
    start = time.perf_counter()
    if sample_count < 1:
        raise ValueError("sample_count must be positive")
    x, xi = _samples(domain, sample_count, seed)
    A = medium.matrix(*x.T)
    if not np.all(np.isfinite(A)):
        raise FloatingPointError("medium evaluator returned non-finite values")
    asym = float(np.max(np.abs(A - np.swapaxes(A, -1, -2))))
    q = np.einsum("si,sij,sj->s", xi, A, xi)
    lower = q - 1 / medium.kappa
    upper = medium.kappa - q
    margins = np.minimum(lower, upper)
    ok = margins.min() >= -1e-12 and asym <= 1e-12
    return CheckReport(
        id="media.ellipticity", anchor="two-sided ellipticity of the coefficient matrix",
        margins=margins.tolist(), verdict=PASS if ok else FAIL, seed=seed,
        runtime_ms=1e3 * (time.perf_counter() - start),
        details={"worst_lower": float(lower.min()), "worst_upper": float(upper.min()),
                 "asymmetry": asym, "kappa": medium.kappa},
    )


def gradient_form(medium: AnisotropicMedium, x: np.ndarray, xi: np.ndarray,
                  step: float | None = None, domain: Box | None = None) -> np.ndarray:
    """sum_k | sum_ij d_k a_ij xi_i xi_j | at each sample (absolute value outside the double sum)."""
    if medium.jacobian is None and step is None and domain is None:
        raise ValueError("medium has no derivative data; pass a finite-difference step or domain")
    dA = medium.derivatives(tuple(x.T), step=step, domain=domain)
    forms = np.einsum("si,ksij,sj->ks", xi, dA, xi)
    return np.abs(forms).sum(axis=0)


def verify_gradient_bound(medium: AnisotropicMedium, domain: Box, sample_count: int = 256,
                          seed: int = 0, step: float | None = None) -> CheckReport:
    start = time.perf_counter()
    x, xi = _samples(domain, sample_count, seed)
    if medium.jacobian is None and step is None:
        step = 1e-5 * diameter(domain)
    lhs = gradient_form(medium, x, xi, step=step, domain=domain)
    margins = medium.varkappa - lhs
    ok = margins.min() >= -1e-10
    return CheckReport(
        id="media.gradient_bound", anchor="coefficient gradient bound on the quadratic form",
        margins=margins.tolist(), verdict=PASS if ok else FAIL, seed=seed,
        runtime_ms=1e3 * (time.perf_counter() - start),
        details={"max_form": float(lhs.max()), "varkappa": medium.varkappa,
                 "path": "finite-difference" if step is not None else "analytic"},
    )


@dataclass(frozen=True)
class ScaledMedium:
    """A_rho(x', x_n) = D A(x', rho x_n) D with D = diag(1, ..., 1, 1/rho).

    The declared constants are the sharp rescaled ones for a single rho:
    kappa max(rho^2, rho^-2) and varkappa max(1, rho) max(1, rho^-2).
    """

    base: AnisotropicMedium
    rho: float

    @property
    def n(self) -> int:
        return self.base.n

    def _D(self):
        d = np.ones(self.n)
        d[-1] = 1 / self.rho
        return d

    def matrix(self, *coords):
        coords = list(coords)
        coords[-1] = self.rho * np.asarray(coords[-1], dtype=float)
        d = self._D()
        return self.base.matrix(*coords) * d[:, None] * d[None, :]

    def jacobian(self, *coords):
        coords = list(coords)
        coords[-1] = self.rho * np.asarray(coords[-1], dtype=float)
        d = self._D()
        dA = self.base.derivatives(tuple(coords)) * d[:, None] * d[None, :]
        dA[-1] = dA[-1] * self.rho
        return dA

    def as_medium(self) -> AnisotropicMedium:
        r = self.rho
        kappa = self.base.kappa * max(r ** 2, r ** -2)
        varkappa = self.base.varkappa * max(1.0, r) * max(1.0, r ** -2)
        symbolic = None
        if self.base.symbolic is not None:
            rr = sp.nsimplify(r)
            last = SPACE[self.n - 1]
            A = self.base.symbolic.subs(last, rr * last)
            D = sp.diag(*([1] * (self.n - 1) + [1 / rr]))
            symbolic = sp.ImmutableMatrix(D * A * D)
        return AnisotropicMedium(f"{self.base.name}@rho={r:g}", self.n, kappa, varkappa,
                                 self.matrix, self.jacobian, symbolic)

    def quadratic_form_residual(self, x: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """|A_rho(x) xi.xi - A(x', rho x_n) eta.eta| / |A_rho xi.xi|, eta = (xi', xi_n / rho)."""
        lhs = np.einsum("si,sij,sj->s", xi, self.matrix(*x.T), xi)
        xs = x.copy()
        xs[:, -1] *= self.rho
        eta = xi.copy()
        eta[:, -1] /= self.rho
        rhs = np.einsum("si,sij,sj->s", eta, self.base.matrix(*xs.T), eta)
        return np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-300)


def scale_coefficients(medium: AnisotropicMedium, rho: float) -> ScaledMedium:
    if not rho > 0:
        raise ValueError("rho must be positive")
    return ScaledMedium(medium, float(rho))


def smallness_margin(medium: AnisotropicMedium, domain: Box) -> float:
    """1 - kappa varkappa diam(domain); its sign gates the sharper observability route."""
    return 1.0 - medium.kappa * medium.varkappa * diameter(domain)


def constant_medium(A, varkappa: float = 1e-2, name: str = "constant") -> AnisotropicMedium:
    """Any constant SPD matrix, with kappa from its spectrum."""
    A = np.asarray(A, dtype=float)
    ev = np.linalg.eigvalsh(A)
    kappa = max(ev.max(), 1 / ev.min(), 1.0) if ev.min() > 0 else math.inf
    if not math.isfinite(kappa):
        # indefinite: keep a nominal kappa so the ellipticity check can fail loudly
        kappa = max(1.0, float(np.abs(ev).max()))
    return from_symbolic(name, sp.Matrix(A.tolist()).applyfunc(sp.nsimplify), kappa, varkappa)
