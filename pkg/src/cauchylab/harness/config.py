"""Run configuration and seeded randomness."""
from __future__ import annotations

import zlib
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml


class ConfigError(ValueError):
    """Invalid run configuration (maps to CLI exit status 2)."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a certificate run depends on.

    ``levels`` are the spatial grid levels used by identity checks, ``lams``
    and ``deltas`` the transform sweeps, ``family_size`` the number of
    manufactured instances per explicit certificate.
    """

    suite: tuple[str, ...] = ("all",)
    seed: int = 0
    levels: tuple[int, ...] = (64, 128, 256)
    lams: tuple[float, ...] = (4.0, 8.0, 16.0, 32.0, 64.0)
    deltas: tuple[float, ...] = (0.25, 0.5)
    T: float = 4.0
    medium: str = "sinusoidal-perturbation"
    out: str = "reports"
    family_size: int = 20
    seq_trials: int = 10_000
    pw_trials: int = 50
    spread_tol: float = 10.0
    refine_tol: float = 0.2
    rate_tol: float = 0.1

    def __post_init__(self):
        norm = {
            "suite": tuple(str(s) for s in _as_tuple(self.suite)),
            "levels": tuple(int(v) for v in _as_tuple(self.levels)),
            "lams": tuple(float(v) for v in _as_tuple(self.lams)),
            "deltas": tuple(float(v) for v in _as_tuple(self.deltas)),
        }
        for k, v in norm.items():
            object.__setattr__(self, k, v)
        for name in ("suite", "levels", "lams", "deltas"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must be a nonempty list")
        if any(lam <= 0 for lam in self.lams):
            raise ConfigError("lambda values must be positive")
        if any(not 0 < d < 1 for d in self.deltas):
            raise ConfigError("delta values must lie in (0, 1)")
        if not self.T > 0:
            raise ConfigError("T must be positive")
        if any(n < 8 for n in self.levels):
            raise ConfigError("grid levels must be at least 8")
        from ..media import CATALOG
        if self.medium not in CATALOG:
            raise ConfigError(f"unknown medium {self.medium!r}; known: {', '.join(sorted(CATALOG))}")
        if self.family_size < 1 or self.seq_trials < 1 or self.pw_trials < 1:
            raise ConfigError("family sizes must be positive")

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


def _as_tuple(v):
    if isinstance(v, (str, bytes)):
        return (v,)
    if isinstance(v, (int, float)):
        return (v,)
    return tuple(v)


def load_config(path) -> RunConfig:
    """Read a YAML mapping whose keys are RunConfig field names."""
    try:
        data = yaml.safe_load(Path(path).read_text()) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return RunConfig(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def rng(seed: int, key: str) -> np.random.Generator:
    """Counter-based generator keyed by (seed, key), independent of call order."""
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(key.encode())])
    return np.random.Generator(np.random.Philox(ss))
