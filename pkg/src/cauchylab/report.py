"""Machine-readable check results shared by every module."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

PASS = "PASS"
FAIL = "FAIL"
SKIPPED = "SKIPPED"

MODES = ("explicit-constant", "fitted-constant", "rate-fit", "identity")


@dataclass
class CheckReport:
    """Outcome of one certificate or one verification op.

    ``margins`` are log-domain margins, ``log(rhs) - log(lhs)``, or plain
    margins for ops whose sides may vanish. A certificate passes on margins
    when the smallest one is at least ``-tol``.
    """

    id: str
    anchor: str = ""
    mode: str = "explicit-constant"
    margins: list[float] = field(default_factory=list)
    fitted: dict[str, float] | None = None
    convergence: list[dict[str, Any]] = field(default_factory=list)
    verdict: str = PASS
    seed: int | None = None
    runtime_ms: float = 0.0
    reason: str = ""
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    @property
    def skipped(self) -> bool:
        return self.verdict == SKIPPED

    @property
    def worst_margin(self) -> float:
        return min(self.margins) if self.margins else math.inf

    def to_dict(self, with_runtime: bool = True) -> dict[str, Any]:
        out = {
            "id": self.id,
            "anchor": self.anchor,
            "mode": self.mode,
            "margins": [_clean(m) for m in self.margins],
            "fitted": None if self.fitted is None else {k: _clean(v) for k, v in self.fitted.items()},
            "convergence": _clean(self.convergence),
            "verdict": self.verdict,
            "seed": self.seed,
            "runtime_ms": round(float(self.runtime_ms), 3) if with_runtime else 0.0,
            "reason": self.reason,
            "details": _clean(self.details),
        }
        return out

    def to_json(self, with_runtime: bool = True) -> str:
        return json.dumps(self.to_dict(with_runtime), indent=2, sort_keys=True)


def margin_verdict(margins, tol: float) -> str:
    if len(margins) == 0:
        return PASS
    return PASS if min(margins) >= -tol else FAIL


def log_margin(log_rhs: float, log_lhs: float) -> float:
    """log(rhs) - log(lhs), with a vanishing left side counted as +inf."""
    if log_lhs == -math.inf:
        return math.inf
    return float(log_rhs - log_lhs)


def safe_log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _clean(obj):
    # JSON has no inf/nan; encode them as strings so reports stay valid
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


REPORT_SCHEMA = {
    "type": "object",
    "required": ["id", "anchor", "mode", "margins", "fitted", "convergence",
                 "verdict", "seed", "runtime_ms"],
    "properties": {
        "id": {"type": "string"},
        "anchor": {"type": "string"},
        "mode": {"enum": list(MODES)},
        "margins": {"type": "array", "items": {"type": ["number", "string"]}},
        "fitted": {
            "anyOf": [
                {"type": "null"},
                {"type": "object", "required": ["value", "spread"]},
            ]
        },
        "convergence": {"type": "array", "items": {"type": "object"}},
        "verdict": {"enum": [PASS, FAIL, SKIPPED]},
        "seed": {"type": ["integer", "null"]},
        "runtime_ms": {"type": "number", "minimum": 0},
    },
}
