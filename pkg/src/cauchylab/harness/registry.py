"""Certificate registry, run sessions and suite execution."""
from __future__ import annotations

import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from ..report import FAIL, MODES, SKIPPED, CheckReport
from .config import RunConfig, rng

GROUPS = ("fbi", "multiplier", "appendix", "assembly")


class UnknownCertificate(KeyError):
    def __init__(self, cid: str):
        super().__init__(cid)
        self.cid = cid

    def __str__(self):
        return f"unknown certificate id: {self.cid}"


@dataclass(frozen=True)
class Certificate:
    """A registry row: what it checks, how, and when it may run.

    ``run`` evaluates both sides over the seeded family and returns the
    report; ``gate`` returns an empty string when the certificate may run,
    else the reason it is skipped.
    """

    id: str
    group: str
    mode: str
    anchor: str
    family: str
    run: Callable[["Session"], CheckReport]
    gate: Callable[["Session"], str] | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"bad mode {self.mode}")
        if self.group not in GROUPS:
            raise ValueError(f"bad group {self.group}")


REGISTRY: dict[str, Certificate] = {}


def register(id: str, group: str, mode: str, anchor: str, family: str = "", gate=None):
    def deco(fn):
        if id in REGISTRY:
            raise ValueError(f"duplicate certificate id {id}")
        REGISTRY[id] = Certificate(id, group, mode, anchor, family, fn, gate)
        return fn
    return deco


@dataclass
class Session:
    """Config plus a cache shared by the certificates of one run."""

    config: RunConfig = field(default_factory=RunConfig)
    cache: dict = field(default_factory=dict)
    reports: dict = field(default_factory=dict)

    def rng(self, key: str):
        return rng(self.config.seed, key)

    def memo(self, key, fn):
        if key not in self.cache:
            self.cache[key] = fn()
        return self.cache[key]

    def report(self, cid: str) -> CheckReport:
        """Report of another certificate in this session, computed on first use."""
        if cid not in self.reports:
            self.reports[cid] = run_certificate(cid, self.config, self)
        return self.reports[cid]


def _load():
    # import order fixes the registry order: transform, multiplier, elliptic, assembly
    from . import fbi_certs, multiplier_certs, appendix_certs, assembly_certs  # noqa: F401


def certificates() -> dict[str, Certificate]:
    _load()
    return REGISTRY


def resolve_suite(items) -> list[str]:
    """Expand group names and ``all``; unknown ids raise UnknownCertificate."""
    reg = certificates()
    out = []
    for item in items:
        if item == "all":
            ids = list(reg)
        elif item in GROUPS:
            ids = [c for c, row in reg.items() if row.group == item]
        elif item in reg:
            ids = [item]
        else:
            raise UnknownCertificate(item)
        out.extend(i for i in ids if i not in out)
    return out


def run_certificate(cid: str, config: RunConfig | None = None, session: Session | None = None) -> CheckReport:
    """Generate the family, evaluate per mode and aggregate; deterministic for a fixed seed."""
    reg = certificates()
    if cid not in reg:
        raise UnknownCertificate(cid)
    session = session or Session(config or RunConfig())
    if config is not None and session.config is not config:
        session = Session(config)
    if cid in session.reports:
        return session.reports[cid]
    cert = reg[cid]
    t0 = time.perf_counter()
    reason = cert.gate(session) if cert.gate else ""
    if reason:
        rep = CheckReport(id=cid, anchor=cert.anchor, mode=cert.mode, verdict=SKIPPED, reason=reason)
    else:
        try:
            rep = cert.run(session)
        except Exception as exc:  # a crashing certificate is a failed certificate, never a silent pass
            rep = CheckReport(id=cid, anchor=cert.anchor, mode=cert.mode, verdict=FAIL,
                              reason=f"{type(exc).__name__}: {exc}",
                              details={"traceback": traceback.format_exc(limit=4)})
    rep.id = cid
    rep.anchor = rep.anchor or cert.anchor
    rep.mode = cert.mode
    rep.seed = session.config.seed
    rep.runtime_ms = 1e3 * (time.perf_counter() - t0)
    session.reports[cid] = rep
    return rep


def _run_one(args):
    cid, config = args
    return run_certificate(cid, config)


def run_suite(ids, config: RunConfig, jobs: int = 1, session: Session | None = None) -> list[CheckReport]:
    """Run certificates; with jobs > 1 each runs in its own process, results kept in input order."""
    ids = list(ids)
    if jobs <= 1 or len(ids) <= 1:
        session = session or Session(config)
        return [run_certificate(cid, config, session) for cid in ids]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, [(cid, config) for cid in ids]))
