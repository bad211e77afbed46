"""Multiplier-method certificates on the wave operator in a box."""
from __future__ import annotations

import numpy as np

from ..fields import SpaceTimeField, TensorGrid
from ..geometry import Box, diameter
from ..media import catalog, identity
from ..multiplier import (coefficient_source_margins, decompose, identity_convergence, observability_bound,
                          observability_gate, standing_wave, two_point_energy_bounds, w_norm_bound)
from ..report import FAIL, PASS, CheckReport, margin_verdict
from ..solvers import extension_ratio
from .engines import fit_constant
from .families import boundary_vanishing_family, random_smooth
from .registry import Session, register

TOL = 1e-8
BOX = Box.unit(2)
INTERVAL = (0.0, 8.0)
FINE = (33, 161)
COARSE = (17, 81)


def _medium(session: Session):
    return session.memo("mult.medium", lambda: catalog(session.config.medium, 2))


def family(session: Session, level=FINE):
    """Boundary-vanishing fields with their multiplier decompositions on one grid level."""
    def build():
        fields = session.memo("mult.fields", lambda: boundary_vanishing_family(
            session.rng("mult.family"), session.config.family_size, 2))
        g = TensorGrid(BOX, (level[0], level[0]), INTERVAL, level[1])
        med = _medium(session)
        out = []
        for u in fields:
            f = SpaceTimeField.sample(u, g)
            out.append((f, decompose(f, med)))
        return out
    return session.memo(("mult.family", level), build)


def _gate(session: Session) -> str:
    return observability_gate(_medium(session), BOX, INTERVAL[1] - INTERVAL[0]).reason


def _explicit(margins, **details) -> CheckReport:
    margins = [float(m) for m in margins]
    return CheckReport(id="", margins=margins, verdict=margin_verdict(margins, TOL), details=details)


@register("C-B11", "multiplier", "explicit-constant", "multiplier weight bound", "boundary-vanishing")
def cert_b11(session):
    margins = []
    for f, _ in family(session):
        margins.extend(w_norm_bound(f).margins)
    return _explicit(margins)


def _level_field(u, medium_name=None):
    def make(level: int):
        g = TensorGrid(BOX, (level + 1, level + 1), (0.0, 1.0), level // 2 + 1)
        return SpaceTimeField.sample(u, g)
    return make


@register("C-B07", "multiplier", "identity", "multiplier energy identity", "standing-waves")
def cert_b07(session):
    cfg = session.config
    levels = sorted(cfg.levels)
    u = standing_wave(2, (1, 2))
    const = identity_convergence(_level_field(u), identity(2), levels)
    var = identity_convergence(_level_field(u), _medium(session), levels)
    tb = [row["T_B"] for row in const.convergence]
    ok = const.passed and var.passed and all(t == 0.0 for t in tb)
    reasons = [msg for cond, msg in [(const.passed, "order below threshold (constant medium)"),
                                     (var.passed, "order below threshold (variable medium)"),
                                     (all(t == 0.0 for t in tb), "coefficient term nonzero for constant A")]
               if not cond]
    return CheckReport(id="", margins=const.margins + var.margins, convergence=const.convergence,
                       verdict=PASS if ok else FAIL, reason="; ".join(reasons),
                       details={"orders_constant": const.details["orders"],
                                "orders_variable": var.details["orders"],
                                "convergence_variable": var.convergence, "T_B_constant": tb})


def _two_point(session: Session):
    def build():
        med = _medium(session)
        d0 = diameter(BOX)
        L = INTERVAL[1] - INTERVAL[0]
        return [two_point_energy_bounds(f, med, eps=[2 / L, 0.1, 1.0, 10.0],
                                        delta=[d0 / 2, d0, 2 * d0], decomposition=d)
                for f, d in family(session)]
    return session.memo("mult.two_point", build)


def _by_label(session: Session, prefix: str) -> CheckReport:
    margins = []
    for rep in _two_point(session):
        margins.extend(m for m, lab in zip(rep.margins, rep.details["labels"]) if lab.startswith(prefix))
    return _explicit(margins, labels=prefix)


@register("C-B08", "multiplier", "explicit-constant", "endpoint energies by the energy integral and Pu",
          "boundary-vanishing")
def cert_b08(session):
    return _by_label(session, "endpoint-average")


@register("C-B011", "multiplier", "explicit-constant", "time-boundary term by endpoint energies",
          "boundary-vanishing")
def cert_b011(session):
    return _by_label(session, "time-boundary delta")


@register("C-B012", "multiplier", "explicit-constant", "time-boundary term by the energy integral and Pu",
          "boundary-vanishing")
def cert_b012(session):
    return _by_label(session, "time-boundary combined")


def _coef_source(session: Session, which: int) -> CheckReport:
    med = _medium(session)
    d0 = diameter(BOX)
    return _explicit([coefficient_source_margins(d, med, d0)[which] for _, d in family(session)])


@register("C-B013", "multiplier", "explicit-constant", "coefficient-derivative term of the identity",
          "boundary-vanishing")
def cert_b013(session):
    return _coef_source(session, 0)


@register("C-B016", "multiplier", "explicit-constant", "source term of the identity", "boundary-vanishing")
def cert_b016(session):
    return _coef_source(session, 1)


def _observability(session: Session, level=FINE):
    med = _medium(session)
    return session.memo(("mult.obs", level), lambda: [observability_bound(f, med, decomposition=d)
                                                      for f, d in family(session, level)])


@register("C-B018", "multiplier", "explicit-constant", "interior energy by boundary flux and Pu under smallness",
          "boundary-vanishing", gate=_gate)
def cert_b018(session):
    margins = []
    for rep in _observability(session):
        named = dict(zip(rep.details["labels"], rep.margins))
        margins += [named["energy-from-observation"], named["flux"]]
    return _explicit(margins)


@register("C-PR1", "multiplier", "fitted-constant", "endpoint gradients by boundary flux and Pu",
          "boundary-vanishing", gate=_gate)
def cert_pr1(session):
    cfg = session.config
    fine = _observability(session, FINE)
    coarse = _observability(session, COARSE)
    margins = [dict(zip(r.details["labels"], r.margins))["endpoint-gradient"] for r in fine]
    fc = fit_constant([r.details["pr1_ratio"] for r in fine], [r.details["pr1_ratio"] for r in coarse],
                      "max", session.rng("pr1.boot"))
    explicit_ok = min(margins) >= -TOL
    stable = fc.passed(cfg.refine_tol, cfg.spread_tol)
    reasons = [m for c, m in [(explicit_ok, "explicit constant violated"), (stable, "fitted constant unstable")]
               if not c]
    return CheckReport(id="", margins=margins, fitted=fc.to_fitted(), verdict=PASS if explicit_ok and stable else FAIL,
                       reason="; ".join(reasons),
                       details={"explicit_constant": fine[0].details["pr1_explicit_constant"],
                                "ratios": fc.ratios, "coarse_value": fc.coarse})


@register("C-EXT", "multiplier", "fitted-constant", "harmonic extension of boundary data bounded in H2",
          "random-smooth")
def cert_ext(session):
    cfg = session.config
    rng = session.rng("ext")
    phis = [random_smooth(rng, 2, True, modes=2, name=f"trace[{i}]") for i in range(6)]
    fine, coarse = [], []
    for phi in phis:
        coarse.append(extension_ratio(phi, TensorGrid(BOX, (33, 33), (0.0, 1.0), 17)))
        fine.append(extension_ratio(phi, TensorGrid(BOX, (65, 65), (0.0, 1.0), 33)))
    fc = fit_constant(fine, coarse, "max", session.rng("ext.boot"))
    ok = fc.passed(cfg.refine_tol, cfg.spread_tol)
    return CheckReport(id="", fitted=fc.to_fitted(), verdict=PASS if ok else FAIL,
                       reason="" if ok else "fitted constant unstable",
                       details={"ratios": fine, "ratios_coarse": coarse,
                                "note": "boundary norm is the interpolation surrogate"})
