import math

import numpy as np
import pytest
import sympy as sp

from cauchylab.fields import Manufactured, SpaceTimeField, T_SYM, TensorGrid, X, Y
from cauchylab.geometry import Box, diameter
from cauchylab.harness.config import rng
from cauchylab.harness.families import boundary_vanishing_family
from cauchylab.media import identity, sinusoidal
from cauchylab.multiplier import (GATE_CLOSED, TraceError, coefficient_source_margins, decompose,
                                  explicit_pr1_constant, identity_convergence, observability_bound,
                                  observability_gate, standing_wave, two_point_energy_bounds, w_norm_bound)
from cauchylab.report import PASS, SKIPPED

BOX = Box.unit(2)


def sample(u, counts=33, interval=(0.0, 8.0), nt=161):
    return SpaceTimeField.sample(u, TensorGrid(BOX, (counts, counts), interval, nt))


@pytest.fixture(scope="module")
def family():
    return [sample(u) for u in boundary_vanishing_family(rng(5, "test.mult"), 3, 2)]


def test_coefficient_term_vanishes_for_constant_medium():
    d = decompose(sample(standing_wave(2, (2, 1)), 17, (0.0, 1.0), 33), identity(2))
    assert d.T_B == 0.0
    assert abs(d.residual) <= 1e-2 * d.scale  # O(h^2) with h = 1/16; the order is tested below


def test_identity_converges_at_second_order():
    u = standing_wave(2, (1, 2))
    rep = identity_convergence(lambda n: sample(u, n + 1, (0.0, 1.0), n // 2 + 1), sinusoidal(2), [16, 32, 64])
    assert rep.passed
    assert min(rep.details["orders"]) >= 1.8


def test_nonvanishing_trace_rejected():
    u = Manufactured(sp.cos(X + Y + T_SYM), 2, True)
    with pytest.raises(TraceError):
        decompose(sample(u, 9, (0.0, 1.0), 9), identity(2))


def test_explicit_inequalities_hold(family):
    med = sinusoidal(2)
    d0 = diameter(BOX)
    for f in family:
        assert w_norm_bound(f).verdict == PASS
        d = decompose(f, med)
        assert min(coefficient_source_margins(d, med, d0)) >= -1e-8
        assert two_point_energy_bounds(f, med, eps=[0.25, 1.0], delta=[d0], decomposition=d).verdict == PASS
        obs = observability_bound(f, med, decomposition=d)
        assert obs.verdict == PASS
        assert obs.details["pr1_ratio"] <= obs.details["pr1_explicit_constant"]


def test_gate_closes_without_smallness(family):
    rough = sinusoidal(2, 0.9)  # kappa varkappa d0 = 9 * 0.9 * sqrt 2 > 1
    gate = observability_gate(rough, BOX, 8.0)
    assert gate.rho0 <= 0 and not gate.open
    rep = observability_bound(family[0], rough)
    assert rep.verdict == SKIPPED and rep.reason == GATE_CLOSED


def test_gate_needs_long_interval():
    gate = observability_gate(identity(2), BOX, 1.0)
    assert not gate.open and gate.reason and gate.reason != GATE_CLOSED
    assert math.isinf(explicit_pr1_constant(1.0, math.sqrt(2), 0.9, 1.0))
