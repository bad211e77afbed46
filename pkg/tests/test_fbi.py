import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from cauchylab import fbi
from cauchylab.fields import Manufactured, SpaceTimeField, T_SYM, TensorGrid, X
from cauchylab.geometry import Box
from cauchylab.harness.config import rng
from cauchylab.harness.families import plane_exponential, transform_family
from cauchylab.report import PASS

LINE = Box((0.0,), (1.0,))


def sample(u, T=4.0, nt=129, counts=9):
    return SpaceTimeField.sample(u, TensorGrid(LINE, (counts,), (-T, T), nt))


@pytest.mark.parametrize("lam,omega,t0", [(16.0, 2.0, 0.0), (64.0, 1.0, 0.7), (32.0, -3.0, -1.2)])
def test_transform_of_plane_wave_matches_closed_form(lam, omega, t0):
    f = sample(plane_exponential(omega))
    p = fbi.TransformParams(lam, t0, 0.5, 4.0)
    h = fbi.forward_transform(f, p)
    ref = fbi.gaussian_reference(lam, omega, t0, h.tau)
    # the cutoff only differs from 1 where the Gaussian is negligible; what remains is
    # cancellation in the oscillatory sum, amplified by exp(lam tau^2 / 2) at the tau edges
    amplify = np.exp(lam * h.tau ** 2 / 2)
    assert np.all(np.abs(h.values()[0] - ref) <= 1e-13 * amplify + 1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_transform_is_linear(a, b):
    u = Manufactured(sp.cos(T_SYM) * (1 + X), 1, True)
    v = Manufactured(sp.sin(2 * T_SYM) * X ** 2, 1, True)
    p = fbi.TransformParams(8.0, 0.3, 0.5, 4.0)
    w = Manufactured(a * u.expr + b * v.expr, 1, True)
    hu, hv, hw = (fbi.forward_transform(sample(z, nt=33), p).values() for z in (u, v, w))
    assert np.allclose(hw, a * hu + b * hv, atol=1e-10 * (1 + np.abs(hw).max()))


def test_under_resolved_sample_is_rejected():
    u = Manufactured(sp.cos(T_SYM), 1, True)
    grid = TensorGrid(LINE, (3,), (-4.0, 4.0), 17)
    f = SpaceTimeField(grid, SpaceTimeField.sample(u, grid).values)  # no analytic form attached
    with pytest.raises(fbi.UnderResolvedError, match="oscillation limit"):
        fbi.forward_transform(f, fbi.TransformParams(64.0, 0.0, 0.5, 4.0))


@pytest.mark.parametrize("kw", [dict(lam=-1.0), dict(t0=3.5), dict(delta=1.0), dict(tau_rule="simpson")])
def test_parameter_validation(kw):
    base = dict(lam=4.0, t0=0.0, delta=0.25, T=4.0)
    base.update(kw)
    with pytest.raises(ValueError):
        fbi.TransformParams(**base)


def test_explicit_bounds_on_random_instances():
    fields = transform_family(rng(11, "test.fbi"), 4, 4.0, 1)
    for u, (lam, delta) in zip(fields, [(4.0, 0.25), (16.0, 0.5), (64.0, 0.25), (32.0, 0.5)]):
        f = sample(u)
        p = fbi.TransformParams(lam, 0.2, delta, 4.0)
        assert fbi.transform_bound_certificates(f, p).verdict == PASS
        _, k = fbi.first_residual(f, p)
        _, g = fbi.second_residual(f, p)
        assert k.verdict == PASS and g.verdict == PASS
        assert k.details["identity_residual"] <= k.details["identity_tol"]


def test_residual_vanishes_without_cutoff_activity():
    # a field supported away from the bands has k = g = 0 exactly
    u = Manufactured(sp.Integer(0) * X, 1, True)
    p = fbi.TransformParams(16.0, 0.0, 0.5, 4.0)
    assert fbi.log_residual_norm(sample(u, nt=9), p, "k") == -math.inf


def test_full_line_inversion_of_plane_wave():
    f = sample(plane_exponential(2.0))
    for lam in (16.0, 64.0):
        rec = fbi.reconstruct(f, fbi.TransformParams(lam, 0.4, 0.5, 4.0))
        err = np.max(np.abs(rec.full - rec.reference)) / np.max(np.abs(rec.reference))
        assert err <= 1e-6


def test_rate_sweep_recovers_gaussian_decay():
    from cauchylab.harness.fbi_certs import RATE_FIELD, rate_lams, residual_sweep
    sw = residual_sweep(RATE_FIELD, rate_lams(0.5, 4.0), 0.5, 4.0)
    for which in ("k", "g"):
        assert sw[which]["rel_error"] <= 0.1 and sw[which]["r2"] >= 0.99
    assert sw["target"] == -0.25
