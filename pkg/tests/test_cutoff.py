import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cauchylab.cutoff import VARPI_ANALYTIC, build_cutoff, certify_varpi


def test_varpi_closed_form():
    # max |s'| = 15/8 at s = 1/2 and max |s''| = 10/sqrt(3); scaled by 2 and 4
    assert VARPI_ANALYTIC == pytest.approx(40 / math.sqrt(3), rel=1e-15)
    assert certify_varpi() == pytest.approx(VARPI_ANALYTIC, abs=1e-10)


@pytest.mark.parametrize("delta,T", [(0.25, 4.0), (0.5, 4.0), (0.1, 1.0)])
def test_support_and_plateau(delta, T):
    chi = build_cutoff(delta, T)
    t = np.linspace(-T, T, 4001)
    v, d1, d2 = chi.evaluate(t)
    assert np.all((v >= 0) & (v <= 1))
    assert np.all(v[np.abs(t) <= (1 - delta / 2) * T] == 1.0)
    assert v[0] == 0.0 and v[-1] == 0.0
    inside = (np.abs(t) > chi.plateau) & (np.abs(t) < T)
    assert np.all(d1[~inside] == 0) and np.all(d2[~inside] == 0)


@given(st.floats(0.05, 0.95), st.floats(0.5, 8.0))
def test_derivative_bounds(delta, T):
    chi = build_cutoff(delta, T)
    t = np.linspace(-T, T, 2001)
    _, d1, d2 = chi.evaluate(t)
    dT = delta * T
    assert np.max(np.abs(d1)) <= chi.varpi / dT * (1 + 1e-12)
    assert np.max(np.abs(d2)) <= chi.varpi / dT ** 2 * (1 + 1e-12)


def test_derivative_matches_finite_difference():
    chi = build_cutoff(0.5, 4.0)
    t = np.linspace(3.05, 3.95, 50)
    h = 1e-5
    fd = (chi(t + h) - chi(t - h)) / (2 * h)
    assert np.allclose(fd, chi.derivative(t), atol=1e-8)


@pytest.mark.parametrize("delta,T", [(0.0, 1.0), (1.0, 1.0), (0.5, -1.0)])
def test_rejects_bad_parameters(delta, T):
    with pytest.raises(ValueError):
        build_cutoff(delta, T)
