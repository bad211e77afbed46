import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cauchylab.moduli import (LogScalar, ModulusSpec, absorption_check, add, compare, e2, e3, epsilon_residual,
                              iterated_exp, modulus_eval, mu_equation_residual, parameter_selection, solve_epsilon)


def test_logscalar_round_trip():
    for x in (1e-300, 0.5, 3.0, -7.25, 1e300):
        # relative error of exp(log x) is about |log x| * eps
        assert float(LogScalar.from_float(x)) == pytest.approx(x, rel=1e-12)
    assert LogScalar.from_float(0.0).sign == 0


def test_tower_comparisons_beyond_float_range():
    assert e3(10.0) > e2(1e4) > iterated_exp(1, 700.0)
    assert e3(10.0).saturated
    assert compare(e3(10.0), e3(10.0 + 1e-9)) == -1
    assert compare(e2(5.0), e2(5.0)) == 0


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_add_matches_float(a, b):
    exact = a + b
    got = add(LogScalar.from_float(a), LogScalar.from_float(b))
    assert float(got) == pytest.approx(exact, rel=1e-12, abs=1e-12)


@given(st.floats(0.1, 5.0), st.floats(0.1, 5.0), st.floats(-700, -6))
def test_solve_epsilon_residual_and_bound(beta, c, log_b):
    if not log_b < -c:
        return
    eps = solve_epsilon(beta, c, log_b=log_b)
    assert 0 < eps < 1
    assert epsilon_residual(beta, c, eps, log_b) <= 1e-12
    assert eps <= (c + beta) / abs(log_b) * (1 + 1e-12)


def test_solve_epsilon_reference_value():
    # beta = c = 1, b = e^-100: root of ln e - 1/e = -100
    eps = solve_epsilon(1.0, 1.0, log_b=-100.0)
    assert eps == pytest.approx(0.0104776, abs=1e-6)
    assert math.log(eps) - 1 / eps == pytest.approx(-100.0, abs=1e-10)


def test_solve_epsilon_needs_small_b():
    with pytest.raises(ValueError):
        solve_epsilon(1.0, 1.0, b=0.5)


@pytest.mark.parametrize("spec", [ModulusSpec("Phi", 1.0, 0.5), ModulusSpec("Theta", 0.2, 1.0),
                                  ModulusSpec("Psi", 0.05, 2.0)])
def test_moduli_piecewise_monotone(spec):
    bp = spec.breakpoint
    below = np.geomspace(1e-300, bp * (1 - 1e-9), 400)
    vals = [modulus_eval(spec, r) for r in below]
    assert np.all(np.diff(vals) >= -1e-15)
    above = np.linspace(bp, 1.0, 50)[1:]  # at the breakpoint itself the log branch applies
    assert np.allclose([modulus_eval(spec, r) for r in above], above)


def test_modulus_extends_below_float_range():
    spec = ModulusSpec("Phi", 1.0, 1.0)
    assert modulus_eval(spec, 0.0, log_rho=-1e6) == pytest.approx(1e-6)


@pytest.mark.parametrize("kind,param", [("Theta", 0.5), ("Psi", 0.1), ("Phi", -1.0)])
def test_modulus_spec_validation(kind, param):
    with pytest.raises(ValueError):
        ModulusSpec(kind, param, 1.0)


def test_parameter_selection_closed_form():
    sel = parameter_selection(0.5, 4.0, 1.0, 1.0, 0.25)
    assert sel.lam == 65536.0
    assert sel.rate_exponent == 2.0 ** 14
    for d in (0.5, 0.25, 0.1):
        sel = parameter_selection(d, 4.0, 1.0, 1.0, 0.25)
        assert sel.lam == pytest.approx(16 * d ** -16 / 16, rel=1e-15)
        assert mu_equation_residual(sel, d, 1.0, 0.25) <= 1e-12


def test_absorption_margins_nonnegative():
    assert min(absorption_check([0.1, 0.25, 0.5, 0.9], 1.0, 0.25)) >= 0
