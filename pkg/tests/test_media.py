import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cauchylab.geometry import Box
from cauchylab.media import (CATALOG, catalog, constant_medium, identity, random_smooth, scale_coefficients,
                             sinusoidal, smallness_margin, verify_ellipticity, verify_gradient_bound)
from cauchylab.report import FAIL, PASS


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_constants_hold(name):
    med = catalog(name, 2)
    box = Box.unit(2)
    assert verify_ellipticity(med, box).verdict == PASS
    assert verify_gradient_bound(med, box).verdict == PASS


def test_unknown_medium():
    with pytest.raises(KeyError):
        catalog("marble")


def test_sinusoidal_constants():
    med = sinusoidal(2, 0.05)
    assert med.kappa == pytest.approx(1 / 0.95)
    assert med.varkappa == 0.05
    assert not med.is_constant and identity(2).is_constant


def test_indefinite_matrix_fails_ellipticity():
    med = constant_medium([[1.0, 0.0], [0.0, -0.5]])
    assert verify_ellipticity(med, Box.unit(2)).verdict == FAIL


def test_understated_varkappa_fails():
    med = sinusoidal(2, 0.2)
    lying = type(med)(med.name, med.n, med.kappa, 1e-3, med.matrix, med.jacobian, med.symbolic)
    assert verify_gradient_bound(lying, Box.unit(2)).verdict == FAIL


def test_finite_difference_path_agrees():
    med = random_smooth(2, seed=3)
    no_jac = type(med)(med.name, med.n, med.kappa, med.varkappa, med.matrix, None, med.symbolic)
    rep = verify_gradient_bound(no_jac, Box.unit(2))
    assert rep.details["path"] == "finite-difference"
    assert rep.details["max_form"] == pytest.approx(verify_gradient_bound(med, Box.unit(2)).details["max_form"],
                                                   rel=1e-6)


@given(st.floats(0.25, 4.0))
def test_rescaled_quadratic_form(rho):
    med = random_smooth(2, seed=1)
    sc = scale_coefficients(med, rho)
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, (64, 2))
    xi = rng.normal(size=(64, 2))
    assert np.max(sc.quadratic_form_residual(x, xi)) < 1e-12
    scaled = sc.as_medium()
    box = Box((0.0, 0.0), (1.0, 1.0 / rho))
    assert verify_ellipticity(scaled, box).verdict == PASS
    assert verify_gradient_bound(scaled, box).verdict == PASS


def test_smallness_margin_sign():
    assert smallness_margin(identity(2, 1e-2), Box.unit(2)) == pytest.approx(1 - 1e-2 * math.sqrt(2))
    assert smallness_margin(sinusoidal(2, 0.9), Box.unit(2)) < 0
