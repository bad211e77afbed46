import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from cauchylab.fields import Manufactured, SpaceTimeField, T_SYM, TensorGrid, X, Y
from cauchylab.geometry import Box
from cauchylab.norms import (band_window, bochner_norm, grid_sobolev_norm, h11_sigma, holder_norm,
                             holder_seminorm, scale_check, space_norm_at)

MODE = Manufactured(sp.sin(sp.pi * X) * sp.sin(sp.pi * Y) * sp.cos(T_SYM), 2, True, "mode")
TIME_L2 = math.sqrt(0.5 + math.sin(2) / 4)  # |cos|_{L2(0,1)}


@pytest.fixture(scope="module")
def mode():
    return SpaceTimeField.sample(MODE, TensorGrid(Box.unit(2), (33, 33), (0.0, 1.0), 65))


def test_bochner_l2_closed_form(mode):
    assert bochner_norm(mode) == pytest.approx(0.5 * TIME_L2, rel=1e-4)


def test_bochner_h1_closed_form(mode):
    assert bochner_norm(mode, 0, "H1") == pytest.approx(0.5 * TIME_L2 * math.sqrt(1 + 2 * math.pi ** 2), rel=1e-4)


def test_traces(mode):
    assert bochner_norm(mode, 0, "L2-boundary") < 1e-12
    # four faces, each with |d_nu u|^2 integrating to pi^2 / 2
    assert bochner_norm(mode, 0, "L2-boundary", trace="normal") == pytest.approx(
        math.sqrt(2 * math.pi ** 2) * TIME_L2, rel=1e-4)
    assert h11_sigma(mode) < 1e-10


def test_pointwise_in_time(mode):
    assert space_norm_at(mode, 0.0) == pytest.approx(0.5, rel=1e-12)


def test_windows_add_up(mode):
    whole = bochner_norm(mode, 1)
    parts = bochner_norm(mode, 1, "L2", [(0.0, 0.5), (0.5, 1.0)])
    assert parts == pytest.approx(whole, rel=1e-3)
    assert band_window(0.25, 4.0) == [(-4.0, -3.0), (3.0, 4.0)]


def test_holder_seminorm_of_sqrt_profile():
    # f(x) = x on [0, 1]: the alpha = 1/2 quotient peaks at |p - q| = 1
    x = np.linspace(0, 1, 101)
    assert holder_seminorm(x, 0.5, x) == pytest.approx(1.0, abs=1e-12)
    assert holder_seminorm(x, 1.0, x ** 2) == pytest.approx(1.99, abs=1e-12)
    with pytest.raises(ValueError):
        holder_seminorm(x, 0.0, x)


def test_holder_norm_of_linear_field():
    u = Manufactured(2 * X + Y, 2, False)
    f = SpaceTimeField.sample(u, TensorGrid(Box.unit(2), (9, 9)))
    # sup|u| = 3, sup|d_x u| = 2, sup|d_y u| = 1, constant derivatives have zero seminorm
    assert holder_norm(f, 0.5) == pytest.approx(6.0, abs=1e-12)


@given(st.floats(-5, 5).filter(lambda c: abs(c) > 1e-3))
def test_homogeneity(c):
    u = Manufactured(sp.exp(X) * sp.cos(2 * Y - T_SYM), 2, True)
    f = SpaceTimeField.sample(u, TensorGrid(Box.unit(2), (9, 9), (0.0, 1.0), 9))
    for fn, args in [(bochner_norm, (1, "H1")), (grid_sobolev_norm, ("H1",)), (h11_sigma, ())]:
        a, b = scale_check(f, c, fn, *args)
        assert b == pytest.approx(a, rel=1e-12)


def test_grid_norm_rejects_unknown_order(mode):
    with pytest.raises(ValueError):
        grid_sobolev_norm(mode, "H7")
