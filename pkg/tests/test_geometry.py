import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cauchylab.geometry import (Ball, Box, GeometryError, boundary_ball_chain, chain_mu, depth,
                                depth_from_subboundary, diameter, interior_ball_chain, parse_faces)


def test_unit_square_constants():
    box = Box.unit(2)
    assert diameter(box) == pytest.approx(math.sqrt(2), abs=1e-15)
    assert depth(box) == 0.5
    assert box.volume == 1.0
    assert len(box.faces()) == 4


def test_depth_from_one_face_is_the_far_corner():
    box = Box((0.0, 0.0), (2.0, 1.0))
    face = box.faces()[0]
    # a whole face: the farthest closed-box point is at the opposite side
    d = depth_from_subboundary(box, [face])
    assert d == pytest.approx(max(box.sides[face.axis], 0.0), abs=1e-12)
    assert depth_from_subboundary(box, "all") == pytest.approx(0.5, abs=1e-2)


def test_bad_inputs():
    with pytest.raises(GeometryError):
        Ball((0.0, 0.0), 0.0)
    with pytest.raises(GeometryError):
        parse_faces(Box.unit(2), "no-such-face")
    with pytest.raises(GeometryError):
        boundary_ball_chain((0.0, 0.0), math.pi / 2, 1.0, (0, 1), 4)


@given(st.floats(0.01, math.pi / 2 - 0.01))
def test_chain_ratio_identity(theta):
    mu = chain_mu(theta)
    assert abs((1 - mu) - (2 - mu) * math.sin(theta) / 3) < 1e-12


@given(st.floats(0.05, 1.5), st.floats(0.1, 1.0), st.integers(2, 15))
def test_boundary_chain_nested(theta, R, k):
    chain = boundary_ball_chain((0.0, 0.0), theta, R, (0.0, 1.0), k)
    assert np.all(chain.inclusion_margins() >= -1e-12 * R)
    for a, b in zip(chain.balls[:-1], chain.balls[1:]):
        assert a.scaled(2).contains_ball(b)


def test_interior_chain_clearance():
    box = Box((-1.0, -1.0), (1.0, 1.0))
    chain = interior_ball_chain((0.0, 0.0), (0.6, 0.0), 0.075, box)
    assert len(chain) == 9
    assert np.all(chain.inclusion_margins() >= -1e-15)  # step = r: touching balls, equality up to rounding
    with pytest.raises(GeometryError, match="clearance"):
        interior_ball_chain((0.0, 0.0), (0.9, 0.0), 0.1, box)
