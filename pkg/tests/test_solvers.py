import math

import numpy as np
import pytest
import sympy as sp

from cauchylab.fields import Manufactured, SpaceTimeField, T_SYM, TensorGrid, X, Y
from cauchylab.geometry import Box
from cauchylab.media import identity, sinusoidal
from cauchylab.multiplier import standing_wave
from cauchylab.solvers import (CFLError, DiscreteOperator, apply_operator, energy, harmonic_extension,
                               wave_solve)

BOX = Box.unit(2)


def _solve_error(n: int) -> float:
    u = standing_wave(2, (1, 1))
    sol = wave_solve(identity(2), BOX, 0.5, (n + 1, n + 1), nt=n + 1, u0=lambda x, y: u(x, y, 0 * x))
    ref = u(*sol.grid.mesh())
    return float(np.max(np.abs(sol.values - ref)))


def test_leapfrog_is_second_order():
    errs = [_solve_error(n) for n in (16, 32, 64)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) > 1.8


def test_cfl_violation():
    with pytest.raises(CFLError):
        wave_solve(identity(2), BOX, 1.0, (33, 33), nt=5)


def test_manufactured_source_is_reproduced():
    # u = x y (1 - x)(1 - y) t^2 with the sinusoidal medium: the scheme sees the exact source
    u = Manufactured(X * Y * (1 - X) * (1 - Y) * T_SYM ** 2, 2, True, "poly")
    med = sinusoidal(2)
    P = u.wave_residual(med)
    errs = []
    for n in (16, 32):
        sol = wave_solve(med, BOX, 0.5, (n + 1, n + 1), nt=2 * n + 1, source=P, boundary=u)
        errs.append(np.max(np.abs(sol.values - u(*sol.grid.mesh()))))
    assert errs[1] < errs[0] / 3 and errs[1] < 1e-4


@pytest.mark.parametrize("n", [17, 33])
def test_discrete_operator_converges_to_exact(n):
    u = Manufactured(sp.sin(2 * X) * sp.cos(Y + T_SYM), 2, True)
    med = sinusoidal(2)
    g = TensorGrid(BOX, (n, n), (0.0, 1.0), n)
    f = SpaceTimeField.sample(u, g)
    op = DiscreteOperator(med, g, "wave")
    exact = apply_operator(op, f)
    approx = apply_operator(op, SpaceTimeField(g, f.values))
    inner = (slice(2, -2),) * 3
    err = np.max(np.abs(exact.values[inner] - approx.values[inner]))
    assert err < 20.0 / n ** 2


def test_harmonic_extension_reproduces_harmonic_data():
    u = Manufactured(X ** 2 - Y ** 2 + 3 * X * Y * T_SYM, 2, True)
    g = TensorGrid(BOX, (17, 17), (0.0, 1.0), 5)
    ext = harmonic_extension(lambda *a: u(*a), g).field
    # quadratics are reproduced exactly by the five-point scheme
    assert np.max(np.abs(ext.values - u(*g.mesh()))) < 1e-12


def test_energy_of_standing_wave_is_conserved():
    u = standing_wave(2, (1, 2))
    f = SpaceTimeField.sample(u, TensorGrid(BOX, (33, 33), (0.0, 1.0), 9))
    e = [energy(f, identity(2), t) for t in (0.0, 0.25, 0.5, 1.0)]
    assert np.ptp(e) < 1e-10 * max(e)
