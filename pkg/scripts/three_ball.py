"""Fitted three-ball exponents for harmonic polynomials as the maximal degree grows."""
import math

from cauchylab.harness import rng, three_ball_exponent
from cauchylab.harness.families import harmonic_polynomials

print(f"sharp exponent for radii (3/2, 2, 7/2): {math.log(7 / 4) / math.log(7 / 3):.4f}")
for deg in (4, 6, 8, 10, 12, 14):
    fam = harmonic_polynomials(rng(0, "3b"), 12, deg)
    for gradient in (False, True):
        res = three_ball_exponent(fam, gradient=gradient)
        print(f"max degree {deg:2d} {'gradient' if gradient else 'value   '} "
              f"gamma={res.gamma:.3f} C={res.C:.3g} used={res.used}")
