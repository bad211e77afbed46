"""Decay of the transform residuals in lambda, against the Gaussian rate -(delta T)^2 / 16.

Prints the fitted slopes on the small-lambda sweep, where the polynomial prefactor
still bends the curve, and on the far sweep used by the certificates.
"""
from cauchylab.harness.fbi_certs import RATE_FIELD, rate_lams, residual_sweep

T = 4.0
for delta in (0.25, 0.5):
    for label, lams in (("lam 4..64", [4.0, 8.0, 16.0, 32.0, 64.0]), ("far sweep", rate_lams(delta, T))):
        sw = residual_sweep(RATE_FIELD, lams, delta, T)
        print(f"delta={delta:<5} {label:10s} target={sw['target']:.4f}  "
              f"k: slope={sw['k']['slope']:.4f} R2={sw['k']['r2']:.5f}  "
              f"g: slope={sw['g']['slope']:.4f} R2={sw['g']['r2']:.5f}")
