"""Norms of the ill-posed family exp(-sqrt k) sin(kx) sinh(ky) and the fitted logarithmic modulus."""
from cauchylab.harness.appendix_certs import fit_log_modulus, hadamard_norms

rows = [hadamard_norms(k) for k in range(4, 68, 4)]
for r in rows:
    print(f"k={r['k']:3d}  ln|u|_H1={r['log_h1']:9.3f}  ln a={r['log_a']:9.3f}  ln b={r['log_b']:8.3f}")
fit = fit_log_modulus(rows)
print(f"beta={fit['beta']:.4f}  c={fit['c']:.3f}  R2={fit['r2']:.5f}  ln C={fit['log_C']:.3f}")
