"""Run every certificate once and print a one-line table (equivalent to `cauchylab verify`)."""
import argparse
import time

from cauchylab.harness import RunConfig, Session, certificates, run_certificate

parser = argparse.ArgumentParser()
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--medium", default="sinusoidal-perturbation")
args = parser.parse_args()

cfg = RunConfig(seed=args.seed, medium=args.medium)
session = Session(cfg)
start = time.perf_counter()
for cid in certificates():
    rep = run_certificate(cid, cfg, session)
    worst = min(rep.margins) if rep.margins else float("nan")
    fitted = "" if rep.fitted is None else f"fitted={rep.fitted.get('value', float('nan')):.4g}"
    print(f"{cid:18s} {rep.verdict:8s} worst-margin={worst:10.4g} {fitted:18s} {rep.runtime_ms / 1e3:6.1f}s {rep.reason}")
print(f"total {time.perf_counter() - start:.1f}s")
