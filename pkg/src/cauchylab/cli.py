"""Command line front-end: verify, sweep, manufacture, list.

Exit status: 0 when every non-skipped certificate passes, 1 when any fails,
2 for configuration or usage errors.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import sympy as sp

from . import fbi
from .fields import SpaceTimeField, TensorGrid
from .geometry import Box
from .harness.config import ConfigError, RunConfig, load_config, rng
from .harness.registry import UnknownCertificate, certificates, resolve_suite, run_suite
from .report import FAIL, PASS, SKIPPED

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SWEEP_FORMAT = "cauchylab.sweep/1"
SWEEP_COLUMNS = ("lam", "delta", "T", "t0", "log_k", "log_g", "margin_k", "margin_g", "slope_k", "slope_g",
                 "target_slope")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _split(values):
    if values is None:
        return None
    out = []
    for v in values:
        out.extend(s for s in str(v).split(",") if s)
    return out


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="YAML file with RunConfig keys; flags override it")
    p.add_argument("--suite", nargs="+", help="certificate ids or groups (fbi, multiplier, appendix, assembly, all)")
    p.add_argument("--seed", type=int)
    p.add_argument("--grid", nargs="*", help="grid levels for identity checks")
    p.add_argument("--lambda", dest="lams", nargs="*", help="lambda sweep")
    p.add_argument("--delta", dest="deltas", nargs="*", help="delta sweep")
    p.add_argument("--T", dest="T", type=float)
    p.add_argument("--medium")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cauchylab", description="Numerical certificates for wave-equation Cauchy stability.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    v = sub.add_parser("verify", help="run certificates and write JSON reports")
    _common(v)
    v.add_argument("--jobs", type=int, default=1)
    s = sub.add_parser("sweep", help="write residual-rate CSV over the lambda and delta sweeps")
    _common(s)
    m = sub.add_parser("manufacture", help="sample a manufactured family to CSV")
    m.add_argument("family")
    m.add_argument("--count", type=int, default=4)
    _common(m)
    ls = sub.add_parser("list", help="list registered certificates")
    ls.add_argument("--suite", nargs="+")
    return parser


def _floats(values, name):
    if values is None:
        return None
    try:
        return tuple(float(v) for v in _split(values))
    except ValueError as exc:
        raise ConfigError(f"--{name}: {exc}") from exc


def config_from_args(args) -> RunConfig:
    """Config file first, then flags; an empty list flag is an error, not a default."""
    cfg = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    levels = None
    if args.grid is not None:
        try:
            levels = tuple(int(v) for v in _split(args.grid))
        except ValueError as exc:
            raise ConfigError(f"--grid: {exc}") from exc
    over = {
        "suite": tuple(_split(args.suite)) if args.suite is not None else None,
        "seed": args.seed, "levels": levels, "lams": _floats(args.lams, "lambda"),
        "deltas": _floats(args.deltas, "delta"), "T": args.T, "medium": args.medium, "out": args.out,
    }
    try:
        return cfg.with_overrides(**over)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# ------------------------------------------------------------ verify

def cmd_verify(cfg: RunConfig, jobs: int = 1) -> int:
    ids = resolve_suite(cfg.suite)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = run_suite(ids, cfg, jobs=jobs)
    counts = {PASS: 0, FAIL: 0, SKIPPED: 0}
    rows = {}
    for rep in reports:
        (out / f"{rep.id}.json").write_text(rep.to_json())
        counts[rep.verdict] += 1
        rows[rep.id] = {"verdict": rep.verdict, "reason": rep.reason, "mode": rep.mode}
        print(f"{rep.verdict:8s} {rep.id:18s} {rep.reason}")
    summary = {"config": cfg.to_dict(), "counts": {k.lower(): v for k, v in counts.items()}, "certificates": rows}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    print(f"pass {counts[PASS]}  fail {counts[FAIL]}  skipped {counts[SKIPPED]}")
    return EXIT_FAIL if counts[FAIL] else EXIT_OK


# ------------------------------------------------------------ sweep

def sweep_rows(cfg: RunConfig) -> list[dict]:
    """One row per (lam, delta): residual log-norms, bound margins and the slopes fitted along lam."""
    from .harness.engines import fit_log_rate
    from .harness.fbi_certs import RATE_FIELD, residual_sweep

    rows = []
    bound_grid = TensorGrid(Box((0.0,), (1.0,)), (9,), (-cfg.T, cfg.T), 129)
    f = SpaceTimeField.sample(RATE_FIELD, bound_grid)
    for delta in cfg.deltas:
        sw = residual_sweep(RATE_FIELD, cfg.lams, delta, cfg.T)
        slopes = {w: (fit_log_rate(cfg.lams, sw[w]["log_norms"])[0] if len(cfg.lams) > 1 else math.nan)
                  for w in ("k", "g")}
        for i, lam in enumerate(cfg.lams):
            p = fbi.TransformParams(lam, sw["t0"], delta, cfg.T)
            _, rk = fbi.first_residual(f, p, check_identity=False)
            _, rg = fbi.second_residual(f, p, check_identity=False)
            rows.append({"lam": lam, "delta": delta, "T": cfg.T, "t0": sw["t0"],
                         "log_k": sw["k"]["log_norms"][i], "log_g": sw["g"]["log_norms"][i],
                         "margin_k": rk.margins[0], "margin_g": rg.margins[0],
                         "slope_k": slopes["k"], "slope_g": slopes["g"], "target_slope": sw["target"]})
    return rows


def write_sweep_csv(rows, path, cfg: RunConfig):
    header = [f"# format: {SWEEP_FORMAT}", f"# field: (1+x)cos(t) on (0,1), seed {cfg.seed}",
              "# log_k, log_g: ln of the residual L2 norms over Omega x I_tau_max",
              "# margin_k, margin_g: ln(bound) - ln(norm) for the explicit residual bounds",
              "# slope_k, slope_g: least-squares slope of log norm against lam over this delta",
              "# target_slope: -(delta T)^2 / 16", ",".join(SWEEP_COLUMNS)]
    lines = [",".join(repr(float(r[c])) for c in SWEEP_COLUMNS) for r in rows]
    Path(path).write_text("\n".join(header + lines) + "\n")


def cmd_sweep(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = sweep_rows(cfg)
    path = out / "sweep.csv"
    write_sweep_csv(rows, path, cfg)
    for r in rows:
        print(f"lam={r['lam']:<8g} delta={r['delta']:<5g} log_k={r['log_k']:.4f} log_g={r['log_g']:.4f}")
    print(f"wrote {path}")
    return EXIT_OK


# ------------------------------------------------------------ manufacture

def _manufacture_grid(family: str, T: float) -> TensorGrid:
    if family == "hadamard":
        return TensorGrid(Box((0.0, 0.0), (math.pi, 1.0)), (33, 17))
    if family == "harmonic-polynomials":
        return TensorGrid(Box((-1.0, -1.0), (1.0, 1.0)), (33, 33))
    return TensorGrid(Box.unit(2), (17, 17), (0.0, T), 33)


def _residual_tag(u, medium) -> str:
    if medium.symbolic is None:
        return "unavailable"
    res = u.wave_residual(medium) if u.time else u.elliptic_residual(medium)
    return "exact-zero" if sp.simplify(res.expr) == 0 else "exact"


def cmd_manufacture(family: str, cfg: RunConfig, count: int = 4) -> int:
    from .harness.families import FAMILIES, manufacture
    from .media import catalog, identity

    if family not in FAMILIES:
        raise ConfigError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
    fields = manufacture(family, rng(cfg.seed, f"manufacture.{family}"), count, 2)
    grid = _manufacture_grid(family, cfg.T)
    out = Path(cfg.out) / family
    out.mkdir(parents=True, exist_ok=True)
    med = catalog(cfg.medium, 2)
    op = "Pu" if fields[0].time else "Lu"
    for i, u in enumerate(fields):
        extra = {"family": family, "seed": cfg.seed, "name": u.name, "derivatives": "analytic",
                 f"{op}[identity]": _residual_tag(u, identity(2)), f"{op}[{med.name}]": _residual_tag(u, med)}
        if family == "hadamard":
            from .harness.appendix_certs import hadamard_norms
            k = int(u.name.split("=")[1].rstrip(")"))
            extra.update({key: v for key, v in hadamard_norms(k).items() if key != "k"})
        SpaceTimeField.sample(u, grid).to_csv(out / f"{family}-{i:02d}.csv", extra)
        print(f"{family}-{i:02d}: {u.name}  {op}[identity]={extra[f'{op}[identity]']}")
    return EXIT_OK


# ------------------------------------------------------------ entry point

def cmd_list(suite) -> int:
    reg = certificates()
    ids = resolve_suite(_split(suite)) if suite else list(reg)
    for cid in ids:
        c = reg[cid]
        gate = "gated" if c.gate else ""
        print(f"{cid:18s} {c.group:10s} {c.mode:18s} {c.anchor} {gate}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "list":
            return cmd_list(args.suite)
        cfg = config_from_args(args)
        np.seterr(all="ignore")
        if args.command == "verify":
            return cmd_verify(cfg, args.jobs)
        if args.command == "sweep":
            return cmd_sweep(cfg)
        return cmd_manufacture(args.family, cfg, args.count)
    except UnknownCertificate as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
