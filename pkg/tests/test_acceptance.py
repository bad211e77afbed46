"""The fourteen acceptance criteria, each at its stated tolerance, on one shared seeded run."""
import math
import time

import numpy as np
import pytest

from cauchylab.cli import sweep_rows, write_sweep_csv
from cauchylab.harness import RunConfig, Session, rng, run_certificate
from cauchylab.harness.registry import certificates
from cauchylab.moduli import ModulusSpec, epsilon_residual, modulus_eval, parameter_selection, solve_epsilon
from cauchylab.report import PASS

CONFIG = RunConfig()


@pytest.fixture(scope="module")
def suite():
    session = Session(CONFIG)
    start = time.perf_counter()
    reports = {cid: run_certificate(cid, CONFIG, session) for cid in certificates()}
    return {"reports": reports, "wall": time.perf_counter() - start, "session": session}


def _verdicts(reports, ids):
    return ", ".join(f"{c}={reports[c].verdict}" for c in ids)


def test_01_transform_explicit_constants(suite, acceptance):
    r = suite["reports"]
    ids = ["C-L3.1a", "C-L3.1b", "C-L3.2k", "C-L3.2g", "C-L3.3"]
    fields = len(r["C-L3.1a"].details["instances"])
    lams = {row["lam"] for row in r["C-L3.1a"].details["instances"]}
    deltas = {row["delta"] for row in r["C-L3.1a"].details["instances"]}
    worst = min(min(r[c].margins) for c in ids)
    seconds = sum(r[c].runtime_ms for c in ids) / 1e3
    ok = (all(r[c].verdict == PASS for c in ids) and worst >= -1e-8 and fields >= 20
          and lams == {4.0, 8.0, 16.0, 32.0, 64.0} and deltas == {0.25, 0.5} and CONFIG.T == 4.0
          and seconds < 60)
    assert acceptance(1, ok, f"{fields} fields, worst log-margin {worst:.3g}, {seconds:.1f}s; "
                             + _verdicts(r, ids))


def test_02_residual_decay_rates(suite, acceptance):
    r = suite["reports"]
    fits = [(w, fit) for w in ("k", "g") for fit in r[f"C-L3.2{w}"].details["rate_fits"]]
    worst_rel = max(fit["rel_error"] for _, fit in fits)
    worst_r2 = min(fit["r2"] for _, fit in fits)
    ok = worst_rel <= 0.10 and worst_r2 >= 0.99
    assert acceptance(2, ok, f"{len(fits)} fits, worst slope error {100 * worst_rel:.1f}%, "
                             f"min R^2 {worst_r2:.5f}")


def test_03_reconstruction(suite, acceptance):
    rep = suite["reports"]["C-L3.4"]
    full = max(e["full_error_rel"] for e in rep.details["exponential"])
    kink = rep.details["kink_tail"]["exponent"]
    ok = rep.verdict == PASS and full <= 1e-6 and kink <= -0.2
    assert acceptance(3, ok, f"plane-wave full-line error {full:.2e}, truncation exponent {kink:.3f}; "
                             f"C-L3.4={rep.verdict}")


def test_04_multiplier_identity_order(suite, acceptance):
    rep = suite["reports"]["C-B07"]
    orders = rep.details["orders_constant"] + rep.details["orders_variable"]
    tb = rep.details["T_B_constant"]
    ok = rep.verdict == PASS and min(orders) >= 1.8 and all(t == 0.0 for t in tb) and \
        tuple(CONFIG.levels) == (64, 128, 256)
    assert acceptance(4, ok, f"orders {', '.join(f'{o:.3f}' for o in orders)}, T_B(constant A) = {max(tb)}")


def test_05_multiplier_inequalities(suite, acceptance):
    r = suite["reports"]
    ids = ["C-B11", "C-B08", "C-B011", "C-B012", "C-B013", "C-B016", "C-B018"]
    worst = min(min(r[c].margins) for c in ids)
    pr1 = r["C-PR1"]
    change = pr1.fitted["refinement_change"]
    ok = (all(r[c].verdict == PASS for c in ids) and worst >= -1e-8 and CONFIG.family_size >= 20
          and pr1.verdict == PASS and change < 0.2)
    assert acceptance(5, ok, f"worst margin {worst:.3g}, pr1 constant {pr1.fitted['value']:.4g} "
                             f"changes {100 * change:.1f}% under refinement; " + _verdicts(r, ids + ["C-PR1"]))


def test_06_three_ball_exponents(suite, acceptance):
    r = suite["reports"]
    rows = [(c, label, row) for c in ("C-A-3B", "C-A-3BG") for label, row in r[c].details["rows"].items()]
    ok = all(r[c].verdict == PASS for c in ("C-A-3B", "C-A-3BG")) and all(
        0.01 < row["gamma"] < 0.99 and math.isfinite(row["C"]) and row["used"] >= 10 for _, _, row in rows)
    text = "; ".join(f"{c}/{label} gamma={row['gamma']:.3f} C={row['C']:.3g} n={row['used']}"
                     for c, label, row in rows)
    assert acceptance(6, ok, text)


def test_07_sequence_lemma(suite, acceptance):
    rep = suite["reports"]["C-A-SEQ"]
    d = rep.details
    ok = rep.verdict == PASS and d["trials"] >= 10_000 and d["violations"] == 0 and \
        d["worst_log_margin"] >= -1e-12
    assert acceptance(7, ok, f"{d['trials']} trials, {d['violations']} violations, "
                             f"worst log-margin {d['worst_log_margin']:.3g}")


def test_08_ball_chains(suite, acceptance):
    rep = suite["reports"]["C-A-CHAIN"]
    gap = rep.details["identity_gap"]
    ok = rep.verdict == PASS and gap <= 1e-12 and min(rep.margins) >= -1e-12
    assert acceptance(8, ok, f"identity gap {gap:.2e} over 100 angles, worst inclusion/propagation margin "
                             f"{min(rep.margins):.3g}")


def test_09_poincare_wirtinger(suite, acceptance):
    rep = suite["reports"]["C-A-PW"]
    ok = (rep.verdict == PASS and len(rep.margins) >= 50 and min(rep.margins) >= 0
          and rep.details["min_fraction"] >= 0.05
          and rep.details["aleph"] == pytest.approx(2 * math.sqrt(2) / math.pi, rel=1e-15))
    assert acceptance(9, ok, f"{len(rep.margins)} trials, worst log-margin {min(rep.margins):.3g}, "
                             f"smallest |E|/|O| {rep.details['min_fraction']:.3f}")


def test_10_scaling_identities(suite, acceptance):
    rep = suite["reports"]["C-EL-scale"]
    rhos = sorted({row["rho"] for row in rep.details["rows"]})
    ok = rep.verdict == PASS and rep.details["identity_residual"] <= 1e-10 and min(rep.margins) >= -1e-8 \
        and rhos == [0.5, 1.0, 2.0]
    assert acceptance(10, ok, f"identity residual {rep.details['identity_residual']:.2e}, "
                              f"worst inequality margin {min(rep.margins):.3g}")


def test_11_moduli(acceptance):
    g = rng(CONFIG.seed, "acceptance.moduli")
    worst_res, worst_bound = 0.0, -math.inf
    for _ in range(100):
        beta, c = g.uniform(0.05, 5.0, 2)
        log_b = -c - g.uniform(1e-3, 1.0) * 10 ** g.uniform(0, 4)
        eps = solve_epsilon(beta, c, log_b=log_b)
        worst_res = max(worst_res, epsilon_residual(beta, c, eps, log_b))
        worst_bound = max(worst_bound, eps - (c + beta) / abs(log_b))
    monotone = True
    for spec in (ModulusSpec("Phi", 2.0, 0.5), ModulusSpec("Theta", 1 / math.e, 1.0),
                 ModulusSpec("Psi", math.exp(-math.e), 0.25)):
        # each branch on its own domain: Phi switches at e^-c inclusive, Theta and Psi just above rho0
        logs = np.linspace(-700.0, math.log(spec.breakpoint), 1000)
        logs = logs[:-1] if spec.kind == "Phi" else logs
        below = [modulus_eval(spec, 0.0, lr) for lr in logs]
        above = np.linspace(spec.breakpoint, 1.0, 1000)
        above = above if spec.kind == "Phi" else above[1:]
        monotone &= bool(np.all(np.diff(below) >= 0))
        monotone &= all(modulus_eval(spec, x) == x for x in above)
    lam_exact = all(parameter_selection(d, T, 1.0, 1.0, 0.25).lam == 16 * d ** -16 / T ** 2
                    for d, T in [(0.5, 4.0), (0.25, 2.0), (0.5, 1.0), (0.75, 4.0)])
    lam_exact &= parameter_selection(0.5, 4.0, 1.0, 1.0, 0.25).lam == 65536.0
    ok = worst_res <= 1e-12 and worst_bound <= 1e-15 and monotone and lam_exact
    assert acceptance(11, ok, f"solve_epsilon residual {worst_res:.2e}, bound slack {worst_bound:.2e}, "
                              f"monotone={monotone}, lambda exact={lam_exact}")


def test_12_hadamard(suite, acceptance):
    rep = suite["reports"]["C-A-HADAMARD"]
    ks = [row["k"] for row in rep.details["rows"]]
    beta = rep.fitted["beta"]
    ok = rep.verdict == PASS and beta > 0 and min(rep.margins) >= 0 and min(ks) == 4 and max(ks) == 64
    assert acceptance(12, ok, f"beta {beta:.3f}, R^2 {rep.fitted['r2']:.5f}, {len(ks)} points dominated")


def test_13_assembly(suite, acceptance):
    r = suite["reports"]
    rep = r["C-ASSEMBLY-MAIN"]
    comps = rep.details["components"]
    rows = rep.details["instances"]
    ok = (rep.verdict == PASS and rep.reason == "VACUOUS" and all(v == PASS for v in comps.values())
          and all(row["vacuous"] and row["e2_smaller"] for row in rows) and min(rep.margins) >= 0
          and rep.details["delta"] == 0.5 and r["C-ASSEMBLY-P3.1"].verdict == PASS)
    assert acceptance(13, ok, f"{len(rows)} instances dominated, reason {rep.reason}, "
                              f"e2 path smaller on all: {all(row['e2_smaller'] for row in rows)}")


DETERMINISM_IDS = ["C-L3.1a", "C-EL-scale", "C-B11", "C-A-SEQ", "C-A-CHAIN", "C-A-HADAMARD", "C-A-PW"]


def test_14_runtime_and_determinism(suite, acceptance, tmp_path):
    wall = suite["wall"]
    again = Session(CONFIG)
    same = all(run_certificate(c, CONFIG, again).to_dict(False) == suite["reports"][c].to_dict(False)
               for c in DETERMINISM_IDS)
    for name in ("a.csv", "b.csv"):
        write_sweep_csv(sweep_rows(CONFIG), tmp_path / name, CONFIG)
    same_csv = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    all_pass = all(rep.verdict == PASS for rep in suite["reports"].values())
    ok = wall <= 600 and same and same_csv and all_pass
    assert acceptance(14, ok, f"whole suite {wall:.1f}s on one core, reports identical on rerun: {same}, "
                              f"sweep CSV identical: {same_csv}, all {len(suite['reports'])} certificates pass: "
                              f"{all_pass}")
