import math

import jsonschema
import numpy as np
import pytest
from hypothesis import given, strategies as st

from cauchylab.harness import (GROUPS, ConfigError, RunConfig, Session, UnknownCertificate, certificates,
                               fit_rate, load_config, resolve_suite, rng, run_certificate,
                               sequence_bound_trials, three_ball_exponent)
from cauchylab.harness.engines import (dirichlet_spectral_norms, fit_constant, interpolation_margin,
                                       poincare_wirtinger_check, proof_gamma)
from cauchylab.harness.families import FAMILIES, harmonic_polynomial, manufacture
from cauchylab.report import FAIL, PASS, REPORT_SCHEMA, SKIPPED, CheckReport

EXPECTED_IDS = {
    "C-L3.1a", "C-L3.1b", "C-L3.2k", "C-L3.2g", "C-L3.3", "C-L3.4", "C-EL-scale", "C-L3.5", "C-P3.2-interp",
    "C-B11", "C-B07", "C-B08", "C-B011", "C-B012", "C-B013", "C-B016", "C-B018", "C-PR1", "C-EXT",
    "C-A-Carleman", "C-A-Cacc", "C-A-3B", "C-A-3BG", "C-A-PW", "C-A-SEQ", "C-A-CHAIN", "C-A-L1.3",
    "C-A-HADAMARD", "C-ASSEMBLY-P3.1", "C-ASSEMBLY-MAIN",
}


def test_registry_is_complete_and_grouped():
    reg = certificates()
    assert set(reg) == EXPECTED_IDS
    assert {c.group for c in reg.values()} == set(GROUPS)
    assert [reg[c].group for c in resolve_suite(["all"])] == sorted(
        (reg[c].group for c in reg), key=GROUPS.index)


def test_suite_resolution():
    assert resolve_suite(["appendix"]) == [c for c in certificates() if c.startswith("C-A-")]
    assert resolve_suite(["C-B07", "multiplier"])[0] == "C-B07"
    with pytest.raises(UnknownCertificate) as err:
        resolve_suite(["C-XYZ"])
    assert "C-XYZ" in str(err.value)


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        RunConfig(lams=())
    with pytest.raises(ConfigError):
        RunConfig(deltas=(1.5,))
    with pytest.raises(ConfigError):
        RunConfig(medium="granite")
    path = tmp_path / "run.yaml"
    path.write_text("seed: 3\nlams: [4, 8]\n")
    cfg = load_config(path)
    assert cfg.seed == 3 and cfg.lams == (4.0, 8.0)
    path.write_text("colour: blue\n")
    with pytest.raises(ConfigError, match="colour"):
        load_config(path)


def test_rng_is_keyed_not_ordered():
    a = rng(1, "x").normal(size=3)
    rng(1, "y").normal(size=10)
    assert np.array_equal(a, rng(1, "x").normal(size=3))
    assert not np.array_equal(a, rng(2, "x").normal(size=3))


def test_report_serialization_is_schema_valid():
    rep = CheckReport(id="demo", margins=[1.0, math.inf, -math.inf], fitted={"value": 2.0, "spread": 1.5},
                      details={"arr": np.arange(3), "nan": math.nan})
    jsonschema.validate(rep.to_dict(), REPORT_SCHEMA)
    assert rep.to_dict()["margins"] == [1.0, "inf", "-inf"]


def test_cheap_certificate_report_is_schema_valid():
    rep = run_certificate("C-A-SEQ", RunConfig(seq_trials=300))
    jsonschema.validate(rep.to_dict(), REPORT_SCHEMA)
    assert rep.verdict == PASS and rep.seed == 0 and rep.runtime_ms > 0


def test_b018_skipped_when_smallness_fails():
    # varkappa = 0.9 on the unit square gives rho0 < 0
    session = Session(RunConfig(medium="sinusoidal-perturbation"))
    from cauchylab.media import sinusoidal
    session.cache["mult.medium"] = sinusoidal(2, 0.9)
    for cid in ("C-B018", "C-PR1"):
        rep = run_certificate(cid, session=session)
        assert rep.verdict == SKIPPED and rep.reason == "smallness gate closed"


def test_crashing_certificate_is_a_failure():
    session = Session(RunConfig())
    session.cache["mult.medium"] = None  # forces an exception inside the run
    rep = run_certificate("C-B013", session=session)
    assert rep.verdict == FAIL and "traceback" in rep.details


@given(st.floats(-3, -0.01), st.floats(-5, 5))
def test_fit_rate_recovers_exponential(slope, icpt):
    lams = np.array([4.0, 8.0, 16.0, 32.0, 64.0])
    s, i, r2 = fit_rate(zip(lams, np.exp(slope * lams / 16 + icpt)))
    assert s == pytest.approx(slope / 16, rel=1e-9, abs=1e-12)
    assert r2 == pytest.approx(1.0)


def test_fit_rate_needs_four_points():
    with pytest.raises(ValueError):
        fit_rate([(1, 1.0), (2, 0.5), (3, 0.25)])


def test_fitted_constant_diagnostics():
    fc = fit_constant([1.0, 2.0, 3.0], [1.1, 2.0, 3.0], "min", rng(0, "t"))
    assert fc.value == 1.0 and fc.refinement_change == pytest.approx(0.1)
    assert fc.spread >= 1.0 and fc.passed(0.2, 10.0)
    assert not fit_constant([1.0], [2.0]).passed()


def test_three_ball_exponent_for_harmonic_polynomials():
    # low degrees alone fit gamma = 1 under the cap; degree 12 forces a proper interpolation
    sols = [harmonic_polynomial(d, part) for d in range(1, 13) for part in ("re", "im")]
    res = three_ball_exponent(sols, r=0.25)
    assert 0.01 < res.gamma < 0.99 and res.used >= 10 and math.isfinite(res.C)
    # sharp exponent for radii 3/2, 2, 7/2 is ln(7/4) / ln(7/3); the fitted one is at least that
    assert res.gamma >= math.log(7 / 4) / math.log(7 / 3) - 1e-3
    assert 0 < proof_gamma(1.0) < 1


def test_sequence_lemma_small_batch():
    out = sequence_bound_trials(rng(0, "seq"), 500)
    assert out["violations"] == 0 and out["worst_log_margin"] >= -1e-12


def test_poincare_wirtinger_constant_function():
    w = np.full(16, 1 / 16)
    lhs, rhs = poincare_wirtinger_check(np.ones(16), np.zeros(16), np.arange(16) < 4, w, 1.0)
    assert lhs == 0.0 and rhs == 0.0


def test_spectral_norms_on_eigenfunction():
    n, h = 31, 1 / 32
    x = np.arange(1, n + 1) * h
    v = np.outer(np.sin(np.pi * x), np.sin(2 * np.pi * x))
    m1, m0, p1 = dirichlet_spectral_norms(v, (h, h))
    assert m1 * p1 == pytest.approx(m0 ** 2, rel=1e-12)
    assert abs(interpolation_margin(v, (h, h))) < 1e-12
    w = v + 0.3 * np.outer(np.sin(3 * np.pi * x), np.sin(np.pi * x))
    assert interpolation_margin(w, (h, h)) > 0


@pytest.mark.parametrize("family", FAMILIES)
def test_manufacture_every_family(family):
    fields = manufacture(family, rng(0, family), 3)
    assert len(fields) >= 1
    assert all(f.n == 2 for f in fields)
