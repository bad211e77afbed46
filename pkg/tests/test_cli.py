import json

import jsonschema
import pytest

from cauchylab.cli import SWEEP_FORMAT, main
from cauchylab.harness import registry
from cauchylab.report import FAIL, REPORT_SCHEMA, CheckReport


@pytest.fixture
def cheap_config(tmp_path):
    path = tmp_path / "cheap.yaml"
    path.write_text("seq_trials: 200\npw_trials: 5\n")
    return str(path)


def test_verify_writes_reports_and_summary(tmp_path, cheap_config):
    out = tmp_path / "reports"
    code = main(["verify", "--config", cheap_config, "--suite", "C-A-SEQ,C-A-CHAIN", "--seed", "7",
                 "--out", str(out)])
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["counts"] == {"pass": 2, "fail": 0, "skipped": 0}
    assert summary["config"]["seed"] == 7
    for cid in ("C-A-SEQ", "C-A-CHAIN"):
        rep = json.loads((out / f"{cid}.json").read_text())
        jsonschema.validate(rep, REPORT_SCHEMA)
        assert rep["seed"] == 7


def test_failing_certificate_exits_one(tmp_path, monkeypatch):
    registry.certificates()
    fake = registry.Certificate("C-TEST-FAIL", "appendix", "identity", "always fails", "",
                                lambda s: CheckReport(id="", verdict=FAIL, reason="by construction"))
    monkeypatch.setitem(registry.REGISTRY, "C-TEST-FAIL", fake)
    assert main(["verify", "--suite", "C-TEST-FAIL", "--out", str(tmp_path)]) == 1
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["counts"]["fail"] == 1


def test_unknown_id_exits_two(tmp_path, capsys):
    assert main(["verify", "--suite", "C-NOT-THERE", "--out", str(tmp_path)]) == 2
    assert "C-NOT-THERE" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["sweep", "--lambda"],
    ["sweep", "--delta", "2.0"],
    ["sweep", "--T", "-1"],
    ["verify", "--medium", "granite"],
    ["verify", "--config", "/no/such/file.yaml"],
    ["frobnicate"],
])
def test_usage_errors_exit_two(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] != "frobnicate" else argv) == 2


def test_sweep_is_deterministic_and_versioned(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["sweep", "--seed", "3", "--out", str(a)]) == 0
    assert main(["sweep", "--seed", "3", "--out", str(b)]) == 0
    text = (a / "sweep.csv").read_bytes()
    assert text == (b / "sweep.csv").read_bytes()
    lines = text.decode().splitlines()
    assert lines[0] == f"# format: {SWEEP_FORMAT}"
    header = next(line for line in lines if not line.startswith("#")).split(",")
    assert header[:6] == ["lam", "delta", "T", "t0", "log_k", "log_g"]
    rows = [line.split(",") for line in lines if line and not line.startswith("#")][1:]
    assert len(rows) == 10  # five lambdas times two deltas
    assert all(float(r[header.index("margin_k")]) >= 0 for r in rows)


def test_manufacture_standing_waves_tags_exact_zero(tmp_path):
    assert main(["manufacture", "standing-waves", "--count", "2", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "standing-waves" / "standing-waves-00.csv").read_text()
    assert "# Pu[identity]: exact-zero" in text
    assert "# format: cauchylab.field/1" in text
    assert "sin(pi*x)*sin(pi*y)*cos(sqrt(2)*pi*t)" in text


def test_manufacture_hadamard_metadata(tmp_path):
    assert main(["manufacture", "hadamard", "--count", "1", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "hadamard" / "hadamard-00.csv").read_text()
    assert "# log_h1:" in text and "# log_b:" in text
    assert "3.141592653589793" in text


def test_manufacture_is_reproducible(tmp_path):
    for d in ("a", "b"):
        assert main(["manufacture", "random-smooth", "--seed", "4", "--count", "1",
                     "--out", str(tmp_path / d)]) == 0
    name = "random-smooth/random-smooth-00.csv"
    assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_unknown_family_exits_two(tmp_path):
    assert main(["manufacture", "clouds", "--out", str(tmp_path)]) == 2


def test_list(capsys):
    assert main(["list", "--suite", "assembly"]) == 0
    out = capsys.readouterr().out
    assert "C-ASSEMBLY-MAIN" in out and "C-B07" not in out
