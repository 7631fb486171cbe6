"""CLI contract tests: exit codes, report schema, determinism."""

import json
import os
import re

from multiform.cli import main
from multiform.scenarios import SCENARIOS, ScenarioConfig, run_scenario


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_list_scenarios(capsys):
    code, out, _ = run_cli(capsys, "list")
    lines = [ln for ln in out.splitlines() if ln.strip()]
    assert code == 0
    assert len(lines) == 9
    assert any(ln.startswith("algebra") for ln in lines)


def test_list_scenarios_json(capsys):
    code, out, _ = run_cli(capsys, "list", "--json")
    data = json.loads(out)
    assert code == 0
    assert len(data) == 9
    assert {row["name"] for row in data} == set(SCENARIOS)
    assert all(row["description"] for row in data)


def test_verify_algebra_passes_and_writes_report(capsys, tmp_path):
    out_path = os.path.join(tmp_path, "report.json")
    code, out, _ = run_cli(capsys, "verify", "algebra", "--seed", "7", "--out", out_path)
    assert code == 0
    assert "PASS:" in out
    report = json.load(open(out_path))
    assert set(report) == {"config", "checks", "pass", "version"}
    assert report["pass"] is True
    assert report["config"]["seed"] == 7
    for check in report["checks"]:
        assert set(check) == {"name", "max_residual", "tolerance", "pass", "seconds"}
        assert check["max_residual"] <= check["tolerance"]


def test_unknown_scenario_exits_2(capsys):
    code, _, err = run_cli(capsys, "verify", "nonsense")
    assert code == 2
    assert "unknown scenario" in err


def test_usage_error_exits_2(capsys):
    assert main(["verify"]) == 2  # missing scenario argument
    assert main(["--bogus-flag"]) == 2


def test_missing_config_exits_3(capsys):
    code, _, err = run_cli(capsys, "verify", "algebra", "--config", "/no/such/file.json")
    assert code == 3
    assert "cannot read config" in err


def test_malformed_config_exits_3(capsys, tmp_path):
    bad = os.path.join(tmp_path, "bad.json")
    with open(bad, "w") as fh:
        fh.write("{not json")
    code, _, err = run_cli(capsys, "verify", "algebra", "--config", bad)
    assert code == 3


def test_invalid_config_values_exit_2(capsys, tmp_path):
    cfg = os.path.join(tmp_path, "cfg.json")
    with open(cfg, "w") as fh:
        json.dump({"tolerances": {"associativity": -1.0}}, fh)
    code, _, err = run_cli(capsys, "verify", "algebra", "--config", cfg)
    assert code == 2
    code, _, err = run_cli(capsys, "verify", "algebra", "--points", "0")
    assert code == 2


def test_failing_tolerance_exits_1(capsys, tmp_path):
    cfg = os.path.join(tmp_path, "strict.json")
    with open(cfg, "w") as fh:
        json.dump({"tolerances": {"associativity": 1e-300}}, fh)
    code, out, _ = run_cli(capsys, "verify", "algebra", "--config", cfg)
    assert code == 1
    assert "FAIL" in out


def test_config_file_with_flag_overrides(capsys, tmp_path):
    cfg = os.path.join(tmp_path, "cfg.json")
    with open(cfg, "w") as fh:
        json.dump({"seed": 3, "points": 17}, fh)
    out_path = os.path.join(tmp_path, "r.json")
    code, _, _ = run_cli(
        capsys, "verify", "derivatives", "--config", cfg, "--seed", "9", "--out", out_path
    )
    assert code == 0
    report = json.load(open(out_path))
    assert report["config"]["seed"] == 9  # flag wins
    assert report["config"]["points"] == 17  # file value survives


def _strip_walltimes(payload: str) -> str:
    return re.sub(r'"seconds": [0-9eE+.-]+', '"seconds": 0', payload)


def test_report_determinism_modulo_walltime():
    cfg = ScenarioConfig(scenario="derivatives", seed=42, points=20)
    first = run_scenario(cfg).to_json()
    second = run_scenario(cfg).to_json()
    assert _strip_walltimes(first) == _strip_walltimes(second)


def test_json_output_matches_report(capsys):
    code, out, _ = run_cli(capsys, "verify", "derivatives", "--points", "5", "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["pass"] is True
    assert payload["config"]["points"] == 5
