import csv
import json

import pytest

from conedecay import cli, harness
from conedecay.errors import ConfigError


def test_config_validation(tmp_path):
    with pytest.raises(ConfigError):
        harness.ScenarioConfig(scenario="nope")
    with pytest.raises(ConfigError):
        harness.ScenarioConfig(k_max=-1)
    with pytest.raises(ConfigError):
        harness.ScenarioConfig(k_min=100, k_max=50)
    with pytest.raises(ConfigError):
        harness.ScenarioConfig.from_dict({"scenario": "C1", "colour": "red"})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        harness.ScenarioConfig.from_json(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps({"scenario": "lower", "k_max": 1024}))
    cfg = harness.ScenarioConfig.from_json(good)
    assert cfg.k_max == 1024 and harness.expand(cfg) == ["lower_cone", "lower_cylinder"]


def test_d3_gate():
    with pytest.raises(ConfigError):
        harness.expand(harness.ScenarioConfig(scenario="C3_saddle"))
    assert "C3_saddle" in harness.expand(harness.ScenarioConfig(scenario="all", d3=True))
    assert "C3_saddle" not in harness.expand(harness.ScenarioConfig(scenario="all"))


def test_report_semantics(tmp_path):
    rep = harness.VerificationReport()
    rep.add("a", True, 1.0, "<= 2")
    rep.warn("b", "coarse")
    assert rep.passed
    with pytest.raises(ValueError):
        rep.add("a", True, 1.0, "<= 2")
    rep.add("c", False, 3.0, "<= 2")
    assert not rep.passed
    rep.write(tmp_path)
    data = json.loads((tmp_path / "report.json").read_text())
    assert [c["status"] for c in data["checks"]] == ["PASS", "WARN", "FAIL"]
    assert data["passed"] is False


def test_identity_and_morse_suites_pass():
    for rep in (harness.run_identities(), harness.run_morse()):
        assert rep.checks and all(c.status == "PASS" for c in rep.checks), [c for c in rep.checks if c.status != "PASS"]


def test_resolution_guard_warns(tmp_path):
    cfg = harness.ScenarioConfig(scenario="C1", k_max=512, x_nodes=8, out=str(tmp_path))
    rep = harness.run_upper(cfg, "C1")
    assert any(c.status == "WARN" for c in rep.checks)


def test_cli_verify(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{}")
    out = tmp_path / "out"
    assert cli.main(["verify", "--config", str(cfg), "--out", str(out)]) == 0
    data = json.loads((out / "report.json").read_text())
    names = [c["name"] for c in data["checks"]]
    assert len(names) == len(set(names)) and data["passed"]
    with open(out / "fits.csv") as fh:
        assert next(csv.reader(fh)) == ["scenario", "profile", "direction", "mode", "exponent", "r2", "k_min", "k_max"]


def test_cli_lower_cylinder_writes_profiles(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_directions": 4, "k_max": 1024, "axis_k_max": 256}))
    out = tmp_path / "out"
    code = cli.main(["run", "--scenario", "lower_cylinder", "--config", str(cfg), "--out", str(out), "--threads", "1"])
    assert code == 0
    profiles = sorted(p.name for p in (out / "profiles").iterdir())
    assert "lower_cylinder_generic_00.csv" in profiles and len(profiles) == 4 + 3
    assert (out / "profiles" / profiles[0]).read_text().startswith("k,value")


def test_cli_errors(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("{}")
    assert cli.main(["run", "--scenario", "bogus", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert cli.main(["run", "--scenario", "C3_saddle", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert cli.main(["verify", "--config", str(tmp_path / "missing.json")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["run", "--config", str(cfg)])
