"""Command line entry points and exit codes."""

import json

import pytest

from trusspath.cli import main

CFG_DOC = {"direction_count": 24, "rotation_samples": 2}


@pytest.fixture(scope="module")
def cfg_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "config.json"
    path.write_text(json.dumps(CFG_DOC))
    return str(path)


@pytest.fixture(scope="module")
def plan_file(tmp_path_factory, cfg_file):
    out = tmp_path_factory.mktemp("cli_plan") / "plan.json"
    rc = main([
        "plan", "--model", "cube", "--robot", "arm",
        "--config", cfg_file, "--out", str(out),
    ])
    assert rc == 0
    return out


def common(cfg_file):
    return ["--model", "cube", "--robot", "arm", "--config", cfg_file]


def test_plan_then_validate(plan_file, cfg_file, capsys):
    doc = json.loads(plan_file.read_text())
    assert doc["version"] == "1" and len(doc["tasks"]) == 23
    rc = main(["validate", *common(cfg_file), "--plan", str(plan_file)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    for name in ("format", "fingerprints", "continuity", "clearance", "structure"):
        assert name in out


def test_validate_flags_tampering(plan_file, cfg_file, tmp_path, capsys):
    doc = json.loads(plan_file.read_text())
    doc["tasks"][1]["subprocesses"][2]["joints"][1][3] += 0.4
    bad = tmp_path / "tampered.json"
    bad.write_text(json.dumps(doc))
    rc = main(["validate", *common(cfg_file), "--plan", str(bad)])
    assert rc == 3
    assert "FAIL" in capsys.readouterr().out


def test_validate_rejects_malformed_file(cfg_file, tmp_path, capsys):
    garbage = tmp_path / "garbage.json"
    garbage.write_text("{not json")
    assert main(["validate", *common(cfg_file), "--plan", str(garbage)]) == 3
    missing = tmp_path / "missing.json"
    assert main(["validate", *common(cfg_file), "--plan", str(missing)]) == 3
    capsys.readouterr()


def test_bad_inputs_exit_code(cfg_file, tmp_path, capsys):
    rc = main(["sequence", "--model", "no-such-model", "--robot", "arm"])
    assert rc == 4
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text(json.dumps({"direction_count": 2}))
    rc = main(["sequence", "--model", "cube", "--robot", "arm", "--config", str(bad_cfg)])
    assert rc == 4
    capsys.readouterr()


def test_sequence_timeout_exit_code(cfg_file, tmp_path, capsys):
    out = tmp_path / "seq.json"
    rc = main([
        "sequence", *common(cfg_file), "--timeout", "1e-9", "--out", str(out),
    ])
    assert rc == 2
    assert not out.exists()
    capsys.readouterr()


def test_sequence_then_motion_matches_plan(plan_file, cfg_file, tmp_path, capsys):
    seq = tmp_path / "seq.json"
    rc = main(["sequence", *common(cfg_file), "--out", str(seq)])
    assert rc == 0
    assert "layered" in capsys.readouterr().out
    plan2 = tmp_path / "plan2.json"
    rc = main([
        "motion", *common(cfg_file),
        "--from-sequence", str(seq), "--out", str(plan2),
    ])
    assert rc == 0
    assert plan2.read_bytes() == plan_file.read_bytes()
    capsys.readouterr()


def test_export_geometry(cfg_file, tmp_path, capsys):
    out = tmp_path / "geometry.json"
    rc = main(["export-geometry", *common(cfg_file), "--out", str(out)])
    assert rc == 0
    doc = json.loads(out.read_text())
    assert set(doc) == {"model", "waypoints", "robot"}
    assert len(doc["waypoints"]) == 23
    for cap in doc["robot"]["ee_capsules"]:
        assert set(cap) == {"a", "b", "radius"}
    assert doc["robot"]["dof"] == 6
    capsys.readouterr()


def test_stats_reports_aborted_run(cfg_file, capsys):
    rc = main(["stats", *common(cfg_file), "--timeout", "1e-9"])
    assert rc == 2
    captured = capsys.readouterr()
    assert "aborted" in captured.out
    assert "error" in captured.err
