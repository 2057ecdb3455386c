import json

import pytest

from moodcast.cli import PipelineConfig, PipelineError, main

FAST = ["--users", "4", "--epochs", "20"]


def read_tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_stepwise_commands_produce_the_report(tmp_path, capsys):
    out = str(tmp_path / "o")
    for cmd in ("synth", "preprocess", "train-svm", "train-rnn", "baseline", "evaluate"):
        assert main([cmd, "--out", out, *FAST]) == 0, cmd
    report = json.loads((tmp_path / "o/reports/report.json").read_text())
    assert report["complete"] is True
    assert set(report["comparison"]) == {"result_train", "result_test", "benchmark"}
    manifest = json.loads((tmp_path / "o/manifest.json").read_text())
    assert manifest["command"] == "evaluate" and manifest["input_sha256"]
    assert "reports/report.txt" in manifest["outputs"]


def test_evaluate_without_models_fails_cleanly(tmp_path, capsys):
    out = str(tmp_path / "o")
    assert main(["synth", "--out", out, *FAST]) == 0
    assert main(["preprocess", "--out", out]) == 0
    assert main(["evaluate", "--out", out]) == 1
    assert "train-svm" in capsys.readouterr().err
    assert not (tmp_path / "o/reports").exists()


def test_preprocess_needs_input(tmp_path, capsys):
    assert main(["preprocess", "--out", str(tmp_path / "o")]) == 1
    assert "raw input" in capsys.readouterr().err
    assert main(["preprocess", "--out", str(tmp_path / "o"), "--input", str(tmp_path / "nope.csv")]) == 1


def test_preprocess_of_a_tiny_file(tmp_path):
    raw = tmp_path / "raw.csv"
    raw.write_text("id,time,variable,value\n"
                   "AS14.01,2014-02-26 09:00:00,mood,6\n"
                   "AS14.01,2014-02-26 15:00:00,mood,6.5\n"
                   "AS14.01,2014-02-27 09:00:00,mood,NA\n"
                   "AS14.01,2014-02-28 09:00:00,mood,7\n")
    assert main(["preprocess", "--input", str(raw), "--out", str(tmp_path / "o")]) == 0
    wide = (tmp_path / "o/tables/daily_wide.csv").read_text().splitlines()
    assert wide == ["id,date,mood", "AS14.01,2014-02-26,6.25", "AS14.01,2014-02-28,7.0"]


def test_malformed_input_strict_and_lenient(tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    raw.write_text("id,time,variable,value\nAS14.01,2014-02-26,mood,6\nAS14.01,bad,mood,6\n")
    out = str(tmp_path / "o")
    assert main(["preprocess", "--input", str(raw), "--out", out]) == 1
    assert "line 3" in capsys.readouterr().err
    assert main(["preprocess", "--input", str(raw), "--out", out, "--lenient"]) == 0


def test_all_is_deterministic_across_directories(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["all", "--out", str(a), *FAST]) == 0
    assert main(["all", "--out", str(b), *FAST]) == 0
    assert read_tree(a) == read_tree(b)
    c = tmp_path / "c"
    assert main(["all", "--out", str(c), "--seed", "7", *FAST]) == 0
    assert read_tree(c)["reports/report.json"] != read_tree(a)["reports/report.json"]


def test_config_file_and_flag_precedence(tmp_path):
    cfg = PipelineConfig(seed=11)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    out = tmp_path / "o"
    assert main(["synth", "--config", str(path), "--out", str(out), "--seed", "12", "--users", "2"]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 12 and manifest["config"]["synth"]["n_users"] == 2


def test_config_round_trip_and_unknown_keys():
    cfg = PipelineConfig(seed=5)
    again = PipelineConfig.from_dict(cfg.to_dict())
    assert again.to_dict() == cfg.to_dict()
    with pytest.raises(PipelineError):
        PipelineConfig.from_dict({"colour": "blue"})
    with pytest.raises(PipelineError):
        PipelineConfig.from_dict({"schema_version": 99})
