"""Command-line interface: exit codes and artifacts."""

from __future__ import annotations

import json

import pytest

from byzledger.cli import main


def test_list_prints_builtins(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out.split()
    assert "u-n4-f1" in out and "aa-helper-both" in out


def test_run_check_replay_cycle(tmp_path, capsys):
    out_dir = tmp_path / "artifacts"
    assert main(["run", "u-n4-f1", "--seed", "3", "--out", str(out_dir)]) == 0
    trace_path = out_dir / "u-n4-f1-seed3.trace"
    report_path = out_dir / "u-n4-f1-seed3.report.jsonl"
    assert trace_path.exists() and report_path.exists()
    report = [json.loads(line) for line in report_path.read_text().splitlines()]
    assert {r["prop"]: r["status"] for r in report if "prop" in r} == {
        "bc": "pass",
        "bsp": "pass",
        "bl": "pass",
        "server_agreement": "pass",
    }
    assert main(["check", str(trace_path)]) == 0
    assert main(["replay", str(trace_path)]) == 0
    capsys.readouterr()


def test_replay_flags_a_tampered_trace(tmp_path, capsys):
    out_dir = tmp_path / "artifacts"
    main(["run", "u-n4-f1", "--seed", "3", "--out", str(out_dir)])
    trace_path = out_dir / "u-n4-f1-seed3.trace"
    lines = trace_path.read_text().splitlines()
    # swapping two event lines preserves the format but changes the history
    lines[5], lines[6] = lines[6], lines[5]
    trace_path.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(trace_path)]) == 1
    assert "DIVERGED" in capsys.readouterr().out


def test_corrupt_trace_is_a_format_error(tmp_path, capsys):
    path = tmp_path / "junk.trace"
    path.write_text("0102\n0304\n")
    assert main(["check", str(path)]) == 2
    assert main(["replay", str(path)]) == 2
    capsys.readouterr()


def test_run_accepts_config_files_and_seed_ranges(tmp_path, capsys):
    cfg = {
        "name": "filecase",
        "ledgers": [{"name": "main", "protocol": "u-bydl", "servers": [f"server:{i}" for i in range(4)], "f": 1}],
        "workload": {"client:0": [{"op": "append", "ledger": "main", "payload": "x"}]},
    }
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps(cfg))
    out_dir = tmp_path / "runs"
    assert main(["run", str(cfg_path), "--seeds", "2:4", "--out", str(out_dir)]) == 0
    assert sorted(p.name for p in out_dir.glob("*.trace")) == [
        "filecase-seed2.trace",
        "filecase-seed3.trace",
        "filecase-seed4.trace",
    ]
    capsys.readouterr()


def test_usage_errors(tmp_path, capsys):
    assert main(["run", "no-such-scenario"]) == 2
    assert main(["run", "u-n4-f1", "--seeds", "nonsense"]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{broken")
    assert main(["validate", str(bad)]) == 2
    capsys.readouterr()


def test_validate_separates_good_from_bad(tmp_path, capsys):
    good = {
        "name": "ok",
        "ledgers": [{"name": "main", "protocol": "u-bydl", "servers": [f"server:{i}" for i in range(4)], "f": 1}],
    }
    path = tmp_path / "good.json"
    path.write_text(json.dumps(good))
    assert main(["validate", str(path)]) == 0
    good["ledgers"][0]["servers"] = ["server:0"]
    path.write_text(json.dumps(good))
    assert main(["validate", str(path)]) == 2
    out = capsys.readouterr().out
    assert "invalid" in out


def test_run_rejects_invalid_builtin_free_config(tmp_path, capsys):
    cfg = {
        "name": "undersized",
        "ledgers": [{"name": "main", "protocol": "u-bydl", "servers": ["server:0"], "f": 1}],
    }
    path = tmp_path / "undersized.json"
    path.write_text(json.dumps(cfg))
    assert main(["run", str(path)]) == 2
    capsys.readouterr()
