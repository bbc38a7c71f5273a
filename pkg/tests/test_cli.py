"""CLI subcommands and exit codes (0 ok, 1 claim violation, 2 usage error)."""

import json

import pytest

from minplusone.cli import main


def test_zones_subcommand(capsys):
    rc = main(["zones", "--generate", "path", "--n", "5", "--byz", "4"])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["in_wide"] == [False, False, True, True, True]
    assert payload["in_strict"] == [False, False, False, True, True]


def test_run_subcommand_with_artifacts(tmp_path, capsys):
    rc = main([
        "run", "--generate", "path", "--n", "4", "--byz", "3",
        "--adversary", "fake_root", "--zone", "strict",
        "--init", "random", "--init-seed", "2",
        "--trace-out", str(tmp_path / "t.jsonl"),
        "--report-out", str(tmp_path / "r.json"),
    ])
    assert rc == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["bound_respected"] is True
    assert (tmp_path / "t.jsonl").exists()


def test_run_reads_config_file_with_flag_overrides(tmp_path, capsys):
    cfgfile = tmp_path / "cfg.json"
    cfgfile.write_text(json.dumps({
        "generate": {"kind": "path", "n": 4},
        "byzantine": [3],
        "adversary_kind": "oscillator",
        "zone": "strict",
        "init_kind": "random",
        "init_seed": 1,
    }))
    rc = main(["run", "--config", str(cfgfile), "--zone", "wide"])
    assert rc == 0
    metrics = json.loads(capsys.readouterr().out)
    assert metrics["zone"] == "wide"  # the flag overrode the file


def test_campaign_subcommand(tmp_path, capsys):
    out = tmp_path / "agg.json"
    rc = main([
        "campaign", "--generate", "path", "--n", "4", "--runs", "4",
        "--init", "random", "--out", str(out),
    ])
    assert rc == 0
    agg = json.loads(out.read_text())
    assert agg["completed"] == 4
    assert agg["containment_failures"] == 0


def test_replay_subcommand_roundtrip(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    report = tmp_path / "r.json"
    assert main([
        "run", "--generate", "ring", "--n", "5", "--byz", "2",
        "--adversary", "min_under_cutter", "--zone", "strict",
        "--init", "random", "--trace-out", str(trace), "--report-out", str(report),
    ]) == 0
    capsys.readouterr()
    assert main(["replay", str(trace), "--report", str(report)]) == 0
    assert "replay ok" in capsys.readouterr().out


def test_replay_detects_tampering(tmp_path, capsys):
    trace = tmp_path / "t.jsonl"
    assert main([
        "run", "--generate", "path", "--n", "3",
        "--init", "random", "--trace-out", str(trace),
    ]) == 0
    lines = trace.read_text().splitlines()
    for i, line in enumerate(lines):
        rec = json.loads(line)
        if rec.get("type") == "step" and rec["actions"]:
            rec["actions"][0]["new"]["height"] += 3
            lines[i] = json.dumps(rec, sort_keys=True, separators=(",", ":"))
            break
    trace.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(trace)]) == 1


def test_usage_errors_exit_2(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["zones"])  # neither --graph nor --generate
    assert exc.value.code == 2
    assert main(["run", "--graph", str(tmp_path / "missing.txt")]) == 2


def test_exhaustive_subcommand_tiny(capsys):
    rc = main(["exhaustive", "--n-max", "2", "--families", "path"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "total violations: 0" in out


def test_determinism_of_run_artifacts(tmp_path):
    argv = [
        "run", "--generate", "random_connected", "--n", "10", "--edge-prob", "0.4",
        "--graph-seed", "3", "--byz", "7", "--adversary", "random_writer",
        "--zone", "strict", "--init", "random", "--init-seed", "11", "--seed", "4",
    ]
    t1, t2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    r1, r2 = tmp_path / "a.json", tmp_path / "b.json"
    assert main(argv + ["--trace-out", str(t1), "--report-out", str(r1)]) == 0
    assert main(argv + ["--trace-out", str(t2), "--report-out", str(r2)]) == 0
    assert t1.read_bytes() == t2.read_bytes()
    assert r1.read_bytes() == r2.read_bytes()
