import json

import pytest

from agentmeter.cli import main

from conftest import BENCH


def bench_args(*extra):
    return [
        "--config", str(BENCH / "config.ini"),
        "--script", str(BENCH / "script.jsonl"),
        "--fixtures", str(BENCH),
        *extra,
    ]


def run_cli(*argv):
    return main(list(argv))


# -- run ---------------------------------------------------------------------


def test_run_solved_task_exits_zero(capsys):
    code = run_cli(
        "run", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"),
        "--task-id", "gaia-e1",
    )
    out = capsys.readouterr().out
    assert code == 0
    assert "answer:      1962" in out
    assert "solved:      yes" in out
    assert "ended by:    final_answer" in out


def test_run_unsolved_task_exits_one(capsys):
    code = run_cli(
        "run", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"),
        "--task-id", "gaia-e2",
    )
    out = capsys.readouterr().out
    assert code == 1
    assert "solved:      no" in out
    assert "expected:    740" in out


def test_run_requires_task_id_for_multi_task_files(capsys):
    code = run_cli("run", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"))
    assert code == 2
    assert "--task-id" in capsys.readouterr().err


def test_run_unknown_task_id(capsys):
    code = run_cli(
        "run", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"),
        "--task-id", "nope",
    )
    assert code == 2
    assert "nope" in capsys.readouterr().err


# -- bench and report --------------------------------------------------------


def test_bench_prints_table(capsys):
    code = run_cli("bench", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"))
    out = capsys.readouterr().out
    assert code == 0
    assert out.startswith("config ")
    assert "level 2" in out
    assert "inf" in out  # unsolved level has no dollars-per-solve


def test_bench_out_feeds_report(tmp_path, capsys):
    results = tmp_path / "results.json"
    run_cli(
        "bench", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"),
        "--out", str(results),
    )
    bench_out = capsys.readouterr().out

    assert run_cli("report", "--results", str(results)) == 0
    assert capsys.readouterr().out == bench_out

    payload = json.loads(results.read_text(encoding="utf-8"))
    assert [o["task_id"] for o in payload["outcomes"]] == ["gaia-e1", "gaia-e2", "gaia-e3"]
    assert [o["solved"] for o in payload["outcomes"]] == [True, False, True]
    assert payload["rows"][0]["scope"] == "all"


def test_report_scope_and_format(tmp_path, capsys):
    results = tmp_path / "results.json"
    run_cli(
        "bench", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"),
        "--out", str(results),
    )
    capsys.readouterr()

    assert run_cli("report", "--results", str(results), "--format", "csv",
                   "--scope", "l1") == 0
    out = capsys.readouterr().out
    lines = out.splitlines()
    assert lines[0].startswith("scope,")
    assert len(lines) == 2 and lines[1].startswith("l1,")

    target = tmp_path / "plot.svg"
    assert run_cli("report", "--results", str(results), "--format", "svg",
                   "--out", str(target)) == 0
    assert target.read_text(encoding="utf-8").startswith("<svg")
    assert capsys.readouterr().out == ""


def test_bench_workers_flag(capsys):
    code = run_cli(
        "bench", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"),
        "--workers", "4",
    )
    assert code == 0
    assert "level 3" in capsys.readouterr().out


# -- sweep -------------------------------------------------------------------


def test_sweep_renders_one_line_per_value(tmp_path, capsys):
    results = tmp_path / "sweep.json"
    code = run_cli(
        "sweep", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"),
        "--axis", "max_steps", "--values", "6,12", "--out", str(results),
    )
    out = capsys.readouterr().out
    assert code == 0
    assert out.splitlines()[0].split()[0] == "max_steps"
    assert {line.split()[0] for line in out.splitlines()[2:4]} == {"6", "12"}

    payload = json.loads(results.read_text(encoding="utf-8"))
    assert payload["axis"] == "max_steps"
    assert [e["value"] for e in payload["results"]] == ["6", "12"]
    hashes = {e["config_hash"] for e in payload["results"]}
    assert len(hashes) == 2  # each swept value is its own config


def test_sweep_unknown_axis_exits_two(capsys):
    code = run_cli(
        "sweep", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"),
        "--axis", "temperature", "--values", "1",
    )
    assert code == 2
    assert "not sweepable" in capsys.readouterr().err


# -- replay ------------------------------------------------------------------


def test_replay_directory_matches_live_aggregate(tmp_path, capsys):
    traces = tmp_path / "traces"
    traces.mkdir()
    run_cli(
        "bench", *bench_args(), "--tasks", str(BENCH / "tasks.jsonl"),
        "--trace-dir", str(traces),
    )
    live = capsys.readouterr().out

    assert run_cli("replay", str(traces)) == 0
    replayed = capsys.readouterr().out
    assert replayed.splitlines()[0] == "replayed"
    assert replayed.splitlines()[1:] == live.splitlines()[1:]


def test_replay_without_traces_exits_two(tmp_path, capsys):
    empty = tmp_path / "none"
    empty.mkdir()
    assert run_cli("replay", str(empty)) == 2
    assert "no trace files" in capsys.readouterr().err


# -- settings errors ---------------------------------------------------------


def test_pricing_file_without_models_exits_two(tmp_path, capsys):
    bad = tmp_path / "pricing.ini"
    bad.write_text("[pricing]\neffective_date = 2025-06-01\n", encoding="utf-8")
    code = run_cli(
        "run", "--config", str(BENCH / "config.ini"), "--pricing", str(bad),
        "--script", str(BENCH / "script.jsonl"), "--fixtures", str(BENCH),
        "--tasks", str(BENCH / "tasks.jsonl"), "--task-id", "gaia-e1",
    )
    assert code == 2
    assert "pricing" in capsys.readouterr().err


def test_missing_tasks_file_exits_two(tmp_path, capsys):
    code = run_cli("bench", *bench_args(), "--tasks", str(tmp_path / "gone.jsonl"))
    assert code == 2


def test_empty_script_aborts_bench(tmp_path, capsys):
    script = tmp_path / "empty.jsonl"
    script.write_text("", encoding="utf-8")
    code = run_cli(
        "bench", "--config", str(BENCH / "config.ini"), "--script", str(script),
        "--fixtures", str(BENCH), "--tasks", str(BENCH / "tasks.jsonl"),
    )
    assert code == 2
    assert "every run failed" in capsys.readouterr().err
