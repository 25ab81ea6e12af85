"""Command-line entry points.

Five subcommands cover the workflow: ``run`` executes one task, ``bench``
a whole task file, ``sweep`` repeats a benchmark while varying one config
axis, ``report`` re-renders saved benchmark results, and ``replay``
re-executes recorded traces offline.

Offline operation is first-class: ``--script`` swaps the live model API
for canned responses and ``--fixtures`` swaps the network fetch layer
for files on disk, so a benchmark can run with no credentials at all.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .backend import Backend, OpenAIBackend, ScriptedBackend
from .config import (
    AgentConfig,
    ConfigIssue,
    InvalidConfigError,
    PricingTable,
    config_snapshot,
    default_config,
    default_pricing,
    load_config,
)
from .harness import (
    BenchmarkAbortError,
    Task,
    TaskFileError,
    UnknownAxisError,
    execute_run,
    load_tasks,
    replay_run,
    run_benchmark,
    sweep_configs,
)
from .ledger import AggregateRow, EmptyBenchmarkError, Scope, aggregate
from .report import (
    FORMATS,
    filter_scope,
    format_cost,
    render_report,
    render_sweep_table,
)
from .tools import (
    FixtureFetcher,
    FixtureSearchProvider,
    HttpFetcher,
    PageFetcher,
    SearchProvider,
    live_providers,
)

log = logging.getLogger("agentmeter.cli")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with [agent] and [pricing.*] sections")
    p.add_argument("--pricing", help="INI file whose pricing sections override --config")
    p.add_argument("--script", help="JSONL of canned model responses (offline mode)")
    p.add_argument("--fixtures", help="directory of canned pages and search results")
    p.add_argument("--trace-dir", help="write one trace file per run into this directory")
    p.add_argument(
        "--timeout",
        type=float,
        default=600.0,
        help="per-run wall clock limit in seconds (default 600)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agentmeter",
        description="Measure accuracy and dollars-per-solve of a web research agent.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a single task")
    p_run.add_argument("--tasks", required=True, help="JSONL task file")
    p_run.add_argument("--task-id", help="which task to run (default: the only one)")
    _add_common(p_run)

    p_bench = sub.add_parser("bench", help="run every task and print the aggregate")
    p_bench.add_argument("--tasks", required=True)
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--format", choices=FORMATS, default="table")
    p_bench.add_argument("--out", help="save results as JSON for the report subcommand")
    _add_common(p_bench)

    p_sweep = sub.add_parser("sweep", help="benchmark once per value of one config axis")
    p_sweep.add_argument("--tasks", required=True)
    p_sweep.add_argument("--axis", required=True, help="config field to vary")
    p_sweep.add_argument("--values", required=True, help="comma-separated axis values")
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--out", help="save per-value results as JSON")
    _add_common(p_sweep)

    p_report = sub.add_parser("report", help="re-render saved benchmark results")
    p_report.add_argument("--results", required=True, help="JSON written by bench --out")
    p_report.add_argument("--format", choices=FORMATS, default="table")
    p_report.add_argument("--scope", choices=[s.value for s in Scope])
    p_report.add_argument("--out", help="write here instead of stdout")

    p_replay = sub.add_parser("replay", help="re-execute recorded traces offline")
    p_replay.add_argument("traces", nargs="+", help="trace files or directories of them")
    p_replay.add_argument("--trace-dir", help="re-record replays into this directory")
    p_replay.add_argument("--format", choices=FORMATS, default="table")

    return parser


# -- shared assembly ---------------------------------------------------------


def load_settings(args) -> tuple[AgentConfig, PricingTable]:
    config = default_config()
    pricing = default_pricing()
    if args.config:
        config, file_pricing = load_config(args.config)
        if file_pricing.models():
            pricing = file_pricing
    if args.pricing:
        _, override = load_config(args.pricing)
        if not override.models():
            raise InvalidConfigError(
                [
                    ConfigIssue(
                        "missing_pricing",
                        "pricing",
                        f"{args.pricing} has no [pricing.<model>] sections",
                    )
                ]
            )
        pricing = override
    return config, pricing


def make_backend(args) -> Backend:
    if args.script:
        return ScriptedBackend.from_jsonl(args.script)
    return OpenAIBackend()


def make_fetcher(args) -> PageFetcher:
    if args.fixtures:
        root = Path(args.fixtures)
        pages = root / "pages"
        return FixtureFetcher.from_dir(pages if pages.is_dir() else root)
    return HttpFetcher()


def make_providers(args, config: AgentConfig) -> list[SearchProvider]:
    if args.fixtures:
        canned = Path(args.fixtures) / "searches.json"
        if canned.exists():
            raw = json.loads(canned.read_text(encoding="utf-8"))
            mapping = {q: [tuple(row) for row in rows] for q, rows in raw.items()}
            return [FixtureSearchProvider("fixture", mapping)]
        return []
    return live_providers(config.source_set)


def _select_task(tasks: list[Task], task_id: str | None) -> Task:
    if task_id is None:
        if len(tasks) == 1:
            return tasks[0]
        raise TaskFileError(
            f"task file holds {len(tasks)} tasks; pick one with --task-id"
        )
    for task in tasks:
        if task.task_id == task_id:
            return task
    raise TaskFileError(f"no task with id {task_id!r}")


def _rows_payload(rows) -> list[dict]:
    return [
        {
            "scope": r.scope.value,
            "task_count": r.task_count,
            "solved_count": r.solved_count,
            "total_cost_pico": r.total_cost_pico,
            "total_tokens": r.total_tokens,
        }
        for r in rows
    ]


def _rows_from_payload(payload: list[dict]) -> list[AggregateRow]:
    return [
        AggregateRow(
            scope=Scope(r["scope"]),
            task_count=r["task_count"],
            solved_count=r["solved_count"],
            total_cost_pico=r["total_cost_pico"],
            total_tokens=r["total_tokens"],
        )
        for r in payload
    ]


def _write_out(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------


def cmd_run(args) -> int:
    config, pricing = load_settings(args)
    task = _select_task(load_tasks(args.tasks), args.task_id)
    outcome, record = execute_run(
        task,
        config,
        make_backend(args),
        pricing,
        providers=make_providers(args, config),
        fetcher=make_fetcher(args),
        trace_dir=args.trace_dir,
        timeout_s=args.timeout,
    )
    print(f"task:        {outcome.task_id} (level {outcome.level})")
    print(f"answer:      {outcome.final_answer}")
    print(f"expected:    {task.expected_answer}")
    print(f"solved:      {'yes' if outcome.solved else 'no'}")
    print(f"ended by:    {outcome.terminated_by.value}")
    print(f"steps:       {len(record.steps)}  plans: {len(record.plans)}")
    print(
        f"cost:        {format_cost(record.ledger.total_cost_usd)} USD"
        f"  tokens: {outcome.total_tokens}"
    )
    return 0 if outcome.solved else 1


def cmd_bench(args) -> int:
    config, pricing = load_settings(args)
    tasks = load_tasks(args.tasks)
    outcomes, report = run_benchmark(
        tasks,
        config,
        make_backend(args),
        pricing,
        workers=args.workers,
        providers=make_providers(args, config),
        fetcher=make_fetcher(args),
        trace_dir=args.trace_dir,
        timeout_s=args.timeout,
    )
    if args.out:
        payload = {
            "config": config_snapshot(config),
            "config_hash": report.config_hash,
            "rows": _rows_payload(report.rows),
            "outcomes": [
                {
                    "task_id": o.task_id,
                    "level": o.level,
                    "solved": o.solved,
                    "final_answer": o.final_answer,
                    "cost_pico": o.cost_pico,
                    "total_tokens": o.total_tokens,
                    "terminated_by": o.terminated_by.value,
                }
                for o in outcomes
            ],
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    sys.stdout.write(
        render_report(report.rows, args.format, title=f"config {report.config_hash}")
    )
    return 0


def cmd_sweep(args) -> int:
    base, pricing = load_settings(args)
    tasks = load_tasks(args.tasks)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    backend = make_backend(args)
    providers = make_providers(args, base)
    fetcher = make_fetcher(args)
    entries: list[tuple[str, AggregateRow]] = []
    saved = []
    for value, cfg in zip(values, sweep_configs(base, args.axis, values)):
        _, report = run_benchmark(
            tasks,
            cfg,
            backend,
            pricing,
            workers=args.workers,
            providers=providers,
            fetcher=fetcher,
            trace_dir=args.trace_dir,
            timeout_s=args.timeout,
        )
        entries.append((value, report.rows[0]))
        saved.append(
            {
                "value": value,
                "config": config_snapshot(cfg),
                "config_hash": report.config_hash,
                "rows": _rows_payload(report.rows),
            }
        )
    if args.out:
        Path(args.out).write_text(
            json.dumps({"axis": args.axis, "results": saved}, indent=2) + "\n",
            encoding="utf-8",
        )
    sys.stdout.write(render_sweep_table(entries, args.axis))
    return 0


def cmd_report(args) -> int:
    payload = json.loads(Path(args.results).read_text(encoding="utf-8"))
    rows = _rows_from_payload(payload["rows"])
    if args.scope:
        rows = filter_scope(rows, args.scope)
    title = f"config {payload.get('config_hash', '')}".strip()
    _write_out(render_report(rows, args.format, title=title), args.out)
    return 0


def _collect_traces(paths: list[str]) -> list[Path]:
    files: list[Path] = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            files.extend(sorted(p.glob("*.trace")))
        else:
            files.append(p)
    return files


def cmd_replay(args) -> int:
    files = _collect_traces(args.traces)
    if not files:
        raise EmptyBenchmarkError("no trace files found")
    outcomes = []
    for path in files:
        outcome, _ = replay_run(path, trace_dir=args.trace_dir)
        outcomes.append(outcome)
        log.info("replayed %s: solved=%s", path.name, outcome.solved)
    outcomes.sort(key=lambda o: o.task_id)
    rows = aggregate(o.as_tuple() for o in outcomes)
    sys.stdout.write(render_report(rows, args.format, title="replayed"))
    return 0


_COMMANDS = {
    "run": cmd_run,
    "bench": cmd_bench,
    "sweep": cmd_sweep,
    "report": cmd_report,
    "replay": cmd_replay,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except (
        TaskFileError,
        InvalidConfigError,
        BenchmarkAbortError,
        EmptyBenchmarkError,
        UnknownAxisError,
        FileNotFoundError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
