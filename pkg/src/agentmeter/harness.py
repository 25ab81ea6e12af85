"""Benchmark execution: tasks in, graded outcomes and reports out.

Tasks arrive as JSONL in the GAIA metadata shape (task_id, Level,
Question, "Final answer", file_name). Each task becomes one isolated
run with its own session, ledger, memory, browser state, and trace
file; runs execute on a bounded thread pool and results are sorted by
task id before aggregation, so worker count never changes the report.

Grading is quasi-exact match: both sides are normalized (whitespace,
case, quotes, trailing periods), numbers compare numerically after
comma/percent stripping, and a comma-separated expected answer compares
as an unordered list.
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from .agent import TaskRunRecord, TerminatedBy, run_task
from .backend import Backend, Embedder, HashEmbedder
from .config import (
    SWEEPABLE_FIELDS,
    AgentConfig,
    MemoryMode,
    PricingTable,
    SourceSet,
    config_from_snapshot,
    config_hash,
    config_snapshot,
    validate_config,
)
from .ledger import AggregateRow, EmptyBenchmarkError, aggregate
from .session import RunSession
from .tools import FixtureFetcher, PageFetcher, SearchProvider, ToolBox
from .trace import ReplaySource, TraceWriter, read_trace, trace_filename

log = logging.getLogger("agentmeter.harness")

DEFAULT_RUN_TIMEOUT_S = 600.0


# -- tasks -------------------------------------------------------------------


@dataclass(frozen=True)
class Task:
    task_id: str
    level: int
    question: str
    expected_answer: str
    attachments: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.level not in (1, 2, 3):
            raise ValueError(f"level must be 1, 2, or 3, got {self.level!r}")


class TaskFileError(ValueError):
    pass


class DuplicateTaskIdError(TaskFileError):
    pass


def load_tasks(path: str | Path) -> list[Task]:
    """Parse a JSONL task file; attachment paths resolve beside the file."""
    path = Path(path)
    base = path.parent
    tasks: list[Task] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TaskFileError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        try:
            task_id = str(raw["task_id"])
            level = int(raw["Level"])
            question = str(raw["Question"])
            expected = str(raw["Final answer"])
        except KeyError as exc:
            raise TaskFileError(f"{path}:{lineno}: missing field {exc}") from None
        if task_id in seen:
            raise DuplicateTaskIdError(f"{path}:{lineno}: duplicate task_id {task_id!r}")
        seen.add(task_id)
        file_name = str(raw.get("file_name") or "").strip()
        attachments = (str(base / file_name),) if file_name else ()
        try:
            tasks.append(
                Task(
                    task_id=task_id,
                    level=level,
                    question=question,
                    expected_answer=expected,
                    attachments=attachments,
                )
            )
        except ValueError as exc:
            raise TaskFileError(f"{path}:{lineno}: {exc}") from exc
    return tasks


# -- grading -----------------------------------------------------------------


def normalize_answer(text: str) -> str:
    s = re.sub(r"\s+", " ", text.strip()).lower()
    while len(s) >= 2 and s[0] == s[-1] and s[0] in "\"'":
        s = s[1:-1].strip()
    return s.rstrip(".").strip()


def _as_number(s: str):
    cleaned = s.replace(",", "").replace("%", "").strip()
    if not cleaned:
        return None
    try:
        return float(cleaned)
    except ValueError:
        return None


def _element_key(s: str) -> str:
    """Canonical form for one list element: numeric if possible."""
    value = _as_number(s)
    if value is not None:
        return format(value, ".12g")
    return s


def grade(answer: str, expected: str) -> bool:
    a = normalize_answer(answer)
    e = normalize_answer(expected)
    na, ne = _as_number(a), _as_number(e)
    if na is not None and ne is not None:
        return na == ne or math.isclose(na, ne, rel_tol=1e-9)
    if "," in e:
        a_items = [normalize_answer(p) for p in a.split(",")]
        e_items = [normalize_answer(p) for p in e.split(",")]
        if len(a_items) != len(e_items):
            return False
        return Counter(map(_element_key, a_items)) == Counter(map(_element_key, e_items))
    return a == e


# -- execution ---------------------------------------------------------------


@dataclass(frozen=True)
class TaskOutcome:
    task_id: str
    level: int
    solved: bool
    final_answer: str
    cost_pico: int
    total_tokens: int
    terminated_by: TerminatedBy

    def as_tuple(self) -> tuple[int, bool, int, int]:
        return (self.level, self.solved, self.cost_pico, self.total_tokens)


@dataclass(frozen=True)
class BenchmarkReport:
    config_hash: str
    config: AgentConfig
    rows: tuple[AggregateRow, ...]


class BenchmarkAbortError(RuntimeError):
    pass


class UnknownAxisError(ValueError):
    pass


def _result_payload(
    record: TaskRunRecord, solved: bool
) -> dict:
    ledger = record.ledger
    return {
        "final_answer": record.final_answer,
        "terminated_by": record.terminated_by.value,
        "steps": len(record.steps),
        "plan_count": len(record.plans),
        "solved": solved,
        "cost_pico": ledger.total_cost_pico,
        "prompt_tokens": ledger.prompt_tokens,
        "completion_tokens": ledger.completion_tokens,
    }


def execute_run(
    task: Task,
    config: AgentConfig,
    backend: Backend,
    pricing: PricingTable,
    embedder: Embedder | None = None,
    providers: Sequence[SearchProvider] = (),
    fetcher: PageFetcher | None = None,
    trace_dir: str | Path | None = None,
    timeout_s: float | None = DEFAULT_RUN_TIMEOUT_S,
) -> tuple[TaskOutcome, TaskRunRecord]:
    """One complete, isolated task run: trace, session, loop, grade."""
    writer = None
    if trace_dir is not None:
        writer = TraceWriter(Path(trace_dir) / trace_filename(task.task_id, config_hash(config)))
        writer.header(
            run_id=task.task_id,
            task_id=task.task_id,
            config=config_snapshot(config),
            config_hash=config_hash(config),
            pricing=pricing.snapshot(),
            task={
                "level": task.level,
                "question": task.question,
                "expected_answer": task.expected_answer,
                "attachment_names": [Path(p).name for p in task.attachments],
            },
        )
    session = RunSession(
        run_id=task.task_id,
        backend=backend,
        embedder=embedder or HashEmbedder(),
        pricing=pricing,
        trace=writer,
        timeout_s=timeout_s,
    )
    toolbox = ToolBox(
        session,
        config,
        providers=providers,
        fetcher=fetcher or FixtureFetcher({}),
        attachments={Path(p).name: p for p in task.attachments},
    )
    record = run_task(task.task_id, task.question, config, session, toolbox)
    solved = grade(record.final_answer, task.expected_answer)
    if writer is not None:
        writer.result(_result_payload(record, solved))
        writer.close()
    outcome = TaskOutcome(
        task_id=task.task_id,
        level=task.level,
        solved=solved,
        final_answer=record.final_answer,
        cost_pico=record.ledger.total_cost_pico,
        total_tokens=record.ledger.total_tokens,
        terminated_by=record.terminated_by,
    )
    return outcome, record


def run_benchmark(
    tasks: Sequence[Task],
    config: AgentConfig,
    backend: Backend,
    pricing: PricingTable,
    workers: int = 1,
    embedder: Embedder | None = None,
    providers: Sequence[SearchProvider] = (),
    fetcher: PageFetcher | None = None,
    trace_dir: str | Path | None = None,
    timeout_s: float | None = DEFAULT_RUN_TIMEOUT_S,
) -> tuple[list[TaskOutcome], BenchmarkReport]:
    if not tasks:
        raise EmptyBenchmarkError("no tasks to run")
    if workers < 1:
        raise ValueError("workers must be >= 1")
    validate_config(config, pricing)

    def one(task: Task) -> TaskOutcome:
        outcome, _ = execute_run(
            task,
            config,
            backend,
            pricing,
            embedder=embedder,
            providers=providers,
            fetcher=fetcher,
            trace_dir=trace_dir,
            timeout_s=timeout_s,
        )
        return outcome

    if workers == 1:
        outcomes = [one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one, tasks))

    outcomes.sort(key=lambda o: o.task_id)
    if all(o.terminated_by is TerminatedBy.ERROR for o in outcomes):
        raise BenchmarkAbortError(
            f"every run failed with a backend error ({len(outcomes)} tasks); "
            "check credentials, pricing, or the script"
        )
    rows = aggregate(o.as_tuple() for o in outcomes)
    report = BenchmarkReport(
        config_hash=config_hash(config), config=config, rows=tuple(rows)
    )
    return outcomes, report


# -- sweeps ------------------------------------------------------------------

_AXIS_COERCERS = {
    "source_set": lambda v: v if isinstance(v, SourceSet) else SourceSet(str(v).lower()),
    "memory_mode": lambda v: v if isinstance(v, MemoryMode) else MemoryMode(str(v).lower()),
    "backbone_id": str,
}


def sweep_configs(base: AgentConfig, axis: str, values: Sequence) -> list[AgentConfig]:
    """One config per value, differing from base only on the swept axis."""
    if axis not in SWEEPABLE_FIELDS:
        raise UnknownAxisError(
            f"axis {axis!r} is not sweepable; choose one of {', '.join(SWEEPABLE_FIELDS)}"
        )
    coerce = _AXIS_COERCERS.get(axis, lambda v: int(v))
    return [replace(base, **{axis: coerce(v)}) for v in values]


def sweep(
    base: AgentConfig,
    axis: str,
    values: Sequence,
    tasks: Sequence[Task],
    backend: Backend,
    pricing: PricingTable,
    workers: int = 1,
    **run_kwargs,
) -> list[tuple[AgentConfig, BenchmarkReport]]:
    results = []
    for cfg in sweep_configs(base, axis, values):
        _, report = run_benchmark(
            tasks, cfg, backend, pricing, workers=workers, **run_kwargs
        )
        results.append((cfg, report))
    return results


# -- replay ------------------------------------------------------------------


def replay_run(
    trace_path: str | Path,
    trace_dir: str | Path | None = None,
) -> tuple[TaskOutcome, TaskRunRecord]:
    """Re-execute a recorded run fully offline.

    All model responses, tool results, and embeddings come from the
    recording; config and pricing are restored from its header. With
    ``trace_dir`` set, the replay writes its own trace, which for a
    deterministic run is byte-identical to the original.
    """
    data = read_trace(trace_path)
    header = data.header
    config = config_from_snapshot(header["config"])
    pricing = PricingTable.from_snapshot(header["pricing"])
    task_info = header["task"]
    task = Task(
        task_id=header["task_id"],
        level=task_info["level"],
        question=task_info["question"],
        expected_answer=task_info["expected_answer"],
        # names only; replayed read_attachment events never touch disk
        attachments=tuple(task_info["attachment_names"]),
    )

    writer = None
    if trace_dir is not None:
        writer = TraceWriter(Path(trace_dir) / trace_filename(task.task_id, header["config_hash"]))
        writer.header(
            run_id=header["run_id"],
            task_id=header["task_id"],
            config=header["config"],
            config_hash=header["config_hash"],
            pricing=header["pricing"],
            task=task_info,
        )
    session = RunSession(
        run_id=header["run_id"],
        backend=None,
        embedder=None,
        pricing=pricing,
        trace=writer,
        replay=ReplaySource(data),
    )
    toolbox = ToolBox(
        session,
        config,
        providers=(),
        fetcher=FixtureFetcher({}),
        attachments={name: name for name in task.attachments},
    )
    record = run_task(task.task_id, task.question, config, session, toolbox)
    solved = grade(record.final_answer, task.expected_answer)
    if writer is not None:
        writer.result(_result_payload(record, solved))
        writer.close()
    outcome = TaskOutcome(
        task_id=task.task_id,
        level=task.level,
        solved=solved,
        final_answer=record.final_answer,
        cost_pico=record.ledger.total_cost_pico,
        total_tokens=record.ledger.total_tokens,
        terminated_by=record.terminated_by,
    )
    return outcome, record


def replay_benchmark(
    trace_paths: Sequence[str | Path],
) -> tuple[list[TaskOutcome], list[AggregateRow]]:
    """Replay a set of traces and rebuild the aggregate rows."""
    outcomes = [replay_run(p)[0] for p in trace_paths]
    outcomes.sort(key=lambda o: o.task_id)
    if not outcomes:
        raise EmptyBenchmarkError("no traces to replay")
    return outcomes, aggregate(o.as_tuple() for o in outcomes)
