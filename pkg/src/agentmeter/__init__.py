"""agentmeter: measure what a web research agent answers and what it costs.

The package runs a plan-then-act agent over GAIA-style tasks, records
every model call in an exact integer-cost ledger, and reports accuracy
alongside dollars-per-solved-task. Runs can be traced to disk and
replayed byte-for-byte with no network access.

Typical entry points: :func:`load_tasks` + :func:`run_benchmark` for
programmatic use, or the ``agentmeter`` console script.
"""

from .agent import TaskRunRecord, TerminatedBy, run_task, should_replan
from .backend import (
    Backend,
    BackendError,
    Embedder,
    HashEmbedder,
    Message,
    ModelRequest,
    ModelResponse,
    OpenAIBackend,
    Purpose,
    ScriptedBackend,
    ScriptEntry,
    TokenUsage,
    estimate_tokens,
)
from .config import (
    SWEEPABLE_FIELDS,
    AgentConfig,
    InvalidConfigError,
    MemoryMode,
    MissingPricingError,
    ModelPricing,
    PageStrategy,
    PricingTable,
    PrmMode,
    SourceSet,
    config_hash,
    default_config,
    default_pricing,
    efficient_agents_config,
    efficient_config,
    load_config,
    parse_config,
    serialize_config,
    validate_config,
)
from .harness import (
    BenchmarkAbortError,
    BenchmarkReport,
    DuplicateTaskIdError,
    Task,
    TaskFileError,
    TaskOutcome,
    UnknownAxisError,
    execute_run,
    grade,
    load_tasks,
    normalize_answer,
    replay_benchmark,
    replay_run,
    run_benchmark,
    sweep,
    sweep_configs,
)
from .ledger import (
    AggregateRow,
    ComparisonMetrics,
    EmptyBenchmarkError,
    LedgerEntry,
    RunLedger,
    Scope,
    aggregate,
    comparison_metrics,
    comparison_metrics_values,
    cost_of_pass,
)
from .report import render_csv, render_report, render_svg, render_table
from .session import RunSession, RunTimeoutError
from .tools import FixtureFetcher, FixtureSearchProvider, HttpFetcher, ToolBox
from .trace import ReplayMismatchError, ReplaySource, TraceWriter, read_trace, trace_filename

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "AggregateRow",
    "Backend",
    "BackendError",
    "BenchmarkAbortError",
    "BenchmarkReport",
    "ComparisonMetrics",
    "DuplicateTaskIdError",
    "Embedder",
    "EmptyBenchmarkError",
    "FixtureFetcher",
    "FixtureSearchProvider",
    "HashEmbedder",
    "HttpFetcher",
    "InvalidConfigError",
    "LedgerEntry",
    "MemoryMode",
    "Message",
    "MissingPricingError",
    "ModelPricing",
    "ModelRequest",
    "ModelResponse",
    "OpenAIBackend",
    "PageStrategy",
    "PricingTable",
    "PrmMode",
    "Purpose",
    "ReplayMismatchError",
    "ReplaySource",
    "RunLedger",
    "RunSession",
    "RunTimeoutError",
    "SWEEPABLE_FIELDS",
    "Scope",
    "ScriptEntry",
    "ScriptedBackend",
    "SourceSet",
    "Task",
    "TaskFileError",
    "TaskOutcome",
    "TaskRunRecord",
    "TerminatedBy",
    "TokenUsage",
    "ToolBox",
    "TraceWriter",
    "UnknownAxisError",
    "aggregate",
    "comparison_metrics",
    "comparison_metrics_values",
    "config_hash",
    "cost_of_pass",
    "default_config",
    "default_pricing",
    "efficient_agents_config",
    "efficient_config",
    "estimate_tokens",
    "execute_run",
    "grade",
    "load_config",
    "load_tasks",
    "normalize_answer",
    "parse_config",
    "read_trace",
    "render_csv",
    "render_report",
    "render_svg",
    "render_table",
    "replay_benchmark",
    "replay_run",
    "run_benchmark",
    "run_task",
    "serialize_config",
    "should_replan",
    "sweep",
    "sweep_configs",
    "trace_filename",
    "validate_config",
]
