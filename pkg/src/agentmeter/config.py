"""Experiment configuration: agent component settings, model pricing, presets.

A configuration pins every component that the benchmark harness can vary:
the backbone model, the step budget, the replanning cadence, the search
source set and query-expansion count, the best-of-N width, and the memory
mode. Configurations and pricing tables are immutable after load and safe
to share across concurrent runs.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import json
from dataclasses import dataclass, fields, replace
from datetime import date
from decimal import Decimal
from enum import Enum
from pathlib import Path

from .money import TOKENS_PER_MILLION, MoneyResolutionError, usd_to_pico

GPT_4_1 = "gpt-4.1"


class SourceSet(Enum):
    """Which search engines a run fans queries out to."""

    SIMPLE = "simple"
    MULTI = "multi"

    @property
    def providers(self) -> tuple[str, ...]:
        if self is SourceSet.SIMPLE:
            return ("google", "wikipedia")
        return ("google", "wikipedia", "bing", "baidu", "duckduckgo")


class MemoryMode(Enum):
    """How step history and auxiliary memory are rendered into the actor context."""

    SIMPLE = "simple"
    SUMMARIZED = "summarized"
    NO_EXTRA = "no_extra"
    EXTRA_SUMMARIZED = "extra_summarized"
    EXTRA_FIXED = "extra_fixed"
    EXTRA_HYBRID = "extra_hybrid"


class PrmMode(Enum):
    """How best-of-N candidates are judged: per-candidate score or one list pick."""

    SCORE = "score"
    LIST = "list"


class PageStrategy(Enum):
    """How fetched pages are turned into observations.

    The static crawler extracts the whole page text at once; the simple
    browser shows only the first viewport; the complex browser adds
    page_up/page_down navigation over viewports.
    """

    CRAWLER_STATIC = "crawler_static"
    BROWSER_SIMPLE = "browser_simple"
    BROWSER_COMPLEX = "browser_complex"


@dataclass(frozen=True)
class AgentConfig:
    """One full experiment configuration row.

    The dataclass defaults are the baseline setup that component sweeps
    start from. ``temperature`` drives the single-sample actor;
    ``bon_temperature`` is used only when ``bon_n > 1`` (identical
    candidates would make best-of-N pointless). Neither sampling
    temperature is prescribed anywhere upstream; both are documented
    implementer choices, as are ``retrieval_k`` and ``note_max_chars``.
    """

    backbone_id: str = GPT_4_1
    max_steps: int = 12
    plan_interval: int = 1
    source_set: SourceSet = SourceSet.SIMPLE
    query_expansion_count: int = 10
    bon_n: int = 1
    memory_mode: MemoryMode = MemoryMode.SIMPLE
    page_strategy: PageStrategy = PageStrategy.CRAWLER_STATIC
    prm_mode: PrmMode = PrmMode.SCORE
    prm_backbone_id: str | None = None
    temperature: float = 0.0
    bon_temperature: float = 0.7
    retrieval_k: int = 3
    note_max_chars: int = 2000

    @property
    def judge_model_id(self) -> str:
        """Model used by the best-of-N judge; falls back to the actor backbone."""
        return self.prm_backbone_id or self.backbone_id


def default_config() -> AgentConfig:
    """Baseline configuration every component sweep varies one field of."""
    return AgentConfig()


def efficient_config() -> AgentConfig:
    """Cost-tuned preset: shorter step budget, wider source set, fewer query expansions."""
    return replace(
        default_config(),
        max_steps=8,
        source_set=SourceSet.MULTI,
        query_expansion_count=5,
    )


efficient_agents_config = efficient_config


@dataclass(frozen=True)
class ModelPricing:
    """Per-token prices held as integer pico-dollars (1e-12 USD) per token."""

    input_pico_per_token: int
    output_pico_per_token: int

    def __post_init__(self) -> None:
        if self.input_pico_per_token < 0 or self.output_pico_per_token < 0:
            raise ValueError("per-token prices must be non-negative")

    @classmethod
    def from_usd_per_token(cls, c_in: float | str, c_out: float | str) -> "ModelPricing":
        return cls(usd_to_pico(c_in), usd_to_pico(c_out))

    @classmethod
    def per_million(cls, input_usd: float | str, output_usd: float | str) -> "ModelPricing":
        """Build from USD-per-1M-token prices, the unit used in config files."""
        pairs = []
        for value in (input_usd, output_usd):
            pico_total = usd_to_pico(value)
            if pico_total % TOKENS_PER_MILLION:
                raise MoneyResolutionError(
                    f"{value!r} USD/1M tokens is finer than 1e-12 USD per token"
                )
            pairs.append(pico_total // TOKENS_PER_MILLION)
        return cls(pairs[0], pairs[1])

    @property
    def c_in(self) -> float:
        """Input price in USD per token."""
        return self.input_pico_per_token / 10**12

    @property
    def c_out(self) -> float:
        """Output price in USD per token."""
        return self.output_pico_per_token / 10**12


class MissingPricingError(LookupError):
    """A model id has no pricing entry; silent zero prices are never assumed."""

    def __init__(self, model_id: str):
        super().__init__(f"no pricing entry for model {model_id!r}")
        self.model_id = model_id


class PricingTable:
    """Immutable model-id -> ModelPricing mapping."""

    def __init__(self, entries: dict[str, ModelPricing], effective_date: date | None = None):
        self._entries = dict(entries)
        self.effective_date = effective_date

    def lookup(self, model_id: str) -> ModelPricing:
        try:
            return self._entries[model_id]
        except KeyError:
            raise MissingPricingError(model_id) from None

    def __contains__(self, model_id: str) -> bool:
        return model_id in self._entries

    def models(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def snapshot(self) -> dict:
        """JSON-safe exact dump, used in trace headers."""
        data: dict = {
            model: {
                "input_pico_per_token": p.input_pico_per_token,
                "output_pico_per_token": p.output_pico_per_token,
            }
            for model, p in sorted(self._entries.items())
        }
        return {
            "effective_date": self.effective_date.isoformat() if self.effective_date else None,
            "models": data,
        }

    @classmethod
    def from_snapshot(cls, data: dict) -> "PricingTable":
        entries = {
            model: ModelPricing(p["input_pico_per_token"], p["output_pico_per_token"])
            for model, p in data["models"].items()
        }
        eff = data.get("effective_date")
        return cls(entries, date.fromisoformat(eff) if eff else None)


def default_pricing() -> PricingTable:
    """Public list prices (USD per 1M tokens) for the usual backbones.

    Convenience only; benchmarks meant to be compared over time should
    pin prices in a config file instead.
    """
    return PricingTable(
        {
            "gpt-4.1": ModelPricing.per_million("2.00", "8.00"),
            "gpt-4.1-mini": ModelPricing.per_million("0.40", "1.60"),
            "gpt-4.1-nano": ModelPricing.per_million("0.10", "0.40"),
            "o4-mini": ModelPricing.per_million("1.10", "4.40"),
            "claude-3.7-sonnet": ModelPricing.per_million("3.00", "15.00"),
        },
        effective_date=date(2025, 6, 1),
    )


@dataclass(frozen=True)
class ConfigIssue:
    kind: str  # "range" | "missing_pricing"
    field: str
    message: str


class InvalidConfigError(ValueError):
    def __init__(self, issues: list[ConfigIssue]):
        super().__init__("; ".join(i.message for i in issues))
        self.issues = issues


_POSITIVE_FIELDS = (
    "max_steps",
    "plan_interval",
    "bon_n",
    "query_expansion_count",
    "retrieval_k",
    "note_max_chars",
)


def config_issues(cfg: AgentConfig, pricing: PricingTable) -> list[ConfigIssue]:
    issues = []
    for name in _POSITIVE_FIELDS:
        value = getattr(cfg, name)
        if value < 1:
            issues.append(ConfigIssue("range", name, f"{name} must be >= 1, got {value}"))
    for name in ("temperature", "bon_temperature"):
        value = getattr(cfg, name)
        if value < 0:
            issues.append(ConfigIssue("range", name, f"{name} must be >= 0, got {value}"))
    if cfg.backbone_id not in pricing:
        issues.append(
            ConfigIssue(
                "missing_pricing", "backbone_id", f"no pricing entry for {cfg.backbone_id!r}"
            )
        )
    if cfg.prm_backbone_id is not None and cfg.prm_backbone_id not in pricing:
        issues.append(
            ConfigIssue(
                "missing_pricing",
                "prm_backbone_id",
                f"no pricing entry for {cfg.prm_backbone_id!r}",
            )
        )
    return issues


def validate_config(cfg: AgentConfig, pricing: PricingTable) -> AgentConfig:
    """Return the config unchanged if every invariant holds, else raise."""
    issues = config_issues(cfg, pricing)
    if issues:
        raise InvalidConfigError(issues)
    return cfg


SWEEPABLE_FIELDS = (
    "backbone_id",
    "max_steps",
    "plan_interval",
    "source_set",
    "query_expansion_count",
    "bon_n",
    "memory_mode",
)


def config_snapshot(cfg: AgentConfig) -> dict:
    """JSON-safe field dump (enum fields by value)."""
    out = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        out[f.name] = value.value if isinstance(value, Enum) else value
    return out


def config_from_snapshot(data: dict) -> AgentConfig:
    kwargs = dict(data)
    kwargs["source_set"] = SourceSet(kwargs["source_set"])
    kwargs["memory_mode"] = MemoryMode(kwargs["memory_mode"])
    kwargs["page_strategy"] = PageStrategy(kwargs["page_strategy"])
    kwargs["prm_mode"] = PrmMode(kwargs["prm_mode"])
    return AgentConfig(**kwargs)


def config_hash(cfg: AgentConfig) -> str:
    """Short stable digest used in trace file names."""
    canon = json.dumps(config_snapshot(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:8]


# -- config file I/O ---------------------------------------------------------
#
# UTF-8 key/value document. Section [agent] holds the experiment fields;
# one [pricing.<model-id>] section per model with input/output prices in
# USD per 1M tokens. Environment variables never override these values;
# they carry API credentials only.


def parse_config(text: str) -> tuple[AgentConfig, PricingTable]:
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keep model ids and keys case-sensitive
    parser.read_string(text)

    kwargs: dict = {}
    if parser.has_section("agent"):
        sec = parser["agent"]
        for f in fields(AgentConfig):
            if f.name not in sec:
                continue
            raw = sec[f.name]
            if f.name == "source_set":
                kwargs[f.name] = SourceSet(raw.lower())
            elif f.name == "memory_mode":
                kwargs[f.name] = MemoryMode(raw.lower())
            elif f.name == "page_strategy":
                kwargs[f.name] = PageStrategy(raw.lower())
            elif f.name == "prm_mode":
                kwargs[f.name] = PrmMode(raw.lower())
            elif f.name in ("temperature", "bon_temperature"):
                kwargs[f.name] = float(raw)
            elif f.name in ("backbone_id", "prm_backbone_id"):
                kwargs[f.name] = raw
            else:
                kwargs[f.name] = int(raw)
    cfg = AgentConfig(**kwargs)

    entries: dict[str, ModelPricing] = {}
    effective: date | None = None
    for section in parser.sections():
        if section == "pricing":
            raw_date = parser[section].get("effective_date")
            if raw_date:
                effective = date.fromisoformat(raw_date)
        elif section.startswith("pricing."):
            model_id = section[len("pricing.") :]
            sec = parser[section]
            entries[model_id] = ModelPricing.per_million(sec["input"], sec["output"])
    return cfg, PricingTable(entries, effective)


def serialize_config(cfg: AgentConfig, pricing: PricingTable) -> str:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    agent: dict[str, str] = {}
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if value is None:
            continue
        agent[f.name] = value.value if isinstance(value, Enum) else str(value)
    parser["agent"] = agent
    if pricing.effective_date is not None:
        parser["pricing"] = {"effective_date": pricing.effective_date.isoformat()}
    for model in pricing.models():
        p = pricing.lookup(model)
        parser[f"pricing.{model}"] = {
            "input": _pico_per_token_to_per_million(p.input_pico_per_token),
            "output": _pico_per_token_to_per_million(p.output_pico_per_token),
        }
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


def _pico_per_token_to_per_million(pico: int) -> str:
    """Exact USD-per-1M-tokens string for a pico-dollar-per-token price."""
    usd = Decimal(pico * TOKENS_PER_MILLION) / Decimal(10**12)
    return format(usd, "f")


def load_config(path: str | Path) -> tuple[AgentConfig, PricingTable]:
    return parse_config(Path(path).read_text(encoding="utf-8"))
