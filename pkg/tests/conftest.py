"""Shared builders for scripted runs and the fixture benchmark."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from agentmeter import (
    AgentConfig,
    FixtureFetcher,
    FixtureSearchProvider,
    ModelPricing,
    PricingTable,
    Purpose,
    RunSession,
    ScriptEntry,
    ScriptedBackend,
    ToolBox,
    default_config,
)
from agentmeter.backend import HashEmbedder

FIXTURES = Path(__file__).parent / "fixtures"
BENCH = FIXTURES / "bench"


@pytest.fixture
def pricing() -> PricingTable:
    # 1 micro-dollar per input token, 10 per output token
    return PricingTable({"gpt-4.1": ModelPricing.per_million("1.00", "10.00")})


def make_session(
    backend, pricing, run_id="test-run", trace=None, replay=None, timeout_s=None
) -> RunSession:
    return RunSession(
        run_id=run_id,
        backend=backend,
        embedder=HashEmbedder(),
        pricing=pricing,
        trace=trace,
        replay=replay,
        timeout_s=timeout_s,
    )


def make_toolbox(session, config=None, providers=(), pages=None, attachments=None) -> ToolBox:
    return ToolBox(
        session,
        config or default_config(),
        providers=providers,
        fetcher=FixtureFetcher(pages or {}),
        attachments=attachments,
    )


def planner_entry(times=0) -> ScriptEntry:
    return ScriptEntry(
        purpose=Purpose.PLANNER,
        response="1. Find the fact.\n2. Answer.",
        times=times,
        prompt_tokens=200,
        completion_tokens=40,
    )


def actor_entry(response, match=None, times=1, prompt_tokens=300, completion_tokens=30):
    return ScriptEntry(
        purpose=Purpose.ACTOR,
        response=response,
        match=match,
        times=times,
        prompt_tokens=prompt_tokens,
        completion_tokens=completion_tokens,
    )


def bench_backend() -> ScriptedBackend:
    return ScriptedBackend.from_jsonl(BENCH / "script.jsonl")


def bench_providers() -> list[FixtureSearchProvider]:
    raw = json.loads((BENCH / "searches.json").read_text(encoding="utf-8"))
    mapping = {q: [tuple(row) for row in rows] for q, rows in raw.items()}
    return [FixtureSearchProvider("fixture", mapping)]


def bench_fetcher() -> FixtureFetcher:
    return FixtureFetcher.from_dir(BENCH / "pages")


def bench_pricing() -> PricingTable:
    return PricingTable({"gpt-4.1": ModelPricing.per_million("1.00", "10.00")})
