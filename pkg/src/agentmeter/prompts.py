"""Prompt template loading.

All prompt text ships as editable plain-text files under
``agentmeter/templates``; code only substitutes ``$placeholder`` fields,
so operators can tune wording without touching Python. Templates are
cached after first read.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from string import Template

SYSTEM = "system"
PLANNER = "planner"
FORCED_ANSWER = "forced_answer"
QUERY_EXPANSION = "query_expansion"
MEMORY_SUMMARIZE = "memory_summarize"
MEMORY_LONGTERM = "memory_longterm"
PRM_SCORE = "prm_score"
PRM_LIST = "prm_list"


@lru_cache(maxsize=None)
def load_template(name: str) -> Template:
    text = (
        resources.files("agentmeter")
        .joinpath(f"templates/{name}.txt")
        .read_text(encoding="utf-8")
    )
    return Template(text)


def render(name: str, **values: object) -> str:
    return load_template(name).substitute(**{k: str(v) for k, v in values.items()})
