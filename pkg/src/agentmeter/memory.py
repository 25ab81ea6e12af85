"""Step-history memory: six context layouts, step summaries, long-term note.

The memory mode decides what the actor sees of its own past each step:

- simple: per-step (action, observation) pairs, reasoning omitted
- no_extra: full steps (reasoning, action, observation)
- summarized: retrieved top-k step summaries replace the step history
- extra_summarized: full steps plus retrieved summaries
- extra_fixed: full steps plus a bounded, LLM-maintained note
- extra_hybrid: full steps plus summaries plus the note

Summaries are embedded and retrieved by cosine similarity with a
deterministic tiebreak, so rendering is reproducible for a fixed store.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .backend import Message, Purpose
from .config import MemoryMode
from . import prompts

if TYPE_CHECKING:
    from .agent import Step
    from .session import RunSession

UNIT_NORM_TOL = 1e-6

SUMMARY_MODES = frozenset(
    {MemoryMode.SUMMARIZED, MemoryMode.EXTRA_SUMMARIZED, MemoryMode.EXTRA_HYBRID}
)
NOTE_MODES = frozenset({MemoryMode.EXTRA_FIXED, MemoryMode.EXTRA_HYBRID})


class DimensionMismatchError(ValueError):
    pass


class ZeroVectorError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class SummaryEntry:
    step_index: int
    summary_text: str
    embedding: np.ndarray  # unit norm, dimension fixed per store


class VectorStore:
    """Ordered collection of embedded step summaries, one dimension throughout."""

    def __init__(self, dim: int | None = None):
        self.dim = dim
        self._entries: list[SummaryEntry] = []

    def add(self, entry: SummaryEntry) -> None:
        vec = np.asarray(entry.embedding, dtype=float)
        if self.dim is None:
            self.dim = vec.shape[0]
        elif vec.shape[0] != self.dim:
            raise DimensionMismatchError(
                f"embedding dimension {vec.shape[0]} != store dimension {self.dim}"
            )
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"embedding norm {norm} is not within {UNIT_NORM_TOL} of 1")
        self._entries.append(entry)

    @property
    def entries(self) -> tuple[SummaryEntry, ...]:
        return tuple(self._entries)

    def __len__(self) -> int:
        return len(self._entries)


@dataclass(frozen=True)
class LongTermNote:
    """Bounded free-text memory, rewritten by the model after each step."""

    text: str
    max_chars: int

    def __post_init__(self) -> None:
        if self.max_chars < 1:
            raise ValueError("max_chars must be >= 1")
        if len(self.text) > self.max_chars:
            raise ValueError("note text exceeds max_chars")

    @classmethod
    def fitted(cls, text: str, max_chars: int) -> "LongTermNote":
        return cls(text[:max_chars], max_chars)


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"shapes {a.shape} and {b.shape} differ")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine similarity undefined for a zero vector")
    value = float(np.dot(a, b) / (na * nb))
    return max(-1.0, min(1.0, value))


def retrieve_top_k(
    store: VectorStore, query_embedding: np.ndarray, k: int
) -> list[SummaryEntry]:
    """Most similar entries first; equal similarity falls back to earlier steps."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(store) == 0:
        return []
    query = np.asarray(query_embedding, dtype=float)
    if store.dim is not None and query.shape[0] != store.dim:
        raise DimensionMismatchError(
            f"query dimension {query.shape[0]} != store dimension {store.dim}"
        )
    ranked = sorted(
        store.entries,
        key=lambda e: (-cosine_similarity(e.embedding, query), e.step_index),
    )
    return ranked[:k]


# -- context rendering -------------------------------------------------------


def _action_text(step: "Step") -> str:
    return step.action.render() if step.action is not None else "(no action parsed)"


def simple_block(step: "Step") -> str:
    return (
        f"Step {step.index}:\n"
        f"Action: {_action_text(step)}\n"
        f"Observation: {step.observation}"
    )


def full_block(step: "Step") -> str:
    lines = [
        f"Step {step.index}:",
        f"Model output: {step.model_output}",
        f"Action: {_action_text(step)}",
        f"Observation: {step.observation}",
    ]
    if step.error:
        lines.append(f"Error: {step.error}")
    return "\n".join(lines)


def summary_block(entry: SummaryEntry) -> str:
    return f"Summary of step {entry.step_index}:\n{entry.summary_text}"


def note_block(note: LongTermNote) -> str:
    return f"Long-term memory:\n{note.text}"


def render_context(
    mode: MemoryMode,
    steps: Sequence["Step"],
    store: VectorStore | None = None,
    note: LongTermNote | None = None,
    query_embedding: np.ndarray | None = None,
    k: int = 1,
) -> list[str]:
    """Build the history portion of the actor context for the given mode."""
    retrieved: list[SummaryEntry] = []
    if mode in SUMMARY_MODES and store is not None and len(store) and query_embedding is not None:
        retrieved = retrieve_top_k(store, query_embedding, k)

    if mode is MemoryMode.SIMPLE:
        return [simple_block(s) for s in steps]
    if mode is MemoryMode.NO_EXTRA:
        return [full_block(s) for s in steps]
    if mode is MemoryMode.SUMMARIZED:
        # summaries stand in for the step history entirely
        return [summary_block(e) for e in retrieved]

    blocks = [full_block(s) for s in steps]
    if mode in (MemoryMode.EXTRA_SUMMARIZED, MemoryMode.EXTRA_HYBRID):
        blocks.extend(summary_block(e) for e in retrieved)
    if mode in NOTE_MODES and note is not None and note.text:
        blocks.append(note_block(note))
    return blocks


# -- model-backed maintenance ------------------------------------------------


def step_content(step: "Step") -> str:
    """The step as shown to the summarizer; includes the raw observation."""
    return full_block(step)


def summarize_step(step: "Step", session: "RunSession", model_id: str) -> str:
    prompt = prompts.render(prompts.MEMORY_SUMMARIZE, step_content=step_content(step))
    response = session.call_model(
        Purpose.MEMORY, model_id, (Message("user", prompt),)
    )
    text = response.text.strip()
    if not text:
        return f"Step {step.index}: ran {_action_text(step)} (no summary produced)"
    return text


def update_long_term_note(
    note: LongTermNote, previous_step: "Step", session: "RunSession", model_id: str
) -> LongTermNote:
    prompt = prompts.render(
        prompts.MEMORY_LONGTERM,
        previous_step=step_content(previous_step),
        long_term_memory=note.text or "(empty)",
    )
    response = session.call_model(
        Purpose.MEMORY, model_id, (Message("user", prompt),)
    )
    text = response.text.strip()
    if not text:
        return note
    return LongTermNote.fitted(text, note.max_chars)


class RunMemory:
    """Per-run memory state driven by the agent loop.

    ``observe_step`` runs the mode's bookkeeping after each step (summary
    plus embedding, note rewrite, both, or nothing). ``context_blocks``
    renders what the actor should see, embedding the retrieval query only
    when summaries are in play.
    """

    def __init__(
        self,
        mode: MemoryMode,
        session: "RunSession",
        model_id: str,
        retrieval_k: int,
        note_max_chars: int,
    ):
        self.mode = mode
        self.session = session
        self.model_id = model_id
        self.retrieval_k = retrieval_k
        self.store = VectorStore()
        self.note = LongTermNote("", note_max_chars)

    @property
    def keeps_summaries(self) -> bool:
        return self.mode in SUMMARY_MODES

    @property
    def keeps_note(self) -> bool:
        return self.mode in NOTE_MODES

    def observe_step(self, step: "Step") -> None:
        if self.keeps_summaries:
            summary = summarize_step(step, self.session, self.model_id)
            embedding = self.session.embed(summary)
            self.store.add(
                SummaryEntry(step_index=step.index, summary_text=summary, embedding=embedding)
            )
        if self.keeps_note:
            self.note = update_long_term_note(self.note, step, self.session, self.model_id)

    def context_blocks(self, steps: Sequence["Step"], query_text: str) -> list[str]:
        query_embedding = None
        if self.keeps_summaries and len(self.store):
            query_embedding = self.session.embed(query_text)
        return render_context(
            self.mode,
            steps,
            store=self.store,
            note=self.note,
            query_embedding=query_embedding,
            k=self.retrieval_k,
        )
