"""Per-run execution context.

A :class:`RunSession` is handed to the agent loop and is the only path
to the outside world: model calls, tool calls, and embeddings all go
through it. That single chokepoint is what makes runs meterable (every
call lands in the ledger), recordable (every effect lands in the trace),
and replayable (effects are served from a recording instead of executed).
"""

from __future__ import annotations

import time
from typing import Any, Callable

import numpy as np

from .backend import (
    Backend,
    BackendError,
    Embedder,
    Message,
    ModelRequest,
    ModelResponse,
    Purpose,
)
from .config import PricingTable
from .ledger import RunLedger
from .trace import ReplaySource, TraceWriter


class RunTimeoutError(RuntimeError):
    """Raised cooperatively when the wall-clock budget is exhausted."""


class RunSession:
    def __init__(
        self,
        run_id: str,
        backend: Backend | None,
        embedder: Embedder | None,
        pricing: PricingTable,
        trace: TraceWriter | None = None,
        replay: ReplaySource | None = None,
        timeout_s: float | None = None,
    ):
        if backend is None and replay is None:
            raise ValueError("a session needs a backend or a replay source")
        self.run_id = run_id
        self.backend = backend
        self.embedder = embedder
        self.ledger = RunLedger(pricing, run_id)
        self.trace = trace
        self.replay = replay
        self.step_index = 0
        self._deadline = time.monotonic() + timeout_s if timeout_s else None
        if backend is not None:
            backend.start_run(run_id)

    def set_step(self, index: int) -> None:
        """Step index stamped onto subsequent ledger entries."""
        self.step_index = index

    def check_deadline(self) -> None:
        """Cooperative timeout, checked before each external call.

        Replays ignore the deadline: the recorded run already settled
        what happened, and replay speed is not the recorded speed.
        """
        if self.replay is not None or self._deadline is None:
            return
        if time.monotonic() >= self._deadline:
            raise RunTimeoutError(f"run {self.run_id} exceeded its time budget")

    def call_model(
        self,
        purpose: Purpose,
        model_id: str,
        messages: tuple[Message, ...],
        temperature: float = 0.0,
        max_tokens: int | None = None,
    ) -> ModelResponse:
        self.check_deadline()
        request = ModelRequest(
            model_id=model_id,
            messages=messages,
            purpose=purpose,
            temperature=temperature,
            max_tokens=max_tokens,
        )
        try:
            if self.replay is not None:
                response = self.replay.next_response(request)
            else:
                assert self.backend is not None
                response = self.backend.complete(request)
        except BackendError as exc:
            # failed calls still occupy a ledger slot, with an error mark
            self.ledger.record_failure(purpose, model_id, str(exc), self.step_index)
            raise
        # attribute cost to the model we asked for; gateways may echo variants
        self.ledger.record(purpose, model_id, response.usage, self.step_index)
        if self.trace is not None:
            self.trace.model_call(request, response)
        return response

    def call_tool(self, tool: str, args: dict, thunk: Callable[[], Any]) -> Any:
        """Run one external tool effect, or serve it from the replay.

        ``args`` and the thunk's return value must be JSON-safe; they are
        written to the trace verbatim.
        """
        self.check_deadline()
        if self.replay is not None:
            # recorded args win: the live ones may reference collaborators
            # (provider names, paths) this session does not have
            args, result = self.replay.next_tool(tool)
        else:
            result = thunk()
        if self.trace is not None:
            self.trace.tool_call(tool, args, result)
        return result

    def embed(self, text: str) -> np.ndarray:
        if self.replay is not None:
            vector = self.replay.next_embed(text)
        else:
            if self.embedder is None:
                raise ValueError("no embedder configured for this session")
            vector = self.embedder.embed(text)
        if self.trace is not None:
            self.trace.embed(text, vector)
        return vector
