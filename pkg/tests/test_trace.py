import gzip
import json

import numpy as np
import pytest

from agentmeter.backend import Message, ModelRequest, ModelResponse, Purpose, TokenUsage
from agentmeter.trace import (
    ReplayMismatchError,
    ReplaySource,
    TraceFormatError,
    TraceWriter,
    read_trace,
    text_digest,
    trace_filename,
)


def sample_request(purpose=Purpose.ACTOR):
    return ModelRequest(
        model_id="gpt-4.1",
        messages=(Message("user", "q"),),
        purpose=purpose,
        temperature=0.7,
    )


def sample_response(text="out"):
    return ModelResponse(text=text, usage=TokenUsage(10, 2), model_id="gpt-4.1", latency_ms=123)


def write_sample(path):
    with TraceWriter(path) as w:
        w.header(
            run_id="r",
            task_id="t",
            config={"max_steps": 3},
            config_hash="abcd1234",
            pricing={"models": {}},
            task={"level": 1},
        )
        w.model_call(sample_request(), sample_response())
        w.tool_call("search", {"queries": ["a"]}, [{"url": "https://x"}])
        w.embed("hello", np.array([0.6, 0.8]))
        w.result({"solved": True})
    return path


def test_trace_filename_sanitizes():
    assert trace_filename("task/1:x", "deadbeef") == "task_1_x.deadbeef.trace"
    assert trace_filename("ok-id_2.a", "ff") == "ok-id_2.a.ff.trace"


def test_round_trip(tmp_path):
    path = write_sample(tmp_path / "t.trace")
    data = read_trace(path)
    assert data.header["run_id"] == "r"
    assert data.header["task"] == {"level": 1}
    kinds = [e["type"] for e in data.events]
    assert kinds == ["model_call", "tool_call", "embed", "result"]
    assert data.result["solved"] is True


def test_writes_are_byte_identical(tmp_path):
    a = write_sample(tmp_path / "a.trace").read_bytes()
    b = write_sample(tmp_path / "b.trace").read_bytes()
    assert a == b


def test_lines_are_compact_sorted_json(tmp_path):
    path = write_sample(tmp_path / "t.trace")
    with gzip.open(path, "rt", encoding="utf-8") as f:
        first = f.readline().rstrip("\n")
    assert first == json.dumps(json.loads(first), sort_keys=True, separators=(",", ":"))


def test_latency_is_not_recorded(tmp_path):
    # wall-clock noise would break byte-identical replay
    path = write_sample(tmp_path / "t.trace")
    event = read_trace(path).events[0]
    assert "latency" not in json.dumps(event)


def test_close_is_idempotent(tmp_path):
    w = TraceWriter(tmp_path / "t.trace")
    w.header(run_id="r", task_id="t", config={}, config_hash="x", pricing={})
    w.close()
    w.close()
    assert read_trace(tmp_path / "t.trace").events == ()


def test_read_rejects_missing_header(tmp_path):
    path = tmp_path / "bad.trace"
    with gzip.open(path, "wt", encoding="utf-8") as f:
        f.write('{"type":"model_call"}\n')
    with pytest.raises(TraceFormatError, match="header"):
        read_trace(path)


def test_read_rejects_unknown_version(tmp_path):
    path = tmp_path / "bad.trace"
    with gzip.open(path, "wt", encoding="utf-8") as f:
        f.write('{"type":"header","version":99}\n')
    with pytest.raises(TraceFormatError, match="version"):
        read_trace(path)


# -- replay ------------------------------------------------------------------


def test_replay_serves_in_order(tmp_path):
    source = ReplaySource.from_file(write_sample(tmp_path / "t.trace"))
    resp = source.next_response(sample_request())
    assert resp.text == "out"
    assert resp.usage.prompt_tokens == 10
    assert source.next_tool("search") == ({"queries": ["a"]}, [{"url": "https://x"}])
    vec = source.next_embed("hello")
    assert vec.tolist() == [0.6, 0.8]
    assert source.exhausted()


def test_replay_purpose_mismatch(tmp_path):
    source = ReplaySource.from_file(write_sample(tmp_path / "t.trace"))
    with pytest.raises(ReplayMismatchError, match="purpose"):
        source.next_response(sample_request(purpose=Purpose.PLANNER))


def test_replay_tool_mismatch(tmp_path):
    source = ReplaySource.from_file(write_sample(tmp_path / "t.trace"))
    source.next_response(sample_request())
    with pytest.raises(ReplayMismatchError, match="tool"):
        source.next_tool("fetch_page")


def test_replay_embed_text_mismatch(tmp_path):
    source = ReplaySource.from_file(write_sample(tmp_path / "t.trace"))
    source.next_response(sample_request())
    source.next_tool("search")
    with pytest.raises(ReplayMismatchError, match="embedding"):
        source.next_embed("different text")


def test_replay_exhaustion(tmp_path):
    source = ReplaySource.from_file(write_sample(tmp_path / "t.trace"))
    source.next_response(sample_request())
    with pytest.raises(ReplayMismatchError, match="ran out"):
        source.next_response(sample_request())


def test_text_digest_is_sha256():
    import hashlib

    assert text_digest("abc") == hashlib.sha256(b"abc").hexdigest()
