import pytest

from assistkit import (
    BackendConfig,
    Cassette,
    CassetteMiss,
    ChatRequest,
    CompletionTimeout,
    HttpStatusError,
    MalformedResponse,
    RecordBackend,
    ReplayBackend,
    ScriptedBackend,
    complete,
)

import requests

REQ = ChatRequest("test-model", (("user", "hello"),), temperature=0.0, max_tokens=16)
CFG = BackendConfig("http://example.invalid/v1", max_retries=2, backoff_base_s=0.0)


def ok_transport(reply="hi there"):
    def transport(url, body, headers, timeout_s):
        assert url.endswith("/chat/completions")
        assert body["messages"][0]["content"] == "hello"
        return 200, {"choices": [{"message": {"content": reply}}]}

    return transport


def test_complete_returns_first_choice_content():
    assert complete(REQ, CFG, transport=ok_transport(), sleep=lambda s: None) == "hi there"


def test_complete_retries_then_times_out():
    calls = []
    naps = []

    def failing(url, body, headers, timeout_s):
        calls.append(1)
        raise requests.ConnectionError("unreachable")

    with pytest.raises(CompletionTimeout):
        complete(REQ, CFG, transport=failing, sleep=naps.append)
    assert len(calls) == 3  # initial attempt + max_retries
    # exponential backoff, bounded by backoff_base * (2^retries - 1)
    assert naps == [0.0, 0.0]
    cfg = BackendConfig("http://example.invalid/v1", max_retries=2, backoff_base_s=0.5)
    naps.clear()
    with pytest.raises(CompletionTimeout):
        complete(REQ, cfg, transport=failing, sleep=naps.append)
    assert naps == [0.5, 1.0]


def test_complete_retries_transient_status_then_raises():
    calls = []

    def flaky(url, body, headers, timeout_s):
        calls.append(1)
        return 503, {}

    with pytest.raises(HttpStatusError) as excinfo:
        complete(REQ, CFG, transport=flaky, sleep=lambda s: None)
    assert excinfo.value.status == 503
    assert len(calls) == 3


def test_complete_fatal_status_does_not_retry():
    calls = []

    def denied(url, body, headers, timeout_s):
        calls.append(1)
        return 401, {"error": "no"}

    with pytest.raises(HttpStatusError) as excinfo:
        complete(REQ, CFG, transport=denied, sleep=lambda s: None)
    assert excinfo.value.status == 401
    assert len(calls) == 1


def test_complete_malformed_response():
    def hollow(url, body, headers, timeout_s):
        return 200, {"choices": [{"message": {}}]}

    with pytest.raises(MalformedResponse):
        complete(REQ, CFG, transport=hollow, sleep=lambda s: None)


def test_request_digest_is_stable_and_distinct():
    again = ChatRequest("test-model", (("user", "hello"),), temperature=0.0, max_tokens=16)
    assert REQ.digest() == again.digest()
    other = ChatRequest("test-model", (("user", "bye"),), temperature=0.0, max_tokens=16)
    assert REQ.digest() != other.digest()


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest("m", ())
    with pytest.raises(ValueError):
        ChatRequest("m", (("assistant", "hi"),))
    with pytest.raises(ValueError):
        ChatRequest("m", (("user", "hi"),), temperature=-1)


def test_backend_config_validation():
    with pytest.raises(ValueError):
        BackendConfig("http://x", timeout_s=0)
    with pytest.raises(ValueError):
        BackendConfig("http://x", max_retries=-1)


def test_digest_keyed_mock_returns_scripted_text():
    other = ChatRequest("test-model", (("user", "bye"),), temperature=0.0, max_tokens=16)
    script = {REQ.digest(): "first reply", other.digest(): "second reply"}
    backend = ScriptedBackend(lambda req: script[req.digest()])
    assert backend.complete(REQ) == "first reply"
    assert backend.complete(other) == "second reply"


# ---------------------------------------------------------------------------
# cassettes


def test_record_then_replay_round_trip(tmp_path):
    path = tmp_path / "cassette.jsonl"
    scripted = ScriptedBackend(lambda req: f"echo:{req.messages[-1][1]}")
    recorder = RecordBackend(scripted, Cassette(path))
    assert recorder.complete(REQ) == "echo:hello"

    replayer = ReplayBackend(Cassette(path))
    assert replayer.complete(REQ) == "echo:hello"


def test_replay_miss_raises(tmp_path):
    path = tmp_path / "cassette.jsonl"
    path.write_text("")
    replayer = ReplayBackend(Cassette(path))
    with pytest.raises(CassetteMiss):
        replayer.complete(REQ)


def test_empty_cassette_file_is_valid(tmp_path):
    path = tmp_path / "cassette.jsonl"
    path.write_text("")
    assert len(Cassette(path)) == 0


def test_corrupt_cassette_line_reports_position(tmp_path):
    path = tmp_path / "cassette.jsonl"
    path.write_text('{"digest": "d", "response": "r"}\nnot json\n')
    with pytest.raises(ValueError, match=":2"):
        Cassette(path)


def test_record_backend_serves_cached_response(tmp_path):
    calls = []

    def fn(req):
        calls.append(1)
        return "once"

    recorder = RecordBackend(ScriptedBackend(fn), Cassette(tmp_path / "c.jsonl"))
    assert recorder.complete(REQ) == "once"
    assert recorder.complete(REQ) == "once"
    assert len(calls) == 1


def test_replay_determinism_across_instances(tmp_path):
    path = tmp_path / "cassette.jsonl"
    requests_batch = [
        ChatRequest("m", (("user", f"q{i}"),), temperature=0.0, max_tokens=8) for i in range(5)
    ]
    recorder = RecordBackend(ScriptedBackend(lambda r: r.digest()[:8]), Cassette(path))
    first = [recorder.complete(r) for r in requests_batch]
    replayer = ReplayBackend(Cassette(path))
    second = [replayer.complete(r) for r in requests_batch]
    assert first == second
