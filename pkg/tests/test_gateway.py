import json
import logging

import httpx
import pytest

from graphprompt.gateway import (
    AuthError,
    CallResult,
    HttpBackend,
    LlmConfig,
    LlmError,
    LlmTimeoutError,
    MalformedResponseError,
    RateLimitedError,
    RateLimiter,
    TransientError,
    complete,
    complete_many,
)
from stub_server import StubServer, reply_body

SECRET = "sk-test-not-a-real-key-0123456789"
MESSAGES = [{"role": "system", "content": "s"}, {"role": "user", "content": "u"}]


@pytest.fixture
def key(monkeypatch):
    monkeypatch.setenv("LLM_API_KEY", SECRET)


def cfg(server, **kw):
    base = dict(endpoint=server.url, model="stub-model", backoff_base=0.01, max_attempts=3, timeout=5.0, rate_limit_per_minute=1e6)
    base.update(kw)
    return LlmConfig(**base)


def test_success_wire_format(key):
    with StubServer() as srv:
        text = complete(MESSAGES, cfg(srv, temperature=0.3, max_tokens=7))
    assert text == "<answer>A</answer>"
    assert srv.requests == [{"model": "stub-model", "messages": MESSAGES, "temperature": 0.3, "max_tokens": 7}]
    assert srv.headers[0]["Authorization"] == f"Bearer {SECRET}"


def test_missing_credential_makes_no_call():
    with StubServer() as srv:
        with pytest.raises(AuthError, match="LLM_API_KEY"):
            complete(MESSAGES, cfg(srv))
        with pytest.raises(AuthError):
            HttpBackend(cfg(srv)).check()
    assert srv.requests == []


def test_custom_credential_variable(monkeypatch):
    monkeypatch.setenv("MY_KEY", "abc")
    with StubServer() as srv:
        complete(MESSAGES, cfg(srv, api_key_env="MY_KEY"))
    assert srv.headers[0]["Authorization"] == "Bearer abc"


def test_429_honours_retry_after(key):
    sleeps = []
    script = [(429, {"Retry-After": "0.5"}, b"{}", 0), (200, {}, reply_body("ok"), 0)]
    with StubServer(script) as srv:
        assert complete(MESSAGES, cfg(srv), sleep=sleeps.append) == "ok"
    assert len(srv.requests) == 2
    assert sleeps == [0.5]


def test_exponential_backoff_then_give_up(key):
    sleeps = []
    with StubServer(default=lambda req: (503, {}, b"down", 0)) as srv:
        with pytest.raises(TransientError):
            complete(MESSAGES, cfg(srv, max_attempts=4, backoff_base=0.1), sleep=sleeps.append)
    assert len(srv.requests) == 4
    assert sleeps == pytest.approx([0.1, 0.2, 0.4])


def test_rate_limited_error_after_budget(key):
    with StubServer(default=lambda req: (429, {}, b"", 0)) as srv:
        with pytest.raises(RateLimitedError):
            complete(MESSAGES, cfg(srv, max_attempts=2), sleep=lambda s: None)


def test_auth_rejection_is_not_retried(key):
    with StubServer(default=lambda req: (401, {}, b"", 0)) as srv:
        with pytest.raises(AuthError):
            complete(MESSAGES, cfg(srv), sleep=lambda s: None)
    assert len(srv.requests) == 1


def test_client_error_is_not_retried(key):
    with StubServer(default=lambda req: (400, {}, b"", 0)) as srv:
        with pytest.raises(LlmError, match="400"):
            complete(MESSAGES, cfg(srv), sleep=lambda s: None)
    assert len(srv.requests) == 1


@pytest.mark.parametrize("payload", [b"not json", b"{}", json.dumps({"choices": [{"message": {"content": 3}}]}).encode()])
def test_malformed_response(key, payload):
    with StubServer(default=lambda req: (200, {}, payload, 0)) as srv:
        with pytest.raises(MalformedResponseError):
            complete(MESSAGES, cfg(srv), sleep=lambda s: None)


def test_timeout(key):
    with StubServer(default=lambda req: (200, {}, reply_body("late"), 1.0)) as srv:
        with pytest.raises(LlmTimeoutError):
            complete(MESSAGES, cfg(srv, timeout=0.1, max_attempts=1))


def test_transport_error_is_transient(key):
    config = LlmConfig(endpoint="http://127.0.0.1:9/none", max_attempts=2, backoff_base=0)
    with pytest.raises(TransientError):
        complete(MESSAGES, config, sleep=lambda s: None)


def test_rate_limiter_spacing():
    now = [0.0]
    slept = []

    def sleep(s):
        slept.append(s)
        now[0] += s

    rl = RateLimiter(120, clock=lambda: now[0], sleep=sleep)
    stamps = []
    for _ in range(4):
        rl.acquire()
        stamps.append(now[0])
    assert stamps == [0.0, 0.5, 1.0, 1.5]
    with pytest.raises(ValueError):
        RateLimiter(0)


def test_rate_limiter_against_stub(key):
    with StubServer() as srv:
        backend = HttpBackend(cfg(srv, rate_limit_per_minute=600))
        import time

        start = time.monotonic()
        for _ in range(4):
            backend.complete(MESSAGES)
        elapsed = time.monotonic() - start
        backend.close()
    # 4 calls at 10/s need at least 3 gaps of 0.1s
    assert elapsed >= 0.29


@pytest.mark.parametrize("parallelism", [1, 2, 3])
def test_parallelism_bound_and_order(key, parallelism):
    def echo(req):
        return 200, {}, reply_body(req["messages"][-1]["content"]), 0.05

    with StubServer(default=echo) as srv:
        backend = HttpBackend(cfg(srv, rate_limit_per_minute=1e6))
        reqs = [[{"role": "user", "content": str(i)}] for i in range(9)]
        out = complete_many(backend, reqs, parallelism)
        backend.close()
    assert [r.text for r in out] == [str(i) for i in range(9)]
    assert srv.max_in_flight <= parallelism
    if parallelism > 1:
        assert srv.max_in_flight >= 2


def test_complete_many_records_errors_but_propagates_auth():
    class Flaky:
        deterministic = True

        def complete(self, messages):
            if messages[0]["content"] == "bad":
                raise TransientError("boom")
            return "fine"

    out = complete_many(Flaky(), [[{"role": "user", "content": "ok"}], [{"role": "user", "content": "bad"}]], 2)
    assert out == [CallResult("fine", None, 0.0), CallResult(None, "TransientError: boom", 0.0)]

    class Locked:
        def complete(self, messages):
            raise AuthError("no key")

    with pytest.raises(AuthError):
        complete_many(Locked(), [[{"role": "user", "content": "x"}]] * 3, 2)


def test_credential_never_logged_or_shown(key, caplog):
    caplog.set_level(logging.DEBUG)
    script = [(429, {}, b"", 0), (500, {}, b"", 0)]
    with StubServer(script) as srv:
        backend = HttpBackend(cfg(srv, backoff_base=0))
        backend.complete(MESSAGES)
        backend.close()
    assert "retrying" in caplog.text
    assert SECRET not in caplog.text
    assert SECRET not in repr(backend)
    assert SECRET not in backend.config.model_dump_json()


def test_config_validation():
    with pytest.raises(Exception):
        LlmConfig(parallelism=0)
    assert isinstance(LlmConfig().timeout, float)
