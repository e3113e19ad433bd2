"""Chat-completion gateway: HTTP client with retries and rate limiting, and a bounded worker pool.

The wire format is the OpenAI-style chat-completions shape::

    POST <endpoint>  {"model": ..., "messages": [...], "temperature": ..., "max_tokens": ...}
    -> {"choices": [{"message": {"content": "..."}}]}
"""

from __future__ import annotations

import logging
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import httpx
from pydantic import BaseModel, Field

log = logging.getLogger(__name__)

Messages = Sequence[dict]


class LlmError(RuntimeError):
    retryable = False


class AuthError(LlmError):
    pass


class RateLimitedError(LlmError):
    retryable = True


class LlmTimeoutError(LlmError):
    retryable = True


class TransientError(LlmError):
    retryable = True


class MalformedResponseError(LlmError):
    pass


class LlmConfig(BaseModel):
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-3.5-turbo"
    temperature: float = Field(0.0, ge=0)
    max_tokens: int = Field(512, ge=1)
    timeout: float = Field(60.0, gt=0)
    max_attempts: int = Field(5, ge=1)
    backoff_base: float = Field(1.0, ge=0)
    rate_limit_per_minute: float = Field(60.0, gt=0)
    parallelism: int = Field(4, ge=1)
    api_key_env: str = "LLM_API_KEY"


class Backend(Protocol):
    # deterministic backends report zero latency so reports stay byte-identical
    deterministic: bool

    def complete(self, messages: Messages) -> str: ...


class RateLimiter:
    """Spaces successive acquisitions at least ``60 / per_minute`` seconds apart."""

    def __init__(self, per_minute: float, clock: Callable[[], float] = time.monotonic, sleep=time.sleep):
        if per_minute <= 0:
            raise ValueError("rate limit must be positive")
        self.interval = 60.0 / per_minute
        self._clock = clock
        self._sleep = sleep
        self._next = 0.0
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            slot = max(now, self._next)
            self._next = slot + self.interval
        if slot > now:
            self._sleep(slot - now)


def resolve_credential(config: LlmConfig) -> str:
    key = os.environ.get(config.api_key_env)
    if not key:
        raise AuthError(f"credential environment variable {config.api_key_env} is not set")
    return key


def _retry_after(response: httpx.Response) -> float | None:
    try:
        return float(response.headers["retry-after"])
    except (KeyError, ValueError):
        return None


def _extract_content(response: httpx.Response) -> str:
    try:
        content = response.json()["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(f"unexpected response body: {exc!r}") from None
    if not isinstance(content, str):
        raise MalformedResponseError("message content is not a string")
    return content


def complete(
    messages: Messages,
    config: LlmConfig,
    client: httpx.Client | None = None,
    limiter: RateLimiter | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """POST ``messages`` and return the first choice's content, retrying transient failures."""
    key = resolve_credential(config)
    own_client = client is None
    client = client or httpx.Client(timeout=config.timeout)
    body = {
        "model": config.model,
        "messages": list(messages),
        "temperature": config.temperature,
        "max_tokens": config.max_tokens,
    }
    headers = {"Authorization": f"Bearer {key}"}
    try:
        last: LlmError | None = None
        for attempt in range(1, config.max_attempts + 1):
            if limiter is not None:
                limiter.acquire()
            wait = config.backoff_base * 2 ** (attempt - 1)
            try:
                response = client.post(config.endpoint, json=body, headers=headers, timeout=config.timeout)
            except httpx.TimeoutException:
                last = LlmTimeoutError(f"request timed out after {config.timeout}s")
            except httpx.TransportError as exc:
                last = TransientError(f"transport error: {type(exc).__name__}")
            else:
                status = response.status_code
                if status in (401, 403):
                    raise AuthError(f"endpoint rejected credential (HTTP {status})")
                if status == 429:
                    last = RateLimitedError("rate limited (HTTP 429)")
                    wait = max(wait, _retry_after(response) or 0.0)
                elif status >= 500:
                    last = TransientError(f"server error (HTTP {status})")
                elif status >= 400:
                    raise LlmError(f"request rejected (HTTP {status})")
                else:
                    return _extract_content(response)
            if attempt < config.max_attempts:
                log.warning("%s; attempt %d/%d, retrying in %.2fs", last, attempt, config.max_attempts, wait)
                sleep(wait)
        assert last is not None
        raise last
    finally:
        if own_client:
            client.close()


class HttpBackend:
    deterministic = False

    def __init__(self, config: LlmConfig, client: httpx.Client | None = None):
        self.config = config
        self.limiter = RateLimiter(config.rate_limit_per_minute)
        self._client = client or httpx.Client(timeout=config.timeout)

    def check(self) -> None:
        resolve_credential(self.config)

    def complete(self, messages: Messages) -> str:
        return complete(messages, self.config, client=self._client, limiter=self.limiter)

    def close(self) -> None:
        self._client.close()

    def __repr__(self) -> str:
        return f"HttpBackend(endpoint={self.config.endpoint!r}, model={self.config.model!r})"


@dataclass
class CallResult:
    text: str | None
    error: str | None
    latency_ms: float


def _timed_call(backend: Backend, messages: Messages) -> CallResult:
    start = time.perf_counter()
    try:
        text, error = backend.complete(messages), None
    except AuthError:
        raise
    except (LlmError, OSError) as exc:
        # transport and service failures become per-request error records; anything else is a bug or misconfiguration
        text, error = None, f"{type(exc).__name__}: {exc}"
    latency = 0.0 if getattr(backend, "deterministic", False) else (time.perf_counter() - start) * 1000
    return CallResult(text, error, round(latency, 3))


def complete_many(backend: Backend, requests: Sequence[Messages], parallelism: int = 1) -> list[CallResult]:
    """Run ``requests`` through ``backend`` with at most ``parallelism`` in flight; results keep input order."""
    if parallelism <= 1 or len(requests) <= 1:
        return [_timed_call(backend, m) for m in requests]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(lambda m: _timed_call(backend, m), requests))
