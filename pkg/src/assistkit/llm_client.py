"""Chat-completions backend with retry, plus cassette record/replay.

Every generation and judging step in the pipeline goes through a backend
object exposing ``complete(request) -> str``. The HTTP backend speaks the
standard chat-completions JSON shape; cassettes key responses by a stable
request digest so whole pipeline runs replay deterministically offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import requests

TRANSIENT_STATUSES = frozenset({408, 429, 500, 502, 503, 504})


class ClientError(Exception):
    """Base class for backend failures."""


class CompletionTimeout(ClientError):
    """Endpoint unreachable or too slow after all retries."""


class HttpStatusError(ClientError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"HTTP {status}" + (f": {detail}" if detail else ""))
        self.status = status


class MalformedResponse(ClientError):
    """Response body does not carry choices[0].message.content."""


class CassetteMiss(ClientError):
    """Replay was asked for a request the cassette has never seen."""


@dataclass(frozen=True)
class ChatRequest:
    """One chat-completions call; messages are (role, content) pairs."""

    model_id: str
    messages: tuple[tuple[str, str], ...]
    temperature: float = 0.0
    max_tokens: int = 2048
    seed: int | None = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("messages must be non-empty")
        if self.messages[0][0] not in ("system", "user"):
            raise ValueError("first message role must be system or user")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")

    def digest(self) -> str:
        """Stable hash identifying this request for cassette keying."""
        canonical = json.dumps(
            {
                "model": self.model_id,
                "messages": [[r, c] for r, c in self.messages],
                "temperature": self.temperature,
                "max_tokens": self.max_tokens,
                "seed": self.seed,
            },
            sort_keys=True,
            separators=(",", ":"),
        )
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def to_wire(self) -> dict:
        body = {
            "model": self.model_id,
            "messages": [{"role": r, "content": c} for r, c in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        if self.seed is not None:
            body["seed"] = self.seed
        return body


@dataclass(frozen=True)
class BackendConfig:
    base_url: str
    api_key_env: str = "ASSISTKIT_API_KEY"
    timeout_s: float = 60.0
    max_retries: int = 2
    backoff_base_s: float = 0.5

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


Transport = Callable[[str, dict, dict, float], tuple[int, dict]]


def _http_transport(url: str, body: dict, headers: dict, timeout_s: float) -> tuple[int, dict]:
    response = requests.post(url, json=body, headers=headers, timeout=timeout_s)
    try:
        parsed = response.json()
    except ValueError:
        parsed = {}
    return response.status_code, parsed


def _extract_content(payload: dict) -> str:
    try:
        content = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"no choices[0].message.content in response: {exc}") from exc
    if not isinstance(content, str):
        raise MalformedResponse(f"content is {type(content).__name__}, not text")
    return content


def complete(
    req: ChatRequest,
    cfg: BackendConfig,
    transport: Transport | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> str:
    """Call the endpoint, retrying transient failures with exponential backoff."""
    transport = transport or _http_transport
    url = cfg.base_url.rstrip("/") + "/chat/completions"
    headers = {"Content-Type": "application/json"}
    api_key = os.environ.get(cfg.api_key_env, "")
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"

    last_error: ClientError | None = None
    for attempt in range(cfg.max_retries + 1):
        try:
            status, body = transport(url, req.to_wire(), headers, cfg.timeout_s)
        except (requests.Timeout, requests.ConnectionError, TimeoutError, ConnectionError) as exc:
            last_error = CompletionTimeout(str(exc))
        else:
            if status == 200:
                return _extract_content(body)
            if status in TRANSIENT_STATUSES:
                last_error = HttpStatusError(status, "transient")
            else:
                raise HttpStatusError(status, str(body)[:200])
        if attempt < cfg.max_retries:
            sleep(cfg.backoff_base_s * (2**attempt))
    assert last_error is not None
    raise last_error


class ChatBackend(Protocol):
    def complete(self, req: ChatRequest) -> str: ...


class HttpBackend:
    """Live backend; shareable across threads."""

    def __init__(self, cfg: BackendConfig, transport: Transport | None = None):
        self.cfg = cfg
        self._transport = transport

    def complete(self, req: ChatRequest) -> str:
        return complete(req, self.cfg, transport=self._transport)


class Cassette:
    """JSONL store of (request digest -> response text). Append-only."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path.exists():
            for lineno, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    self._entries[record["digest"]] = record["response"]
                except (ValueError, KeyError) as exc:
                    raise ValueError(f"{self.path}:{lineno}: bad cassette line: {exc}") from exc

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, digest: str) -> str | None:
        with self._lock:
            return self._entries.get(digest)

    def put(self, digest: str, response: str) -> None:
        with self._lock:
            if digest in self._entries:
                return
            self._entries[digest] = response
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(json.dumps({"digest": digest, "response": response}) + "\n")


class ReplayBackend:
    """Serve responses exclusively from a cassette."""

    def __init__(self, cassette: Cassette):
        self.cassette = cassette

    def complete(self, req: ChatRequest) -> str:
        response = self.cassette.get(req.digest())
        if response is None:
            raise CassetteMiss(f"no cassette entry for digest {req.digest()[:12]}...")
        return response


class RecordBackend:
    """Call the inner backend and persist responses; replays known digests."""

    def __init__(self, inner: ChatBackend, cassette: Cassette):
        self.inner = inner
        self.cassette = cassette

    def complete(self, req: ChatRequest) -> str:
        digest = req.digest()
        cached = self.cassette.get(digest)
        if cached is not None:
            return cached
        response = self.inner.complete(req)
        self.cassette.put(digest, response)
        return response


class ScriptedBackend:
    """Adapter turning a plain function into a backend (tests, mocks)."""

    def __init__(self, fn: Callable[[ChatRequest], str]):
        self._fn = fn

    def complete(self, req: ChatRequest) -> str:
        return self._fn(req)
