"""Pluggable generation backends: remote chat-completion, mock, replay.

All backends expose the same generate(request) -> GenerationResult surface,
so the server and CLI treat a live inference endpoint, a deterministic
offline stub, and a recorded-response store interchangeably.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import httpx

from .ingest import Language
from .prompts import extract_problem_description

BODY_EXCERPT_CHARS = 200


class BackendError(Exception):
    """Base class for generation failures."""


class BackendTimeout(BackendError):
    """No response arrived within the configured timeout."""


class BackendProtocolError(BackendError):
    """The endpoint answered, but not with a usable completion."""

    def __init__(self, status_code: int, body: str):
        self.status_code = status_code
        self.body_excerpt = body[:BODY_EXCERPT_CHARS]
        super().__init__(f"backend returned {status_code}: {self.body_excerpt}")


class ReplayMissError(BackendError):
    """The replay store has no entry for this prompt."""


class BackendConfigError(ValueError):
    pass


class BackendKind(str, Enum):
    REMOTE = "remote"
    MOCK = "mock"
    REPLAY = "replay"


@dataclass(frozen=True)
class BackendConfig:
    kind: BackendKind
    model_id: str
    endpoint_url: str | None = None
    api_key: str | None = None
    replay_dir: str | None = None
    timeout: float = 30.0
    max_output_tokens: int = 512
    # Greedy decoding by default so repeated runs are comparable.
    temperature: float = 0.0
    retry_attempts: int = 3
    retry_backoff: float = 0.5
    max_concurrency: int = 4

    def validate(self) -> None:
        if self.kind is BackendKind.REMOTE and not self.endpoint_url:
            raise BackendConfigError("remote backend requires endpoint_url")
        if self.kind is BackendKind.REPLAY and not self.replay_dir:
            raise BackendConfigError("replay backend requires replay_dir")
        if self.temperature < 0:
            raise BackendConfigError("temperature must be >= 0")
        if self.timeout <= 0:
            raise BackendConfigError("timeout must be positive")
        if self.retry_attempts < 1:
            raise BackendConfigError("retry_attempts must be >= 1")
        if self.max_concurrency < 1:
            raise BackendConfigError("max_concurrency must be >= 1")


@dataclass(frozen=True)
class GenerationRequest:
    prompt: str
    language: Language
    request_id: str = field(default_factory=lambda: uuid.uuid4().hex)

    def __post_init__(self):
        if not self.prompt.strip():
            raise ValueError("prompt is empty")


@dataclass(frozen=True)
class TokenCounts:
    prompt: int
    completion: int


@dataclass(frozen=True)
class GenerationResult:
    raw_text: str
    code: str
    model_id: str
    latency: float
    token_counts: TokenCounts | None = None


_FENCE_RE = re.compile(r"```[^\n]*\n(.*?)\n?```", re.DOTALL)
_CODE_MARKER = "Code:"


def _trim_blank_lines(text: str) -> str:
    lines = text.split("\n")
    start, end = 0, len(lines)
    while start < end and not lines[start].strip():
        start += 1
    while end > start and not lines[end - 1].strip():
        end -= 1
    return "\n".join(lines[start:end])


def _extract_once(text: str) -> str:
    match = _FENCE_RE.search(text)
    if match is not None:
        return _trim_blank_lines(match.group(1))
    if text.startswith(_CODE_MARKER):
        return _trim_blank_lines(text[len(_CODE_MARKER):].lstrip(" "))
    return text


def extract_code(raw_text: str) -> str:
    """Strip completion wrapping from model output.

    Applies the first matching rule (first fenced block, then a leading
    "Code:" marker) repeatedly until the text is stable, which makes the
    function idempotent even when wrappers nest.
    """
    text = _trim_blank_lines(raw_text)
    while True:
        reduced = _extract_once(text)
        if reduced == text:
            return text
        text = reduced


_MOCK_STUBS = {
    Language.JAVA: (
        "// {issue}\n"
        "public class Example {{\n"
        "    public static void main(String[] args) {{\n"
        "        // TODO: reproduce the issue described above\n"
        "    }}\n"
        "}}"
    ),
    Language.PYTHON: (
        "# {issue}\n"
        "def example():\n"
        "    # TODO: reproduce the issue described above\n"
        "    pass"
    ),
}


def mock_completion(prompt: str, language: Language) -> str:
    """The documented mock rule: a language-appropriate stub that echoes
    the first line of the problem description."""
    description = extract_problem_description(prompt)
    first_line = next(
        (line.strip() for line in description.splitlines() if line.strip()),
        "(no description)",
    )
    stub = _MOCK_STUBS[language].format(issue=first_line)
    return f"```{language.value}\n{stub}\n```"


class MockBackend:
    """Deterministic offline backend; output is a pure function of the request."""

    def __init__(self, config: BackendConfig):
        config.validate()
        self._config = config

    def generate(self, request: GenerationRequest) -> GenerationResult:
        started = time.monotonic()
        raw = mock_completion(request.prompt, request.language)
        return GenerationResult(
            raw_text=raw,
            code=extract_code(raw),
            model_id=self._config.model_id,
            latency=time.monotonic() - started,
            token_counts=TokenCounts(len(request.prompt.split()), len(raw.split())),
        )

    def close(self) -> None:
        pass


class ReplayStore:
    """Content-addressed store of recorded completions, keyed by prompt digest."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key(prompt: str) -> str:
        return hashlib.sha256(prompt.encode("utf-8")).hexdigest()

    def path_for(self, prompt: str) -> Path:
        return self.root / f"{self.key(prompt)}.json"

    def put(self, prompt: str, result: GenerationResult) -> Path:
        entry = {
            "prompt_sha256": self.key(prompt),
            "model_id": result.model_id,
            "raw_text": result.raw_text,
            "code": result.code,
            "token_counts": (
                [result.token_counts.prompt, result.token_counts.completion]
                if result.token_counts
                else None
            ),
        }
        path = self.path_for(prompt)
        path.write_text(json.dumps(entry, indent=2) + "\n", encoding="utf-8")
        return path

    def get(self, prompt: str) -> dict | None:
        path = self.path_for(prompt)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))


class ReplayBackend:
    """Serves previously recorded completions; misses are explicit errors."""

    def __init__(self, config: BackendConfig):
        config.validate()
        self._config = config
        self.store = ReplayStore(config.replay_dir)

    def generate(self, request: GenerationRequest) -> GenerationResult:
        started = time.monotonic()
        entry = self.store.get(request.prompt)
        if entry is None:
            raise ReplayMissError(
                f"no recorded response for prompt digest {ReplayStore.key(request.prompt)}"
            )
        counts = entry.get("token_counts")
        return GenerationResult(
            raw_text=entry["raw_text"],
            code=entry["code"],
            model_id=entry["model_id"],
            latency=time.monotonic() - started,
            token_counts=TokenCounts(*counts) if counts else None,
        )

    def close(self) -> None:
        pass


class RecordingBackend:
    """Wraps another backend and records every exchange into a replay store."""

    def __init__(self, inner, store: ReplayStore):
        self._inner = inner
        self.store = store

    def generate(self, request: GenerationRequest) -> GenerationResult:
        result = self._inner.generate(request)
        self.store.put(request.prompt, result)
        return result

    def close(self) -> None:
        self._inner.close()


class RemoteBackend:
    """Chat-completion client with bounded retries and concurrency."""

    def __init__(self, config: BackendConfig, client: httpx.Client | None = None):
        config.validate()
        self._config = config
        self._client = client or httpx.Client(timeout=config.timeout)
        self._owns_client = client is None
        self._slots = threading.BoundedSemaphore(config.max_concurrency)
        self._sleep = time.sleep

    def _headers(self, request: GenerationRequest) -> dict[str, str]:
        headers = {"X-Request-Id": request.request_id}
        if self._config.api_key:
            headers["Authorization"] = f"Bearer {self._config.api_key}"
        return headers

    def _payload(self, request: GenerationRequest) -> dict:
        return {
            "model": self._config.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": self._config.temperature,
            "max_tokens": self._config.max_output_tokens,
        }

    def generate(self, request: GenerationRequest) -> GenerationResult:
        config = self._config
        started = time.monotonic()
        last_error: BackendError | None = None
        for attempt in range(config.retry_attempts):
            if attempt:
                self._sleep(config.retry_backoff * (2 ** (attempt - 1)))
            try:
                with self._slots:
                    response = self._client.post(
                        config.endpoint_url,
                        json=self._payload(request),
                        headers=self._headers(request),
                    )
            except httpx.TimeoutException:
                last_error = BackendTimeout(
                    f"no response within {config.timeout}s "
                    f"(attempt {attempt + 1}/{config.retry_attempts})"
                )
                continue
            except httpx.HTTPError as exc:
                last_error = BackendError(f"transport failure: {exc}")
                continue
            if response.status_code >= 500:
                # Server-side trouble is worth retrying.
                last_error = BackendProtocolError(response.status_code, response.text)
                continue
            if not (200 <= response.status_code < 300):
                raise BackendProtocolError(response.status_code, response.text)
            return self._parse(response, started)
        assert last_error is not None
        raise last_error

    def _parse(self, response: httpx.Response, started: float) -> GenerationResult:
        try:
            data = response.json()
            raw = data["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError):
            raise BackendProtocolError(response.status_code, response.text) from None
        usage = data.get("usage") or {}
        counts = None
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            counts = TokenCounts(usage["prompt_tokens"], usage["completion_tokens"])
        return GenerationResult(
            raw_text=raw,
            code=extract_code(raw),
            model_id=data.get("model", self._config.model_id),
            latency=time.monotonic() - started,
            token_counts=counts,
        )

    def close(self) -> None:
        if self._owns_client:
            self._client.close()


def open_backend(config: BackendConfig):
    config.validate()
    if config.kind is BackendKind.MOCK:
        return MockBackend(config)
    if config.kind is BackendKind.REPLAY:
        return ReplayBackend(config)
    return RemoteBackend(config)


def generate(config: BackendConfig, request: GenerationRequest) -> GenerationResult:
    """One-shot convenience wrapper over open_backend."""
    backend = open_backend(config)
    try:
        return backend.generate(request)
    finally:
        backend.close()
