"""HTTP service: problem description in, generated snippet out.

The request pipeline is validate, build prompt, call the configured
backend, extract code, respond.  Validation is done by hand so error
statuses and machine-readable codes stay exactly as published.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from datetime import datetime, timezone
from pathlib import Path

import httpx
from fastapi import FastAPI, Request
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .backends import (
    BackendConfig,
    BackendError,
    BackendKind,
    BackendTimeout,
    GenerationRequest,
    open_backend,
)
from .config import PipelineConfig
from .dataset import load_training_records
from .ingest import Language
from .prompts import (
    DEFAULT_MAX_EXEMPLARS,
    PromptError,
    PromptSpec,
    render_prompt,
    select_exemplars,
)

logger = logging.getLogger("gencnippet.server")

LOCALHOST_ORIGIN_REGEX = r"https?://(localhost|127\.0\.0\.1)(:\d+)?"
HEALTH_CACHE_SECONDS = 30.0

CONFIG_RESPONSE_SCHEMA = {
    "type": "object",
    "properties": {
        "backend_kind": {"type": "string", "enum": ["remote", "mock", "replay"]},
        "model_id": {"type": "string"},
        "endpoint_url": {"type": ["string", "null"]},
        "temperature": {"type": "number", "minimum": 0},
        "max_output_tokens": {"type": "integer", "minimum": 1},
        "timeout": {"type": "number", "exclusiveMinimum": 0},
        "retry_attempts": {"type": "integer", "minimum": 1},
        "prompt_profile": {"type": "string", "enum": ["instruct", "finetuned"]},
        "shots": {"type": "integer", "minimum": 0},
        "languages": {"type": "array", "items": {"type": "string"}},
        "allowed_origins": {"type": "array", "items": {"type": "string"}},
        "rate_limit_per_minute": {"type": "integer", "minimum": 0},
        "max_body_bytes": {"type": "integer", "minimum": 1},
        "journal_enabled": {"type": "boolean"},
    },
    "required": [
        "backend_kind",
        "model_id",
        "endpoint_url",
        "temperature",
        "max_output_tokens",
        "timeout",
        "retry_attempts",
        "prompt_profile",
        "shots",
        "languages",
        "allowed_origins",
        "rate_limit_per_minute",
        "max_body_bytes",
        "journal_enabled",
    ],
    "additionalProperties": False,
}


class TokenBucket:
    def __init__(self, capacity: float, refill_per_second: float, clock=time.monotonic):
        self.capacity = capacity
        self.tokens = capacity
        self.refill = refill_per_second
        self.clock = clock
        self.updated = clock()
        self.lock = threading.Lock()

    def try_acquire(self) -> bool:
        with self.lock:
            now = self.clock()
            self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.refill)
            self.updated = now
            if self.tokens >= 1.0:
                self.tokens -= 1.0
                return True
            return False


class RateLimiter:
    """Token bucket per client address; a limit of 0 disables limiting."""

    def __init__(self, per_minute: int, clock=time.monotonic):
        self.per_minute = per_minute
        self.clock = clock
        self._buckets: dict[str, TokenBucket] = {}
        self._lock = threading.Lock()

    def allow(self, client: str) -> bool:
        if self.per_minute <= 0:
            return True
        with self._lock:
            bucket = self._buckets.get(client)
            if bucket is None:
                bucket = TokenBucket(self.per_minute, self.per_minute / 60.0, self.clock)
                self._buckets[client] = bucket
        return bucket.try_acquire()


class BackendHealth:
    """Lazy reachability probe for remote backends, cached between checks."""

    def __init__(
        self,
        config: BackendConfig,
        cache_seconds: float = HEALTH_CACHE_SECONDS,
        clock=time.monotonic,
        prober=None,
    ):
        self._config = config
        self._cache_seconds = cache_seconds
        self._clock = clock
        self._prober = prober or self._probe_remote
        self._cached: bool | None = None
        self._checked_at = 0.0
        self._lock = threading.Lock()

    def _probe_remote(self) -> bool:
        try:
            httpx.request(
                "GET",
                self._config.endpoint_url,
                timeout=min(self._config.timeout, 2.0),
            )
            return True  # any HTTP answer means the host is reachable
        except httpx.HTTPError:
            return False

    def check(self) -> bool:
        if self._config.kind is not BackendKind.REMOTE:
            return True
        with self._lock:
            now = self._clock()
            if self._cached is not None and now - self._checked_at < self._cache_seconds:
                return self._cached
            self._cached = self._prober()
            self._checked_at = now
            return self._cached


class RequestJournal:
    """Opt-in JSONL journal of served generations."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def record(self, entry: dict) -> None:
        line = json.dumps(entry) + "\n"
        with self._lock:
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(line)


def _error(status: int, code: str, message: str, field: str | None = None) -> JSONResponse:
    body = {"error": {"code": code, "message": message}}
    if field is not None:
        body["error"]["field"] = field
    return JSONResponse(body, status_code=status)


def sanitized_config(config: PipelineConfig) -> dict:
    """The public view of the effective configuration; credentials removed."""
    backend = config.backend
    server = config.server
    return {
        "backend_kind": backend.kind.value,
        "model_id": backend.model_id,
        "endpoint_url": backend.endpoint_url,
        "temperature": backend.temperature,
        "max_output_tokens": backend.max_output_tokens,
        "timeout": backend.timeout,
        "retry_attempts": backend.retry_attempts,
        "prompt_profile": server.prompt_profile,
        "shots": server.shots,
        "languages": list(config.languages),
        "allowed_origins": list(server.allowed_origins),
        "rate_limit_per_minute": server.rate_limit_per_minute,
        "max_body_bytes": server.max_body_bytes,
        "journal_enabled": server.journal_path is not None,
    }


def create_app(
    config: PipelineConfig | None = None,
    backend=None,
    health: BackendHealth | None = None,
    rate_limiter: RateLimiter | None = None,
) -> FastAPI:
    config = config or PipelineConfig()
    config.validate()
    backend = backend if backend is not None else open_backend(config.backend)
    health = health or BackendHealth(config.backend)
    rate_limiter = rate_limiter or RateLimiter(config.server.rate_limit_per_minute)
    journal = (
        RequestJournal(config.server.journal_path)
        if config.server.journal_path
        else None
    )

    app = FastAPI(title="gencnippet", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.config = config
    app.state.backend = backend
    app.state.metrics = {"requests_total": 0, "failures_total": 0}
    metrics_lock = threading.Lock()

    origins = list(config.server.allowed_origins)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=origins,
        allow_origin_regex=LOCALHOST_ORIGIN_REGEX if config.server.allow_localhost else None,
        allow_methods=["GET", "POST", "OPTIONS"],
        allow_headers=["*"],
    )

    exemplar_pool = None
    if config.server.exemplar_pool_path:
        exemplar_pool = load_training_records(config.server.exemplar_pool_path)

    def _count(name: str) -> None:
        with metrics_lock:
            app.state.metrics[name] += 1

    @app.get("/health")
    def health_endpoint():
        healthy = health.check()
        body = {
            "status": "ok" if healthy else "unreachable",
            "backend_kind": config.backend.kind.value,
            "model_id": config.backend.model_id,
        }
        return JSONResponse(body, status_code=200 if healthy else 503)

    @app.get("/api/v1/config")
    def config_endpoint():
        return JSONResponse(sanitized_config(config))

    @app.post("/api/v1/generate")
    async def generate_endpoint(request: Request):
        started = time.monotonic()
        client = request.client.host if request.client else "unknown"
        if not rate_limiter.allow(client):
            logger.warning("generate client=%s status=429 code=RATE_LIMITED", client)
            return _error(429, "RATE_LIMITED", "request rate limit exceeded")

        declared = request.headers.get("content-length")
        max_bytes = config.server.max_body_bytes
        if declared and declared.isdigit() and int(declared) > max_bytes:
            return _error(400, "BODY_TOO_LARGE", f"body exceeds {max_bytes} bytes")
        body = await request.body()
        if len(body) > max_bytes:
            return _error(400, "BODY_TOO_LARGE", f"body exceeds {max_bytes} bytes")

        try:
            payload = json.loads(body)
        except (ValueError, UnicodeDecodeError):
            return _error(400, "INVALID_JSON", "request body is not valid JSON")
        if not isinstance(payload, dict):
            return _error(400, "INVALID_JSON", "request body must be a JSON object")

        for name in ("description", "language"):
            if name not in payload:
                return _error(400, "MISSING_FIELD", f"{name} is required", field=name)
        description = payload["description"]
        language_name = payload["language"]
        if not isinstance(description, str):
            return _error(400, "INVALID_FIELD", "description must be a string", "description")
        if not description.strip():
            return _error(400, "EMPTY_DESCRIPTION", "description is empty", "description")
        if not isinstance(language_name, str):
            return _error(400, "INVALID_FIELD", "language must be a string", "language")

        constraints = payload.get("constraints")
        if constraints is not None and not isinstance(constraints, str):
            return _error(400, "INVALID_FIELD", "constraints must be a string", "constraints")
        mode = payload.get("mode", "zero_shot")
        if mode not in ("zero_shot", "few_shot"):
            return _error(400, "INVALID_FIELD", "mode must be zero_shot or few_shot", "mode")

        try:
            language = Language(language_name.lower())
        except ValueError:
            language = None
        if language is None or language.value not in config.languages:
            return _error(
                422,
                "UNSUPPORTED_LANGUAGE",
                f"language must be one of {sorted(config.languages)}",
                "language",
            )

        spec = PromptSpec(
            problem_description=description.strip(),
            language=language,
            constraints=constraints,
        )
        if mode == "few_shot":
            if not exemplar_pool:
                return _error(
                    400,
                    "FEW_SHOT_UNAVAILABLE",
                    "no exemplar pool is configured for few-shot prompting",
                    "mode",
                )
            try:
                exemplars = select_exemplars(
                    exemplar_pool, spec, k=config.server.shots, seed=config.seed
                )
            except PromptError as exc:
                return _error(400, "FEW_SHOT_UNAVAILABLE", str(exc), "mode")
            spec = PromptSpec(
                problem_description=spec.problem_description,
                language=language,
                constraints=constraints,
                exemplars=tuple(exemplars),
            )
        try:
            prompt = render_prompt(
                spec,
                config.server.prompt_profile,
                max_exemplars=max(config.server.shots, DEFAULT_MAX_EXEMPLARS),
            )
        except PromptError as exc:
            return _error(400, "INVALID_FIELD", str(exc), "description")

        generation_request = GenerationRequest(prompt=prompt, language=language)
        _count("requests_total")
        try:
            result = await run_in_threadpool(backend.generate, generation_request)
        except BackendTimeout as exc:
            _count("failures_total")
            logger.warning(
                "generate request_id=%s language=%s status=504 code=BACKEND_TIMEOUT",
                generation_request.request_id,
                language.value,
            )
            return _error(504, "BACKEND_TIMEOUT", str(exc))
        except BackendError as exc:
            _count("failures_total")
            logger.warning(
                "generate request_id=%s language=%s status=502 code=BACKEND_FAILURE",
                generation_request.request_id,
                language.value,
            )
            return _error(502, "BACKEND_FAILURE", str(exc))

        if not result.code.strip():
            _count("failures_total")
            return _error(502, "EMPTY_COMPLETION", "backend returned no code")

        latency_ms = max(0, int((time.monotonic() - started) * 1000))
        # Privacy: the log line carries no description content.
        logger.info(
            "generate request_id=%s language=%s profile=%s status=200 latency_ms=%d",
            generation_request.request_id,
            language.value,
            config.server.prompt_profile,
            latency_ms,
        )
        if journal is not None:
            journal.record(
                {
                    "ts": datetime.now(timezone.utc).isoformat(),
                    "request_id": generation_request.request_id,
                    "language": language.value,
                    "description": description,
                    "snippet": result.code,
                    "model_id": result.model_id,
                }
            )
        return JSONResponse(
            {
                "snippet": result.code,
                "model_id": result.model_id,
                "prompt_profile": config.server.prompt_profile,
                "latency_ms": latency_ms,
                "request_id": generation_request.request_id,
            }
        )

    return app


def run_server(config: PipelineConfig, backend=None) -> None:
    """Blocking entry point used by the serve subcommand."""
    import uvicorn

    app = create_app(config, backend=backend)
    uvicorn.run(
        app,
        host=config.server.host,
        port=config.server.port,
        log_level=config.server.log_level.lower(),
    )
