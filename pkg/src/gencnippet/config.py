"""Pipeline configuration: JSON file plus GENCNIPPET_* environment overrides.

Unknown keys are rejected everywhere so typos fail loudly instead of
silently running with defaults.
"""

from __future__ import annotations

import dataclasses
import json
import os
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

from .backends import BackendConfig, BackendKind
from .evaluation import Smoothing
from .ingest import DEFAULT_LANGUAGES, Language
from .prompts import PromptProfile

ENV_PREFIX = "GENCNIPPET_"
# Path of a config file to load when no explicit path is given.
ENV_CONFIG_PATH = ENV_PREFIX + "CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class MetricSettings:
    bleu_max_n: int = 4
    smoothing: str = Smoothing.ADD_EPSILON.value


@dataclass(frozen=True)
class ServerSettings:
    host: str = "127.0.0.1"
    port: int = 8080
    allowed_origins: tuple[str, ...] = ("https://stackoverflow.com",)
    # Localhost on any port is accepted alongside the explicit origin list.
    allow_localhost: bool = True
    rate_limit_per_minute: int = 10
    max_body_bytes: int = 64 * 1024
    prompt_profile: str = PromptProfile.INSTRUCT.value
    shots: int = 2
    exemplar_pool_path: str | None = None
    # Opt-in journal of request/response pairs; privacy default is off.
    journal_path: str | None = None
    log_level: str = "INFO"


@dataclass(frozen=True)
class PipelineConfig:
    languages: tuple[str, ...] = DEFAULT_LANGUAGES
    seed: int = 42
    data_dir: str = "data"
    backend: BackendConfig = field(
        default_factory=lambda: BackendConfig(kind=BackendKind.MOCK, model_id="mock-model")
    )
    metrics: MetricSettings = field(default_factory=MetricSettings)
    server: ServerSettings = field(default_factory=ServerSettings)

    def validate(self) -> None:
        for name in self.languages:
            try:
                Language(name)
            except ValueError:
                raise ConfigError(f"unsupported language {name!r}") from None
        try:
            self.backend.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        try:
            Smoothing(self.metrics.smoothing)
        except ValueError:
            raise ConfigError(f"unknown smoothing {self.metrics.smoothing!r}") from None
        try:
            PromptProfile(self.server.prompt_profile)
        except ValueError:
            raise ConfigError(
                f"unknown prompt profile {self.server.prompt_profile!r}"
            ) from None
        if self.server.rate_limit_per_minute < 0:
            raise ConfigError("rate_limit_per_minute must be >= 0")
        if self.server.max_body_bytes < 1:
            raise ConfigError("max_body_bytes must be positive")
        if self.server.shots < 0:
            raise ConfigError("shots must be >= 0")


def _field_names(cls) -> set[str]:
    return {f.name for f in dataclasses.fields(cls)}


def _build_section(cls, data: Mapping, section: str):
    unknown = set(data) - _field_names(cls)
    if unknown:
        raise ConfigError(f"unknown {section} keys: {', '.join(sorted(unknown))}")
    kwargs = dict(data)
    if "allowed_origins" in kwargs:
        kwargs["allowed_origins"] = tuple(kwargs["allowed_origins"])
    if "kind" in kwargs:
        try:
            kwargs["kind"] = BackendKind(kwargs["kind"])
        except ValueError:
            raise ConfigError(f"unknown backend kind {kwargs['kind']!r}") from None
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad {section} section: {exc}") from None


# Documented environment overrides; anything else with the prefix is an error.
_ENV_SETTERS = {
    "GENCNIPPET_BACKEND_KIND": ("backend", "kind"),
    "GENCNIPPET_MODEL_ID": ("backend", "model_id"),
    "GENCNIPPET_ENDPOINT_URL": ("backend", "endpoint_url"),
    "GENCNIPPET_API_KEY": ("backend", "api_key"),
    "GENCNIPPET_REPLAY_DIR": ("backend", "replay_dir"),
    "GENCNIPPET_ALLOWED_ORIGINS": ("server", "allowed_origins"),
    "GENCNIPPET_RATE_LIMIT_PER_MINUTE": ("server", "rate_limit_per_minute"),
    "GENCNIPPET_PORT": ("server", "port"),
    "GENCNIPPET_JOURNAL_PATH": ("server", "journal_path"),
    "GENCNIPPET_SEED": ("seed", None),
}


def _coerce_env(key: str, value: str):
    if key in ("GENCNIPPET_RATE_LIMIT_PER_MINUTE", "GENCNIPPET_PORT", "GENCNIPPET_SEED"):
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {value!r}") from None
    if key == "GENCNIPPET_ALLOWED_ORIGINS":
        return tuple(origin.strip() for origin in value.split(",") if origin.strip())
    if key == "GENCNIPPET_BACKEND_KIND":
        try:
            return BackendKind(value)
        except ValueError:
            raise ConfigError(f"unknown backend kind {value!r}") from None
    return value


def load_config(
    path: str | Path | None = None, env: Mapping[str, str] | None = None
) -> PipelineConfig:
    """Build the effective configuration: defaults, then file, then env."""
    env = os.environ if env is None else env
    if path is None and env.get(ENV_CONFIG_PATH):
        path = env[ENV_CONFIG_PATH]

    data: dict = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config root must be an object")

    unknown = set(data) - _field_names(PipelineConfig)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    backend_data = dict(data.get("backend", {}))
    # BackendConfig has no defaults of its own; absent keys mean the mock.
    backend_data.setdefault("kind", "mock")
    backend_data.setdefault("model_id", "mock-model")
    backend = _build_section(BackendConfig, backend_data, "backend")
    metrics = _build_section(MetricSettings, data.get("metrics", {}), "metrics")
    server = _build_section(ServerSettings, data.get("server", {}), "server")
    config = PipelineConfig(
        languages=tuple(data.get("languages", DEFAULT_LANGUAGES)),
        seed=data.get("seed", 42),
        data_dir=data.get("data_dir", "data"),
        backend=backend,
        metrics=metrics,
        server=server,
    )

    overrides: dict[tuple[str, str | None], object] = {}
    for key, value in env.items():
        if not key.startswith(ENV_PREFIX) or key == ENV_CONFIG_PATH:
            continue
        if key not in _ENV_SETTERS:
            raise ConfigError(f"unknown environment override {key}")
        overrides[_ENV_SETTERS[key]] = _coerce_env(key, value)

    backend_patch = {
        attr: value for (section, attr), value in overrides.items() if section == "backend"
    }
    server_patch = {
        attr: value for (section, attr), value in overrides.items() if section == "server"
    }
    if backend_patch:
        config = dataclasses.replace(
            config, backend=dataclasses.replace(config.backend, **backend_patch)
        )
    if server_patch:
        config = dataclasses.replace(
            config, server=dataclasses.replace(config.server, **server_patch)
        )
    if ("seed", None) in overrides:
        config = dataclasses.replace(config, seed=overrides[("seed", None)])

    config.validate()
    return config
