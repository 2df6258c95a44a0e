"""Model clients: an HTTP chat-completions client and scripted stand-ins.

Every client returns a :class:`ModelReply` and never raises on transport
problems; failures are reported in the reply so a run can carry on.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Literal, Protocol

import httpx
import yaml

from argbench.puzzles import PromptParseError, reparse_prompt
from argbench.semantics import root_accepted

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
PROVIDERS = ("http-chat", "oracle", "always-yes", "always-no", "fixtures")
RETRY_STATUS = {408, 409, 429}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    provider: Literal["http-chat", "oracle", "always-yes", "always-no", "fixtures"]
    model: str = ""
    endpoint: str = ""
    credential_env: str = ""
    timeout: float = 60.0
    max_retries: int = 3
    backoff_ms: int = 1000
    max_concurrency: int = 1
    fixtures_path: str = ""
    temperature: float | None = None
    max_tokens: int | None = None

    def __post_init__(self) -> None:
        if self.provider not in PROVIDERS:
            raise ConfigError(f"unknown provider {self.provider!r}; expected one of {PROVIDERS}")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.max_concurrency < 1:
            raise ConfigError("max_concurrency must be >= 1")
        if self.backoff_ms < 0:
            raise ConfigError("backoff_ms must be >= 0")
        if self.provider == "http-chat":
            missing = [k for k in ("endpoint", "model", "credential_env") if not getattr(self, k)]
            if missing:
                raise ConfigError(f"http-chat provider requires {', '.join(missing)}")
        if self.provider == "fixtures" and not self.fixtures_path:
            raise ConfigError("fixtures provider requires fixtures_path")

    @property
    def name(self) -> str:
        return self.model or self.provider

    @classmethod
    def from_dict(cls, data: dict[str, Any], base_dir: Path | None = None) -> ModelConfig:
        data = dict(data)
        version = data.pop("config_version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config_version {version!r}")
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        if "provider" not in data:
            raise ConfigError("config needs a provider")
        fixtures = data.get("fixtures_path")
        if fixtures and base_dir is not None and not Path(fixtures).is_absolute():
            data["fixtures_path"] = str(base_dir / fixtures)
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> ModelConfig:
        """Read a YAML (or JSON) config file; relative fixture paths resolve
        against the file's directory."""
        path = Path(path)
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: expected a mapping")
        return cls.from_dict(data, base_dir=path.parent)


@dataclass
class ModelReply:
    instance_id: str
    raw_text: str
    latency_ms: float = 0.0
    attempts: int = 1
    status: Literal["ok", "failed"] = "ok"
    error: str = ""

    @classmethod
    def failed(cls, instance_id: str, error: str, attempts: int = 1, latency_ms: float = 0.0):
        return cls(instance_id, "", latency_ms, attempts, "failed", error)


class ModelClient(Protocol):
    config: ModelConfig

    def query(self, prompt: str, instance_id: str) -> ModelReply: ...


@dataclass
class ConstantClient:
    config: ModelConfig
    answer: str

    def query(self, prompt: str, instance_id: str) -> ModelReply:
        return ModelReply(instance_id, f"Answer: {self.answer}")


@dataclass
class OracleClient:
    """Answers by reparsing the prompt and applying grounded semantics."""

    config: ModelConfig

    def query(self, prompt: str, instance_id: str) -> ModelReply:
        try:
            graph, _, _ = reparse_prompt(prompt)
        except PromptParseError as exc:
            return ModelReply.failed(instance_id, f"oracle could not parse prompt: {exc}")
        return ModelReply(instance_id, "Answer: yes" if root_accepted(graph) else "Answer: no")


@dataclass
class FixtureClient:
    """Plays back recorded replies from a JSON Lines file of ``{instance_id, raw_text}``."""

    config: ModelConfig
    replies: dict[str, str] = field(init=False)

    def __post_init__(self) -> None:
        self.replies = load_fixtures(self.config.fixtures_path)

    def query(self, prompt: str, instance_id: str) -> ModelReply:
        if instance_id not in self.replies:
            return ModelReply.failed(instance_id, f"no fixture for {instance_id}")
        return ModelReply(instance_id, self.replies[instance_id])


def load_fixtures(path: str | Path) -> dict[str, str]:
    replies = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                replies[row["instance_id"]] = row["raw_text"]
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"{path}: line {line_no}: bad fixture record ({exc})") from exc
    return replies


class HttpChatClient:
    """Client for chat-completions-compatible endpoints.

    Transient failures (connection errors, timeouts, 408/409/429 and 5xx) are
    retried with exponential backoff. A semaphore caps requests in flight.
    """

    def __init__(
        self,
        config: ModelConfig,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.config = config
        self._http = httpx.Client(timeout=config.timeout, transport=transport)
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(config.max_concurrency)

    def close(self) -> None:
        self._http.close()

    def backoff_delay(self, retry: int) -> float:
        """Seconds to wait before retry number ``retry`` (1-based)."""
        return self.config.backoff_ms / 1000 * 2 ** (retry - 1)

    def request_body(self, prompt: str) -> dict[str, Any]:
        body: dict[str, Any] = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
        }
        if self.config.temperature is not None:
            body["temperature"] = self.config.temperature
        if self.config.max_tokens is not None:
            body["max_tokens"] = self.config.max_tokens
        return body

    def query(self, prompt: str, instance_id: str) -> ModelReply:
        key = os.environ.get(self.config.credential_env)
        if not key:
            return ModelReply.failed(
                instance_id, f"environment variable {self.config.credential_env} is not set", 0
            )
        headers = {"Authorization": f"Bearer {key}"}
        body = self.request_body(prompt)
        start = time.monotonic()
        error = ""
        attempt = 0
        while attempt <= self.config.max_retries:
            if attempt:
                self._sleep(self.backoff_delay(attempt))
            attempt += 1
            try:
                with self._slots:
                    resp = self._http.post(self.config.endpoint, json=body, headers=headers)
            except httpx.HTTPError as exc:
                error = f"{type(exc).__name__}: {exc}"
                log.warning("%s attempt %d: %s", instance_id, attempt, error)
                continue
            if resp.status_code in RETRY_STATUS or resp.status_code >= 500:
                error = f"HTTP {resp.status_code}"
                log.warning("%s attempt %d: %s", instance_id, attempt, error)
                continue
            latency = (time.monotonic() - start) * 1000
            if resp.status_code != 200:
                return ModelReply.failed(instance_id, f"HTTP {resp.status_code}: {resp.text[:200]}", attempt, latency)
            try:
                text = resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                return ModelReply.failed(instance_id, f"malformed response: {exc!r}", attempt, latency)
            return ModelReply(instance_id, text or "", latency, attempt)
        latency = (time.monotonic() - start) * 1000
        return ModelReply.failed(instance_id, f"retries exhausted: {error}", attempt, latency)


def build_client(config: ModelConfig, **kwargs) -> ModelClient:
    if config.provider == "http-chat":
        return HttpChatClient(config, **kwargs)
    if config.provider == "oracle":
        return OracleClient(config)
    if config.provider == "always-yes":
        return ConstantClient(config, "yes")
    if config.provider == "always-no":
        return ConstantClient(config, "no")
    return FixtureClient(config)


def query_model(config: ModelConfig, prompt: str, instance_id: str) -> ModelReply:
    """One-off query; use :func:`build_client` to share a client across calls."""
    if not prompt:
        raise ValueError("prompt must not be empty")
    client = build_client(config)
    try:
        return client.query(prompt, instance_id)
    finally:
        if isinstance(client, HttpChatClient):
            client.close()
