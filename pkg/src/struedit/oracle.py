"""Language-model oracles: remote chat-completion client, scripted stand-in, recorder."""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from .errors import OracleConfigError, OracleTimeout, OracleUnavailable, ScriptMiss

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleRequest:
    user_text: str
    system_text: str = ""
    max_output_tokens: int = 256
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if not self.user_text:
            raise ValueError("user_text must be non-empty")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")


@dataclass(frozen=True)
class OracleResponse:
    text: str
    latency: float = 0.0
    token_counts: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.latency < 0:
            raise ValueError("latency must be >= 0")


class Oracle(Protocol):
    def complete(self, request: OracleRequest) -> OracleResponse: ...


@dataclass(frozen=True)
class OracleConfig:
    endpoint_url: str
    model_name: str
    timeout: float = 60.0
    max_retries: int = 3
    temperature_default: float = 0.0

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


# ---------------------------------------------------------------------------
# scripted


@dataclass(frozen=True)
class ScriptRule:
    pattern: str
    response: str
    exact: bool = False

    def matches(self, user_text: str) -> bool:
        return user_text == self.pattern if self.exact else self.pattern in user_text


@dataclass
class ScriptedOracle:
    """Deterministic oracle: the first rule matching ``user_text`` answers.

    ``latency`` is the simulated per-call latency reported in each response,
    so runs against a script produce reproducible timing.
    """

    rules: list[ScriptRule] = field(default_factory=list)
    fallback: str | None = None
    latency: float = 0.0

    def add(self, pattern: str, response: str, exact: bool = False) -> ScriptedOracle:
        self.rules.append(ScriptRule(pattern, response, exact))
        return self

    def complete(self, request: OracleRequest) -> OracleResponse:
        for rule in self.rules:
            if rule.matches(request.user_text):
                return OracleResponse(rule.response, self.latency)
        if self.fallback is not None:
            return OracleResponse(self.fallback, self.latency)
        snippet = request.user_text[-120:].replace("\n", "\\n")
        raise ScriptMiss(f"no scripted rule matches request ending {snippet!r}")

    def to_dict(self) -> dict:
        return {
            "rules": [{"match": r.pattern, "exact": r.exact, "response": r.response} for r in self.rules],
            "fallback": self.fallback,
            "latency": self.latency,
        }

    @classmethod
    def from_dict(cls, data: dict) -> ScriptedOracle:
        try:
            rules = [ScriptRule(r["match"], r["response"], bool(r.get("exact", False))) for r in data.get("rules", [])]
            return cls(rules, data.get("fallback"), float(data.get("latency", 0.0)))
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise OracleConfigError(f"invalid scripted oracle fixture: {exc}") from exc

    @classmethod
    def load(cls, path: str | Path) -> ScriptedOracle:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise OracleConfigError(f"cannot read scripted oracle fixture {path}: {exc}") from exc
        return cls.from_dict(data)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, ensure_ascii=False)
            fh.write("\n")


# ---------------------------------------------------------------------------
# recorder


class RecordingOracle:
    """Transparent wrapper that keeps every (request, response) pair in call order."""

    def __init__(self, inner: Oracle):
        self.inner = inner
        self.transcript: list[tuple[OracleRequest, OracleResponse]] = []
        self._lock = threading.Lock()

    def complete(self, request: OracleRequest) -> OracleResponse:
        response = self.inner.complete(request)
        with self._lock:
            self.transcript.append((request, response))
        return response

    @property
    def call_count(self) -> int:
        with self._lock:
            return len(self.transcript)

    @property
    def total_latency(self) -> float:
        with self._lock:
            return sum(resp.latency for _, resp in self.transcript)

    def dump(self) -> list[dict]:
        with self._lock:
            return [
                {
                    "system": req.system_text,
                    "user": req.user_text,
                    "response": resp.text,
                    "latency": resp.latency,
                }
                for req, resp in self.transcript
            ]


def record_transcript(inner: Oracle) -> RecordingOracle:
    return RecordingOracle(inner)


# ---------------------------------------------------------------------------
# remote


_RETRYABLE_STATUS = {429, 500, 502, 503, 504}


class RemoteOracle:
    """Chat-completion HTTP client.

    Transport failures (connection errors, timeouts, 429/5xx) are retried with
    exponential backoff starting at one second. Any other response is final.
    """

    def __init__(
        self,
        config: OracleConfig,
        api_key: str | None = None,
        client: httpx.Client | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self._api_key = api_key if api_key is not None else os.environ.get("ORACLE_API_KEY", "")
        self._client = client or httpx.Client(timeout=config.timeout)
        self._sleep = sleep

    @classmethod
    def from_env(cls, model_name: str, endpoint_url: str | None = None, **kwargs) -> RemoteOracle:
        endpoint = endpoint_url or os.environ.get("ORACLE_ENDPOINT", "")
        if not endpoint:
            raise OracleConfigError("no endpoint: pass --endpoint or set ORACLE_ENDPOINT")
        if not model_name:
            raise OracleConfigError("no model name given")
        return cls(OracleConfig(endpoint_url=endpoint, model_name=model_name, **kwargs))

    def _payload(self, request: OracleRequest) -> dict:
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        return {
            "model": self.config.model_name,
            "messages": messages,
            "max_tokens": request.max_output_tokens,
            "temperature": request.temperature,
        }

    def complete(self, request: OracleRequest) -> OracleResponse:
        headers = {"Content-Type": "application/json"}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        payload = self._payload(request)
        delay = 1.0
        last_exc: Exception | None = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                self._sleep(delay)
                delay *= 2
            started = time.perf_counter()
            try:
                resp = self._client.post(
                    self.config.endpoint_url, json=payload, headers=headers, timeout=self.config.timeout
                )
            except httpx.TimeoutException as exc:
                last_exc = exc
                logger.warning("oracle timeout (attempt %d): %s", attempt + 1, exc)
                continue
            except httpx.TransportError as exc:
                last_exc = exc
                logger.warning("oracle transport error (attempt %d): %s", attempt + 1, exc)
                continue
            latency = time.perf_counter() - started
            if resp.status_code in _RETRYABLE_STATUS:
                last_exc = OracleUnavailable(f"HTTP {resp.status_code}")
                logger.warning("oracle returned HTTP %d (attempt %d)", resp.status_code, attempt + 1)
                continue
            if resp.status_code >= 400:
                raise OracleUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
            return self._parse(resp, latency)
        if isinstance(last_exc, httpx.TimeoutException):
            raise OracleTimeout(f"oracle timed out after {self.config.max_retries + 1} attempts") from last_exc
        raise OracleUnavailable(
            f"oracle unreachable after {self.config.max_retries + 1} attempts: {last_exc}"
        ) from last_exc

    @staticmethod
    def _parse(resp: httpx.Response, latency: float) -> OracleResponse:
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise OracleUnavailable(f"unexpected response body: {resp.text[:200]}") from exc
        usage = body.get("usage") or {}
        counts = None
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            counts = (int(usage["prompt_tokens"]), int(usage["completion_tokens"]))
        return OracleResponse(text, latency, counts)

    def close(self) -> None:
        self._client.close()
