"""Uniform completion interface: a generic HTTP chat backend plus a
deterministic record/replay backend keyed by request content hash.

Replay is a pure function of the request value: the same request always
resolves to the same fixture file with zero network activity. Keying by
content hash (not call order) lets ablation runs that skip agents still
resolve the remaining fixtures.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from .errors import QualityFlowError
from .model import Message, TokenUsage, canonical_text

EXCHANGE_FORMAT = "qf-exchange"

ENV_ENDPOINT = "QF_ENDPOINT"
ENV_API_KEY = "QF_API_KEY"
ENV_MODEL = "QF_MODEL"

DEFAULT_TIMEOUT_S = 120.0
DEFAULT_RETRIES = 3


class GatewayError(QualityFlowError):
    pass


class MissingFixture(GatewayError):
    """A replay lookup found no fixture; the fixture set is incomplete."""


class TransportError(GatewayError):
    """The live backend failed at the transport level after all retries."""


class MalformedResponse(GatewayError):
    """The live backend returned a body we cannot parse."""


@dataclass(frozen=True)
class RequestTag:
    """Stable identity of a call site, used for replay keying and traces."""

    agent: str
    problem_id: str
    stage: str
    variant: int


@dataclass(frozen=True)
class CompletionRequest:
    messages: tuple[Message, ...]
    temperature: float
    max_tokens: int
    tag: RequestTag

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("completion request needs at least one message")
        if self.messages[0].role not in ("system", "user"):
            raise ValueError("first message must be from system or user")
        if self.temperature < 0:
            raise ValueError("temperature must be nonnegative")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class CompletionResponse:
    content: str
    usage: TokenUsage = TokenUsage()
    backend_id: str = ""


class CompletionBackend(Protocol):
    def complete(self, request: CompletionRequest) -> CompletionResponse: ...


def request_fingerprint(request: CompletionRequest) -> str:
    """Content hash of (messages, temperature, tag); the replay key."""
    payload = {
        "messages": [[m.role, m.content] for m in request.messages],
        "temperature": request.temperature,
        "tag": [
            request.tag.agent,
            request.tag.problem_id,
            request.tag.stage,
            request.tag.variant,
        ],
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _request_to_dict(request: CompletionRequest) -> dict:
    return {
        "messages": [{"role": m.role, "content": m.content} for m in request.messages],
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
        "tag": {
            "agent": request.tag.agent,
            "problem_id": request.tag.problem_id,
            "stage": request.tag.stage,
            "variant": request.tag.variant,
        },
    }


class ReplayBackend:
    """Resolves completions from a fixture directory, one file per exchange."""

    def __init__(self, fixture_dir: str | Path):
        self.fixture_dir = Path(fixture_dir)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        fingerprint = request_fingerprint(request)
        path = self.fixture_dir / f"{fingerprint}.json"
        if not path.is_file():
            raise MissingFixture(
                f"no fixture {fingerprint} for {request.tag.agent} "
                f"on {request.tag.problem_id} at {request.tag.stage}"
            )
        document = json.loads(path.read_text(encoding="utf-8"))
        response = document["response"]
        return CompletionResponse(
            content=response["content"],
            usage=TokenUsage(
                response["usage"]["input_tokens"], response["usage"]["output_tokens"]
            ),
            backend_id=response.get("backend_id", "replay"),
        )


class RecordBackend:
    """Forwards to a live backend and persists each exchange as a replay fixture.

    Fixture writes are atomic (temp file + rename) and serialized, so an
    interrupted recording never corrupts the replay set.
    """

    def __init__(self, inner: CompletionBackend, fixture_dir: str | Path):
        self.inner = inner
        self.fixture_dir = Path(fixture_dir)
        self.fixture_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        response = self.inner.complete(request)
        fingerprint = request_fingerprint(request)
        document = canonical_text(
            {
                "format": EXCHANGE_FORMAT,
                "version": 1,
                "request": _request_to_dict(request),
                "response": {
                    "content": response.content,
                    "usage": {
                        "input_tokens": response.usage.input_tokens,
                        "output_tokens": response.usage.output_tokens,
                    },
                    "backend_id": response.backend_id,
                },
            }
        )
        path = self.fixture_dir / f"{fingerprint}.json"
        with self._lock:
            tmp = path.with_suffix(".json.tmp")
            tmp.write_text(document, encoding="utf-8")
            os.replace(tmp, path)
        return response


@dataclass(frozen=True)
class LiveConfig:
    endpoint: str
    model: str
    api_key: str = ""
    auth_header: str = "Authorization"
    auth_prefix: str = "Bearer "
    timeout_s: float = DEFAULT_TIMEOUT_S
    retries: int = DEFAULT_RETRIES

    @classmethod
    def from_env(cls) -> "LiveConfig":
        endpoint = os.environ.get(ENV_ENDPOINT, "")
        model = os.environ.get(ENV_MODEL, "")
        if not endpoint or not model:
            raise GatewayError(
                f"live backend needs {ENV_ENDPOINT} and {ENV_MODEL} "
                f"(and usually {ENV_API_KEY}) in the environment"
            )
        return cls(endpoint=endpoint, model=model, api_key=os.environ.get(ENV_API_KEY, ""))


class HttpChatBackend:
    """Generic chat-completion HTTP backend (OpenAI-compatible wire shape).

    Retries transport-level failures with exponential backoff; content-level
    problems (unparsable bodies) are never retried.
    """

    def __init__(self, config: LiveConfig):
        self.config = config

    @property
    def backend_id(self) -> str:
        return f"http:{self.config.model}"

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        import httpx

        payload = {
            "model": self.config.model,
            "messages": [
                {"role": m.role, "content": m.content} for m in request.messages
            ],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        if self.config.api_key:
            headers[self.config.auth_header] = self.config.auth_prefix + self.config.api_key
        last_error: Exception | None = None
        for attempt in range(self.config.retries):
            try:
                with httpx.Client(timeout=self.config.timeout_s) as client:
                    http_response = client.post(
                        self.config.endpoint, headers=headers, json=payload
                    )
            except httpx.HTTPError as exc:
                last_error = exc
            else:
                if http_response.status_code in (429,) or http_response.status_code >= 500:
                    last_error = TransportError(
                        f"status {http_response.status_code} from backend"
                    )
                elif http_response.status_code != 200:
                    raise MalformedResponse(
                        f"status {http_response.status_code}: {http_response.text[:200]}"
                    )
                else:
                    return self._parse_body(http_response)
            if attempt + 1 < self.config.retries:
                time.sleep(0.5 * 2**attempt)
        raise TransportError(f"backend unreachable after {self.config.retries} attempts: {last_error}")

    def _parse_body(self, http_response) -> CompletionResponse:
        try:
            body = http_response.json()
            content = body["choices"][0]["message"]["content"]
            if not isinstance(content, str):
                raise TypeError("content is not text")
            usage = body.get("usage", {})
            return CompletionResponse(
                content=content,
                usage=TokenUsage(
                    int(usage.get("prompt_tokens", 0)),
                    int(usage.get("completion_tokens", 0)),
                ),
                backend_id=self.backend_id,
            )
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise MalformedResponse(f"unparsable completion body: {exc}") from exc


def build_backend(mode: str, fixture_dir: str | Path | None = None) -> CompletionBackend:
    """Build a backend from a mode name: 'live', 'record', or 'replay'."""
    if mode == "replay":
        if fixture_dir is None or not Path(fixture_dir).is_dir():
            raise GatewayError(f"replay mode needs an existing fixture directory, got {fixture_dir}")
        return ReplayBackend(fixture_dir)
    if mode == "record":
        if fixture_dir is None:
            raise GatewayError("record mode needs a fixture directory")
        return RecordBackend(HttpChatBackend(LiveConfig.from_env()), fixture_dir)
    if mode == "live":
        return HttpChatBackend(LiveConfig.from_env())
    raise GatewayError(f"unknown backend mode {mode!r}")
