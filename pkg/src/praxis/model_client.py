"""Provider-agnostic chat-completion access.

Two backends share one request/response shape: an HTTP client speaking the
OpenAI-compatible chat-completions wire format (with retry, backoff, and
SSE streaming), and a fully deterministic scripted model for offline runs
and the test battery. The scripted model never touches the network.
"""
from __future__ import annotations

import hashlib
import json
import os
import random
import re
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterator, Protocol

import httpx

__all__ = [
    "AuthError",
    "ChatMessage",
    "ChatRequest",
    "ChatResponse",
    "FinishReason",
    "HttpModel",
    "MalformedResponseError",
    "ModelError",
    "ModelHandle",
    "ProviderConfig",
    "RateLimitError",
    "ReplayModel",
    "Role",
    "ScriptExhaustedError",
    "ScriptRule",
    "ScriptedModel",
    "TokenUsage",
    "complete",
    "request_hash",
    "scripted_next",
    "stream_complete",
]


class ModelError(Exception):
    """Base error for model access."""


class AuthError(ModelError):
    """Credentials missing or rejected; never retried."""


class RateLimitError(ModelError):
    """Provider rate limit; retried with backoff."""


class MalformedResponseError(ModelError):
    """Provider returned something we cannot interpret."""


class ScriptExhaustedError(ModelError):
    """Scripted model has no entry or rule for the request."""


class Role(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class FinishReason(str, Enum):
    STOP = "stop"
    LENGTH = "length"
    ERROR = "error"


@dataclass(frozen=True)
class ChatMessage:
    role: Role
    content: str

    def __post_init__(self) -> None:
        if self.role in (Role.USER, Role.ASSISTANT) and not self.content:
            raise ValueError(f"{self.role.value} message content must be non-empty")


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[ChatMessage, ...]
    model_id: str = "default"
    temperature: float = 0.7
    max_output_tokens: int = 1024

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("request must contain at least one message")
        if self.messages[0].role is not Role.SYSTEM:
            raise ValueError("first message must have role system")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")

    @property
    def last_user_text(self) -> str | None:
        for message in reversed(self.messages):
            if message.role is Role.USER:
                return message.content
        return None


@dataclass(frozen=True)
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0


@dataclass(frozen=True)
class ChatResponse:
    content: str
    finish_reason: FinishReason = FinishReason.STOP
    usage: TokenUsage = TokenUsage()

    def __post_init__(self) -> None:
        if self.finish_reason is FinishReason.STOP and not self.content:
            raise ValueError("finish_reason=stop requires non-empty content")


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str
    auth_token_env: str = "PRAXIS_API_KEY"
    model_id: str = "gpt-4o"
    timeout: float = 30.0
    retries: int = 2

    def __post_init__(self) -> None:
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


class ModelHandle(Protocol):
    """Anything the session pipeline can ask for a completion."""

    def complete(self, request: ChatRequest) -> ChatResponse: ...


def _wire_messages(request: ChatRequest) -> list[dict]:
    return [{"role": m.role.value, "content": m.content} for m in request.messages]


def _wire_body(request: ChatRequest, config: ProviderConfig, stream: bool = False) -> dict:
    body = {
        "model": config.model_id or request.model_id,
        "messages": _wire_messages(request),
        "temperature": request.temperature,
        "max_tokens": request.max_output_tokens,
    }
    if stream:
        body["stream"] = True
    return body


def _parse_response(payload: dict) -> ChatResponse:
    try:
        choice = payload["choices"][0]
        content = choice["message"]["content"] or ""
        finish = choice.get("finish_reason", "stop")
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(f"unexpected provider payload: {exc}") from exc
    usage = payload.get("usage") or {}
    reason = {"stop": FinishReason.STOP, "length": FinishReason.LENGTH}.get(
        finish, FinishReason.STOP if content else FinishReason.ERROR
    )
    if reason is FinishReason.STOP and not content:
        reason = FinishReason.ERROR
    return ChatResponse(
        content=content,
        finish_reason=reason,
        usage=TokenUsage(
            input_tokens=int(usage.get("prompt_tokens", 0)),
            output_tokens=int(usage.get("completion_tokens", 0)),
        ),
    )


def _auth_headers(config: ProviderConfig) -> dict:
    token = os.environ.get(config.auth_token_env, "").strip()
    if not token:
        raise AuthError(
            f"no auth token: environment variable {config.auth_token_env} is not set"
        )
    return {"Authorization": f"Bearer {token}"}


def _backoff_delay(attempt: int, jitter: Callable[[], float]) -> float:
    # Exponential backoff: base 1s, factor 2, plus up to 0.5s of jitter.
    return 1.0 * (2**attempt) + jitter() * 0.5


def complete(
    request: ChatRequest,
    config: ProviderConfig,
    *,
    transport: httpx.BaseTransport | None = None,
    sleep: Callable[[float], None] = time.sleep,
    jitter: Callable[[], float] = random.random,
) -> ChatResponse:
    """One chat completion over HTTP.

    Transient failures (rate limit, 5xx, timeouts) are retried with
    exponential backoff up to config.retries; auth failures are raised
    immediately and the token is checked before any network activity.
    A finish_reason of "length" is returned as-is: it signals the caller
    to summarize history and retry with a shorter request.
    """
    headers = _auth_headers(config)
    body = _wire_body(request, config)
    last_error: Exception | None = None
    for attempt in range(config.retries + 1):
        try:
            with httpx.Client(
                base_url=config.base_url, timeout=config.timeout, transport=transport
            ) as client:
                response = client.post("/chat/completions", json=body, headers=headers)
        except httpx.TimeoutException as exc:
            last_error = ModelError(f"request timed out: {exc}")
        except httpx.HTTPError as exc:
            last_error = ModelError(f"transport failure: {exc}")
        else:
            if response.status_code in (401, 403):
                raise AuthError(f"provider rejected credentials ({response.status_code})")
            if response.status_code == 429:
                last_error = RateLimitError("provider rate limit")
            elif response.status_code >= 500:
                last_error = ModelError(f"provider error {response.status_code}")
            elif response.status_code >= 400:
                raise ModelError(f"request rejected ({response.status_code}): {response.text}")
            else:
                try:
                    payload = response.json()
                except ValueError as exc:
                    raise MalformedResponseError("provider response is not JSON") from exc
                return _parse_response(payload)
        if attempt < config.retries:
            sleep(_backoff_delay(attempt, jitter))
    assert last_error is not None
    raise last_error


_SSE_DATA = re.compile(r"^data:\s?(.*)$")


def stream_complete(
    request: ChatRequest,
    config: ProviderConfig,
    *,
    transport: httpx.BaseTransport | None = None,
) -> Iterator[str | ChatResponse]:
    """Stream one completion: yields text chunks, then exactly one terminal
    ChatResponse whose content equals the concatenation of the chunks.

    A mid-stream disconnect terminates with finish_reason=error and the
    partial content preserved.
    """
    headers = _auth_headers(config)
    body = _wire_body(request, config, stream=True)
    parts: list[str] = []
    finish = FinishReason.STOP
    try:
        with httpx.Client(
            base_url=config.base_url, timeout=config.timeout, transport=transport
        ) as client:
            with client.stream(
                "POST", "/chat/completions", json=body, headers=headers
            ) as response:
                if response.status_code in (401, 403):
                    raise AuthError(f"provider rejected credentials ({response.status_code})")
                if response.status_code >= 400:
                    raise ModelError(f"stream rejected ({response.status_code})")
                for line in response.iter_lines():
                    match = _SSE_DATA.match(line)
                    if not match:
                        continue
                    data = match.group(1).strip()
                    if data == "[DONE]":
                        break
                    try:
                        event = json.loads(data)
                        choice = event["choices"][0]
                    except (ValueError, KeyError, IndexError) as exc:
                        raise MalformedResponseError(f"bad stream event: {data!r}") from exc
                    delta = (choice.get("delta") or {}).get("content")
                    if delta:
                        parts.append(delta)
                        yield delta
                    if choice.get("finish_reason") == "length":
                        finish = FinishReason.LENGTH
    except (httpx.HTTPError, ModelError) as exc:
        if isinstance(exc, (AuthError, MalformedResponseError)):
            raise
        yield ChatResponse(content="".join(parts), finish_reason=FinishReason.ERROR)
        return
    content = "".join(parts)
    if not content:
        yield ChatResponse(content="", finish_reason=FinishReason.ERROR)
        return
    yield ChatResponse(content=content, finish_reason=finish)


class HttpModel:
    """ModelHandle over one provider config."""

    def __init__(
        self, config: ProviderConfig, transport: httpx.BaseTransport | None = None
    ) -> None:
        self.config = config
        self._transport = transport

    def complete(self, request: ChatRequest) -> ChatResponse:
        return complete(request, self.config, transport=self._transport)

    def stream(self, request: ChatRequest) -> Iterator[str | ChatResponse]:
        return stream_complete(request, self.config, transport=self._transport)


# ------------------------------------------------------------------
# Scripted model
# ------------------------------------------------------------------


@dataclass(frozen=True)
class ScriptRule:
    """Pattern-conditional canned reply, matched against the last user message."""

    pattern: str
    reply: str

    def matches(self, text: str | None) -> bool:
        return text is not None and re.search(self.pattern, text) is not None


@dataclass
class ScriptedModel:
    """Deterministic stand-in for a live model.

    Replies come from the sequence first; once it is exhausted, the first
    rule whose pattern matches the last user message answers. Single
    session, single writer, no network.
    """

    replies: tuple[str, ...] = ()
    rules: tuple[ScriptRule, ...] = ()
    chunk_size: int = 24
    _index: int = field(default=0, repr=False)

    @classmethod
    def from_dict(cls, obj: dict) -> "ScriptedModel":
        return cls(
            replies=tuple(obj.get("replies", [])),
            rules=tuple(ScriptRule(r["pattern"], r["reply"]) for r in obj.get("rules", [])),
        )

    def next(self, request: ChatRequest) -> ChatResponse:
        if self._index < len(self.replies):
            reply = self.replies[self._index]
            self._index += 1
            return ChatResponse(content=reply)
        last_user = request.last_user_text
        for rule in self.rules:
            if rule.matches(last_user):
                return ChatResponse(content=rule.reply)
        raise ScriptExhaustedError(
            f"script exhausted after {len(self.replies)} replies and no rule matched"
        )

    # ModelHandle interface
    def complete(self, request: ChatRequest) -> ChatResponse:
        return self.next(request)

    def stream(self, request: ChatRequest) -> Iterator[str | ChatResponse]:
        response = self.next(request)
        text = response.content
        for start in range(0, len(text), self.chunk_size):
            yield text[start : start + self.chunk_size]
        yield response

    def fresh(self) -> "ScriptedModel":
        """A rewound copy; scripted models are single-session."""
        return replace(self, _index=0)


def scripted_next(script: ScriptedModel, request: ChatRequest) -> ChatResponse:
    """Advance a scripted model by one reply (sequence first, then rules)."""
    return script.next(request)


# ------------------------------------------------------------------
# Record/replay fixtures
# ------------------------------------------------------------------


def request_hash(request: ChatRequest) -> str:
    """Stable digest of a request for fixture lookup."""
    canon = json.dumps(
        {
            "model_id": request.model_id,
            "messages": _wire_messages(request),
            "temperature": request.temperature,
            "max_output_tokens": request.max_output_tokens,
        },
        sort_keys=True,
        ensure_ascii=False,
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class ReplayModel:
    """Serves recorded responses keyed by request hash.

    Fixture format: JSON array of {"request_hash": ..., "response":
    {"content": ..., "finish_reason": ...}}.
    """

    def __init__(self, fixture_path: str) -> None:
        with open(fixture_path, encoding="utf-8") as fh:
            entries = json.load(fh)
        self._by_hash = {e["request_hash"]: e["response"] for e in entries}

    def complete(self, request: ChatRequest) -> ChatResponse:
        digest = request_hash(request)
        try:
            recorded = self._by_hash[digest]
        except KeyError:
            raise ScriptExhaustedError(f"no recorded response for request {digest[:12]}")
        return ChatResponse(
            content=recorded["content"],
            finish_reason=FinishReason(recorded.get("finish_reason", "stop")),
        )
