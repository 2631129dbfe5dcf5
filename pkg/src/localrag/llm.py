"""Language model clients: a remote chat endpoint and a scripted mock.

The mock replays canned replies keyed by request id, which makes whole
pipeline runs reproducible without any model server. Tests and offline
demos lean on it heavily.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

from .remote import EndpointProfile, TransportError, post_json


@dataclass
class GenerationParams:
    max_output_tokens: int = 512
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be positive")
        if self.temperature < 0.0:
            raise ValueError("temperature cannot be negative")


@dataclass
class LlmClientSpec:
    """Which backend to build and how."""

    backend: str = "scripted_mock"
    model: str = ""
    endpoint: EndpointProfile | None = None
    fixture_path: str | None = None
    params: GenerationParams = field(default_factory=GenerationParams)

    def __post_init__(self) -> None:
        if self.backend not in ("remote", "scripted_mock"):
            raise ValueError(f"unknown llm backend {self.backend!r}")


class LlmClient(Protocol):
    def complete(
        self,
        system_text: str,
        user_text: str,
        *,
        request_id: str | None = None,
    ) -> str: ...


class RemoteLlmClient:
    """Chat-completion style HTTP client.

    Request: {"model", "messages": [{"role", "content"}, ...],
              "max_tokens", "temperature"}
    Response: {"choices": [{"message": {"content": str}}]}
    """

    def __init__(
        self,
        profile: EndpointProfile,
        params: GenerationParams | None = None,
    ):
        self.profile = profile
        self.params = params or GenerationParams()

    def complete(
        self,
        system_text: str,
        user_text: str,
        *,
        request_id: str | None = None,
    ) -> str:
        messages = []
        if system_text:
            messages.append({"role": "system", "content": system_text})
        messages.append({"role": "user", "content": user_text})
        payload = {
            "model": self.profile.model,
            "messages": messages,
            "max_tokens": self.params.max_output_tokens,
            "temperature": self.params.temperature,
        }
        body = post_json(self.profile, payload)
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise TransportError(
                "chat response shape mismatch", retryable=False
            ) from exc
        if not isinstance(content, str):
            raise TransportError(
                "chat response content is not text", retryable=False
            )
        return content


class ScriptedMockLlm:
    """Replays fixed replies keyed by request id.

    ``replies`` maps request ids to reply text; ``default_reply`` covers
    ids that are missing from the map. With neither, an unknown id is an
    error, which keeps fixture gaps loud.
    """

    def __init__(
        self,
        replies: dict[str, str] | None = None,
        default_reply: str | None = None,
    ):
        self.replies = dict(replies or {})
        self.default_reply = default_reply
        self.calls: list[dict] = []

    @classmethod
    def from_file(cls, path: Path | str) -> "ScriptedMockLlm":
        """Load replies from JSON: {"replies": {...}, "default": str?}."""
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict) or "replies" not in data:
            raise ValueError(f"{path}: expected an object with a replies map")
        return cls(data["replies"], data.get("default"))

    def complete(
        self,
        system_text: str,
        user_text: str,
        *,
        request_id: str | None = None,
    ) -> str:
        self.calls.append(
            {
                "system_text": system_text,
                "user_text": user_text,
                "request_id": request_id,
            }
        )
        if request_id is not None and request_id in self.replies:
            return self.replies[request_id]
        if self.default_reply is not None:
            return self.default_reply
        raise KeyError(
            f"no scripted reply for request_id {request_id!r} and no default"
        )


def build_llm_client(spec: LlmClientSpec) -> LlmClient:
    """Instantiate the backend named by the spec."""
    if spec.backend == "remote":
        if spec.endpoint is None:
            raise ValueError("remote llm backend needs an endpoint profile")
        return RemoteLlmClient(spec.endpoint, spec.params)
    if not spec.fixture_path:
        raise ValueError("scripted_mock llm backend needs a fixture_path")
    return ScriptedMockLlm.from_file(spec.fixture_path)
