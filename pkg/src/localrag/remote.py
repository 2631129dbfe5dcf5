"""Shared HTTP plumbing for remote embedding, rerank, and LLM backends."""

from __future__ import annotations

from dataclasses import dataclass

import httpx


@dataclass
class EndpointProfile:
    """Where a remote model service lives and how to talk to it."""

    url: str
    model: str
    auth_token: str | None = None
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if not self.url:
            raise ValueError("url must be non-empty")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    def headers(self) -> dict[str, str]:
        if self.auth_token:
            return {"Authorization": f"Bearer {self.auth_token}"}
        return {}

    def to_dict(self) -> dict:
        # auth_token deliberately omitted: profiles get logged and saved.
        return {"url": self.url, "model": self.model, "timeout": self.timeout}

    @classmethod
    def from_dict(cls, data: dict) -> "EndpointProfile":
        return cls(
            url=data["url"],
            model=data.get("model", ""),
            auth_token=data.get("auth_token"),
            timeout=float(data.get("timeout", 30.0)),
        )


class TransportError(RuntimeError):
    """A failed exchange with a remote service.

    ``retryable`` says whether trying again could help; ``retry_after``
    carries the server's backoff hint in seconds when one was sent.
    """

    def __init__(
        self,
        message: str,
        *,
        retryable: bool,
        status: int | None = None,
        retry_after: float | None = None,
    ):
        super().__init__(message)
        self.retryable = retryable
        self.status = status
        self.retry_after = retry_after


def _retry_after_seconds(response: httpx.Response) -> float | None:
    raw = response.headers.get("Retry-After")
    if raw is None:
        return None
    try:
        return float(raw)
    except ValueError:
        return None


def post_json(profile: EndpointProfile, payload: dict) -> dict:
    """POST a JSON payload and return the parsed JSON body.

    Timeouts, connection failures, 429, and 5xx raise retryable
    TransportError; other 4xx and malformed bodies are not retryable.
    No retries happen here, callers own that policy.
    """
    try:
        response = httpx.post(
            profile.url,
            json=payload,
            headers=profile.headers(),
            timeout=profile.timeout,
        )
    except httpx.TimeoutException as exc:
        raise TransportError(f"timeout: {exc}", retryable=True) from exc
    except httpx.HTTPError as exc:
        raise TransportError(f"transport failure: {exc}", retryable=True) from exc

    if response.status_code == 429 or response.status_code >= 500:
        raise TransportError(
            f"service returned {response.status_code}",
            retryable=True,
            status=response.status_code,
            retry_after=_retry_after_seconds(response),
        )
    if response.status_code >= 400:
        raise TransportError(
            f"service returned {response.status_code}: {response.text[:200]}",
            retryable=False,
            status=response.status_code,
        )
    try:
        body = response.json()
    except ValueError as exc:
        raise TransportError(
            "response body is not JSON", retryable=False,
            status=response.status_code,
        ) from exc
    if not isinstance(body, dict):
        raise TransportError(
            "response body is not a JSON object", retryable=False,
            status=response.status_code,
        )
    return body
