"""Text embeddings and vector similarity.

The default backend hashes character trigrams into a fixed number of
buckets, which keeps the whole pipeline runnable offline with zero model
downloads while preserving the property retrieval actually needs: texts
sharing surface content land near each other. A remote backend speaks a
minimal JSON protocol for real embedding services.

All vectors are float64 and L2-normalized on the way out, so cosine and
dot agree to rounding for anything an embedder produced.
"""

from __future__ import annotations

import hashlib
import math
import re
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Protocol, Sequence

import numpy as np

from .ingest import approx_token_count, truncate_to_tokens
from .remote import EndpointProfile, TransportError, post_json

MIN_DIMS = 8
DEFAULT_DIMS = 1024
DEFAULT_MAX_INPUT_TOKENS = 8192

_WS_RE = re.compile(r"\s+")


class Metric(str, Enum):
    L2 = "l2"
    DOT = "dot"
    COSINE = "cosine"


class EmbeddingError(ValueError):
    """Input that no backend could embed, such as empty text."""


@dataclass
class EmbeddingVector:
    """A dense vector plus the facts callers rely on."""

    values: np.ndarray
    dims: int
    normalized: bool

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("vector must be one-dimensional")
        if self.values.shape[0] != self.dims:
            raise ValueError(
                f"expected {self.dims} dims, got {self.values.shape[0]}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("vector has non-finite entries")
        if self.normalized:
            norm = float(np.linalg.norm(self.values))
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(f"norm {norm} is not within 1e-6 of 1")


@dataclass
class EmbedderSpec:
    """Configuration shared by every embedding backend."""

    dims: int = DEFAULT_DIMS
    max_input_tokens: int = DEFAULT_MAX_INPUT_TOKENS
    backend: str = "hashed_ngram"

    def __post_init__(self) -> None:
        if self.dims < MIN_DIMS:
            raise ValueError(f"dims must be at least {MIN_DIMS}")
        if self.max_input_tokens < 1:
            raise ValueError("max_input_tokens must be at least 1")
        if self.backend not in ("hashed_ngram", "remote"):
            raise ValueError(f"unknown embedder backend {self.backend!r}")


class Embedder(Protocol):
    spec: EmbedderSpec

    def embed_text(self, text: str) -> EmbeddingVector: ...

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]: ...


def _bucket(gram: str, dims: int) -> int:
    # blake2b gives a stable hash across processes and runs, unlike hash().
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dims


class HashedNgramEmbedder:
    """Deterministic offline embedder over hashed character trigrams.

    Text is casefolded and whitespace-collapsed, split into overlapping
    trigrams (the whole string when shorter than three characters), and
    each trigram increments one of ``dims`` buckets picked by a stable
    hash. The bucket counts are L2-normalized.

    Inputs over the token budget are truncated first; ``truncations``
    counts how often that happened.
    """

    def __init__(self, spec: EmbedderSpec | None = None):
        self.spec = spec or EmbedderSpec()
        self.truncations = 0
        self._lock = threading.Lock()

    def embed_text(self, text: str) -> EmbeddingVector:
        normalized = _WS_RE.sub(" ", text).strip().casefold()
        if not normalized:
            raise EmbeddingError("cannot embed empty text")
        if approx_token_count(normalized) > self.spec.max_input_tokens:
            normalized = truncate_to_tokens(
                normalized, self.spec.max_input_tokens
            )
            with self._lock:
                self.truncations += 1
        dims = self.spec.dims
        acc = np.zeros(dims, dtype=np.float64)
        if len(normalized) < 3:
            acc[_bucket(normalized, dims)] += 1.0
        else:
            for i in range(len(normalized) - 2):
                acc[_bucket(normalized[i : i + 3], dims)] += 1.0
        acc /= np.linalg.norm(acc)
        return EmbeddingVector(values=acc, dims=dims, normalized=True)

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [self.embed_text(t) for t in texts]


class EmbedBatchError(RuntimeError):
    """A batch where some items failed.

    ``results`` aligns with the input order; failed slots hold None and
    ``errors`` maps those indexes to messages.
    """

    def __init__(
        self,
        results: list[EmbeddingVector | None],
        errors: dict[int, str],
    ):
        super().__init__(f"{len(errors)} of {len(results)} items failed")
        self.results = results
        self.errors = errors


class RemoteEmbedder:
    """Embedder backed by an HTTP service.

    Request: {"model": str, "texts": [str, ...]}
    Response: {"embeddings": [[float, ...], ...]} in input order.

    Vectors are re-normalized locally so downstream code can rely on unit
    norm regardless of what the service returned.
    """

    def __init__(
        self,
        spec: EmbedderSpec,
        profile: EndpointProfile,
        batch_size: int = 32,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        self.spec = spec
        self.profile = profile
        self.batch_size = batch_size
        self.truncations = 0

    def _prepare(self, text: str) -> str:
        if not text.strip():
            raise EmbeddingError("cannot embed empty text")
        if approx_token_count(text) > self.spec.max_input_tokens:
            self.truncations += 1
            return truncate_to_tokens(text, self.spec.max_input_tokens)
        return text

    def _embed_window(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        payload = {"model": self.profile.model, "texts": list(texts)}
        body = post_json(self.profile, payload)
        rows = body.get("embeddings")
        if not isinstance(rows, list) or len(rows) != len(texts):
            raise TransportError(
                "embedding response shape mismatch", retryable=False
            )
        out = []
        for row in rows:
            arr = np.asarray(row, dtype=np.float64)
            if arr.shape != (self.spec.dims,):
                raise TransportError(
                    f"service returned {arr.shape} for dims {self.spec.dims}",
                    retryable=False,
                )
            norm = float(np.linalg.norm(arr))
            if norm == 0.0 or not math.isfinite(norm):
                raise TransportError(
                    "service returned a degenerate vector", retryable=False
                )
            out.append(
                EmbeddingVector(arr / norm, self.spec.dims, normalized=True)
            )
        return out

    def embed_text(self, text: str) -> EmbeddingVector:
        return self._embed_window([self._prepare(text)])[0]

    def embed_batch(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        """Embed texts in windows; partial failures raise EmbedBatchError."""
        results: list[EmbeddingVector | None] = [None] * len(texts)
        errors: dict[int, str] = {}
        for start in range(0, len(texts), self.batch_size):
            idx = range(start, min(start + self.batch_size, len(texts)))
            prepared = []
            live = []
            for i in idx:
                try:
                    prepared.append(self._prepare(texts[i]))
                    live.append(i)
                except EmbeddingError as exc:
                    errors[i] = str(exc)
            if not live:
                continue
            try:
                vectors = self._embed_window(prepared)
            except TransportError as exc:
                for i in live:
                    errors[i] = str(exc)
                continue
            for i, vec in zip(live, vectors):
                results[i] = vec
        if errors:
            raise EmbedBatchError(results, errors)
        return [r for r in results if r is not None]


def build_embedder(
    spec: EmbedderSpec,
    profile: EndpointProfile | None = None,
) -> Embedder:
    """Instantiate the backend named by the spec."""
    if spec.backend == "hashed_ngram":
        return HashedNgramEmbedder(spec)
    if profile is None:
        raise ValueError("remote backend needs an endpoint profile")
    return RemoteEmbedder(spec, profile)


def embed_text(text: str, spec: EmbedderSpec) -> EmbeddingVector:
    """One-shot embedding with the offline backend from a bare spec."""
    return build_embedder(spec).embed_text(text)


def embed_batch(texts: Sequence[str], spec: EmbedderSpec) -> list[EmbeddingVector]:
    return build_embedder(spec).embed_batch(texts)


def _as_array(vec: EmbeddingVector | np.ndarray | Sequence[float]) -> np.ndarray:
    if isinstance(vec, EmbeddingVector):
        return vec.values
    return np.asarray(vec, dtype=np.float64)


def similarity(
    a: EmbeddingVector | np.ndarray | Sequence[float],
    b: EmbeddingVector | np.ndarray | Sequence[float],
    metric: Metric | str,
) -> float:
    """Compare two vectors under a metric.

    l2 returns the Euclidean distance (smaller is closer); dot and cosine
    return the usual products (larger is closer). Cosine rejects
    zero-norm inputs.
    """
    metric = Metric(metric)
    va = _as_array(a)
    vb = _as_array(b)
    if va.shape != vb.shape or va.ndim != 1:
        raise ValueError(f"shape mismatch: {va.shape} vs {vb.shape}")
    if metric is Metric.L2:
        return float(np.linalg.norm(va - vb))
    if metric is Metric.DOT:
        return float(va @ vb)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine is undefined for zero-norm vectors")
    return float((va @ vb) / (na * nb))
