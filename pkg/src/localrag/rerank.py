"""Second-stage scoring of retrieved passages.

The offline scorer measures how much of the query's vocabulary a passage
covers: distinct shared tokens over distinct query tokens, using the same
approximate tokenizer as ingestion. A remote scorer can swap in for a
real cross-encoder service. Either way the contract is the same: scores
land in [0, 1] and candidates come back sorted best first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Protocol, Sequence

from .ingest import tokenize
from .remote import EndpointProfile, TransportError, post_json


@dataclass
class ScoredPassage:
    """A retrieved chunk carrying both scoring stages."""

    chunk_id: str
    text: str
    retrieval_score: float
    rerank_score: float = 0.0

    def __post_init__(self) -> None:
        if not self.chunk_id:
            raise ValueError("chunk_id must be non-empty")
        if not 0.0 <= self.rerank_score <= 1.0:
            raise ValueError(
                f"rerank_score {self.rerank_score} outside [0, 1]"
            )

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "text": self.text,
            "retrieval_score": self.retrieval_score,
            "rerank_score": self.rerank_score,
        }


class PairScorer(Protocol):
    def score_pair(self, query: str, passage: str) -> float: ...


class LexicalOverlapScorer:
    """Query-coverage scorer: |tokens(q) ∩ tokens(p)| / |tokens(q)|.

    Token sets are casefolded, so case differences in non-CJK text do not
    break the overlap. A query whose tokens all appear in the passage
    scores 1.0; nothing shared scores 0.0.
    """

    def score_pair(self, query: str, passage: str) -> float:
        if not query or not passage:
            raise ValueError("query and passage must be non-empty")
        q_tokens = {t.casefold() for t in tokenize(query)}
        if not q_tokens:
            return 0.0
        p_tokens = {t.casefold() for t in tokenize(passage)}
        return len(q_tokens & p_tokens) / len(q_tokens)


def _squash(x: float) -> float:
    return 1.0 / (1.0 + math.exp(-x))


class RemoteReranker:
    """Pair scorer backed by an HTTP cross-encoder.

    Request: {"model": str, "query": str, "passages": [str, ...]}
    Response: {"scores": [float, ...]} aligned with the passages.

    Services that emit raw logits get squashed through a logistic so the
    [0, 1] contract still holds.
    """

    def __init__(self, profile: EndpointProfile):
        self.profile = profile

    def score_batch(self, query: str, passages: Sequence[str]) -> list[float]:
        if not query or not passages:
            raise ValueError("query and passages must be non-empty")
        payload = {
            "model": self.profile.model,
            "query": query,
            "passages": list(passages),
        }
        body = post_json(self.profile, payload)
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(passages):
            raise TransportError(
                "rerank response shape mismatch", retryable=False
            )
        values = [float(s) for s in scores]
        if any(not math.isfinite(v) for v in values):
            raise TransportError(
                "rerank response has non-finite scores", retryable=False
            )
        if any(v < 0.0 or v > 1.0 for v in values):
            values = [_squash(v) for v in values]
        return values

    def score_pair(self, query: str, passage: str) -> float:
        return self.score_batch(query, [passage])[0]


def rerank(
    query: str,
    candidates: Sequence[ScoredPassage],
    top_k: int,
    scorer: PairScorer,
) -> list[ScoredPassage]:
    """Score candidates against the query and keep the best top_k.

    Sorting is by rerank score descending; ties fall back to retrieval
    score descending, then ascending chunk id. Inputs are not mutated.
    """
    if top_k < 1:
        raise ValueError(f"top_k must be positive, got {top_k}")
    if not candidates:
        return []
    seen = set()
    for candidate in candidates:
        if candidate.chunk_id in seen:
            raise ValueError(f"duplicate chunk_id {candidate.chunk_id!r}")
        seen.add(candidate.chunk_id)
    if isinstance(scorer, RemoteReranker):
        scores = scorer.score_batch(query, [c.text for c in candidates])
    else:
        scores = [scorer.score_pair(query, c.text) for c in candidates]
    rescored = [
        replace(candidate, rerank_score=score)
        for candidate, score in zip(candidates, scores)
    ]
    rescored.sort(
        key=lambda p: (-p.rerank_score, -p.retrieval_score, p.chunk_id)
    )
    return rescored[:top_k]
