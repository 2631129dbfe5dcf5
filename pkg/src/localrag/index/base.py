"""Shared machinery for the vector indexes.

All indexes store vectors as float32 rows in one contiguous matrix (so a
saved file reproduces the exact in-memory values) and upcast to float64
for every score computation. Scores are uniformly larger-is-better: l2 is
reported as the negated Euclidean distance, dot and cosine as the product.
Equal scores rank by ascending chunk id, which makes every search result
deterministic.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

from ..embedding import EmbeddingVector, Metric


class IndexKind(str, Enum):
    FLAT = "flat"
    IVF = "ivf"
    HNSW = "hnsw"


class IndexFrozenError(RuntimeError):
    """An add arrived after the index stopped accepting vectors."""


@dataclass
class IndexConfig:
    """Construction parameters for any index kind."""

    kind: IndexKind
    metric: Metric
    dims: int
    seed: int = 0
    ivf_nlist: int = 64
    ivf_nprobe: int = 8
    hnsw_m: int = 16
    hnsw_ef_construction: int = 200
    hnsw_ef_search: int = 64

    def __post_init__(self) -> None:
        self.kind = IndexKind(self.kind)
        self.metric = Metric(self.metric)
        if self.dims < 1:
            raise ValueError("dims must be positive")
        if self.ivf_nlist < 1 or self.ivf_nprobe < 1:
            raise ValueError("ivf_nlist and ivf_nprobe must be positive")
        if self.ivf_nprobe > self.ivf_nlist:
            raise ValueError("ivf_nprobe cannot exceed ivf_nlist")
        if self.hnsw_m < 2:
            raise ValueError("hnsw_m must be at least 2")
        if self.hnsw_ef_construction < 1 or self.hnsw_ef_search < 1:
            raise ValueError("hnsw ef parameters must be positive")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "metric": self.metric.value,
            "dims": self.dims,
            "seed": self.seed,
            "ivf_nlist": self.ivf_nlist,
            "ivf_nprobe": self.ivf_nprobe,
            "hnsw_m": self.hnsw_m,
            "hnsw_ef_construction": self.hnsw_ef_construction,
            "hnsw_ef_search": self.hnsw_ef_search,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IndexConfig":
        return cls(**data)


@dataclass
class SearchHit:
    """One result row: the stored id, its score, and its 0-based rank."""

    chunk_id: str
    score: float
    rank: int


class VectorIndex(ABC):
    """Base class owning vector storage, validation, and ranking."""

    def __init__(self, config: IndexConfig):
        self.config = config
        self._ids: list[str] = []
        self._id_rows: dict[str, int] = {}
        self._matrix = np.zeros((0, config.dims), dtype=np.float32)
        self._size = 0
        self._frozen = False

    def __len__(self) -> int:
        return self._size

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def metric(self) -> Metric:
        return self.config.metric

    def freeze(self) -> None:
        """Stop accepting vectors. Idempotent."""
        self._frozen = True

    def _coerce(
        self, vector: EmbeddingVector | np.ndarray | Sequence[float]
    ) -> np.ndarray:
        if isinstance(vector, EmbeddingVector):
            arr = vector.values
        else:
            arr = np.asarray(vector, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] != self.config.dims:
            raise ValueError(
                f"expected a {self.config.dims}-dim vector, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError("vector has non-finite entries")
        return arr.astype(np.float64)

    def add(
        self,
        chunk_id: str,
        vector: EmbeddingVector | np.ndarray | Sequence[float],
    ) -> None:
        """Insert one vector under an id unique to this index."""
        if self._frozen:
            raise IndexFrozenError(f"index is frozen, cannot add {chunk_id!r}")
        if not chunk_id:
            raise ValueError("chunk_id must be non-empty")
        if chunk_id in self._id_rows:
            raise ValueError(f"duplicate chunk_id {chunk_id!r}")
        arr = self._coerce(vector)
        if self.metric is Metric.COSINE:
            norm = float(np.linalg.norm(arr))
            if norm == 0.0:
                raise ValueError("cosine index rejects zero-norm vectors")
            arr = arr / norm
        if self._size == self._matrix.shape[0]:
            grown = max(64, self._matrix.shape[0] * 2)
            matrix = np.zeros((grown, self.config.dims), dtype=np.float32)
            matrix[: self._size] = self._matrix[: self._size]
            self._matrix = matrix
        self._matrix[self._size] = arr.astype(np.float32)
        self._id_rows[chunk_id] = self._size
        self._ids.append(chunk_id)
        self._size += 1
        self._after_add(self._size - 1)

    def _after_add(self, row: int) -> None:
        """Hook for subclasses that maintain structure per insert."""

    def _vectors(self) -> np.ndarray:
        """The live float32 rows, shape (len(self), dims)."""
        return self._matrix[: self._size]

    def _row_f64(self, row: int) -> np.ndarray:
        return self._matrix[row].astype(np.float64)

    def _prepare_query(
        self, query: EmbeddingVector | np.ndarray | Sequence[float]
    ) -> np.ndarray:
        arr = self._coerce(query)
        if self.metric is Metric.COSINE:
            norm = float(np.linalg.norm(arr))
            if norm == 0.0:
                raise ValueError("cosine search rejects zero-norm queries")
            arr = arr / norm
        return arr

    def _score_rows(self, query: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """Larger-is-better scores for the given rows, float64 math."""
        block = self._matrix[rows].astype(np.float64)
        if self.metric is Metric.L2:
            return -np.linalg.norm(block - query, axis=1)
        return block @ query

    def _rank_rows(
        self, query: np.ndarray, rows: np.ndarray, k: int
    ) -> list[SearchHit]:
        """Exactly score candidate rows and keep the top k.

        Ties on score break toward the smaller chunk id. When the pool is
        much larger than k a partition pass narrows it first, keeping
        every row tied with the k-th score so tie-breaks stay exact.
        """
        if len(rows) == 0:
            return []
        scores = self._score_rows(query, rows)
        k_eff = min(k, len(rows))
        pool = np.arange(len(rows))
        if len(rows) > 4 * k_eff:
            part = np.argpartition(-scores, k_eff - 1)
            kth = scores[part[k_eff - 1]]
            pool = np.flatnonzero(scores >= kth)
        ranked = sorted(
            pool.tolist(),
            key=lambda i: (-scores[i], self._ids[rows[i]]),
        )[:k_eff]
        return [
            SearchHit(
                chunk_id=self._ids[rows[i]],
                score=float(scores[i]),
                rank=rank,
            )
            for rank, i in enumerate(ranked)
        ]

    def _check_k(self, k: int) -> None:
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")

    @abstractmethod
    def search(
        self,
        query: EmbeddingVector | np.ndarray | Sequence[float],
        k: int,
    ) -> list[SearchHit]:
        """Return up to k hits, best first."""

    def chunk_ids(self) -> list[str]:
        """All stored ids in insertion order."""
        return list(self._ids)
