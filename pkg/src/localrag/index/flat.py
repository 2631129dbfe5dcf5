"""Exact brute-force index: every query scores every stored vector."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..embedding import EmbeddingVector
from .base import IndexConfig, IndexKind, SearchHit, VectorIndex


class FlatIndex(VectorIndex):
    """The reference index. Slow at scale, exact everywhere."""

    def __init__(self, config: IndexConfig):
        if config.kind is not IndexKind.FLAT:
            raise ValueError(f"config kind {config.kind} is not flat")
        super().__init__(config)

    def search(
        self,
        query: EmbeddingVector | np.ndarray | Sequence[float],
        k: int,
    ) -> list[SearchHit]:
        self._check_k(k)
        q = self._prepare_query(query)
        return self._rank_rows(q, np.arange(self._size), k)
