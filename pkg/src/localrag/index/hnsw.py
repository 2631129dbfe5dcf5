"""Navigable small-world graph index with layered links.

Every vector gets a random level drawn from a geometric-like distribution
with factor 1/ln(M); higher layers are sparser and act as an express
lane. A query greedily descends from the top layer, then runs a beam
search of width ef over layer 0. Inserts run the same beam with width
ef_construction and connect the new node to its nearest M (2M at layer 0)
finds, keeping reverse links trimmed to the same caps by plain distance.
Neighbor selection is the simple kind: nearest wins, no diversity
heuristic.

The level generator is seeded from the config, so a fixed insert order
reproduces the exact same graph.
"""

from __future__ import annotations

import heapq
import math
from typing import Sequence

import numpy as np

from ..embedding import EmbeddingVector, Metric
from .base import IndexConfig, IndexKind, SearchHit, VectorIndex


class HnswIndex(VectorIndex):
    def __init__(self, config: IndexConfig):
        if config.kind is not IndexKind.HNSW:
            raise ValueError(f"config kind {config.kind} is not hnsw")
        super().__init__(config)
        self._ml = 1.0 / math.log(config.hnsw_m)
        self._rng = np.random.default_rng(config.seed)
        self._levels: list[int] = []
        self._neighbors: list[list[list[int]]] = []
        self._entry = -1
        self._max_level = -1

    def _level_cap(self, level: int) -> int:
        # Layer 0 allows twice the links of the upper layers.
        return self.config.hnsw_m * 2 if level == 0 else self.config.hnsw_m

    def _draw_level(self) -> int:
        u = 1.0 - self._rng.random()  # uniform on (0, 1]
        return int(-math.log(u) * self._ml)

    def _dist_many(self, query: np.ndarray, rows: Sequence[int]) -> np.ndarray:
        """Internal smaller-is-better distances from query to rows.

        Squared distance for l2 (same ordering, no sqrt), negated dot for
        dot and cosine.
        """
        block = self._matrix[np.asarray(rows, dtype=np.int64)].astype(np.float64)
        if self.metric is Metric.L2:
            return (
                np.einsum("nd,nd->n", block, block)
                - 2.0 * (block @ query)
                + float(query @ query)
            )
        return -(block @ query)

    def _dist_one(self, query: np.ndarray, row: int) -> float:
        return float(self._dist_many(query, [row])[0])

    def _search_layer(
        self,
        query: np.ndarray,
        entries: list[tuple[float, int]],
        ef: int,
        level: int,
    ) -> list[tuple[float, int]]:
        """Beam search one layer. Returns up to ef (distance, row) pairs
        sorted nearest first."""
        visited = {row for _, row in entries}
        candidates = list(entries)
        heapq.heapify(candidates)
        best = [(-d, row) for d, row in entries]
        heapq.heapify(best)
        while candidates:
            dist, row = heapq.heappop(candidates)
            if dist > -best[0][0] and len(best) >= ef:
                break
            fresh = [n for n in self._neighbors[row][level] if n not in visited]
            if not fresh:
                continue
            visited.update(fresh)
            dists = self._dist_many(query, fresh)
            for d, n in zip(dists.tolist(), fresh):
                if len(best) < ef or d < -best[0][0]:
                    heapq.heappush(candidates, (d, n))
                    heapq.heappush(best, (-d, n))
                    if len(best) > ef:
                        heapq.heappop(best)
        return sorted((-negd, row) for negd, row in best)

    def _trim(self, node: int, links: list[int], cap: int) -> list[int]:
        dists = self._dist_many(self._row_f64(node), links)
        order = np.argsort(dists, kind="stable")[:cap]
        return [links[i] for i in order]

    def _after_add(self, row: int) -> None:
        level = self._draw_level()
        self._levels.append(level)
        self._neighbors.append([[] for _ in range(level + 1)])
        if self._entry < 0:
            self._entry = row
            self._max_level = level
            return
        query = self._row_f64(row)
        ep = [(self._dist_one(query, self._entry), self._entry)]
        for lvl in range(self._max_level, level, -1):
            ep = self._search_layer(query, ep, 1, lvl)
        for lvl in range(min(level, self._max_level), -1, -1):
            found = self._search_layer(
                query, ep, self.config.hnsw_ef_construction, lvl
            )
            cap = self._level_cap(lvl)
            chosen = [r for _, r in found[: self.config.hnsw_m if lvl else cap]]
            self._neighbors[row][lvl] = list(chosen)
            for other in chosen:
                links = self._neighbors[other][lvl]
                links.append(row)
                if len(links) > cap:
                    self._neighbors[other][lvl] = self._trim(other, links, cap)
            ep = found
        if level > self._max_level:
            self._entry = row
            self._max_level = level

    def search(
        self,
        query: EmbeddingVector | np.ndarray | Sequence[float],
        k: int,
    ) -> list[SearchHit]:
        self._check_k(k)
        q = self._prepare_query(query)
        if self._size == 0:
            return []
        ep = [(self._dist_one(q, self._entry), self._entry)]
        for lvl in range(self._max_level, 0, -1):
            ep = self._search_layer(q, ep, 1, lvl)
        ef = max(self.config.hnsw_ef_search, k)
        found = self._search_layer(q, ep, ef, 0)
        rows = np.asarray([row for _, row in found], dtype=np.int64)
        return self._rank_rows(q, rows, k)
