"""Inverted-file index: coarse k-means cells, a probe picks a few.

Training runs k-means++ seeding plus a fixed number of Lloyd iterations,
all in float64 and driven by a seeded generator, so the same inserts and
config always produce the same cells. Assignment and probing both use the
index metric: nearest centroid for l2, largest dot for dot, largest
cosine for cosine (centroids are kept unit-norm in that case). Probing
the cells whose centroids score best against the query under the same
geometry that assigned the vectors is what keeps recall usable.

Training freezes the index; probing all cells degenerates to exact
brute-force search.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..embedding import EmbeddingVector, Metric
from .base import IndexConfig, IndexKind, SearchHit, VectorIndex

KMEANS_ITERATIONS = 20


class IvfIndex(VectorIndex):
    def __init__(self, config: IndexConfig):
        if config.kind is not IndexKind.IVF:
            raise ValueError(f"config kind {config.kind} is not ivf")
        super().__init__(config)
        self._centroids: np.ndarray | None = None
        self._lists: list[np.ndarray] = []

    @property
    def trained(self) -> bool:
        return self._centroids is not None

    def _assign(self, points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
        """Cell index per point, under the index metric."""
        if self.metric is Metric.L2:
            # argmin over squared distances; the expansion avoids a
            # (points x cells x dims) intermediate.
            d2 = (
                np.einsum("id,id->i", points, points)[:, None]
                - 2.0 * points @ centroids.T
                + np.einsum("cd,cd->c", centroids, centroids)[None, :]
            )
            return np.argmin(d2, axis=1)
        return np.argmax(points @ centroids.T, axis=1)

    def _seed_centroids(
        self, points: np.ndarray, rng: np.random.Generator
    ) -> np.ndarray:
        """k-means++ seeding: spread the initial centroids apart."""
        n = points.shape[0]
        nlist = self.config.ivf_nlist
        chosen = [int(rng.integers(n))]
        d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
        for _ in range(nlist - 1):
            total = float(d2.sum())
            if total <= 0.0:
                pick = int(rng.integers(n))
            else:
                pick = int(rng.choice(n, p=d2 / total))
            chosen.append(pick)
            d2 = np.minimum(d2, np.sum((points - points[pick]) ** 2, axis=1))
        return points[chosen].copy()

    def train(self) -> None:
        """Cluster the stored vectors and freeze the index."""
        if self.trained:
            raise RuntimeError("index is already trained")
        nlist = self.config.ivf_nlist
        if self._size < nlist:
            raise ValueError(
                f"need at least {nlist} vectors to train, have {self._size}"
            )
        points = self._vectors().astype(np.float64)
        spherical = self.metric is Metric.COSINE
        rng = np.random.default_rng(self.config.seed)
        centroids = self._seed_centroids(points, rng)
        if spherical:
            centroids = _unit_rows(centroids)

        for _ in range(KMEANS_ITERATIONS):
            assign = self._assign(points, centroids)
            for cell in range(nlist):
                members = points[assign == cell]
                if len(members) == 0:
                    continue  # keep the old centroid for empty cells
                mean = members.mean(axis=0)
                if spherical:
                    norm = np.linalg.norm(mean)
                    if norm == 0.0:
                        continue
                    mean = mean / norm
                centroids[cell] = mean

        assign = self._assign(points, centroids)
        self._centroids = centroids
        self._lists = [
            np.flatnonzero(assign == cell).astype(np.uint32)
            for cell in range(nlist)
        ]
        self.freeze()

    def _centroid_scores(self, query: np.ndarray) -> np.ndarray:
        assert self._centroids is not None
        if self.metric is Metric.L2:
            return -np.linalg.norm(self._centroids - query, axis=1)
        return self._centroids @ query

    def search(
        self,
        query: EmbeddingVector | np.ndarray | Sequence[float],
        k: int,
    ) -> list[SearchHit]:
        if not self.trained:
            raise RuntimeError("ivf index must be trained before searching")
        self._check_k(k)
        q = self._prepare_query(query)
        scores = self._centroid_scores(q)
        # Equal-scoring cells probe in index order.
        order = np.lexsort((np.arange(len(scores)), -scores))
        probed = order[: self.config.ivf_nprobe]
        rows = np.concatenate([self._lists[c] for c in probed]) if len(
            probed
        ) else np.empty(0, dtype=np.uint32)
        return self._rank_rows(q, rows.astype(np.int64), k)


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return matrix / norms
