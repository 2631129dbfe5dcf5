from __future__ import annotations

import numpy as np
import pytest

from localrag.index import FlatIndex, IndexConfig, IndexFrozenError, IvfIndex
from oracles import brute_force_topk, recall_at_k


def _fixture(n=300, dims=16, seed=0):
    rng = np.random.default_rng(seed)
    vectors = rng.normal(size=(n, dims)).astype(np.float32)
    ids = [f"c{i:04d}" for i in range(n)]
    queries = rng.normal(size=(20, dims)).astype(np.float32)
    return ids, vectors, queries


def _build(metric="l2", nlist=16, nprobe=4, n=300, dims=16, seed=0) -> IvfIndex:
    ids, vectors, _ = _fixture(n=n, dims=dims, seed=seed)
    index = IvfIndex(
        IndexConfig(
            kind="ivf",
            metric=metric,
            dims=dims,
            seed=seed,
            ivf_nlist=nlist,
            ivf_nprobe=nprobe,
        )
    )
    for cid, vec in zip(ids, vectors):
        index.add(cid, vec)
    return index


class TestTraining:
    def test_search_before_train_rejected(self):
        index = _build()
        with pytest.raises(RuntimeError, match="trained"):
            index.search(np.zeros(16), 1)

    def test_train_requires_enough_vectors(self):
        index = IvfIndex(
            IndexConfig(kind="ivf", metric="l2", dims=4, ivf_nlist=8, ivf_nprobe=2)
        )
        index.add("a", [1.0, 0.0, 0.0, 0.0])
        with pytest.raises(ValueError, match="at least 8"):
            index.train()

    def test_train_twice_rejected(self):
        index = _build()
        index.train()
        with pytest.raises(RuntimeError, match="already"):
            index.train()

    def test_train_freezes(self):
        index = _build()
        index.train()
        assert index.frozen
        with pytest.raises(IndexFrozenError):
            index.add("late", np.zeros(16, dtype=np.float32))

    def test_training_deterministic_for_seed(self):
        a = _build(seed=3)
        b = _build(seed=3)
        a.train()
        b.train()
        assert np.array_equal(a._centroids, b._centroids)
        for la, lb in zip(a._lists, b._lists):
            assert np.array_equal(la, lb)

    def test_posting_lists_partition_everything(self):
        index = _build()
        index.train()
        rows = np.concatenate(index._lists)
        assert sorted(rows.tolist()) == list(range(len(index)))


class TestSearch:
    @pytest.mark.parametrize("metric", ["l2", "dot", "cosine"])
    def test_full_probe_identical_to_flat(self, metric):
        ids, vectors, queries = _fixture()
        ivf = _build(metric=metric, nlist=16, nprobe=16)
        ivf.train()
        flat = FlatIndex(IndexConfig(kind="flat", metric=metric, dims=16))
        for cid, vec in zip(ids, vectors):
            flat.add(cid, vec)
        for query in queries:
            got = [(h.chunk_id, h.score) for h in ivf.search(query, 10)]
            want = [(h.chunk_id, h.score) for h in flat.search(query, 10)]
            assert got == want

    def test_single_cell_degenerates_to_flat(self):
        ids, vectors, queries = _fixture(n=40)
        ivf = _build(nlist=1, nprobe=1, n=40)
        ivf.train()
        truth = brute_force_topk(ids, vectors, queries[0], "l2", 5)
        got = [h.chunk_id for h in ivf.search(queries[0], 5)]
        assert got == truth

    @pytest.mark.parametrize("metric", ["l2", "dot", "cosine"])
    def test_partial_probe_recall_reasonable(self, metric):
        # fine partition, probing an eighth of the cells
        ids, vectors, queries = _fixture(n=400, dims=16, seed=1)
        index = IvfIndex(
            IndexConfig(
                kind="ivf",
                metric=metric,
                dims=16,
                seed=1,
                ivf_nlist=320,
                ivf_nprobe=40,
            )
        )
        for cid, vec in zip(ids, vectors):
            index.add(cid, vec)
        index.train()
        total = 0.0
        for query in queries:
            truth = brute_force_topk(ids, vectors, query, metric, 10)
            got = [h.chunk_id for h in index.search(query, 10)]
            total += recall_at_k(truth, got)
        assert total / len(queries) >= 0.8

    def test_fewer_candidates_than_k(self):
        # probing one cell of a fine partition can return fewer than k
        index = _build(nlist=150, nprobe=1, n=300)
        index.train()
        hits = index.search(np.zeros(16, dtype=np.float32), 20)
        assert 0 < len(hits) <= 20
        assert [h.rank for h in hits] == list(range(len(hits)))

    def test_search_deterministic(self):
        index = _build(nlist=32, nprobe=4)
        index.train()
        query = np.ones(16, dtype=np.float32)
        first = [(h.chunk_id, h.score) for h in index.search(query, 10)]
        for _ in range(3):
            assert [(h.chunk_id, h.score) for h in index.search(query, 10)] == first
