import math

import pytest

import mlab


def test_bounds_reference_values():
    assert mlab.pairwise_error_bound(0.5, 100) == pytest.approx(0.0620154144, abs=1e-9)
    assert mlab.sufficient_k_pairwise(0.1, 0.05) == 1879
    assert mlab.sufficient_k_quadratic(0.1, 0.05) == 5259
    assert mlab.sufficient_k_recall(0.2, 0.05, 1000, 10) == 1302
    assert mlab.sufficient_k_boolean(16, 64, 0.05) == 107693
    assert mlab.boolean_min_margin(8, 32) == pytest.approx(0.0441941738, abs=1e-9)
    assert mlab.attention_sufficient_k(4, 10000, 1.0) == 10611


def test_idf_and_bm25():
    assert mlab.idf(2, 1) == pytest.approx(math.log(2.0))
    assert mlab.idf(1000, 10) == pytest.approx(4.5573795222, abs=1e-9)
    assert mlab.bm25_doc_weight(3, 20.0, 10.0) == pytest.approx(1.294117647, abs=1e-9)


def test_margin_and_errors():
    q, d1, d2 = {0: 1.0}, {0: 1.0, 3: 1.0}, {1: 1.0, 4: 1.0}
    assert mlab.normalized_margin(q, d1, d2) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        mlab.pairwise_error_counts(q, d2, d1, "rademacher", [8, 16], 10, 1)
    with pytest.raises(ValueError):
        mlab.project(q, "cauchy", 4, 10, 1)


def test_projection_is_deterministic_and_prefix_consistent():
    x = {2: 1.0, 7: -0.5}
    a = mlab.project(x, "gaussian", 16, 100, 5)
    assert a == mlab.project(x, "gaussian", 16, 100, 5)
    assert mlab.project(x, "gaussian", 8, 100, 5) == pytest.approx([v * 2 ** 0.5 for v in a[:8]])


def test_pairwise_counts_decrease_with_k():
    q, d1, d2 = {0: 1.0}, {0: 2.0}, {0: 1.0, 1: 1.0}
    counts = mlab.pairwise_error_counts(q, d1, d2, "gaussian", [4, 64, 1024], 500, 3)
    assert len(counts) == 3
    assert counts[0] >= counts[2]
    assert counts == mlab.pairwise_error_counts(q, d1, d2, "gaussian", [4, 64, 1024], 500, 3, threads=3)


def test_sparse_index_search(tmp_path):
    docs = [("a", "the cat sat"), ("b", "the dog sat on the cat"), ("c", "birds fly")]
    index = mlab.SparseIndex(docs, scheme="bm25")
    assert len(index) == 3
    assert index.doc_ids == ["a", "b", "c"]
    hits = index.search("cat", k=2)
    assert [h[0] for h in hits] == ["a", "b"]
    scores = index.score_all("cat")
    assert scores[2] == 0.0
    q = index.query_vector("cat")
    explicit = sum(w * index.doc_vector(0).get(t, 0.0) for t, w in q.items())
    assert scores[0] == pytest.approx(explicit, abs=1e-12)
    path = tmp_path / "idx.bin"
    index.save(str(path))
    assert mlab.SparseIndex.load(str(path)).search("cat", k=2) == hits


def test_min_k_csv_and_grid():
    grid = mlab.default_grid()
    assert len(grid) == 40 and grid[0] == 32 and grid[-1] == 9472
    docs = [{t: 1.0, t + 1: 0.5, 50 + i: 1.0} for i, t in enumerate(range(0, 20))]
    queries = [{3: 1.0, 4: 1.0}, {10: 1.0}]
    csv = mlab.min_k_per_bin(docs, queries, seed=2, trials=50, num_bins=2, samples_per_bin=3, grid=[16, 64, 256])
    lines = csv.strip().splitlines()
    assert lines[0].startswith("bin_lo,bin_hi,n_triples")
    assert len(lines) >= 2


def test_hard_attention():
    assert mlab.hard_attention([0, 1], [0, 0, 2]) == 1.0
    assert mlab.hard_attention([0, 1], [2]) == 0.0


def test_verify_bounds_small():
    rows = mlab.verify_bounds(trials=50, seed=1)
    assert [r["id"] for r in rows] == [
        "pairwise_bound",
        "sufficient_k",
        "boolean",
        "recall_bound",
        "segment_margin",
        "attention",
    ]
