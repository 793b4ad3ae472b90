"""Sparse, projected and multi-vector retrieval with a Monte Carlo fidelity lab."""

from ._mlab import (
    SparseIndex,
    attention_sufficient_k,
    bm25_doc_weight,
    boolean_min_margin,
    default_grid,
    hard_attention,
    idf,
    margin_rate,
    min_k_per_bin,
    normalized_margin,
    pairwise_error_bound,
    pairwise_error_counts,
    project,
    recall_error_bound,
    sufficient_k_boolean,
    sufficient_k_pairwise,
    sufficient_k_quadratic,
    sufficient_k_recall,
    verify_bounds,
)

__all__ = [
    "SparseIndex",
    "attention_sufficient_k",
    "bm25_doc_weight",
    "boolean_min_margin",
    "default_grid",
    "hard_attention",
    "idf",
    "margin_rate",
    "min_k_per_bin",
    "normalized_margin",
    "pairwise_error_bound",
    "pairwise_error_counts",
    "project",
    "recall_error_bound",
    "sufficient_k_boolean",
    "sufficient_k_pairwise",
    "sufficient_k_quadratic",
    "sufficient_k_recall",
    "verify_bounds",
]
