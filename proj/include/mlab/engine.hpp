#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mlab/projection.hpp"
#include "mlab/sparse_scoring.hpp"

namespace mlab {

/// Flat store of (doc, segment, vector) entries scanned exhaustively.
/// A document may own several entries (multi-vector encodings); its score is
/// the max over them.
class DenseIndex {
 public:
  static constexpr std::int32_t kNoSegment = -1;

  struct Entry {
    DocId doc;
    std::int32_t segment;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  explicit DenseIndex(std::uint32_t dim, std::optional<ProjectionSpec> provenance = std::nullopt);

  void add(DocId doc, std::int32_t segment, std::span<const double> vec);
  void add(DocId doc, const DenseVector& vec) { add(doc, kNoSegment, vec.values); }

  std::uint32_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::span<const Entry> entries() const noexcept { return entries_; }
  std::span<const double> vector(std::size_t entry) const;
  const std::optional<ProjectionSpec>& provenance() const noexcept { return provenance_; }
  /// One past the largest doc id present.
  std::size_t doc_bound() const noexcept { return doc_bound_; }

  /// Per-doc max inner product; docs without entries get -inf.
  std::vector<double> score_docs(std::span<const double> query) const;

  /// Binary format "MLDX1": version, dim, entry count, provenance flag and
  /// spec, then (doc u32, segment i32, dim f64) per entry. Little-endian.
  std::string serialize() const;
  static DenseIndex deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static DenseIndex load(const std::filesystem::path& path);

  friend bool operator==(const DenseIndex&, const DenseIndex&) = default;

 private:
  std::uint32_t dim_;
  std::optional<ProjectionSpec> provenance_;
  std::vector<Entry> entries_;
  std::vector<double> data_;
  std::size_t doc_bound_ = 0;
};

/// Exact maximum-inner-product top-k; per-doc max over entries, ties by
/// ascending doc id. Throws std::invalid_argument on a dimension mismatch.
std::vector<ScoredDoc> dense_topk(std::span<const double> query, const DenseIndex& index, std::size_t k);
inline std::vector<ScoredDoc> dense_topk(const DenseVector& query, const DenseIndex& index, std::size_t k) {
  return dense_topk(std::span<const double>(query.values), index, k);
}

struct HybridConfig {
  double lambda = 1.0;
  /// Candidates taken from each system before rescoring.
  std::size_t n_best = 100;

  void validate(std::size_t k) const;
};

/// Union of each system's n-best, rescored as lambda * dense + sparse.
/// `sparse_scores` and `dense_scores` hold one score per document.
std::vector<ScoredDoc> hybrid_topk(std::span<const double> sparse_scores, std::span<const double> dense_scores,
                                   const HybridConfig& cfg, std::size_t k);

std::vector<ScoredDoc> hybrid_topk(const SparseVector& sparse_query, const InvertedIndex& sparse_index,
                                   std::span<const double> dense_query, const DenseIndex& dense_index,
                                   const HybridConfig& cfg, std::size_t k);

/// Per-query inputs for tuning: precomputed per-doc scores of both systems.
struct HybridDevQuery {
  std::vector<double> sparse_scores;
  std::vector<double> dense_scores;
  std::optional<DocId> gold;
};

struct LambdaSweep {
  double best_lambda = 0.0;
  double best_mrr = 0.0;
  std::vector<double> lambdas;
  std::vector<double> mrrs;
};

/// Grid search over lambda = i * step for i = 0..round(max/step), maximizing
/// MRR@10; ties go to the smallest lambda.
LambdaSweep tune_lambda(std::span<const HybridDevQuery> dev, std::size_t n_best, double max_lambda = 5.0,
                        double step = 0.05);

/// Mean of 1/rank(gold) over queries, 0 when the gold doc is not within
/// `cutoff`. Throws std::invalid_argument if any query lacks a gold label.
double mrr_at(std::span<const std::vector<DocId>> rankings, std::span<const std::optional<DocId>> gold,
              std::size_t cutoff = 10);

/// Fraction of queries whose gold doc appears in the first r results.
double recall_at(std::span<const std::vector<DocId>> rankings, std::span<const std::optional<DocId>> gold,
                 std::size_t r);

struct RankedPassage {
  std::uint32_t length;
  bool has_answer;
};

/// Number of leading passages taken under a token budget (at least one).
std::size_t passages_within_budget(std::span<const RankedPassage> ranked, std::size_t budget);

/// 1 if any passage taken under the token budget satisfies the predicate.
double recall_at_tokens(std::span<const RankedPassage> ranked, std::size_t budget = 400);

std::vector<DocId> doc_ids(std::span<const ScoredDoc> ranked);

}  // namespace mlab
