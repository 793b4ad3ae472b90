#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlab/engine.hpp"
#include "mlab/projection.hpp"
#include "mlab/sparse_vector.hpp"

namespace mlab {

/// Partition of the vocabulary into m segments.
///   contiguous: term t goes to floor(t * m / v), i.e. m equal ranges;
///   hashed:     term t goes to mix64(seed ^ t) mod m.
struct Segmentation {
  enum class Scheme { contiguous, hashed };

  std::uint32_t m = 1;
  Scheme scheme = Scheme::contiguous;
  std::uint64_t v = 1;
  std::uint64_t seed = 0;

  void validate() const;
  std::uint32_t segment_of(TermId term) const;
  nlohmann::ordered_json to_json() const;
  static Segmentation from_json(const nlohmann::json& j);
};

std::string_view to_string(Segmentation::Scheme s);

/// Splits d into m vectors with disjoint supports whose sum is d.
std::vector<SparseVector> segment(const SparseVector& d, const Segmentation& seg);

struct MultiVecDoc {
  DocId doc;
  std::vector<DenseVector> vectors;
};

/// Projects each sparse segment with the same matrix.
MultiVecDoc encode_multivec(DocId doc, const SparseVector& d, const Segmentation& seg, const ProjectionSpec& spec);

/// max_j <q, doc.vectors[j]>. Throws std::invalid_argument on a dim mismatch
/// or an empty document.
double multivec_score(const DenseVector& query, const MultiVecDoc& doc);

/// Index with one entry per (doc, segment); entry count = sum of m.
DenseIndex build_expanded_index(std::span<const MultiVecDoc> docs);

/// Retrieves over all (doc, segment) entries, keeps each doc's best entry and
/// returns the top-k docs. Ties by ascending doc id.
std::vector<ScoredDoc> expanded_index_topk(const DenseVector& query, const DenseIndex& expanded, std::size_t k);
std::vector<ScoredDoc> expanded_index_topk(const DenseVector& query, std::span<const MultiVecDoc> docs, std::size_t k);

/// Outcome of checking the segment-margin property on one (q, d1, d2).
struct SegmentMarginCheck {
  /// A witness segment i exists with <q,d1^(i)> = <q,d1> and <q,d2^(i)> <= <q,d2>.
  bool conditions_hold = false;
  double margin_full = 0.0;
  double margin_segment = 0.0;
  std::optional<std::uint32_t> witness;
  /// True when the witness segment is also the maximal segment for d2.
  bool same_max_segment = false;
  /// margin_segment >= margin_full - 1e-9 (meaningful only if conditions_hold).
  bool satisfied = false;
};

/// Requires <q,d1> > <q,d2>; throws std::invalid_argument otherwise.
SegmentMarginCheck check_segment_margin(const SparseVector& q, const SparseVector& d1, const SparseVector& d2,
                                        const Segmentation& seg);

}  // namespace mlab
