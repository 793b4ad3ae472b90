#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mlab {

struct VerifyConfig {
  std::uint32_t trials = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

/// 3 sqrt(p (1 - p) / trials) with p clamped to [0, 1].
double mc_allowance(double p, std::uint32_t trials);

/// Pairwise-error cell on a synthetic triple with exact margin mu:
/// q = e_a, d1 = alpha e_a + e_c, d2 = e_b, alpha = mu sqrt(2 / (1 - mu^2)).
struct PairwiseCell {
  double mu = 0.0;
  std::uint32_t k = 0;
  std::uint32_t trials = 0;
  std::uint32_t errors = 0;
  double bound = 0.0;
  double rate() const { return static_cast<double>(errors) / trials; }
};

/// 20 margins (0.05 .. 1.0) x 20 dimensions (8 .. 2048), v = 10^4.
std::vector<PairwiseCell> pairwise_bound_grid(const VerifyConfig& cfg);

/// `n` random margins in [0.05, 0.95], each run at k = sufficient_k_pairwise(mu, 0.05).
/// `bound` holds beta.
std::vector<PairwiseCell> sufficient_k_cases(const VerifyConfig& cfg, std::size_t n = 50);

/// Boolean collection with at most L_Q = 8 query and L_D = 32 document terms,
/// run at k = sufficient_k_boolean(8, 32, 0.05) on its hardest triples.
struct BooleanCheck {
  std::uint64_t max_query_terms = 8;
  std::uint64_t max_doc_terms = 32;
  std::uint64_t k = 0;
  double eps = 0.0;
  std::size_t num_triples = 0;
  double min_margin = 0.0;
  std::vector<PairwiseCell> hardest;
};
BooleanCheck boolean_end_to_end(const VerifyConfig& cfg, std::size_t hardest = 10);

/// Recall failure frequency on a synthetic collection where every document
/// has a known positive margin against the target.
struct RecallBoundCell {
  std::size_t collection = 0;
  std::uint32_t r0 = 0;
  double eps = 0.0;
  std::uint32_t k = 0;
  std::uint32_t trials = 0;
  std::uint32_t failures = 0;
  double bound = 0.0;
  double rate() const { return static_cast<double>(failures) / trials; }
};
/// |D| in {100, 1000} x r0 in {1, 10}, four k values each.
std::vector<RecallBoundCell> recall_bound_cells(const VerifyConfig& cfg);

struct SegmentMarginSweep {
  std::size_t instances = 0;
  std::size_t witnessed = 0;
  std::size_t violations = 0;
  std::size_t same_max_segment = 0;
  /// Largest relative error of ||d1-d2||^2 = ||D_i||^2 + ||D_not_i||^2 over all
  /// instances and segments.
  double max_decomposition_error = 0.0;
};
SegmentMarginSweep segment_margin_sweep(const VerifyConfig& cfg, std::size_t instances = 100000);

struct AttentionCheck {
  std::size_t sequences = 0;
  std::size_t mismatches = 0;
  /// Query sequences with repeated tokens, checked against matched_positions.
  std::size_t repeat_sequences = 0;
  std::size_t repeat_mismatches = 0;
  std::uint64_t k = 0;
  std::uint32_t trials = 0;
  std::uint32_t flips = 0;
};
AttentionCheck attention_check(const VerifyConfig& cfg, std::size_t sequences = 10000);

struct CheckOutcome {
  std::string id;
  std::string title;
  bool passed = false;
  std::string detail;
};

/// Runs every check above and applies the pass rules.
std::vector<CheckOutcome> verify_bounds(const VerifyConfig& cfg);

}  // namespace mlab
