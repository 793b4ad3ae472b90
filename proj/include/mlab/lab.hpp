#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlab/bounds.hpp"
#include "mlab/ict.hpp"
#include "mlab/projection.hpp"
#include "mlab/sparse_scoring.hpp"

namespace mlab {

/// Candidate embedding sizes for grid searches.
struct KGrid {
  std::vector<std::uint32_t> values;
  std::string label;

  /// Throws std::invalid_argument unless there are >= 2 strictly increasing
  /// positive values.
  void validate() const;
  std::uint32_t max() const { return values.back(); }
  /// n values round(lo * (hi/lo)^(i/(n-1))), i = 0..n-1.
  static KGrid geometric(std::uint32_t lo, std::uint32_t hi, std::size_t n);
  /// 40 geometric values over [32, 9472].
  static KGrid default_grid() { return geometric(32, 9472, 40); }
  static KGrid from_values(std::vector<std::uint32_t> values);
  nlohmann::ordered_json to_json() const;
};

// ---------------------------------------------------------------------------
// Pairwise error Monte Carlo. Trial t draws the matrix with seed base_seed + t
// and counts an error when <Aq, A d2> >= <Aq, A d1>. Each k in `ks` is checked
// on the leading k rows of the same draw.

/// Error counts per entry of `ks` (strictly increasing). Requires mu > 0;
/// throws std::invalid_argument otherwise (UndefinedMargin when mu is
/// undefined).
std::vector<std::uint32_t> pairwise_error_counts(const SparseVector& q, const SparseVector& d1, const SparseVector& d2,
                                                 ProjectionKind kind, std::span<const std::uint32_t> ks,
                                                 std::uint32_t trials, std::uint64_t base_seed, unsigned threads = 1);

double estimate_pairwise_error(const SparseVector& q, const SparseVector& d1, const SparseVector& d2,
                               ProjectionKind kind, std::uint32_t k, std::uint32_t trials, std::uint64_t base_seed);

/// Several (d1, d2) pairs against one query, sharing each draw of A q.
/// `diffs[p]` is d1 - d2 for pair p; result[p][g] counts errors at ks[g].
std::vector<std::vector<std::uint32_t>> grouped_error_counts(const SparseVector& q,
                                                             std::span<const SparseVector> diffs,
                                                             ProjectionKind kind, std::span<const std::uint32_t> ks,
                                                             std::uint32_t trials, std::uint64_t base_seed,
                                                             unsigned threads = 1);

/// Recall failure counts for one query: trial t fails at ks[g] when at least
/// `r0` documents other than `winner` score >= the winner under projection.
std::vector<std::uint32_t> recall_failure_counts(const SparseVector& q, std::span<const SparseVector> docs,
                                                 DocId winner, std::uint32_t r0, ProjectionKind kind,
                                                 std::span<const std::uint32_t> ks, std::uint32_t trials,
                                                 std::uint64_t base_seed, unsigned threads = 1);

// ---------------------------------------------------------------------------
// Triple harvesting.

/// Vectors plus the (query, winner, loser) triples drawn from them. Triple
/// members index `queries` and `docs`.
struct TripleBank {
  std::vector<SparseVector> queries;
  std::vector<SparseVector> docs;
  std::vector<MarginTriple> triples;
  /// Queries scoring zero against every document.
  std::size_t skipped_queries = 0;
};

/// Winner = highest-scoring doc (lowest id among ties); one triple for every
/// other doc with a strictly positive normalized margin.
TripleBank harvest_triples(std::vector<SparseVector> docs, std::vector<SparseVector> queries, unsigned threads = 1);

/// Vectorizes `queries` under the index's scheme and harvests against its docs.
TripleBank harvest_triples(const InvertedIndex& index, std::span<const Document> queries, unsigned threads = 1);

/// argmax_d <q, d>, lowest id among ties; nullopt when every score is <= 0.
std::optional<DocId> sparse_winner(const SparseVector& q, std::span<const SparseVector> docs);

/// Ascending positive normalized margins mu(q, docs[winner], d) over d != winner.
std::vector<double> positive_margins(const SparseVector& q, std::span<const SparseVector> docs, DocId winner);

// ---------------------------------------------------------------------------
// Min-k per margin bin.

/// (eps^2/2 - eps^3/3)^-1, the x-axis statistic of the min-k study.
double inverse_rate(double eps);

enum class Binning { quantile, log, linear };
std::string_view to_string(Binning b);
Binning parse_binning(std::string_view name);

struct MinKConfig {
  KGrid grid = KGrid::default_grid();
  double target = 0.95;
  std::uint32_t trials = 1000;
  Binning binning = Binning::quantile;
  std::uint32_t num_bins = 10;
  /// Bins with fewer triples are dropped.
  std::uint32_t min_bin_count = 1;
  /// Triples sampled per bin for the Monte Carlo; 0 uses all of them.
  std::uint32_t samples_per_bin = 20;
  ProjectionKind kind = ProjectionKind::rademacher;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
  /// Everything except `threads`.
  nlohmann::ordered_json to_json() const;
};

struct MinKBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_triples = 0;
  std::size_t n_sampled = 0;
  /// Median inverse_rate over the bin's triples.
  double stat = 0.0;
  std::optional<std::uint32_t> min_k;
  /// Pooled accuracy at min_k (or at the largest grid k when unreached).
  double accuracy = 0.0;
  double sigma = 0.0;
  /// ceil(2 ln(4 / (1 - target)) * stat).
  std::uint64_t bound_k = 0;
};

struct MinKReport {
  MinKConfig config;
  std::vector<MinKBin> bins;
  std::size_t dropped_triples = 0;

  /// bin_lo,bin_hi,n_triples,stat,min_k,trials,grid_id,n_sampled,accuracy,sigma,reached,bound_k
  std::string csv() const;
  nlohmann::ordered_json metadata() const;
};

MinKReport min_k_per_bin(const TripleBank& bank, const MinKConfig& cfg);

/// Coefficient of determination of the least-squares line y ~ a + b x.
/// Returns 0 when y is constant or fewer than 2 points are given.
double linear_fit_r2(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Length-binned studies.

/// One collection whose passages have a common maximum length.
struct LengthCorpus {
  std::uint32_t length = 0;
  std::vector<SparseVector> docs;
  std::vector<SparseVector> queries;
};

/// Type-7 quantile of sorted data (linear interpolation between order
/// statistics). `sorted` must be non-empty.
double quantile_sorted(std::span<const double> sorted, double p);

struct MarginCell {
  std::uint32_t length = 0;
  std::uint32_t rank = 0;
  std::size_t n_queries = 0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  /// Normal-theory standard error of the median: 1.2533 (IQR / 1.349) / sqrt(n).
  double se_median = 0.0;
};

struct MarginReport {
  std::vector<std::uint32_t> ranks;
  std::vector<MarginCell> cells;
  /// Per corpus: queries with no positive score.
  std::vector<std::size_t> skipped_queries;

  /// length,rank,n_queries,q25,median,q75,se_median
  std::string csv() const;
  nlohmann::ordered_json metadata() const;
};

/// For each query, the rank-r smallest positive margin against its winner.
/// Ranks larger than a query's count of positive margins are skipped for it;
/// a (length, rank) cell with no contributing query is omitted.
MarginReport margin_quantiles_by_length(std::span<const LengthCorpus> corpora, std::span<const std::uint32_t> ranks,
                                        unsigned threads = 1);

struct RecallConfig {
  KGrid grid = KGrid::default_grid();
  std::uint32_t r = 10;
  std::vector<double> targets = {0.7, 0.8, 0.9, 0.95};
  std::uint32_t trials = 100;
  /// Queries used per corpus; 0 uses all.
  std::uint32_t max_queries = 0;
  ProjectionKind kind = ProjectionKind::rademacher;
  std::uint64_t seed = 0;
  unsigned threads = 1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

struct RecallCell {
  std::uint32_t length = 0;
  double target = 0.0;
  std::size_t n_samples = 0;
  std::optional<std::uint32_t> min_k;
  double recall = 0.0;
  double sigma = 0.0;
  /// Smallest grid k whose recall is within one standard error of the target.
  std::optional<std::uint32_t> relaxed_min_k;
  /// Median over queries of sufficient_k_recall(eps_q, 1 - target, |D_q|, r)
  /// where eps_q is the query's r-th smallest positive margin and D_q the
  /// documents with positive margin.
  std::optional<std::uint64_t> recall_bound_k;
};

struct RecallReport {
  RecallConfig config;
  std::vector<RecallCell> cells;

  /// length,target,n_samples,min_k,recall_at_min_k,sigma,reached,recall_bound_k
  std::string csv() const;
  nlohmann::ordered_json metadata() const;
};

RecallReport min_k_for_recall(std::span<const LengthCorpus> corpora, const RecallConfig& cfg);

/// Recipe for one synthetic corpus per passage length: Zipf source documents
/// of 4 * length words, cut into passages of `length` words, then ICT queries
/// and distractors.
struct LengthSynthSpec {
  std::vector<std::uint32_t> lengths = {50, 100, 200, 400};
  std::uint32_t docs_per_length = 5000;
  std::uint32_t queries_per_length = 500;
  std::uint32_t vocab_size = 20000;
  double exponent = 1.0;
  Scheme scheme = Scheme::bm25;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  /// ICT recipe used for one length.
  IctSpec ict_spec(std::uint32_t length) const;
  ZipfSpec zipf_spec(std::uint32_t length) const;
};

/// Builds the vectors of one ICT corpus: documents and queries under `scheme`.
LengthCorpus vectorize_ict(std::uint32_t length, const IctCorpus& ict, Scheme scheme, const Bm25Params& params = {});

std::vector<LengthCorpus> synthesize_length_corpora(const LengthSynthSpec& spec);

/// Monotone trend with tolerance. A step against the trend from i-1 to i is an
/// inversion; it is tolerated when its size is <= tolerances[i-1]. Passes when
/// every inversion is tolerated and there are at most `max_inversions`.
struct TrendCheck {
  bool passed = false;
  std::size_t inversions = 0;
  std::size_t tolerated = 0;
};
TrendCheck check_non_increasing(std::span<const double> values, std::span<const double> tolerances,
                                std::size_t max_inversions);
TrendCheck check_non_decreasing(std::span<const double> values, std::span<const double> tolerances,
                                std::size_t max_inversions);

}  // namespace mlab
