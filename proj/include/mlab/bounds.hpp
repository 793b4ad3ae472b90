#pragma once

#include <cstdint>
#include <stdexcept>

#include "mlab/sparse_vector.hpp"

namespace mlab {

/// Raised when q = 0 or d1 = d2.
class UndefinedMargin : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// <q, d1 - d2> / (||q|| ||d1 - d2||), in [-1, 1].
double normalized_margin(const SparseVector& q, const SparseVector& d1, const SparseVector& d2);

/// Same quantity from precomputed parts; `diff_norm` is ||d1 - d2||.
double normalized_margin_from_parts(double q_dot_d1, double q_dot_d2, double q_norm, double diff_norm);

/// A (query, winner, loser) triple with its cached normalized margin. The
/// members index into whatever collection produced the triple.
struct MarginTriple {
  std::uint32_t query;
  DocId winner;
  DocId loser;
  double margin;

  friend bool operator==(const MarginTriple&, const MarginTriple&) = default;
};

/// eps^2/2 - eps^3/3, the exponent rate shared by every bound below.
double margin_rate(double eps);

/// 4 exp(-(k/2) (eps^2/2 - eps^3/3)), unclamped. Requires eps in (0, 1], k >= 1.
double pairwise_error_bound(double eps, double k);

/// Smallest k with k >= 2 ln(4/beta) / rate(eps).
std::uint64_t sufficient_k_pairwise(double eps, double beta);

/// Smallest integer k > 12 eps^-2 ln(4/beta).
std::uint64_t sufficient_k_quadratic(double eps, double beta);

/// 4 (|D| - r0 + 1).
double recall_bound_constant(std::uint64_t collection_size, std::uint64_t r0);

/// C exp(-(k/2) rate(eps)) with C = 4 (|D| - r0 + 1), unclamped.
double recall_error_bound(double eps, double k, std::uint64_t collection_size, std::uint64_t r0);

/// Smallest k with k >= 2 ln(C/beta) / rate(eps).
std::uint64_t sufficient_k_recall(double eps, double beta, std::uint64_t collection_size, std::uint64_t r0);

/// (2 L_Q L_D)^(-1/2): the smallest nonzero normalized margin possible for
/// boolean vectors with at most L_Q and L_D unique terms.
double boolean_min_margin(std::uint64_t max_query_terms, std::uint64_t max_doc_terms);

/// ceil(24 L_Q L_D ln(4/beta)).
std::uint64_t sufficient_k_boolean(std::uint64_t max_query_terms, std::uint64_t max_doc_terms, double beta);

/// (eps/2)(||x||^2 + ||y||^2): the inner-product distortion whose exceedance
/// probability is at most 4 exp(-(k/2) rate(eps)).
double inner_product_distortion_bound(double eps, double x_sq_norm, double y_sq_norm);

/// min(1, bound) for human-facing tables.
inline double clamp_probability(double p) noexcept { return p > 1.0 ? 1.0 : p; }

}  // namespace mlab
