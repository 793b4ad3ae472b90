#include "mlab/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mlab {

namespace {

void check_eps(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("margin eps must lie in (0, 1], got " + std::to_string(eps));
}

void check_beta(double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in (0, 1), got " + std::to_string(beta));
}

/// Smallest integer >= x, at least 1.
std::uint64_t ceil_count(double x) {
  const double c = std::ceil(x);
  return static_cast<std::uint64_t>(std::max(1.0, c));
}

}  // namespace

double normalized_margin_from_parts(double q_dot_d1, double q_dot_d2, double q_norm, double diff_norm) {
  if (!(q_norm > 0.0)) throw UndefinedMargin("normalized margin undefined: query is zero");
  if (!(diff_norm > 0.0)) throw UndefinedMargin("normalized margin undefined: d1 == d2");
  const double mu = (q_dot_d1 - q_dot_d2) / (q_norm * diff_norm);
  return std::clamp(mu, -1.0, 1.0);
}

double normalized_margin(const SparseVector& q, const SparseVector& d1, const SparseVector& d2) {
  const SparseVector diff = d1 - d2;
  return normalized_margin_from_parts(dot(q, diff), 0.0, q.norm(), diff.norm());
}

double margin_rate(double eps) { return eps * eps / 2.0 - eps * eps * eps / 3.0; }

double pairwise_error_bound(double eps, double k) {
  check_eps(eps);
  if (!(k >= 1.0)) throw std::invalid_argument("k must be >= 1");
  return 4.0 * std::exp(-(k / 2.0) * margin_rate(eps));
}

std::uint64_t sufficient_k_pairwise(double eps, double beta) {
  check_eps(eps);
  check_beta(beta);
  return ceil_count(2.0 * std::log(4.0 / beta) / margin_rate(eps));
}

std::uint64_t sufficient_k_quadratic(double eps, double beta) {
  check_eps(eps);
  check_beta(beta);
  const double x = 12.0 * std::log(4.0 / beta) / (eps * eps);
  return static_cast<std::uint64_t>(std::floor(x)) + 1;
}

double recall_bound_constant(std::uint64_t collection_size, std::uint64_t r0) {
  if (r0 < 1 || r0 > collection_size) throw std::invalid_argument("recall bound: need 1 <= r0 <= |D|");
  return 4.0 * static_cast<double>(collection_size - r0 + 1);
}

double recall_error_bound(double eps, double k, std::uint64_t collection_size, std::uint64_t r0) {
  const double c = recall_bound_constant(collection_size, r0);
  check_eps(eps);
  if (!(k >= 1.0)) throw std::invalid_argument("k must be >= 1");
  return c * std::exp(-(k / 2.0) * margin_rate(eps));
}

std::uint64_t sufficient_k_recall(double eps, double beta, std::uint64_t collection_size, std::uint64_t r0) {
  const double c = recall_bound_constant(collection_size, r0);
  check_eps(eps);
  check_beta(beta);
  return ceil_count(2.0 * std::log(c / beta) / margin_rate(eps));
}

double boolean_min_margin(std::uint64_t max_query_terms, std::uint64_t max_doc_terms) {
  if (max_query_terms < 1 || max_doc_terms < 1) throw std::invalid_argument("L_Q and L_D must be >= 1");
  return 1.0 / std::sqrt(2.0 * static_cast<double>(max_query_terms) * static_cast<double>(max_doc_terms));
}

std::uint64_t sufficient_k_boolean(std::uint64_t max_query_terms, std::uint64_t max_doc_terms, double beta) {
  if (max_query_terms < 1 || max_doc_terms < 1) throw std::invalid_argument("L_Q and L_D must be >= 1");
  check_beta(beta);
  return ceil_count(24.0 * static_cast<double>(max_query_terms) * static_cast<double>(max_doc_terms) *
                    std::log(4.0 / beta));
}

double inner_product_distortion_bound(double eps, double x_sq_norm, double y_sq_norm) {
  if (!(eps > 0.0)) throw std::invalid_argument("distortion bound: eps must be > 0");
  return eps / 2.0 * (x_sq_norm + y_sq_norm);
}

}  // namespace mlab
