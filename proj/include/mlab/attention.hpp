#pragma once

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "mlab/projection.hpp"
#include "mlab/sparse_vector.hpp"

namespace mlab {

using TokenSeq = std::vector<TermId>;

/// Normalized hard attention given the token Gram matrix
/// gram(t, t') = <x_t, y_t'>:
///   a~(t,t') = 1 iff gram(t,t') > 1/2,  z(t) = sum_t' a~(t,t'),
///   psi = sum_t sum_t' (a~(t,t') / z(t)) gram(t,t'),  with 0/0 = 0.
template <typename Gram>
double hard_attention_from_gram(std::size_t query_len, std::size_t doc_len, Gram&& gram) {
  double psi = 0.0;
  for (std::size_t t = 0; t < query_len; ++t) {
    double matched = 0.0;
    std::size_t z = 0;
    for (std::size_t u = 0; u < doc_len; ++u) {
      const double g = gram(t, u);
      if (g > 0.5) {
        matched += g;
        ++z;
      }
    }
    if (z > 0) psi += matched / static_cast<double>(z);
  }
  return psi;
}

/// Indicator-vector embeddings: <x_t, y_t'> = [x_t == y_t'].
double hard_attention_indicator(std::span<const TermId> x, std::span<const TermId> y);

/// Token embeddings f(e_t) = A e_t for a fixed projection, cached per token.
class ProjectedEmbeddings {
 public:
  explicit ProjectedEmbeddings(ProjectionSpec spec);

  const DenseVector& embed(TermId token);
  const ProjectionSpec& spec() const noexcept { return spec_; }

 private:
  ProjectionSpec spec_;
  std::unordered_map<TermId, DenseVector> cache_;
};

/// Hard attention over projected indicator embeddings; the 1/2 threshold is
/// applied with strict > to the projected inner products.
double hard_attention_projected(std::span<const TermId> x, std::span<const TermId> y, ProjectedEmbeddings& emb);

bool has_repeated_terms(std::span<const TermId> x);

/// <C01(x), C01(y)>: number of distinct tokens shared by x and y.
double boolean_overlap(std::span<const TermId> x, std::span<const TermId> y);

/// Sum over query positions of [x_t occurs in y]; equals the indicator-mode
/// score also when x repeats tokens.
double matched_positions(std::span<const TermId> x, std::span<const TermId> y);

/// ceil(24 (2 + beta) T_x^2 ln v). Requires T_x >= 1, v >= 2, beta > 0.
std::uint64_t attention_sufficient_k(std::uint64_t max_query_tokens, std::uint64_t vocab_size, double beta);

}  // namespace mlab
