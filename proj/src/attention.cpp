#include "mlab/attention.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlab {

double hard_attention_indicator(std::span<const TermId> x, std::span<const TermId> y) {
  return hard_attention_from_gram(x.size(), y.size(),
                                  [&](std::size_t t, std::size_t u) { return x[t] == y[u] ? 1.0 : 0.0; });
}

ProjectedEmbeddings::ProjectedEmbeddings(ProjectionSpec spec) : spec_(spec) { spec_.validate(); }

const DenseVector& ProjectedEmbeddings::embed(TermId token) {
  auto it = cache_.find(token);
  if (it != cache_.end()) return it->second;
  const SparseEntry unit{token, 1.0};
  const auto e = SparseVector::from_entries({unit});
  return cache_.emplace(token, project(spec_, e)).first->second;
}

double hard_attention_projected(std::span<const TermId> x, std::span<const TermId> y, ProjectedEmbeddings& emb) {
  std::vector<const DenseVector*> xs, ys;
  xs.reserve(x.size());
  ys.reserve(y.size());
  for (TermId t : x) xs.push_back(&emb.embed(t));
  for (TermId t : y) ys.push_back(&emb.embed(t));
  return hard_attention_from_gram(x.size(), y.size(),
                                  [&](std::size_t t, std::size_t u) { return dot(*xs[t], *ys[u]); });
}

bool has_repeated_terms(std::span<const TermId> x) {
  std::vector<TermId> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  return std::adjacent_find(s.begin(), s.end()) != s.end();
}

double boolean_overlap(std::span<const TermId> x, std::span<const TermId> y) {
  return dot(SparseVector::indicator(x), SparseVector::indicator(y));
}

double matched_positions(std::span<const TermId> x, std::span<const TermId> y) {
  double n = 0.0;
  for (TermId t : x) {
    if (std::find(y.begin(), y.end(), t) != y.end()) n += 1.0;
  }
  return n;
}

std::uint64_t attention_sufficient_k(std::uint64_t max_query_tokens, std::uint64_t vocab_size, double beta) {
  if (max_query_tokens < 1) throw std::invalid_argument("attention_sufficient_k: T_x must be >= 1");
  if (vocab_size < 2) throw std::invalid_argument("attention_sufficient_k: v must be >= 2");
  if (!(beta > 0.0)) throw std::invalid_argument("attention_sufficient_k: beta must be > 0");
  const double t = static_cast<double>(max_query_tokens);
  return static_cast<std::uint64_t>(
      std::ceil(24.0 * (2.0 + beta) * t * t * std::log(static_cast<double>(vocab_size))));
}

}  // namespace mlab
