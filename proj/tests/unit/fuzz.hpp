#pragma once

// Seeded generators shared by the unit and acceptance tests.

#include <string>
#include <vector>

#include "mlab/corpus.hpp"
#include "mlab/random.hpp"
#include "mlab/sparse_vector.hpp"

namespace mlab::fuzz {

inline SparseVector sparse(SplitMix64& rng, std::uint32_t v, std::size_t max_nnz, bool non_negative = true) {
  std::vector<SparseEntry> e;
  const std::size_t n = rng.between(1, max_nnz);
  for (std::size_t i = 0; i < n; ++i) {
    double w = 0.05 + rng.uniform01();
    if (!non_negative && rng.below(2)) w = -w;
    e.push_back({static_cast<TermId>(rng.below(v)), w});
  }
  return SparseVector::from_entries(std::move(e));
}

inline std::string words(SplitMix64& rng, std::size_t vocab, std::size_t min_len, std::size_t max_len) {
  const std::size_t n = rng.between(min_len, max_len);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    // Skewed toward low ranks so documents share terms.
    const auto r = rng.below(rng.below(2) ? vocab : std::max<std::size_t>(1, vocab / 8));
    s += 't' + std::to_string(r);
  }
  return s;
}

inline std::vector<RawDocument> raw_docs(SplitMix64& rng, std::size_t n, std::size_t vocab, std::size_t min_len,
                                         std::size_t max_len) {
  std::vector<RawDocument> docs;
  for (std::size_t i = 0; i < n; ++i) docs.push_back({"d" + std::to_string(i), words(rng, vocab, min_len, max_len)});
  return docs;
}

inline std::vector<TermId> tokens(SplitMix64& rng, std::uint32_t v, std::size_t len) {
  std::vector<TermId> t(len);
  for (auto& x : t) x = static_cast<TermId>(rng.below(v));
  return t;
}

}  // namespace mlab::fuzz
