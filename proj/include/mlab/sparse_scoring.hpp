#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlab/corpus.hpp"
#include "mlab/sparse_vector.hpp"

namespace mlab {

/// Robertson tf saturation parameters.
struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;

  void validate() const;
};

enum class Scheme { boolean, tfidf, bm25 };

std::string_view to_string(Scheme s);
Scheme parse_scheme(std::string_view name);

/// Name of the BM25 variant, written into every report.
inline constexpr std::string_view kBm25Variant = "robertson-tf+lucene-idf ln(1+(N-df+0.5)/(df+0.5))";

/// ln(1 + (N - df + 0.5) / (df + 0.5)); strictly positive for df <= N.
double idf(std::uint64_t num_docs, std::uint64_t df);
/// idf of a vocabulary term. Throws std::out_of_range on an unknown id and
/// std::domain_error on an empty collection.
double idf(const Vocabulary& vocab, TermId term);

/// tf*(k1+1) / (tf + k1*(1 - b + b*doclen/avgdl)).
double bm25_doc_weight(std::uint32_t tf, double doc_len, double avgdl, const Bm25Params& params);

/// Query representation: indicator for boolean, presence x idf otherwise.
/// Repeated query terms count once.
SparseVector query_vector(const Document& query, Scheme scheme, const Vocabulary& vocab);

/// Document representation: indicator, raw counts (tf-idf), or BM25 weights.
SparseVector doc_vector(const Document& doc, Scheme scheme, const Vocabulary& vocab, const Bm25Params& params);

inline double score(const SparseVector& query, const SparseVector& doc) noexcept { return dot(query, doc); }

struct ScoredDoc {
  DocId doc;
  double score;

  friend bool operator==(const ScoredDoc&, const ScoredDoc&) = default;
};

/// Descending score, then ascending doc id.
inline bool ranks_before(const ScoredDoc& a, const ScoredDoc& b) noexcept {
  return a.score > b.score || (a.score == b.score && a.doc < b.doc);
}

/// Top-k of a dense score array under ranks_before.
std::vector<ScoredDoc> topk_from_scores(std::span<const double> scores, std::size_t k);

struct Posting {
  DocId doc;
  double weight;

  friend bool operator==(const Posting&, const Posting&) = default;
};

/// Term-at-a-time inverted index over document weights for one scheme.
class InvertedIndex {
 public:
  static InvertedIndex build(const Corpus& corpus, Scheme scheme, Bm25Params params = {});

  Scheme scheme() const noexcept { return scheme_; }
  TokenMode token_mode() const noexcept { return mode_; }
  const Bm25Params& params() const noexcept { return params_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  std::size_t num_docs() const noexcept { return doc_lengths_.size(); }
  std::span<const Posting> postings(TermId term) const;
  std::span<const std::uint32_t> doc_lengths() const noexcept { return doc_lengths_; }
  const std::string& doc_id(DocId d) const { return doc_ids_.at(d); }
  std::span<const std::string> doc_ids() const noexcept { return doc_ids_; }

  /// Accumulated score of every document.
  std::vector<double> score_all(const SparseVector& query) const;
  /// Document weight vector reassembled from the postings.
  SparseVector doc_vector(DocId d) const;

  /// Binary format: "MLAB1", version, v, N, k1, b (little-endian), then
  /// scheme, token mode, postings, doc lengths, doc ids, terms.
  void save(const std::filesystem::path& path) const;
  std::string serialize() const;
  static InvertedIndex load(const std::filesystem::path& path);
  static InvertedIndex deserialize(std::string_view bytes);

  nlohmann::ordered_json metadata() const;

  friend bool operator==(const InvertedIndex& a, const InvertedIndex& b);

 private:
  Scheme scheme_ = Scheme::bm25;
  TokenMode mode_ = TokenMode::unigram;
  Bm25Params params_;
  Vocabulary vocab_;
  std::vector<std::uint64_t> offsets_;  // v + 1
  std::vector<Posting> postings_;
  std::vector<std::uint32_t> doc_lengths_;
  std::vector<std::string> doc_ids_;
};

/// Exact top-k by inverted-index accumulation; ties by ascending doc id.
std::vector<ScoredDoc> sparse_topk(const SparseVector& query, const InvertedIndex& index, std::size_t k);

}  // namespace mlab
