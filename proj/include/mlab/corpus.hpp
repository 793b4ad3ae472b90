#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mlab/sparse_vector.hpp"

namespace mlab {

enum class TokenMode { unigram, unigram_bigram };

std::string_view to_string(TokenMode mode);
TokenMode parse_token_mode(std::string_view name);

/// Lowercased alphanumeric words. ASCII letters and digits are word
/// characters, as are all bytes >= 0x80 so UTF-8 sequences stay inside words.
std::vector<std::string> split_words(std::string_view text);

/// Term dictionary plus collection statistics (df, N, avgdl).
///
/// While open, lookups intern unseen terms. After freeze() ids are stable and
/// unknown terms are rejected by find().
class Vocabulary {
 public:
  /// Returns the id of `term`, interning it when the vocabulary is open.
  /// Throws std::logic_error on an unknown term once frozen.
  TermId intern(std::string_view term);
  std::optional<TermId> find(std::string_view term) const;
  const std::string& term(TermId id) const { return terms_.at(id); }
  std::size_t size() const noexcept { return terms_.size(); }

  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  /// Counts one document toward N, total length and df of its distinct terms.
  void observe_document(std::span<const TermId> tokens);

  std::uint32_t df(TermId id) const;
  std::uint64_t num_docs() const noexcept { return num_docs_; }
  std::uint64_t total_length() const noexcept { return total_length_; }
  double avgdl() const noexcept {
    return num_docs_ == 0 ? 0.0 : static_cast<double>(total_length_) / static_cast<double>(num_docs_);
  }

  /// Rebuilds a frozen vocabulary from persisted state.
  static Vocabulary restore(std::vector<std::string> terms, std::vector<std::uint32_t> df, std::uint64_t num_docs,
                            std::uint64_t total_length);

  std::span<const std::string> terms() const noexcept { return terms_; }
  std::span<const std::uint32_t> document_frequencies() const noexcept { return df_; }

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> ids_;
  std::vector<std::uint32_t> df_;
  std::uint64_t num_docs_ = 0;
  std::uint64_t total_length_ = 0;
  bool frozen_ = false;
};

/// Token ids for `text`. Bigram mode appends one "w1_w2" token per adjacent
/// word pair after the unigrams. Under a frozen vocabulary unknown terms are
/// dropped; otherwise they are interned.
std::vector<TermId> tokenize(std::string_view text, TokenMode mode, Vocabulary& vocab);
/// Lookup-only variant for a frozen (or read-only) vocabulary.
std::vector<TermId> tokenize(std::string_view text, TokenMode mode, const Vocabulary& vocab);

struct Document {
  std::string id;
  std::vector<TermId> tokens;

  std::size_t length() const noexcept { return tokens.size(); }
};

/// Weight 1 for every distinct term.
SparseVector vectorize_boolean(const Document& doc);
/// Raw term counts.
SparseVector vectorize_counts(const Document& doc);

struct RawDocument {
  std::string id;
  std::string text;
};

struct RawQuery {
  std::string id;
  std::string text;
  std::string gold_id;
};

/// Tokenized collection with a frozen vocabulary.
struct Corpus {
  Vocabulary vocab;
  TokenMode mode = TokenMode::unigram;
  std::vector<Document> docs;
  /// Input documents dropped because they produced no tokens.
  std::size_t skipped_empty = 0;

  /// Builds the vocabulary in two passes so that all bigram ids follow all
  /// unigram ids, then freezes it.
  static Corpus build(std::span<const RawDocument> raw, TokenMode mode);

  /// Doc position by string id; valid after build() or reindex().
  std::optional<DocId> find(std::string_view id) const;
  void reindex();

 private:
  std::unordered_map<std::string, DocId> index_;
};

/// Tokenizes a query against a frozen vocabulary; unknown terms are dropped
/// and the resulting document may be empty.
Document make_query(const RawQuery& q, const Corpus& corpus);

std::vector<RawDocument> read_documents_jsonl(const std::filesystem::path& path);
std::vector<RawQuery> read_queries_jsonl(const std::filesystem::path& path);
std::string documents_to_jsonl(std::span<const RawDocument> docs);
std::string queries_to_jsonl(std::span<const RawQuery> queries);

}  // namespace mlab
