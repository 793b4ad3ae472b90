#include "mlab/sparse_scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "binary_io.hpp"
#include "mlab/io.hpp"

namespace mlab {

namespace {
constexpr std::string_view kMagic = "MLAB1";
constexpr std::uint32_t kVersion = 1;
}  // namespace

void Bm25Params::validate() const {
  if (!(k1 >= 0.0) || !std::isfinite(k1)) throw std::invalid_argument("bm25: k1 must be >= 0");
  if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("bm25: b must lie in [0, 1]");
}

std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::boolean:
      return "boolean";
    case Scheme::tfidf:
      return "tfidf";
    case Scheme::bm25:
      return "bm25";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "boolean") return Scheme::boolean;
  if (name == "tfidf") return Scheme::tfidf;
  if (name == "bm25") return Scheme::bm25;
  throw std::invalid_argument("unknown scheme: " + std::string(name));
}

double idf(std::uint64_t num_docs, std::uint64_t df) {
  if (num_docs == 0) throw std::domain_error("idf: empty collection");
  if (df > num_docs) throw std::invalid_argument("idf: df exceeds N");
  const double n = static_cast<double>(num_docs);
  const double f = static_cast<double>(df);
  return std::log1p((n - f + 0.5) / (f + 0.5));
}

double idf(const Vocabulary& vocab, TermId term) { return idf(vocab.num_docs(), vocab.df(term)); }

double bm25_doc_weight(std::uint32_t tf, double doc_len, double avgdl, const Bm25Params& params) {
  if (!(avgdl > 0.0)) throw std::domain_error("bm25: avgdl must be > 0");
  if (tf == 0) throw std::invalid_argument("bm25: tf must be >= 1");
  const double f = static_cast<double>(tf);
  const double norm = 1.0 - params.b + params.b * doc_len / avgdl;
  return f * (params.k1 + 1.0) / (f + params.k1 * norm);
}

SparseVector query_vector(const Document& query, Scheme scheme, const Vocabulary& vocab) {
  SparseVector presence = vectorize_boolean(query);
  if (scheme == Scheme::boolean) return presence;
  std::vector<SparseEntry> entries;
  entries.reserve(presence.nnz());
  for (const auto& e : presence.entries()) entries.push_back({e.term, idf(vocab, e.term)});
  return SparseVector::from_entries(std::move(entries));
}

SparseVector doc_vector(const Document& doc, Scheme scheme, const Vocabulary& vocab, const Bm25Params& params) {
  switch (scheme) {
    case Scheme::boolean:
      return vectorize_boolean(doc);
    case Scheme::tfidf:
      return vectorize_counts(doc);
    case Scheme::bm25: {
      SparseVector counts = vectorize_counts(doc);
      std::vector<SparseEntry> entries;
      entries.reserve(counts.nnz());
      const double len = static_cast<double>(doc.length());
      for (const auto& e : counts.entries()) {
        entries.push_back({e.term, bm25_doc_weight(static_cast<std::uint32_t>(e.weight), len, vocab.avgdl(), params)});
      }
      return SparseVector::from_entries(std::move(entries));
    }
  }
  throw std::logic_error("unreachable scheme");
}

std::vector<ScoredDoc> topk_from_scores(std::span<const double> scores, std::size_t k) {
  std::vector<ScoredDoc> all;
  all.reserve(scores.size());
  for (std::size_t d = 0; d < scores.size(); ++d) all.push_back({static_cast<DocId>(d), scores[d]});
  k = std::min(k, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), ranks_before);
  all.resize(k);
  return all;
}

InvertedIndex InvertedIndex::build(const Corpus& corpus, Scheme scheme, Bm25Params params) {
  params.validate();
  InvertedIndex idx;
  idx.scheme_ = scheme;
  idx.mode_ = corpus.mode;
  idx.params_ = params;
  idx.vocab_ = corpus.vocab;
  const std::size_t v = corpus.vocab.size();

  std::vector<std::uint64_t> counts(v + 1, 0);
  std::vector<SparseVector> vectors;
  vectors.reserve(corpus.docs.size());
  for (const auto& d : corpus.docs) {
    vectors.push_back(mlab::doc_vector(d, scheme, corpus.vocab, params));
    for (const auto& e : vectors.back().entries()) ++counts[e.term + 1];
    idx.doc_lengths_.push_back(static_cast<std::uint32_t>(d.length()));
    idx.doc_ids_.push_back(d.id);
  }
  for (std::size_t t = 0; t < v; ++t) counts[t + 1] += counts[t];
  idx.offsets_ = counts;
  idx.postings_.resize(counts[v]);
  std::vector<std::uint64_t> cursor(counts.begin(), counts.end() - 1);
  for (std::size_t d = 0; d < vectors.size(); ++d) {
    for (const auto& e : vectors[d].entries()) idx.postings_[cursor[e.term]++] = {static_cast<DocId>(d), e.weight};
  }
  return idx;
}

std::span<const Posting> InvertedIndex::postings(TermId term) const {
  if (term + 1 >= offsets_.size()) throw std::out_of_range("postings: unknown term id");
  return std::span(postings_).subspan(offsets_[term], offsets_[term + 1] - offsets_[term]);
}

std::vector<double> InvertedIndex::score_all(const SparseVector& query) const {
  std::vector<double> scores(num_docs(), 0.0);
  for (const auto& q : query.entries()) {
    if (q.term + 1 >= offsets_.size()) continue;
    for (const auto& p : postings(q.term)) scores[p.doc] += q.weight * p.weight;
  }
  return scores;
}

SparseVector InvertedIndex::doc_vector(DocId d) const {
  if (d >= num_docs()) throw std::out_of_range("doc_vector: unknown doc");
  std::vector<SparseEntry> entries;
  for (std::size_t t = 0; t + 1 < offsets_.size(); ++t) {
    auto ps = postings(static_cast<TermId>(t));
    auto it = std::lower_bound(ps.begin(), ps.end(), d, [](const Posting& p, DocId x) { return p.doc < x; });
    if (it != ps.end() && it->doc == d) entries.push_back({static_cast<TermId>(t), it->weight});
  }
  return SparseVector::from_entries(std::move(entries));
}

std::string InvertedIndex::serialize() const {
  detail::ByteWriter w;
  w.raw(kMagic);
  w.u32(kVersion);
  w.u64(vocab_.size());
  w.u64(num_docs());
  w.f64(params_.k1);
  w.f64(params_.b);
  w.u32(static_cast<std::uint32_t>(scheme_));
  w.u32(static_cast<std::uint32_t>(mode_));
  for (std::size_t t = 0; t < vocab_.size(); ++t) {
    auto ps = postings(static_cast<TermId>(t));
    w.u64(ps.size());
    for (const auto& p : ps) {
      w.u32(p.doc);
      w.f64(p.weight);
    }
  }
  for (auto len : doc_lengths_) w.u32(len);
  for (const auto& id : doc_ids_) w.str(id);
  for (const auto& term : vocab_.terms()) w.str(term);
  for (auto df : vocab_.document_frequencies()) w.u32(df);
  return w.take();
}

InvertedIndex InvertedIndex::deserialize(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(kMagic.size()) != kMagic) throw std::runtime_error("not an MLAB1 index");
  if (const auto ver = r.u32(); ver != kVersion) throw std::runtime_error("unsupported index version " + std::to_string(ver));
  InvertedIndex idx;
  const std::uint64_t v = r.u64();
  const std::uint64_t n = r.u64();
  idx.params_.k1 = r.f64();
  idx.params_.b = r.f64();
  const auto scheme = r.u32();
  const auto mode = r.u32();
  if (scheme > 2 || mode > 1) throw std::runtime_error("index: bad scheme or token mode");
  idx.scheme_ = static_cast<Scheme>(scheme);
  idx.mode_ = static_cast<TokenMode>(mode);
  idx.offsets_.assign(1, 0);
  for (std::uint64_t t = 0; t < v; ++t) {
    const std::uint64_t count = r.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
      const DocId d = r.u32();
      const double weight = r.f64();
      if (d >= n) throw std::runtime_error("index: posting references unknown doc");
      idx.postings_.push_back({d, weight});
    }
    idx.offsets_.push_back(idx.postings_.size());
  }
  std::uint64_t total = 0;
  for (std::uint64_t d = 0; d < n; ++d) {
    idx.doc_lengths_.push_back(r.u32());
    total += idx.doc_lengths_.back();
  }
  for (std::uint64_t d = 0; d < n; ++d) idx.doc_ids_.push_back(r.str());
  std::vector<std::string> terms;
  for (std::uint64_t t = 0; t < v; ++t) terms.push_back(r.str());
  std::vector<std::uint32_t> df;
  for (std::uint64_t t = 0; t < v; ++t) df.push_back(r.u32());
  if (!r.done()) throw std::runtime_error("index: trailing bytes");
  idx.vocab_ = Vocabulary::restore(std::move(terms), std::move(df), n, total);
  return idx;
}

void InvertedIndex::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

InvertedIndex InvertedIndex::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

nlohmann::ordered_json InvertedIndex::metadata() const {
  return {{"format", "MLAB1"},
          {"version", kVersion},
          {"scheme", to_string(scheme_)},
          {"token_mode", to_string(mode_)},
          {"k1", params_.k1},
          {"b", params_.b},
          {"bm25_variant", kBm25Variant},
          {"vocab_size", vocab_.size()},
          {"num_docs", num_docs()},
          {"avgdl", vocab_.avgdl()},
          {"num_postings", postings_.size()}};
}

bool operator==(const InvertedIndex& a, const InvertedIndex& b) {
  return a.scheme_ == b.scheme_ && a.mode_ == b.mode_ && a.params_.k1 == b.params_.k1 &&
         a.params_.b == b.params_.b && a.offsets_ == b.offsets_ && a.postings_ == b.postings_ &&
         a.doc_lengths_ == b.doc_lengths_ && a.doc_ids_ == b.doc_ids_ &&
         std::equal(a.vocab_.terms().begin(), a.vocab_.terms().end(), b.vocab_.terms().begin(),
                    b.vocab_.terms().end()) &&
         std::equal(a.vocab_.document_frequencies().begin(), a.vocab_.document_frequencies().end(),
                    b.vocab_.document_frequencies().begin(), b.vocab_.document_frequencies().end());
}

std::vector<ScoredDoc> sparse_topk(const SparseVector& query, const InvertedIndex& index, std::size_t k) {
  if (k == 0) throw std::invalid_argument("sparse_topk: k must be >= 1");
  return topk_from_scores(index.score_all(query), k);
}

}  // namespace mlab
