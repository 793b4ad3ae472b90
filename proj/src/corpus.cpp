#include "mlab/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mlab {

std::string_view to_string(TokenMode mode) {
  return mode == TokenMode::unigram ? "unigram" : "unigram+bigram";
}

TokenMode parse_token_mode(std::string_view name) {
  if (name == "unigram") return TokenMode::unigram;
  if (name == "unigram+bigram" || name == "bigram") return TokenMode::unigram_bigram;
  throw std::invalid_argument("unknown token mode: " + std::string(name));
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c >= 'A' && c <= 'Z') {
      cur.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80) {
      cur.push_back(ch);
    } else {
      flush();
    }
  }
  flush();
  return words;
}

TermId Vocabulary::intern(std::string_view term) {
  if (auto id = find(term)) return *id;
  if (frozen_) throw std::logic_error("vocabulary is frozen; unknown term: " + std::string(term));
  const auto id = static_cast<TermId>(terms_.size());
  terms_.emplace_back(term);
  ids_.emplace(terms_.back(), id);
  df_.push_back(0);
  return id;
}

std::optional<TermId> Vocabulary::find(std::string_view term) const {
  auto it = ids_.find(std::string(term));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::observe_document(std::span<const TermId> tokens) {
  std::vector<TermId> distinct(tokens.begin(), tokens.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  for (TermId t : distinct) {
    if (t >= df_.size()) throw std::out_of_range("token id outside vocabulary");
    ++df_[t];
  }
  ++num_docs_;
  total_length_ += tokens.size();
}

std::uint32_t Vocabulary::df(TermId id) const {
  if (id >= df_.size()) throw std::out_of_range("unknown term id " + std::to_string(id));
  return df_[id];
}

Vocabulary Vocabulary::restore(std::vector<std::string> terms, std::vector<std::uint32_t> df, std::uint64_t num_docs,
                               std::uint64_t total_length) {
  if (terms.size() != df.size()) throw std::invalid_argument("vocabulary restore: terms/df size mismatch");
  Vocabulary v;
  v.terms_ = std::move(terms);
  v.df_ = std::move(df);
  v.ids_.reserve(v.terms_.size());
  for (std::size_t i = 0; i < v.terms_.size(); ++i) {
    if (!v.ids_.emplace(v.terms_[i], static_cast<TermId>(i)).second) {
      throw std::invalid_argument("vocabulary restore: duplicate term " + v.terms_[i]);
    }
  }
  v.num_docs_ = num_docs;
  v.total_length_ = total_length;
  v.frozen_ = true;
  return v;
}

namespace {

template <typename Lookup>
std::vector<TermId> tokenize_with(std::string_view text, TokenMode mode, Lookup&& lookup) {
  const auto words = split_words(text);
  std::vector<TermId> ids;
  ids.reserve(mode == TokenMode::unigram ? words.size() : 2 * words.size());
  for (const auto& w : words) {
    if (auto id = lookup(w)) ids.push_back(*id);
  }
  if (mode == TokenMode::unigram_bigram) {
    for (std::size_t i = 0; i + 1 < words.size(); ++i) {
      if (auto id = lookup(words[i] + "_" + words[i + 1])) ids.push_back(*id);
    }
  }
  return ids;
}

}  // namespace

std::vector<TermId> tokenize(std::string_view text, TokenMode mode, Vocabulary& vocab) {
  if (vocab.frozen()) return tokenize(text, mode, static_cast<const Vocabulary&>(vocab));
  return tokenize_with(text, mode, [&](const std::string& w) { return std::optional<TermId>(vocab.intern(w)); });
}

std::vector<TermId> tokenize(std::string_view text, TokenMode mode, const Vocabulary& vocab) {
  return tokenize_with(text, mode, [&](const std::string& w) { return vocab.find(w); });
}

SparseVector vectorize_boolean(const Document& doc) { return SparseVector::indicator(doc.tokens); }

SparseVector vectorize_counts(const Document& doc) {
  std::vector<SparseEntry> entries;
  entries.reserve(doc.tokens.size());
  for (TermId t : doc.tokens) entries.push_back({t, 1.0});
  return SparseVector::from_entries(std::move(entries));
}

Corpus Corpus::build(std::span<const RawDocument> raw, TokenMode mode) {
  Corpus c;
  c.mode = mode;
  std::vector<std::vector<std::string>> words;
  words.reserve(raw.size());
  for (const auto& r : raw) {
    words.push_back(split_words(r.text));
    for (const auto& w : words.back()) c.vocab.intern(w);
  }
  if (mode == TokenMode::unigram_bigram) {
    for (const auto& ws : words) {
      for (std::size_t i = 0; i + 1 < ws.size(); ++i) c.vocab.intern(ws[i] + "_" + ws[i + 1]);
    }
  }
  c.vocab.freeze();
  c.docs.reserve(raw.size());
  for (const auto& r : raw) {
    Document d{r.id, tokenize(r.text, mode, static_cast<const Vocabulary&>(c.vocab))};
    if (d.tokens.empty()) {
      ++c.skipped_empty;
      continue;
    }
    c.vocab.observe_document(d.tokens);
    c.docs.push_back(std::move(d));
  }
  c.reindex();
  return c;
}

void Corpus::reindex() {
  index_.clear();
  index_.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (!index_.emplace(docs[i].id, static_cast<DocId>(i)).second) {
      throw std::invalid_argument("duplicate document id: " + docs[i].id);
    }
  }
}

std::optional<DocId> Corpus::find(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Document make_query(const RawQuery& q, const Corpus& corpus) {
  return Document{q.id, tokenize(q.text, corpus.mode, corpus.vocab)};
}

namespace {

template <typename Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("text")) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected {\"id\", \"text\"}");
    }
    fn(obj);
  }
}

std::string id_string(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

std::vector<RawDocument> read_documents_jsonl(const std::filesystem::path& path) {
  std::vector<RawDocument> out;
  for_each_json_line(path, [&](const nlohmann::json& o) {
    out.push_back({id_string(o["id"]), o["text"].get<std::string>()});
  });
  return out;
}

std::vector<RawQuery> read_queries_jsonl(const std::filesystem::path& path) {
  std::vector<RawQuery> out;
  for_each_json_line(path, [&](const nlohmann::json& o) {
    std::string gold = o.contains("gold_id") ? id_string(o["gold_id"]) : std::string{};
    out.push_back({id_string(o["id"]), o["text"].get<std::string>(), std::move(gold)});
  });
  return out;
}

std::string documents_to_jsonl(std::span<const RawDocument> docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::ordered_json o;
    o["id"] = d.id;
    o["text"] = d.text;
    out += o.dump();
    out += '\n';
  }
  return out;
}

std::string queries_to_jsonl(std::span<const RawQuery> queries) {
  std::string out;
  for (const auto& q : queries) {
    nlohmann::ordered_json o;
    o["id"] = q.id;
    o["text"] = q.text;
    o["gold_id"] = q.gold_id;
    out += o.dump();
    out += '\n';
  }
  return out;
}

}  // namespace mlab
