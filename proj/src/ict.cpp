#include "mlab/ict.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "mlab/random.hpp"

namespace mlab {

namespace {

enum StreamTag : std::uint64_t { kSelectStream = 1, kQueryStream = 2, kDistractorStream = 3, kZipfStream = 4 };

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace

void IctSpec::validate() const {
  if (min_query_len < 1 || min_query_len > max_query_len) {
    throw std::invalid_argument("ict: need 1 <= min_query_len <= max_query_len");
  }
  if (edit_count != 1 && edit_count != 2) throw std::invalid_argument("ict: edit_count must be 1 or 2");
  if (max_passage_len < min_query_len) throw std::invalid_argument("ict: max_passage_len < min_query_len");
}

nlohmann::ordered_json IctSpec::to_json() const {
  return {{"min_query_len", min_query_len},
          {"max_query_len", max_query_len},
          {"distractors_per_gold", distractors_per_gold},
          {"edit_count", edit_count},
          {"max_passage_len", max_passage_len},
          {"num_queries", num_queries},
          {"max_passages", max_passages},
          {"seed", seed}};
}

nlohmann::ordered_json IctCorpus::metadata(const IctSpec& spec) const {
  return {{"ict", spec.to_json()},
          {"num_docs", docs.size()},
          {"num_passages", num_passages},
          {"num_distractors", num_distractors},
          {"num_queries", queries.size()},
          {"skipped_short_sources", skipped_short},
          {"distractor_positions", "uniform without replacement"},
          {"distractor_tokens", "uniform over source vocabulary, excluding the replaced word"}};
}

IctCorpus synthesize_ict(std::span<const RawDocument> source, const IctSpec& spec) {
  spec.validate();
  IctCorpus out;

  struct Passage {
    std::string id;
    std::vector<std::string> words;
  };
  std::vector<Passage> passages;
  std::vector<std::string> pool;
  std::unordered_set<std::string> seen;

  for (const auto& src : source) {
    auto words = split_words(src.text);
    for (const auto& w : words) {
      if (seen.insert(w).second) pool.push_back(w);
    }
    if (spec.max_passages && passages.size() >= spec.max_passages) continue;
    if (words.size() < spec.min_query_len) {
      ++out.skipped_short;
      continue;
    }
    const std::size_t chunks = (words.size() + spec.max_passage_len - 1) / spec.max_passage_len;
    for (std::size_t c = 0; c < chunks; ++c) {
      if (spec.max_passages && passages.size() >= spec.max_passages) break;
      const std::size_t lo = c * spec.max_passage_len;
      const std::size_t hi = std::min(words.size(), lo + spec.max_passage_len);
      passages.push_back({src.id + "#" + std::to_string(c),
                          std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(lo),
                                                   words.begin() + static_cast<std::ptrdiff_t>(hi))});
    }
  }
  out.num_passages = passages.size();

  std::vector<std::size_t> eligible;
  for (std::size_t i = 0; i < passages.size(); ++i) {
    if (passages[i].words.size() >= spec.min_query_len) eligible.push_back(i);
  }
  std::size_t want = spec.num_queries == 0 ? eligible.size() : std::min<std::size_t>(spec.num_queries, eligible.size());
  SplitMix64 select(hash3(spec.seed, kSelectStream, 0));
  for (std::size_t i = 0; i < want; ++i) {
    std::swap(eligible[i], eligible[i + select.below(eligible.size() - i)]);
  }
  eligible.resize(want);
  std::sort(eligible.begin(), eligible.end());

  if (spec.distractors_per_gold > 0 && pool.size() < 2) {
    throw std::invalid_argument("ict: need at least two distinct source words for distractors");
  }

  out.docs.reserve(passages.size() + eligible.size() * spec.distractors_per_gold);
  for (const auto& p : passages) out.docs.push_back({p.id, join_words(p.words)});

  for (std::size_t qi = 0; qi < eligible.size(); ++qi) {
    const Passage& gold = passages[eligible[qi]];
    const std::size_t plen = gold.words.size();

    SplitMix64 rng(hash3(spec.seed, kQueryStream, eligible[qi]));
    const std::size_t qlen = rng.between(spec.min_query_len, std::min<std::size_t>(spec.max_query_len, plen));
    const std::size_t start = rng.between(0, plen - qlen);
    out.queries.push_back({"q" + std::to_string(qi),
                           join_words(std::span(gold.words).subspan(start, qlen)), gold.id});

    for (std::uint32_t j = 0; j < spec.distractors_per_gold; ++j) {
      SplitMix64 drng(hash3(spec.seed, kDistractorStream, eligible[qi] * 1024 + j));
      auto words = gold.words;
      std::vector<std::size_t> positions(plen);
      for (std::size_t p = 0; p < plen; ++p) positions[p] = p;
      const std::size_t edits = std::min<std::size_t>(spec.edit_count, plen);
      for (std::size_t e = 0; e < edits; ++e) {
        std::swap(positions[e], positions[e + drng.below(plen - e)]);
        auto& w = words[positions[e]];
        std::string repl;
        do {
          repl = pool[drng.below(pool.size())];
        } while (repl == w);
        w = std::move(repl);
      }
      out.docs.push_back({gold.id + "~d" + std::to_string(j), join_words(words)});
      ++out.num_distractors;
    }
  }
  return out;
}

void ZipfSpec::validate() const {
  if (num_docs == 0 || vocab_size == 0 || min_len == 0 || min_len > max_len || !(exponent > 0.0)) {
    throw std::invalid_argument("zipf: invalid generator settings");
  }
}

nlohmann::ordered_json ZipfSpec::to_json() const {
  return {{"num_docs", num_docs}, {"min_len", min_len},       {"max_len", max_len},
          {"vocab_size", vocab_size}, {"exponent", exponent}, {"seed", seed}};
}

std::vector<RawDocument> generate_zipf_documents(const ZipfSpec& spec) {
  spec.validate();
  std::vector<double> cdf(spec.vocab_size);
  double total = 0.0;
  for (std::uint32_t r = 0; r < spec.vocab_size; ++r) {
    total += std::pow(static_cast<double>(r + 1), -spec.exponent);
    cdf[r] = total;
  }
  std::vector<RawDocument> docs;
  docs.reserve(spec.num_docs);
  for (std::uint32_t d = 0; d < spec.num_docs; ++d) {
    SplitMix64 rng(hash3(spec.seed, kZipfStream, d));
    const std::size_t len = rng.between(spec.min_len, spec.max_len);
    std::string text;
    text.reserve(len * 6);
    for (std::size_t i = 0; i < len; ++i) {
      const double u = rng.uniform01() * total;
      const auto r = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      if (i) text += ' ';
      text += 'w';
      text += std::to_string(std::min<std::size_t>(r, spec.vocab_size - 1));
    }
    docs.push_back({"s" + std::to_string(d), std::move(text)});
  }
  return docs;
}

}  // namespace mlab
