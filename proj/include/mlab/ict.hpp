#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlab/corpus.hpp"

namespace mlab {

/// Inverse-cloze-task recipe: passages are non-overlapping chunks of at most
/// `max_passage_len` words; each query is a contiguous word window of its gold
/// passage (left in place); each gold passage gets `distractors_per_gold`
/// copies with exactly `edit_count` positions replaced.
struct IctSpec {
  std::uint32_t min_query_len = 5;
  std::uint32_t max_query_len = 25;
  std::uint32_t distractors_per_gold = 2;
  std::uint32_t edit_count = 1;
  std::uint32_t max_passage_len = 50;
  /// Number of gold passages that receive a query; 0 selects every eligible passage.
  std::uint32_t num_queries = 0;
  /// Cap on emitted (non-distractor) passages; 0 means no cap.
  std::uint32_t max_passages = 0;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

struct IctCorpus {
  std::vector<RawDocument> docs;
  std::vector<RawQuery> queries;
  std::size_t num_passages = 0;
  std::size_t num_distractors = 0;
  /// Source documents shorter than min_query_len.
  std::size_t skipped_short = 0;

  nlohmann::ordered_json metadata(const IctSpec& spec) const;
};

IctCorpus synthesize_ict(std::span<const RawDocument> source, const IctSpec& spec);

/// Synthetic source text: i.i.d. Zipf-distributed words "w<rank>".
struct ZipfSpec {
  std::uint32_t num_docs = 1000;
  std::uint32_t min_len = 200;
  std::uint32_t max_len = 600;
  std::uint32_t vocab_size = 20000;
  double exponent = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

std::vector<RawDocument> generate_zipf_documents(const ZipfSpec& spec);

}  // namespace mlab
