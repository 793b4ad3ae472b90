#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "fuzz.hpp"
#include "mlab/corpus.hpp"
#include "mlab/ict.hpp"
#include "mlab/io.hpp"

using namespace mlab;

namespace {

std::vector<std::string> terms_of(const std::vector<TermId>& ids, const Vocabulary& v) {
  std::vector<std::string> out;
  for (auto id : ids) out.push_back(v.term(id));
  return out;
}

}  // namespace

TEST_CASE("tokenize examples") {
  Vocabulary v;
  CHECK(terms_of(tokenize("The cat sat", TokenMode::unigram, v), v) == std::vector<std::string>{"the", "cat", "sat"});
  CHECK(terms_of(tokenize("The cat", TokenMode::unigram_bigram, v), v) ==
        std::vector<std::string>{"the", "cat", "the_cat"});
  CHECK(tokenize("", TokenMode::unigram, v).empty());
  CHECK(split_words("Hello, WORLD! x2") == std::vector<std::string>{"hello", "world", "x2"});
}

TEST_CASE("frozen vocabulary drops unknown terms") {
  Vocabulary v;
  tokenize("alpha beta", TokenMode::unigram, v);
  v.freeze();
  const auto ids = tokenize("alpha gamma beta", TokenMode::unigram, v);
  CHECK(terms_of(ids, v) == std::vector<std::string>{"alpha", "beta"});
  CHECK_THROWS_AS(v.intern("gamma"), std::logic_error);
  CHECK_FALSE(v.find("gamma"));
}

TEST_CASE("corpus build places bigrams after unigrams and keeps stats") {
  std::vector<RawDocument> raw = {{"a", "x y z"}, {"b", "y y"}, {"c", "!!!"}};
  auto c = Corpus::build(raw, TokenMode::unigram_bigram);
  CHECK(c.docs.size() == 2);
  CHECK(c.skipped_empty == 1);
  TermId max_unigram = 0;
  TermId min_bigram = 1u << 30;
  for (std::size_t i = 0; i < c.vocab.size(); ++i) {
    const bool bigram = c.vocab.term(static_cast<TermId>(i)).find('_') != std::string::npos;
    if (bigram) min_bigram = std::min<TermId>(min_bigram, static_cast<TermId>(i));
    else max_unigram = std::max<TermId>(max_unigram, static_cast<TermId>(i));
  }
  CHECK(max_unigram < min_bigram);
  CHECK(c.vocab.num_docs() == 2);
  CHECK(c.vocab.df(*c.vocab.find("y")) == 2);
  CHECK(c.vocab.avgdl() == doctest::Approx((5.0 + 3.0) / 2.0));
  CHECK(c.find("b") == DocId{1});
}

TEST_CASE("vectorize_boolean examples") {
  Document d{"d", {0, 1, 0}};
  auto v = vectorize_boolean(d);
  REQUIRE(v.nnz() == 2);
  CHECK(v.at(0) == 1.0);
  CHECK(v.at(1) == 1.0);
  CHECK(vectorize_boolean(Document{"d", {0}}).nnz() == 1);
  auto abc = vectorize_boolean(Document{"x", {0, 1, 2}});
  auto ac = vectorize_boolean(Document{"y", {0, 2}});
  CHECK(dot(abc, ac) == 2.0);
  CHECK(vectorize_counts(d).at(0) == 2.0);
}

TEST_CASE("boolean dot equals set intersection on a 100-doc fuzz corpus") {
  SplitMix64 rng(3);
  auto raw = fuzz::raw_docs(rng, 100, 80, 1, 30);
  auto c = Corpus::build(raw, TokenMode::unigram);
  std::vector<SparseVector> vecs;
  std::vector<std::set<TermId>> sets;
  for (const auto& d : c.docs) {
    vecs.push_back(vectorize_boolean(d));
    sets.emplace_back(d.tokens.begin(), d.tokens.end());
  }
  for (std::size_t i = 0; i < vecs.size(); ++i) {
    for (std::size_t j = 0; j < vecs.size(); ++j) {
      std::vector<TermId> common;
      std::set_intersection(sets[i].begin(), sets[i].end(), sets[j].begin(), sets[j].end(),
                            std::back_inserter(common));
      REQUIRE(dot(vecs[i], vecs[j]) == static_cast<double>(common.size()));
    }
  }
}

TEST_CASE("jsonl round trip") {
  std::vector<RawDocument> docs = {{"a", "hello \"world\""}, {"b", "line\nbreak"}};
  std::vector<RawQuery> qs = {{"q1", "hello", "a"}};
  auto dir = std::filesystem::temp_directory_path() / "mlab_corpus_test";
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "d.jsonl", documents_to_jsonl(docs));
  write_file_atomic(dir / "q.jsonl", queries_to_jsonl(qs));
  auto d2 = read_documents_jsonl(dir / "d.jsonl");
  auto q2 = read_queries_jsonl(dir / "q.jsonl");
  REQUIRE(d2.size() == 2);
  CHECK(d2[1].text == "line\nbreak");
  CHECK(q2[0].gold_id == "a");
  write_file_atomic(dir / "bad.jsonl", "{\"id\": 1}\n");
  CHECK_THROWS(read_documents_jsonl(dir / "bad.jsonl"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("ict: passages, queries, distractors") {
  ZipfSpec z;
  z.num_docs = 40;
  z.min_len = 30;
  z.max_len = 180;
  z.vocab_size = 500;
  z.seed = 5;
  const auto source = generate_zipf_documents(z);

  for (std::uint32_t edits : {1u, 2u}) {
    IctSpec spec;
    spec.edit_count = edits;
    spec.seed = 9;
    const auto ict = synthesize_ict(source, spec);
    std::map<std::string, std::vector<std::string>> by_id;
    for (const auto& d : ict.docs) by_id[d.id] = split_words(d.text);
    CHECK(ict.queries.size() > 0);
    CHECK(ict.num_distractors == 2 * ict.queries.size());

    for (const auto& q : ict.queries) {
      const auto qw = split_words(q.text);
      const auto& gold = by_id.at(q.gold_id);
      CHECK(qw.size() >= 5);
      CHECK(qw.size() <= 25);
      CHECK(gold.size() <= 50);
      CHECK(std::search(gold.begin(), gold.end(), qw.begin(), qw.end()) != gold.end());
      for (int j = 0; j < 2; ++j) {
        const auto& dis = by_id.at(q.gold_id + "~d" + std::to_string(j));
        REQUIRE(dis.size() == gold.size());
        std::size_t diff = 0;
        for (std::size_t p = 0; p < gold.size(); ++p) diff += dis[p] != gold[p];
        CHECK(diff == edits);
      }
    }
  }
}

TEST_CASE("ict: ceil split, short sources and determinism") {
  std::string hundred;
  for (int i = 0; i < 100; ++i) hundred += "w" + std::to_string(i) + " ";
  std::vector<RawDocument> source = {{"long", hundred}, {"short", "a b c"}};
  IctSpec spec;
  spec.seed = 1;
  spec.distractors_per_gold = 0;
  const auto ict = synthesize_ict(source, spec);
  CHECK(ict.num_passages == 2);
  CHECK(ict.skipped_short == 1);

  spec.distractors_per_gold = 2;
  const auto a = synthesize_ict(source, spec);
  const auto b = synthesize_ict(source, spec);
  CHECK(documents_to_jsonl(a.docs) == documents_to_jsonl(b.docs));
  CHECK(queries_to_jsonl(a.queries) == queries_to_jsonl(b.queries));
  spec.seed = 2;
  CHECK(queries_to_jsonl(synthesize_ict(source, spec).queries) != queries_to_jsonl(a.queries));
}

TEST_CASE("ict: spec validation") {
  IctSpec s;
  s.edit_count = 3;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.edit_count = 1;
  s.min_query_len = 30;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
