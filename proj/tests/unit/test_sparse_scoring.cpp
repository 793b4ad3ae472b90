#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>

#include "fuzz.hpp"
#include "mlab/ict.hpp"
#include "mlab/lab.hpp"
#include "mlab/sparse_scoring.hpp"

using namespace mlab;

TEST_CASE("idf values") {
  CHECK(idf(2, 1) == doctest::Approx(0.693147180559945).epsilon(1e-12));
  // ln(1 + 990.5 / 10.5)
  CHECK(idf(1000, 10) == doctest::Approx(4.5573795222).epsilon(1e-10));
  for (std::uint64_t n : {1u, 2u, 10u, 1000000u}) CHECK(idf(n, n) > 0.0);
  CHECK_THROWS_AS(idf(0, 0), std::domain_error);
  Vocabulary v;
  CHECK_THROWS(idf(v, 3));
}

TEST_CASE("bm25 document weight") {
  const Bm25Params p;
  CHECK(bm25_doc_weight(1, 10.0, 10.0, p) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(bm25_doc_weight(3, 20.0, 10.0, p) == doctest::Approx(1.294117647).epsilon(1e-9));
  CHECK(bm25_doc_weight(1000000, 10.0, 10.0, p) == doctest::Approx(2.2).epsilon(1e-5));
  double prev = 0.0;
  for (std::uint32_t tf = 1; tf < 200; ++tf) {
    const double w = bm25_doc_weight(tf, 37.0, 12.0, p);
    CHECK(w > prev);
    CHECK(w < p.k1 + 1.0);
    prev = w;
  }
  CHECK_THROWS_AS(bm25_doc_weight(1, 10.0, 0.0, p), std::domain_error);
  CHECK_THROWS_AS((Bm25Params{-1.0, 0.5}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((Bm25Params{1.0, 1.5}.validate()), std::invalid_argument);
}

TEST_CASE("query vector is presence times idf") {
  std::vector<RawDocument> raw = {{"a", "x y"}, {"b", "y z"}, {"c", "z z w"}};
  auto c = Corpus::build(raw, TokenMode::unigram);
  Document q{"q", {*c.vocab.find("y"), *c.vocab.find("y"), *c.vocab.find("x")}};
  CHECK(query_vector(q, Scheme::boolean, c.vocab) == vectorize_boolean(q));
  auto bm = query_vector(q, Scheme::bm25, c.vocab);
  CHECK(bm.nnz() == 2);
  CHECK(bm.at(*c.vocab.find("y")) == doctest::Approx(idf(3, 2)));
  Document single{"s", {*c.vocab.find("w")}};
  auto s = query_vector(single, Scheme::tfidf, c.vocab);
  REQUIRE(s.nnz() == 1);
  CHECK(s.entries()[0].weight == doctest::Approx(idf(3, 1)));
}

TEST_CASE("score basics") {
  auto a = SparseVector::from_entries({{1, 2.0}, {3, 1.0}});
  auto b = SparseVector::from_entries({{2, 5.0}});
  CHECK(score(a, b) == 0.0);
  CHECK(score(a, a) == a.squared_norm());
}

TEST_CASE("index accumulation equals explicit inner products; sparse_topk equals sort-all") {
  SplitMix64 rng(11);
  for (Scheme scheme : {Scheme::boolean, Scheme::tfidf, Scheme::bm25}) {
    auto raw = fuzz::raw_docs(rng, 1000, 300, 1, 40);
    auto c = Corpus::build(raw, TokenMode::unigram);
    auto index = InvertedIndex::build(c, scheme);
    for (int qi = 0; qi < 30; ++qi) {
      Document q = make_query({"q", fuzz::words(rng, 300, 1, 8), ""}, c);
      const auto qv = query_vector(q, scheme, c.vocab);
      const auto scores = index.score_all(qv);
      std::vector<ScoredDoc> oracle;
      for (std::size_t d = 0; d < c.docs.size(); ++d) {
        const double explicit_score = dot(qv, doc_vector(c.docs[d], scheme, c.vocab, {}));
        REQUIRE(std::abs(scores[d] - explicit_score) <= 1e-9);
        CHECK(scores[d] >= 0.0);
        oracle.push_back({static_cast<DocId>(d), scores[d]});
      }
      std::sort(oracle.begin(), oracle.end(), ranks_before);
      for (std::size_t k : {1u, 10u, 100u, 5000u}) {
        auto top = sparse_topk(qv, index, k);
        REQUIRE(top.size() == std::min<std::size_t>(k, oracle.size()));
        CHECK(std::equal(top.begin(), top.end(), oracle.begin()));
      }
    }
  }
}

TEST_CASE("postings reproduce the document weights") {
  SplitMix64 rng(12);
  auto raw = fuzz::raw_docs(rng, 200, 100, 1, 30);
  auto c = Corpus::build(raw, TokenMode::unigram_bigram);
  auto index = InvertedIndex::build(c, Scheme::bm25, {0.9, 0.4});
  for (std::size_t d = 0; d < c.docs.size(); ++d) {
    const auto expect = doc_vector(c.docs[d], Scheme::bm25, c.vocab, {0.9, 0.4});
    const auto got = index.doc_vector(static_cast<DocId>(d));
    REQUIRE(got.nnz() == expect.nnz());
    for (std::size_t i = 0; i < got.nnz(); ++i) {
      CHECK(got.entries()[i].term == expect.entries()[i].term);
      CHECK(std::abs(got.entries()[i].weight - expect.entries()[i].weight) <= 1e-12);
    }
  }
  for (TermId t = 0; t < c.vocab.size(); ++t) {
    auto p = index.postings(t);
    CHECK(std::is_sorted(p.begin(), p.end(), [](auto& a, auto& b) { return a.doc < b.doc; }));
  }
}

TEST_CASE("ties go to the lower doc id") {
  std::vector<RawDocument> raw = {{"a", "x y"}, {"b", "x y"}, {"c", "x"}};
  auto c = Corpus::build(raw, TokenMode::unigram);
  auto index = InvertedIndex::build(c, Scheme::boolean);
  auto q = query_vector(Document{"q", {*c.vocab.find("x")}}, Scheme::boolean, c.vocab);
  auto top = sparse_topk(q, index, 3);
  REQUIRE(top.size() == 3);
  CHECK(top[0].doc == 0);
  CHECK(top[1].doc == 1);
  CHECK(top[2].doc == 2);
}

TEST_CASE("binary round trip is bit exact") {
  SplitMix64 rng(13);
  auto raw = fuzz::raw_docs(rng, 120, 90, 1, 25);
  auto c = Corpus::build(raw, TokenMode::unigram_bigram);
  auto index = InvertedIndex::build(c, Scheme::bm25, {1.5, 0.6});
  const auto bytes = index.serialize();
  CHECK(bytes.substr(0, 5) == "MLAB1");
  auto back = InvertedIndex::deserialize(bytes);
  CHECK(back == index);
  CHECK(back.serialize() == bytes);
  auto path = std::filesystem::temp_directory_path() / "mlab_index_rt.bin";
  index.save(path);
  CHECK(InvertedIndex::load(path) == index);
  std::filesystem::remove(path);
  CHECK_THROWS(InvertedIndex::deserialize(bytes.substr(0, bytes.size() / 2)));
  CHECK_THROWS(InvertedIndex::deserialize("XXXXX" + bytes.substr(5)));
}

TEST_CASE("boolean minimum margin respects its floor; bm25 goes far below it on an ict corpus") {
  ZipfSpec z;
  z.num_docs = 40;
  z.min_len = z.max_len = 200;
  z.vocab_size = 3000;
  z.seed = 21;
  IctSpec s;
  s.num_queries = 60;
  s.seed = 22;
  const auto ict = synthesize_ict(generate_zipf_documents(z), s);
  const auto c = Corpus::build(ict.docs, TokenMode::unigram);
  std::vector<Document> queries;
  std::size_t lq = 0, ld = 0;
  for (const auto& q : ict.queries) {
    queries.push_back(make_query(q, c));
    lq = std::max(lq, vectorize_boolean(queries.back()).nnz());
  }
  for (const auto& d : c.docs) ld = std::max(ld, vectorize_boolean(d).nnz());

  auto min_margin = [&](Scheme scheme) {
    const auto bank = harvest_triples(InvertedIndex::build(c, scheme), queries);
    double m = std::numeric_limits<double>::infinity();
    for (const auto& t : bank.triples) m = std::min(m, t.margin);
    return m;
  };
  const double boolean_min = min_margin(Scheme::boolean);
  const double bm25_min = min_margin(Scheme::bm25);
  CHECK(boolean_min >= boolean_min_margin(lq, ld) - 1e-12);
  CHECK(bm25_min < boolean_min);
}
