#include <doctest.h>

#include <cmath>

#include "fuzz.hpp"
#include "mlab/attention.hpp"

using namespace mlab;

TEST_CASE("hard attention examples") {
  const TermId a = 0, b = 1, c = 2;
  CHECK(hard_attention_indicator(TokenSeq{a, b}, TokenSeq{a, a, c}) == 1.0);
  CHECK(hard_attention_indicator(TokenSeq{a}, TokenSeq{a}) == 1.0);
  CHECK(hard_attention_indicator(TokenSeq{a, b}, TokenSeq{c}) == 0.0);
}

TEST_CASE("indicator attention equals the boolean inner product without repeats") {
  SplitMix64 rng(41);
  std::size_t tested = 0;
  while (tested < 2000) {
    auto x = fuzz::tokens(rng, 30, 1 + rng.below(6));
    if (has_repeated_terms(x)) continue;
    auto y = fuzz::tokens(rng, 30, 1 + rng.below(20));
    CHECK(hard_attention_indicator(x, y) == boolean_overlap(x, y));
    ++tested;
  }
}

TEST_CASE("with repeated query tokens the score counts matched positions") {
  const TokenSeq x{4, 4, 5, 6};
  const TokenSeq y{4, 6, 6};
  CHECK(has_repeated_terms(x));
  CHECK(hard_attention_indicator(x, y) == 3.0);
  CHECK(matched_positions(x, y) == 3.0);
  CHECK(boolean_overlap(x, y) == 2.0);
}

TEST_CASE("gram form uses strict > 1/2 and 0/0 = 0") {
  auto half = [](std::size_t, std::size_t) { return 0.5; };
  CHECK(hard_attention_from_gram(3, 3, half) == 0.0);
  auto mixed = [](std::size_t t, std::size_t u) { return t == 0 ? (u == 0 ? 0.9 : 0.7) : 0.1; };
  CHECK(hard_attention_from_gram(2, 2, mixed) == doctest::Approx(0.8));
}

TEST_CASE("projected embeddings approach the indicator score for large k") {
  ProjectedEmbeddings emb({ProjectionKind::rademacher, 4096, 1000, 7});
  const TokenSeq x{1, 2, 3};
  const TokenSeq y{1, 3, 3, 9};
  CHECK(hard_attention_projected(x, y, emb) == doctest::Approx(hard_attention_indicator(x, y)).epsilon(0.2));
  CHECK(emb.embed(5) == emb.embed(5));
}

TEST_CASE("attention sufficient k") {
  CHECK(attention_sufficient_k(4, 10000, 1.0) == 10611);
  CHECK(attention_sufficient_k(1, 100, 1.0) == static_cast<std::uint64_t>(std::ceil(72.0 * std::log(100.0))));
  const double k1 = 24.0 * 3.0 * 9.0 * std::log(5000.0);
  const double k2 = 24.0 * 3.0 * 36.0 * std::log(5000.0);
  CHECK(k2 == doctest::Approx(4.0 * k1));
  CHECK(attention_sufficient_k(6, 5000, 1.0) == static_cast<std::uint64_t>(std::ceil(k2)));
  CHECK_THROWS(attention_sufficient_k(0, 100, 1.0));
  CHECK_THROWS(attention_sufficient_k(1, 1, 1.0));
  CHECK_THROWS(attention_sufficient_k(1, 100, 0.0));
}
