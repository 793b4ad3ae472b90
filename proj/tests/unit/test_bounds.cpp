#include <doctest.h>

#include <cmath>

#include "fuzz.hpp"
#include "mlab/bounds.hpp"

using namespace mlab;

TEST_CASE("normalized margin examples") {
  auto e = [](TermId t) { return SparseVector::from_entries({{t, 1.0}}); };
  CHECK(normalized_margin(e(1), e(1), e(2)) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  auto d1 = SparseVector::from_entries({{0, 3.0}, {1, 1.0}});
  auto d2 = SparseVector::from_entries({{0, 1.0}, {1, 2.0}});
  auto q = d1 - d2;
  CHECK(normalized_margin(q, d1, d2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(normalized_margin(scaled(q, 7.5), d1, d2) == doctest::Approx(normalized_margin(q, d1, d2)).epsilon(1e-12));
  CHECK_THROWS_AS(normalized_margin(SparseVector{}, d1, d2), UndefinedMargin);
  CHECK_THROWS_AS(normalized_margin(q, d1, d1), UndefinedMargin);
}

TEST_CASE("margin is bounded and its numerator ignores directions orthogonal to q") {
  SplitMix64 rng(5);
  for (int it = 0; it < 300; ++it) {
    auto q = fuzz::sparse(rng, 40, 10, false);
    auto d1 = fuzz::sparse(rng, 40, 10, false);
    auto d2 = fuzz::sparse(rng, 40, 10, false);
    if (d1 == d2) continue;
    const double mu = normalized_margin(q, d1, d2);
    CHECK(mu >= -1.0 - 1e-12);
    CHECK(mu <= 1.0 + 1e-12);
    const double direct = dot(q, d1 - d2) / (q.norm() * (d1 - d2).norm());
    CHECK(std::abs(mu - direct) <= 1e-12);
    // w lives on terms outside q's support.
    auto w = SparseVector::from_entries({{100, 2.0}, {101, -1.0}});
    CHECK(dot(q, (d1 + w) - (d2 + w)) == doctest::Approx(dot(q, d1 - d2)));
  }
}

TEST_CASE("pairwise error bound") {
  CHECK(pairwise_error_bound(0.5, 100) == doctest::Approx(0.0620154144).epsilon(1e-9));
  CHECK(pairwise_error_bound(0.5, 1e7) < 1e-300);
  CHECK(clamp_probability(pairwise_error_bound(0.01, 1)) == 1.0);
  CHECK_THROWS(pairwise_error_bound(0.0, 10));
  CHECK_THROWS(pairwise_error_bound(1.1, 10));
  CHECK_THROWS(pairwise_error_bound(0.5, 0));
  double prev_k = 10.0;
  for (double k = 2; k < 5000; k *= 1.5) {
    const double b = pairwise_error_bound(0.3, k);
    CHECK(b < prev_k);
    prev_k = b;
  }
  double prev_e = 10.0;
  for (double e = 0.05; e <= 1.0; e += 0.05) {
    const double b = pairwise_error_bound(e, 200);
    CHECK(b < prev_e);
    prev_e = b;
  }
}

TEST_CASE("sufficient k values") {
  CHECK(2.0 * std::log(80.0) == doctest::Approx(8.764053269).epsilon(1e-9));
  CHECK(sufficient_k_pairwise(0.1, 0.05) == 1879);
  CHECK(sufficient_k_quadratic(0.1, 0.05) == 5259);
  CHECK(sufficient_k_quadratic(1.0, 0.05) == 53);
  CHECK(recall_bound_constant(1000, 10) == 3964.0);
  CHECK(recall_bound_constant(1000, 1000) == 4.0);
  CHECK(sufficient_k_recall(0.2, 0.05, 1000, 10) == 1302);
  CHECK(sufficient_k_boolean(16, 64, 0.05) == 107693);
  CHECK(sufficient_k_boolean(8, 32, 0.05) == 26924);
  CHECK(boolean_min_margin(16, 64) == doctest::Approx(0.0220970869).epsilon(1e-9));
  CHECK(boolean_min_margin(8, 32) == doctest::Approx(0.0441941738).epsilon(1e-9));
  CHECK_THROWS(sufficient_k_pairwise(0.1, 0.0));
  CHECK_THROWS(sufficient_k_pairwise(0.1, 1.0));
  CHECK_THROWS(recall_bound_constant(10, 11));
  CHECK_THROWS(recall_bound_constant(10, 0));
}

TEST_CASE("recall bound with r0 = |D| reduces to the pairwise form") {
  CHECK(recall_error_bound(0.3, 500, 7, 7) == doctest::Approx(pairwise_error_bound(0.3, 500)));
}

TEST_CASE("sufficient k is minimal and quadratic dominates") {
  SplitMix64 rng(6);
  for (int it = 0; it < 100; ++it) {
    const double eps = 0.02 + 0.98 * rng.uniform01();
    const double beta = 0.001 + 0.9 * rng.uniform01();
    const auto k = sufficient_k_pairwise(eps, beta);
    CHECK(pairwise_error_bound(eps, static_cast<double>(k)) <= beta * (1 + 1e-12));
    if (k > 1) CHECK(pairwise_error_bound(eps, static_cast<double>(k - 1)) > beta);
    CHECK(sufficient_k_quadratic(eps, beta) >= k);

    const std::uint64_t n = 10 + rng.below(1000);
    const std::uint64_t r0 = 1 + rng.below(n);
    const auto kr = sufficient_k_recall(eps, beta, n, r0);
    CHECK(recall_error_bound(eps, static_cast<double>(kr), n, r0) <= beta * (1 + 1e-12));
    if (kr > 1) CHECK(recall_error_bound(eps, static_cast<double>(kr - 1), n, r0) > beta);
  }
}

TEST_CASE("boolean k equals the quadratic formula at the boolean margin") {
  for (auto [lq, ld] : {std::pair<std::uint64_t, std::uint64_t>{8, 32}, {16, 64}, {3, 5}}) {
    const double eps = boolean_min_margin(lq, ld);
    const double formula = 12.0 / (eps * eps) * std::log(4.0 / 0.05);
    CHECK(formula == doctest::Approx(24.0 * lq * ld * std::log(80.0)).epsilon(1e-12));
    CHECK(sufficient_k_boolean(lq, ld, 0.05) == static_cast<std::uint64_t>(std::ceil(formula - 1e-9)));
  }
}
