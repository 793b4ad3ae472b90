#include <doctest.h>

#include <cmath>

#include "mlab/bounds.hpp"
#include "mlab/verify.hpp"

using namespace mlab;

TEST_CASE("mc allowance") {
  CHECK(mc_allowance(0.5, 100) == doctest::Approx(0.15));
  CHECK(mc_allowance(0.0, 100) == 0.0);
  CHECK(mc_allowance(-3.0, 100) == 0.0);
  CHECK(mc_allowance(7.0, 100) == 0.0);
  CHECK(mc_allowance(0.1, 1000) == doctest::Approx(3.0 * std::sqrt(0.09 / 1000)));
}

TEST_CASE("config validation") {
  VerifyConfig cfg;
  cfg.trials = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK_FALSE(VerifyConfig{}.to_json().contains("threads"));
}

TEST_CASE("pairwise grid at low trial counts") {
  VerifyConfig cfg;
  cfg.trials = 100;
  cfg.seed = 3;
  const auto grid = pairwise_bound_grid(cfg);
  REQUIRE(grid.size() == 400);
  for (const auto& c : grid) {
    CHECK(c.trials == 100);
    CHECK(c.bound == doctest::Approx(pairwise_error_bound(c.mu, c.k)).epsilon(1e-12));
    CHECK(c.rate() <= c.bound + mc_allowance(c.bound, c.trials) + 1e-12);
  }
  const auto again = pairwise_bound_grid(cfg);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(grid[i].errors == again[i].errors);
}

TEST_CASE("sufficient k cases") {
  VerifyConfig cfg;
  cfg.trials = 200;
  const auto cases = sufficient_k_cases(cfg, 10);
  REQUIRE(cases.size() == 10);
  for (const auto& c : cases) {
    CHECK(c.mu >= 0.05);
    CHECK(c.mu <= 0.95);
    CHECK(c.k == sufficient_k_pairwise(c.mu, 0.05));
    CHECK(c.rate() <= 0.05 + mc_allowance(0.05, c.trials));
  }
}

TEST_CASE("boolean corpus") {
  VerifyConfig cfg;
  cfg.trials = 20;
  const auto b = boolean_end_to_end(cfg, 3);
  CHECK(b.k == 26924);
  CHECK(b.eps == doctest::Approx(0.0441941738).epsilon(1e-9));
  CHECK(b.min_margin >= b.eps - 1e-12);
  CHECK(b.hardest.size() <= 3);
  CHECK(b.num_triples > 0);
}

TEST_CASE("recall cells") {
  VerifyConfig cfg;
  cfg.trials = 50;
  const auto cells = recall_bound_cells(cfg);
  CHECK(cells.size() == 16);
  for (const auto& c : cells) {
    CHECK(c.eps > 0.0);
    CHECK(c.rate() <= std::min(1.0, c.bound) + mc_allowance(c.bound, c.trials) + 1e-12);
  }
}

TEST_CASE("segment and attention checks on small instance counts") {
  VerifyConfig cfg;
  cfg.trials = 20;
  const auto s = segment_margin_sweep(cfg, 2000);
  CHECK(s.instances == 2000);
  CHECK(s.violations == 0);
  CHECK(s.witnessed > 0);
  CHECK(s.max_decomposition_error <= 1e-9);
  const auto a = attention_check(cfg, 500);
  CHECK(a.mismatches == 0);
  CHECK(a.repeat_mismatches == 0);
  CHECK(a.k == 10611);
}
