#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fuzz.hpp"
#include "mlab/bounds.hpp"
#include "mlab/lab.hpp"

using namespace mlab;

namespace {

// Errors counted by projecting every vector explicitly.
std::uint32_t oracle_errors(const SparseVector& q, const SparseVector& diff, ProjectionKind kind, std::uint32_t k,
                            std::uint32_t trials, std::uint64_t base) {
  std::uint32_t n = 0;
  for (std::uint32_t t = 0; t < trials; ++t) {
    ProjectionSpec spec{kind, k, 1u << 20, base + t};
    n += dot(project(spec, q), project(spec, diff)) <= 0.0;
  }
  return n;
}

std::uint32_t oracle_recall_failures(const SparseVector& q, const std::vector<SparseVector>& docs, DocId winner,
                                     std::uint32_t r0, ProjectionKind kind, std::uint32_t k, std::uint32_t trials,
                                     std::uint64_t base) {
  std::uint32_t n = 0;
  for (std::uint32_t t = 0; t < trials; ++t) {
    ProjectionSpec spec{kind, k, 1u << 20, base + t};
    const auto pq = project(spec, q);
    const double gold = dot(pq, project(spec, docs[winner]));
    std::uint32_t above = 0;
    for (std::size_t d = 0; d < docs.size(); ++d) {
      if (d != winner && dot(pq, project(spec, docs[d])) >= gold) ++above;
    }
    n += above >= r0;
  }
  return n;
}

std::vector<LengthCorpus> tiny_corpora(std::uint64_t seed) {
  LengthSynthSpec spec;
  spec.lengths = {30, 60};
  spec.docs_per_length = 300;
  spec.queries_per_length = 40;
  spec.vocab_size = 2000;
  spec.seed = seed;
  return synthesize_length_corpora(spec);
}

}  // namespace

TEST_CASE("default grid: 40 geometric values over [32, 9472]") {
  const auto g = KGrid::default_grid();
  REQUIRE(g.values.size() == 40);
  CHECK(g.values.front() == 32);
  CHECK(g.values.back() == 9472);
  CHECK(std::is_sorted(g.values.begin(), g.values.end()));
  CHECK(std::adjacent_find(g.values.begin(), g.values.end()) == g.values.end());
  CHECK(g.to_json()["values"].size() == 40);
  CHECK_THROWS(KGrid::from_values({5}).validate());
  CHECK_THROWS(KGrid::from_values({5, 5}).validate());
  CHECK_THROWS(KGrid::from_values({}).validate());
}

TEST_CASE("pairwise runner matches explicit projections on both kernel paths") {
  SplitMix64 rng(61);
  const std::uint32_t ks[] = {8, 20, 64, 100};
  for (auto kind : {ProjectionKind::rademacher, ProjectionKind::gaussian}) {
    for (std::size_t support : {5u, 60u}) {
      auto q = fuzz::sparse(rng, 1000, support);
      auto d1 = q + fuzz::sparse(rng, 1000, support);
      auto d2 = fuzz::sparse(rng, 1000, support);
      if (!(normalized_margin(q, d1, d2) > 0.0)) std::swap(d1, d2);
      const auto counts = pairwise_error_counts(q, d1, d2, kind, ks, 200, 1000);
      for (std::size_t g = 0; g < 4; ++g) CHECK(counts[g] == oracle_errors(q, d1 - d2, kind, ks[g], 200, 1000));
    }
  }
}

TEST_CASE("recall runner matches explicit projections") {
  SplitMix64 rng(62);
  const std::uint32_t ks[] = {16, 48, 96};
  for (auto kind : {ProjectionKind::rademacher, ProjectionKind::gaussian}) {
    auto q = fuzz::sparse(rng, 40, 8);
    std::vector<SparseVector> docs;
    for (int d = 0; d < 30; ++d) docs.push_back(fuzz::sparse(rng, 40, 6));
    const auto winner = sparse_winner(q, docs);
    REQUIRE(winner);
    for (std::uint32_t r0 : {1u, 3u}) {
      const auto counts = recall_failure_counts(q, docs, *winner, r0, kind, ks, 60, 7);
      for (std::size_t g = 0; g < 3; ++g) {
        CHECK(counts[g] == oracle_recall_failures(q, docs, *winner, r0, kind, ks[g], 60, 7));
      }
    }
  }
}

TEST_CASE("estimate_pairwise_error basics") {
  auto q = SparseVector::from_entries({{0, 1.0}, {1, 0.5}});
  auto d1 = SparseVector::from_entries({{0, 1.0}});
  auto d2 = SparseVector::from_entries({{1, 1.0}});
  const double mu = normalized_margin(q, d1, d2);
  const double one = estimate_pairwise_error(q, d1, d2, ProjectionKind::rademacher, 4, 1, 3);
  CHECK((one == 0.0 || one == 1.0));
  const auto k = static_cast<std::uint32_t>(sufficient_k_pairwise(mu, 0.001));
  const double rate = estimate_pairwise_error(q, d1, d2, ProjectionKind::gaussian, k, 1000, 5);
  CHECK(rate <= 0.001 + 3.0 * std::sqrt(0.001 * 0.999 / 1000));
  CHECK_THROWS_AS(estimate_pairwise_error(q, d2, d1, ProjectionKind::rademacher, 4, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(estimate_pairwise_error(q, d1, d1, ProjectionKind::rademacher, 4, 10, 1), UndefinedMargin);
}

// Gaussian matrices: with Rademacher entries and a handful of columns the
// projected score is a lattice variable and the error rate oscillates with k.
TEST_CASE("error rate is non-increasing in k within 2 sigma") {
  SplitMix64 rng(66);
  auto q = fuzz::sparse(rng, 200, 20);
  const auto shared = fuzz::sparse(rng, 200, 20);
  const auto d1 = q + shared;
  const auto d2 = shared + fuzz::sparse(rng, 200, 40);
  REQUIRE(normalized_margin(q, d1, d2) > 0.0);
  const auto grid = KGrid::geometric(8, 1024, 12);
  const std::uint32_t trials = 10000;
  const auto counts = pairwise_error_counts(q, d1, d2, ProjectionKind::gaussian, grid.values, trials, 77);
  for (std::size_t g = 1; g < counts.size(); ++g) {
    const double a = counts[g - 1] / double(trials);
    const double b = counts[g] / double(trials);
    const double sigma = std::sqrt((a * (1 - a) + b * (1 - b)) / trials);
    CHECK(b <= a + 2.0 * sigma);
  }
  CHECK(counts.back() < counts.front());
}

TEST_CASE("runners do not depend on the thread count") {
  SplitMix64 rng(63);
  auto q = fuzz::sparse(rng, 500, 10);
  std::vector<SparseVector> docs;
  for (int d = 0; d < 50; ++d) docs.push_back(fuzz::sparse(rng, 500, 10));
  const auto w = *sparse_winner(q, docs);
  const std::uint32_t ks[] = {32, 64, 128};
  CHECK(recall_failure_counts(q, docs, w, 2, ProjectionKind::rademacher, ks, 97, 3, 1) ==
        recall_failure_counts(q, docs, w, 2, ProjectionKind::rademacher, ks, 97, 3, 5));
  std::vector<SparseVector> diffs;
  for (std::size_t d = 0; d < docs.size(); ++d) diffs.push_back(docs[w] - docs[d]);
  CHECK(grouped_error_counts(q, diffs, ProjectionKind::gaussian, ks, 41, 9, 1) ==
        grouped_error_counts(q, diffs, ProjectionKind::gaussian, ks, 41, 9, 3));
}

TEST_CASE("harvest triples") {
  std::vector<SparseVector> docs = {SparseVector::from_entries({{0, 1.0}}), SparseVector::from_entries({{0, 2.0}, {1, 1.0}}),
                                    SparseVector::from_entries({{1, 1.0}})};
  std::vector<SparseVector> queries = {SparseVector::from_entries({{0, 1.0}}), SparseVector::from_entries({{5, 1.0}})};
  auto bank = harvest_triples(docs, queries);
  CHECK(bank.skipped_queries == 1);
  CHECK(bank.triples.size() <= 2);
  for (const auto& t : bank.triples) {
    CHECK(t.winner == 1);
    CHECK(dot(bank.queries[t.query], bank.docs[t.winner]) >= dot(bank.queries[t.query], bank.docs[t.loser]));
    CHECK(t.margin == doctest::Approx(normalized_margin(bank.queries[t.query], bank.docs[t.winner], bank.docs[t.loser]))
                          .epsilon(1e-12));
  }
  CHECK(sparse_winner(queries[1], docs) == std::nullopt);
}

TEST_CASE("harvested margins match brute force on a fuzz corpus") {
  SplitMix64 rng(64);
  std::vector<SparseVector> docs, queries;
  for (int d = 0; d < 120; ++d) docs.push_back(fuzz::sparse(rng, 80, 12));
  for (int q = 0; q < 15; ++q) queries.push_back(fuzz::sparse(rng, 80, 4));
  auto bank = harvest_triples(docs, queries, 3);
  std::size_t expected = 0;
  for (std::uint32_t qi = 0; qi < queries.size(); ++qi) {
    const auto w = sparse_winner(queries[qi], docs);
    if (!w) continue;
    std::vector<double> brute;
    for (DocId d = 0; d < docs.size(); ++d) {
      if (d == *w || docs[d] == docs[*w]) continue;
      const double mu = normalized_margin(queries[qi], docs[*w], docs[d]);
      if (mu > 0.0) brute.push_back(mu);
    }
    std::sort(brute.begin(), brute.end());
    const auto got = positive_margins(queries[qi], docs, *w);
    REQUIRE(got.size() == brute.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(brute[i]).epsilon(1e-12));
    expected += brute.size();
  }
  CHECK(bank.triples.size() == expected);
}

TEST_CASE("min-k: a margin-1 singleton reaches the target at the first grid value") {
  TripleBank bank;
  bank.queries = {SparseVector::from_entries({{3, 1.0}})};
  bank.docs = {SparseVector::from_entries({{3, 2.0}}), SparseVector::from_entries({{3, 1.0}})};
  bank.triples = {{0, 0, 1, normalized_margin(bank.queries[0], bank.docs[0], bank.docs[1])}};
  CHECK(bank.triples[0].margin == doctest::Approx(1.0));
  MinKConfig cfg;
  cfg.num_bins = 1;
  cfg.seed = 4;
  const auto report = min_k_per_bin(bank, cfg);
  REQUIRE(report.bins.size() == 1);
  CHECK(report.bins[0].min_k == 32u);
  CHECK(report.bins[0].accuracy == 1.0);
  CHECK(report.csv().rfind("bin_lo,bin_hi,n_triples,stat,min_k,trials,grid_id", 0) == 0);
  cfg.grid.values.clear();
  CHECK_THROWS(min_k_per_bin(bank, cfg));
}

TEST_CASE("min-k report is deterministic across threads and below the bound") {
  SplitMix64 rng(65);
  std::vector<SparseVector> docs, queries;
  for (int d = 0; d < 200; ++d) docs.push_back(fuzz::sparse(rng, 150, 15));
  for (int q = 0; q < 10; ++q) queries.push_back(fuzz::sparse(rng, 150, 5));
  const auto bank = harvest_triples(docs, queries);
  MinKConfig cfg;
  cfg.num_bins = 4;
  cfg.trials = 200;
  cfg.samples_per_bin = 5;
  cfg.grid = KGrid::geometric(16, 4096, 12);
  cfg.seed = 10;
  cfg.threads = 1;
  const auto a = min_k_per_bin(bank, cfg);
  cfg.threads = 4;
  const auto b = min_k_per_bin(bank, cfg);
  CHECK(a.csv() == b.csv());
  std::size_t covered = a.dropped_triples;
  for (const auto& bin : a.bins) {
    covered += bin.n_triples;
    if (bin.min_k) CHECK(*bin.min_k <= bin.bound_k);
  }
  CHECK(covered == bank.triples.size());
}

TEST_CASE("binning names") {
  for (auto b : {Binning::quantile, Binning::log, Binning::linear}) CHECK(parse_binning(to_string(b)) == b);
  CHECK_THROWS(parse_binning("nope"));
}

TEST_CASE("quantiles and linear fit") {
  const std::vector<double> s = {1, 2, 3, 4};
  CHECK(quantile_sorted(s, 0.0) == 1.0);
  CHECK(quantile_sorted(s, 1.0) == 4.0);
  CHECK(quantile_sorted(s, 0.5) == 2.5);
  CHECK(quantile_sorted(s, 0.25) == doctest::Approx(1.75));
  const std::vector<double> x = {1, 2, 3, 4}, line = {3, 5, 7, 9}, flat = {2, 2, 2, 2};
  CHECK(linear_fit_r2(x, line) == doctest::Approx(1.0));
  CHECK(linear_fit_r2(x, flat) == 0.0);
  const std::vector<double> noisy = {1, 3, 2, 4};
  CHECK(linear_fit_r2(x, noisy) == doctest::Approx(0.64));
}

TEST_CASE("trend checks") {
  const std::vector<double> down = {5, 4, 4, 2};
  const std::vector<double> zero(3, 0.0);
  CHECK_THROWS(check_non_increasing(down, std::vector<double>(4, 0.0), 0));
  CHECK(check_non_increasing(down, zero, 0).passed);
  const std::vector<double> bump = {5, 4, 4.5, 2};
  CHECK_FALSE(check_non_increasing(bump, zero, 1).passed);
  const std::vector<double> tol = {0.0, 1.0, 0.0};
  auto r = check_non_increasing(bump, tol, 1);
  CHECK(r.passed);
  CHECK(r.inversions == 1);
  CHECK(r.tolerated == 1);
  const std::vector<double> two = {5, 6, 4, 5};
  const std::vector<double> wide(3, 10.0);
  CHECK_FALSE(check_non_increasing(two, wide, 1).passed);
  const std::vector<double> up = {1, 2, 2, 3};
  CHECK(check_non_decreasing(up, zero, 0).passed);
}

TEST_CASE("length corpora: sizes and margin quantiles against a sort oracle") {
  const auto corpora = tiny_corpora(3);
  REQUIRE(corpora.size() == 2);
  for (const auto& c : corpora) {
    CHECK(c.docs.size() == 300);
    CHECK(c.queries.size() == 40);
  }
  const std::uint32_t ranks[] = {1, 10, 100};
  const auto report = margin_quantiles_by_length(corpora, ranks, 2);
  CHECK(report.csv() == margin_quantiles_by_length(corpora, ranks, 1).csv());
  for (const auto& cell : report.cells) {
    const auto& c = *std::find_if(corpora.begin(), corpora.end(), [&](auto& x) { return x.length == cell.length; });
    std::vector<double> picked;
    for (const auto& q : c.queries) {
      const auto w = sparse_winner(q, c.docs);
      if (!w) continue;
      auto m = positive_margins(q, c.docs, *w);
      if (m.size() >= cell.rank) picked.push_back(m[cell.rank - 1]);
    }
    std::sort(picked.begin(), picked.end());
    REQUIRE(picked.size() == cell.n_queries);
    CHECK(cell.median == doctest::Approx(quantile_sorted(picked, 0.5)).epsilon(1e-12));
    CHECK(cell.q25 == doctest::Approx(quantile_sorted(picked, 0.25)).epsilon(1e-12));
    CHECK(cell.q75 == doctest::Approx(quantile_sorted(picked, 0.75)).epsilon(1e-12));
  }
  // Per query the 10th smallest margin never exceeds the 100th.
  for (const auto& c : corpora) {
    for (const auto& q : c.queries) {
      const auto w = sparse_winner(q, c.docs);
      if (!w) continue;
      const auto m = positive_margins(q, c.docs, *w);
      if (m.size() >= 100) CHECK(m[9] <= m[99]);
    }
  }
}

TEST_CASE("recall min-k: monotone in the target, under the recall bound, thread independent") {
  const auto corpora = tiny_corpora(4);
  RecallConfig cfg;
  cfg.grid = KGrid::geometric(16, 4096, 16);
  cfg.trials = 20;
  cfg.max_queries = 10;
  cfg.seed = 2;
  cfg.threads = 1;
  const auto a = min_k_for_recall(corpora, cfg);
  cfg.threads = 3;
  CHECK(min_k_for_recall(corpora, cfg).csv() == a.csv());
  for (const auto& length : {30u, 60u}) {
    std::optional<std::uint32_t> prev;
    for (const auto& cell : a.cells) {
      if (cell.length != length) continue;
      REQUIRE(cell.min_k);
      if (prev) CHECK(*cell.min_k >= *prev);
      prev = cell.min_k;
      if (cell.recall_bound_k) CHECK(*cell.min_k <= *cell.recall_bound_k);
    }
  }
}

TEST_CASE("length synth spec validation") {
  LengthSynthSpec s;
  s.docs_per_length = 10;
  s.queries_per_length = 5;
  CHECK_THROWS(s.validate());
  s = LengthSynthSpec{};
  s.lengths = {};
  CHECK_THROWS(s.validate());
}
