#include "mlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "mlab/attention.hpp"
#include "mlab/bounds.hpp"
#include "mlab/io.hpp"
#include "mlab/lab.hpp"
#include "mlab/multivector.hpp"
#include "mlab/parallel.hpp"
#include "mlab/random.hpp"

namespace mlab {

namespace {

enum VerifyTag : std::uint64_t {
  kPairwiseStream = 21,
  kCalibrationStream = 22,
  kBooleanStream = 23,
  kRecallStream = 24,
  kSegmentStream = 25,
  kAttentionStream = 26,
};

constexpr std::uint64_t kVocab = 10000;

// Three distinct terms in [0, v).
void distinct_terms(SplitMix64& rng, std::uint64_t v, TermId& a, TermId& b, TermId& c) {
  a = static_cast<TermId>(rng.below(v));
  do b = static_cast<TermId>(rng.below(v)); while (b == a);
  do c = static_cast<TermId>(rng.below(v)); while (c == a || c == b);
}

// q = e_a, d1 = alpha e_a + e_c, d2 = e_b has margin exactly mu (mu = 1 uses
// d1 = 2 e_a, d2 = e_a).
void margin_triple(double mu, TermId a, TermId b, TermId c, SparseVector& q, SparseVector& d1, SparseVector& d2) {
  q = SparseVector::from_entries({{a, 1.0}});
  if (mu >= 1.0) {
    d1 = SparseVector::from_entries({{a, 2.0}});
    d2 = SparseVector::from_entries({{a, 1.0}});
    return;
  }
  const double alpha = mu * std::sqrt(2.0 / (1.0 - mu * mu));
  d1 = SparseVector::from_entries({{a, alpha}, {c, 1.0}});
  d2 = SparseVector::from_entries({{b, 1.0}});
}

std::string fmt(double x) { return format_double(x); }

}  // namespace

void VerifyConfig::validate() const {
  if (trials < 1) throw std::invalid_argument("verify: trials must be >= 1");
}

nlohmann::ordered_json VerifyConfig::to_json() const { return {{"trials", trials}, {"seed", seed}}; }

double mc_allowance(double p, std::uint32_t trials) {
  p = std::clamp(p, 0.0, 1.0);
  return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

std::vector<PairwiseCell> pairwise_bound_grid(const VerifyConfig& cfg) {
  cfg.validate();
  std::vector<std::uint32_t> ks;
  for (int i = 0; i < 20; ++i) ks.push_back(static_cast<std::uint32_t>(std::llround(8.0 * std::pow(256.0, i / 19.0))));
  std::vector<PairwiseCell> cells;
  for (int m = 1; m <= 20; ++m) {
    const double mu = 0.05 * m;
    SplitMix64 rng(hash3(cfg.seed, kPairwiseStream, static_cast<std::uint64_t>(m)));
    TermId a, b, c;
    distinct_terms(rng, kVocab, a, b, c);
    SparseVector q, d1, d2;
    margin_triple(mu, a, b, c, q, d1, d2);
    const auto counts = pairwise_error_counts(q, d1, d2, ProjectionKind::rademacher, ks, cfg.trials,
                                              hash3(cfg.seed, kPairwiseStream, 1000 + m), cfg.threads);
    for (std::size_t g = 0; g < ks.size(); ++g) {
      cells.push_back({mu, ks[g], cfg.trials, counts[g], pairwise_error_bound(std::min(mu, 1.0), ks[g])});
    }
  }
  return cells;
}

std::vector<PairwiseCell> sufficient_k_cases(const VerifyConfig& cfg, std::size_t n) {
  cfg.validate();
  constexpr double kBeta = 0.05;
  std::vector<PairwiseCell> out;
  SplitMix64 rng(hash3(cfg.seed, kCalibrationStream, 0));
  for (std::size_t i = 0; i < n; ++i) {
    const double mu = 0.05 + 0.9 * rng.uniform01();
    TermId a, b, c;
    distinct_terms(rng, kVocab, a, b, c);
    SparseVector q, d1, d2;
    margin_triple(mu, a, b, c, q, d1, d2);
    const auto k = static_cast<std::uint32_t>(sufficient_k_pairwise(mu, kBeta));
    const std::uint32_t ks[] = {k};
    const auto counts = pairwise_error_counts(q, d1, d2, ProjectionKind::rademacher, ks, cfg.trials,
                                              hash3(cfg.seed, kCalibrationStream, 1 + i), cfg.threads);
    out.push_back({mu, k, cfg.trials, counts[0], kBeta});
  }
  return out;
}

BooleanCheck boolean_end_to_end(const VerifyConfig& cfg, std::size_t hardest) {
  cfg.validate();
  constexpr double kBeta = 0.05;
  constexpr std::uint64_t kTerms = 200;
  constexpr std::size_t kDocs = 2000, kQueries = 100;
  BooleanCheck out;
  out.k = sufficient_k_boolean(out.max_query_terms, out.max_doc_terms, kBeta);
  out.eps = boolean_min_margin(out.max_query_terms, out.max_doc_terms);

  SplitMix64 rng(hash3(cfg.seed, kBooleanStream, 0));
  auto draw = [&](std::uint64_t max_terms) {
    const auto n = rng.between(1, max_terms);
    std::vector<TermId> terms;
    while (terms.size() < n) {
      const auto t = static_cast<TermId>(rng.below(kTerms));
      if (std::find(terms.begin(), terms.end(), t) == terms.end()) terms.push_back(t);
    }
    return SparseVector::indicator(terms);
  };
  std::vector<SparseVector> docs, queries;
  for (std::size_t d = 0; d < kDocs; ++d) docs.push_back(draw(out.max_doc_terms));
  for (std::size_t q = 0; q < kQueries; ++q) queries.push_back(draw(out.max_query_terms));
  const auto bank = harvest_triples(std::move(docs), std::move(queries), cfg.threads);
  out.num_triples = bank.triples.size();
  if (bank.triples.empty()) throw std::runtime_error("boolean check: no triples");

  std::vector<std::size_t> order(bank.triples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return bank.triples[a].margin < bank.triples[b].margin; });
  out.min_margin = bank.triples[order.front()].margin;
  order.resize(std::min(hardest, order.size()));

  const std::uint32_t ks[] = {static_cast<std::uint32_t>(out.k)};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& t = bank.triples[order[i]];
    const auto counts = pairwise_error_counts(bank.queries[t.query], bank.docs[t.winner], bank.docs[t.loser],
                                              ProjectionKind::rademacher, ks, cfg.trials,
                                              hash3(cfg.seed, kBooleanStream, 1 + i), cfg.threads);
    out.hardest.push_back({t.margin, ks[0], cfg.trials, counts[0], kBeta});
  }
  return out;
}

std::vector<RecallBoundCell> recall_bound_cells(const VerifyConfig& cfg) {
  cfg.validate();
  std::vector<RecallBoundCell> out;
  for (std::size_t collection : {std::size_t{100}, std::size_t{1000}}) {
    for (std::uint32_t r0 : {1u, 10u}) {
      SplitMix64 rng(hash3(cfg.seed, kRecallStream, collection * 100 + r0));
      // Doc 0 is the target; doc j >= 1 owns noise term j and has margin m_j.
      std::vector<double> margins(collection);
      for (auto& m : margins) m = 0.1 + 0.4 * rng.uniform01();
      std::vector<double> gaps(collection);
      double max_gap = 0.0;
      for (std::size_t j = 0; j < collection; ++j) {
        gaps[j] = margins[j] * std::sqrt(2.0 / (1.0 - margins[j] * margins[j]));
        max_gap = std::max(max_gap, gaps[j]);
      }
      const double alpha = max_gap + 1.0;
      const TermId shared = 0;
      const auto q = SparseVector::from_entries({{shared, 1.0}});
      std::vector<SparseVector> docs;
      docs.push_back(SparseVector::from_entries({{shared, alpha}, {1, 1.0}}));
      for (std::size_t j = 0; j < collection; ++j) {
        docs.push_back(SparseVector::from_entries({{shared, alpha - gaps[j]}, {static_cast<TermId>(j + 2), 1.0}}));
      }
      auto sorted = margins;
      std::sort(sorted.begin(), sorted.end());
      const double eps = sorted[r0 - 1];
      const auto k_full = sufficient_k_recall(eps, 0.05, collection, r0);
      std::vector<std::uint32_t> ks;
      for (std::uint64_t div : {8, 4, 2, 1}) ks.push_back(static_cast<std::uint32_t>(std::max<std::uint64_t>(1, k_full / div)));
      const auto fails = recall_failure_counts(q, docs, 0, r0, ProjectionKind::rademacher, ks, cfg.trials,
                                               hash3(cfg.seed, kRecallStream, 7 + collection + r0), cfg.threads);
      for (std::size_t g = 0; g < ks.size(); ++g) {
        out.push_back({collection, r0, eps, ks[g], cfg.trials, fails[g], recall_error_bound(eps, ks[g], collection, r0)});
      }
    }
  }
  return out;
}

SegmentMarginSweep segment_margin_sweep(const VerifyConfig& cfg, std::size_t instances) {
  constexpr std::uint64_t kTerms = 24;
  SegmentMarginSweep out;
  SplitMix64 rng(hash3(cfg.seed, kSegmentStream, 0));
  auto draw = [&](std::size_t max_nnz, const Segmentation& seg, std::optional<std::uint32_t> only) {
    std::vector<SparseEntry> entries;
    const auto n = rng.between(1, max_nnz);
    const bool integer = rng.below(2) == 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = static_cast<TermId>(rng.below(kTerms));
      if (only && seg.segment_of(t) != *only) continue;
      const double w = integer ? static_cast<double>(rng.between(1, 3)) : 0.05 + rng.uniform01();
      entries.push_back({t, w});
    }
    return SparseVector::from_entries(std::move(entries));
  };

  while (out.instances < instances) {
    Segmentation seg;
    seg.m = static_cast<std::uint32_t>(rng.between(2, 4));
    seg.v = kTerms;
    seg.scheme = rng.below(2) ? Segmentation::Scheme::contiguous : Segmentation::Scheme::hashed;
    seg.seed = rng.next();
    std::optional<std::uint32_t> focus;
    if (rng.below(2)) focus = static_cast<std::uint32_t>(rng.below(seg.m));
    const auto q = draw(6, seg, focus);
    auto d1 = draw(10, seg, std::nullopt);
    auto d2 = draw(10, seg, std::nullopt);
    if (q.empty()) continue;
    const double s1 = dot(q, d1), s2 = dot(q, d2);
    if (s1 == s2) continue;
    if (s1 < s2) std::swap(d1, d2);
    ++out.instances;

    const auto check = check_segment_margin(q, d1, d2, seg);
    if (check.conditions_hold) {
      ++out.witnessed;
      if (!check.satisfied) ++out.violations;
      if (check.same_max_segment) ++out.same_max_segment;
    }

    const auto p1 = segment(d1, seg), p2 = segment(d2, seg);
    const double full = squared_distance(d1, d2);
    for (std::uint32_t i = 0; i < seg.m; ++i) {
      SparseVector rest1, rest2;
      for (std::uint32_t j = 0; j < seg.m; ++j) {
        if (j == i) continue;
        rest1 = rest1 + p1[j];
        rest2 = rest2 + p2[j];
      }
      const double parts = squared_distance(p1[i], p2[i]) + squared_distance(rest1, rest2);
      const double err = std::abs(full - parts) / std::max(full, 1e-300);
      out.max_decomposition_error = std::max(out.max_decomposition_error, full == 0.0 ? parts : err);
    }
  }
  return out;
}

AttentionCheck attention_check(const VerifyConfig& cfg, std::size_t sequences) {
  cfg.validate();
  AttentionCheck out;
  SplitMix64 rng(hash3(cfg.seed, kAttentionStream, 0));
  auto sequence = [&](std::size_t max_len, std::uint64_t vocab, bool distinct) {
    const auto n = rng.between(1, max_len);
    TokenSeq s;
    while (s.size() < n) {
      const auto t = static_cast<TermId>(rng.below(vocab));
      if (distinct && std::find(s.begin(), s.end(), t) != s.end()) continue;
      s.push_back(t);
    }
    return s;
  };
  for (std::size_t i = 0; i < sequences; ++i) {
    const auto x = sequence(8, 20, true);
    const auto y = sequence(16, 20, false);
    ++out.sequences;
    if (hard_attention_indicator(x, y) != boolean_overlap(x, y)) ++out.mismatches;
    const auto xr = sequence(8, 6, false);
    if (has_repeated_terms(xr)) {
      ++out.repeat_sequences;
      if (hard_attention_indicator(xr, y) != matched_positions(xr, y)) ++out.repeat_mismatches;
    }
  }

  // Projected mode: one fuzz triple (x, y1, y2) with distinct indicator scores
  // per trial, each against a fresh matrix.
  constexpr std::uint64_t kMaxQuery = 4;
  out.k = attention_sufficient_k(kMaxQuery, kVocab, 1.0);
  out.trials = cfg.trials;
  std::vector<std::uint8_t> flipped(cfg.trials, 0);
  // Fuzz inputs are drawn sequentially so the triples do not depend on threads.
  struct Triple {
    TokenSeq x, y1, y2;
  };
  std::vector<Triple> triples;
  while (triples.size() < cfg.trials) {
    Triple t{sequence(kMaxQuery, 12, true), sequence(8, 12, false), sequence(8, 12, false)};
    const double a = hard_attention_indicator(t.x, t.y1), b = hard_attention_indicator(t.x, t.y2);
    if (a == b) continue;
    if (a < b) std::swap(t.y1, t.y2);
    for (auto* s : {&t.x, &t.y1, &t.y2}) {
      for (auto& tok : *s) tok = static_cast<TermId>(tok * 811 % kVocab);
    }
    triples.push_back(std::move(t));
  }
  parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
    ProjectionSpec spec{ProjectionKind::rademacher, static_cast<std::uint32_t>(out.k), kVocab,
                        hash3(cfg.seed, kAttentionStream, 1 + t)};
    ProjectedEmbeddings emb(spec);
    const auto& tr = triples[t];
    flipped[t] = hard_attention_projected(tr.x, tr.y1, emb) <= hard_attention_projected(tr.x, tr.y2, emb) ? 1 : 0;
  });
  for (auto f : flipped) out.flips += f;
  return out;
}

// ---------------------------------------------------------------------------

std::vector<CheckOutcome> verify_bounds(const VerifyConfig& cfg) {
  cfg.validate();
  std::vector<CheckOutcome> out;

  {
    const auto cells = pairwise_bound_grid(cfg);
    std::size_t bad = 0;
    for (const auto& c : cells) {
      if (c.rate() > c.bound + mc_allowance(c.bound, c.trials)) ++bad;
    }
    out.push_back({"pairwise_bound", "pairwise error <= 4 exp(-(k/2) rate(mu)) + 3 sigma", bad == 0,
                   std::to_string(cells.size()) + " cells, " + std::to_string(bad) + " over"});
  }
  {
    const auto cases = sufficient_k_cases(cfg);
    std::size_t bad = 0;
    for (const auto& c : cases) {
      if (c.rate() > c.bound + mc_allowance(c.bound, c.trials)) ++bad;
    }
    const double coef = 2.0 * std::log(80.0);
    const bool coef_ok = std::abs(coef - 8.7641) <= 1e-3;
    out.push_back({"sufficient_k", "error at sufficient_k_pairwise(mu, 0.05) <= 0.05 + 3 sigma", bad == 0 && coef_ok,
                   std::to_string(cases.size()) + " cases, " + std::to_string(bad) + " over; 2 ln 80 = " + fmt(coef)});
  }
  {
    const auto b = boolean_end_to_end(cfg);
    std::size_t bad = 0;
    for (const auto& c : b.hardest) {
      if (c.rate() > 0.05 + mc_allowance(0.05, c.trials)) ++bad;
    }
    const bool eps_ok = std::abs(b.eps - 0.0441942) <= 1e-6 && b.min_margin >= b.eps - 1e-12;
    out.push_back({"boolean", "boolean corpus at sufficient_k_boolean(8, 32, 0.05)", bad == 0 && eps_ok,
                   "k=" + std::to_string(b.k) + " eps=" + fmt(b.eps) + " min_margin=" + fmt(b.min_margin) + " " +
                       std::to_string(bad) + " of " + std::to_string(b.hardest.size()) + " over"});
  }
  {
    const auto cells = recall_bound_cells(cfg);
    std::size_t bad = 0;
    for (const auto& c : cells) {
      if (c.rate() > c.bound + mc_allowance(c.bound, c.trials)) ++bad;
    }
    out.push_back({"recall_bound", "recall failure <= C exp(-(k/2) rate(eps)) + 3 sigma", bad == 0,
                   std::to_string(cells.size()) + " cells, " + std::to_string(bad) + " over"});
  }
  {
    const auto s = segment_margin_sweep(cfg);
    const bool ok = s.violations == 0 && s.witnessed > 0 && s.max_decomposition_error <= 1e-9;
    out.push_back({"segment_margin", "segment margin >= full margin when a witness segment exists", ok,
                   std::to_string(s.instances) + " instances, " + std::to_string(s.witnessed) + " witnessed, " +
                       std::to_string(s.violations) + " violations, decomposition err " +
                       fmt(s.max_decomposition_error)});
  }
  {
    const auto a = attention_check(cfg);
    const bool ok = a.mismatches == 0 && a.repeat_mismatches == 0 && a.flips == 0 && a.k == 10611;
    out.push_back({"attention", "hard attention = boolean inner product; projected ranking preserved", ok,
                   std::to_string(a.sequences) + " sequences, " + std::to_string(a.mismatches) + " mismatches; k=" +
                       std::to_string(a.k) + " flips " + std::to_string(a.flips) + "/" + std::to_string(a.trials)});
  }
  return out;
}

}  // namespace mlab
