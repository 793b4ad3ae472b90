#include "mlab/lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

#include "mc_kernel.hpp"
#include "mlab/io.hpp"
#include "mlab/parallel.hpp"
#include "mlab/random.hpp"

namespace mlab {

namespace {

enum LabTag : std::uint64_t { kBinSampleStream = 5, kZipfLengthStream = 7, kIctLengthStream = 8 };

// Grid prefixes are evaluated in stages of growing row counts so that easy
// cells never pay for the largest k. Counts at a given k do not depend on
// the stage, because every k reads the same leading rows of the same draw.
constexpr std::uint32_t kStageRows[] = {512, 2048};

std::vector<std::size_t> stage_ends(const KGrid& grid) {
  std::vector<std::size_t> ends;
  for (std::uint32_t limit : kStageRows) {
    const auto end = static_cast<std::size_t>(
        std::upper_bound(grid.values.begin(), grid.values.end(), limit) - grid.values.begin());
    if (end > 0 && end < grid.values.size() && (ends.empty() || end > ends.back())) ends.push_back(end);
  }
  ends.push_back(grid.values.size());
  return ends;
}

void check_ks(std::span<const std::uint32_t> ks) {
  if (ks.empty()) throw std::invalid_argument("k grid is empty");
  if (ks.front() < 1) throw std::invalid_argument("k grid values must be >= 1");
  for (std::size_t i = 1; i < ks.size(); ++i) {
    if (ks[i] <= ks[i - 1]) throw std::invalid_argument("k grid must be strictly increasing");
  }
}

// Splits [0, n) into contiguous chunks, one kernel per chunk.
template <typename Fn>
void for_trial_chunks(std::uint32_t trials, unsigned threads, Fn&& fn) {
  const std::size_t chunks = std::min<std::size_t>(trials, std::max(1u, threads) * 4);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::uint32_t lo = static_cast<std::uint32_t>(trials * c / chunks);
    const std::uint32_t hi = static_cast<std::uint32_t>(trials * (c + 1) / chunks);
    fn(lo, hi);
  });
}

double sigma_of(double p, double n) { return n > 0 ? std::sqrt(std::max(0.0, p * (1.0 - p)) / n) : 0.0; }

std::string opt_field(const std::optional<std::uint32_t>& v) { return v ? field(*v) : "NA"; }
std::string opt_field(const std::optional<std::uint64_t>& v) { return v ? field(*v) : "NA"; }

}  // namespace

// ---------------------------------------------------------------------------

void KGrid::validate() const {
  if (values.size() < 2) throw std::invalid_argument("k grid needs at least 2 values");
  check_ks(values);
}

KGrid KGrid::geometric(std::uint32_t lo, std::uint32_t hi, std::size_t n) {
  if (n < 2 || lo < 1 || hi <= lo) throw std::invalid_argument("geometric grid: need n >= 2 and 1 <= lo < hi");
  KGrid g;
  const double ratio = static_cast<double>(hi) / static_cast<double>(lo);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo * std::pow(ratio, static_cast<double>(i) / static_cast<double>(n - 1));
    g.values.push_back(static_cast<std::uint32_t>(std::llround(x)));
  }
  g.values.back() = hi;
  g.label = "geom" + std::to_string(n) + "-" + std::to_string(lo) + "-" + std::to_string(hi);
  g.validate();
  return g;
}

KGrid KGrid::from_values(std::vector<std::uint32_t> values) {
  KGrid g;
  g.values = std::move(values);
  g.validate();
  std::string joined;
  for (auto v : g.values) joined += std::to_string(v) + ",";
  g.label = "list-" + fnv1a_hex(joined).substr(0, 8);
  return g;
}

nlohmann::ordered_json KGrid::to_json() const {
  return {{"id", label}, {"size", values.size()}, {"values", values}};
}

// ---------------------------------------------------------------------------

std::vector<std::vector<std::uint32_t>> grouped_error_counts(const SparseVector& q,
                                                             std::span<const SparseVector> diffs,
                                                             ProjectionKind kind, std::span<const std::uint32_t> ks,
                                                             std::uint32_t trials, std::uint64_t base_seed,
                                                             unsigned threads) {
  check_ks(ks);
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  std::vector<const SparseVector*> ptrs;
  for (const auto& d : diffs) ptrs.push_back(&d);
  const auto terms = detail::support_union(ptrs);
  std::vector<detail::CompiledVector> compiled;
  for (const auto& d : diffs) compiled.push_back(detail::compile(d, terms));

  const std::size_t grid = ks.size();
  const std::size_t per_trial = diffs.size() * grid;
  std::vector<std::uint8_t> errors(static_cast<std::size_t>(trials) * per_trial, 0);
  const bool table = terms.size() >= detail::kTableMinColumns;

  for_trial_chunks(trials, threads, [&](std::uint32_t lo, std::uint32_t hi) {
    detail::ResponseKernel kernel(kind, ks, table);
    std::vector<double> responses;
    std::vector<double> acc(grid);
    for (std::uint32_t t = lo; t < hi; ++t) {
      kernel.reset(base_seed + t, q);
      detail::fill_responses(kernel, terms, responses);
      std::uint8_t* out = errors.data() + static_cast<std::size_t>(t) * per_trial;
      for (std::size_t p = 0; p < compiled.size(); ++p) {
        detail::combine_responses(compiled[p], responses, grid, acc.data());
        for (std::size_t g = 0; g < grid; ++g) out[p * grid + g] = acc[g] <= 0.0 ? 1 : 0;
      }
    }
  });

  std::vector<std::vector<std::uint32_t>> counts(diffs.size(), std::vector<std::uint32_t>(grid, 0));
  for (std::uint32_t t = 0; t < trials; ++t) {
    const std::uint8_t* row = errors.data() + static_cast<std::size_t>(t) * per_trial;
    for (std::size_t p = 0; p < diffs.size(); ++p) {
      for (std::size_t g = 0; g < grid; ++g) counts[p][g] += row[p * grid + g];
    }
  }
  return counts;
}

std::vector<std::uint32_t> pairwise_error_counts(const SparseVector& q, const SparseVector& d1, const SparseVector& d2,
                                                 ProjectionKind kind, std::span<const std::uint32_t> ks,
                                                 std::uint32_t trials, std::uint64_t base_seed, unsigned threads) {
  const double mu = normalized_margin(q, d1, d2);
  if (!(mu > 0.0)) throw std::invalid_argument("pairwise error: normalized margin must be > 0");
  const SparseVector diff = d1 - d2;
  return grouped_error_counts(q, std::span(&diff, 1), kind, ks, trials, base_seed, threads).front();
}

double estimate_pairwise_error(const SparseVector& q, const SparseVector& d1, const SparseVector& d2,
                               ProjectionKind kind, std::uint32_t k, std::uint32_t trials, std::uint64_t base_seed) {
  const std::uint32_t ks[] = {k};
  const auto counts = pairwise_error_counts(q, d1, d2, kind, ks, trials, base_seed);
  return static_cast<double>(counts[0]) / static_cast<double>(trials);
}

std::vector<std::uint32_t> recall_failure_counts(const SparseVector& q, std::span<const SparseVector> docs,
                                                 DocId winner, std::uint32_t r0, ProjectionKind kind,
                                                 std::span<const std::uint32_t> ks, std::uint32_t trials,
                                                 std::uint64_t base_seed, unsigned threads) {
  check_ks(ks);
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (r0 < 1) throw std::invalid_argument("recall: r0 must be >= 1");
  if (winner >= docs.size()) throw std::out_of_range("recall: winner out of range");
  std::vector<const SparseVector*> ptrs;
  for (const auto& d : docs) ptrs.push_back(&d);
  const auto terms = detail::support_union(ptrs);
  std::vector<detail::CompiledVector> compiled;
  compiled.reserve(docs.size());
  for (const auto& d : docs) compiled.push_back(detail::compile(d, terms));

  const std::size_t grid = ks.size();
  std::vector<std::uint8_t> fails(static_cast<std::size_t>(trials) * grid, 0);
  const bool table = terms.size() >= detail::kTableMinColumns;

  for_trial_chunks(trials, threads, [&](std::uint32_t lo, std::uint32_t hi) {
    detail::ResponseKernel kernel(kind, ks, table);
    std::vector<double> responses;
    std::vector<double> gold(grid), acc(grid);
    std::vector<std::uint32_t> above(grid);
    for (std::uint32_t t = lo; t < hi; ++t) {
      kernel.reset(base_seed + t, q);
      detail::fill_responses(kernel, terms, responses);
      detail::combine_responses(compiled[winner], responses, grid, gold.data());
      std::fill(above.begin(), above.end(), 0);
      for (std::size_t d = 0; d < docs.size(); ++d) {
        if (d == winner) continue;
        detail::combine_responses(compiled[d], responses, grid, acc.data());
        for (std::size_t g = 0; g < grid; ++g) above[g] += acc[g] >= gold[g] ? 1 : 0;
      }
      for (std::size_t g = 0; g < grid; ++g) fails[static_cast<std::size_t>(t) * grid + g] = above[g] >= r0 ? 1 : 0;
    }
  });

  std::vector<std::uint32_t> counts(grid, 0);
  for (std::uint32_t t = 0; t < trials; ++t) {
    for (std::size_t g = 0; g < grid; ++g) counts[g] += fails[static_cast<std::size_t>(t) * grid + g];
  }
  return counts;
}

// ---------------------------------------------------------------------------

std::optional<DocId> sparse_winner(const SparseVector& q, std::span<const SparseVector> docs) {
  std::optional<DocId> best;
  double best_score = 0.0;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const double s = dot(q, docs[d]);
    if (s > best_score) {
      best_score = s;
      best = static_cast<DocId>(d);
    }
  }
  return best;
}

namespace {

template <typename Sink>
void for_each_positive_margin(const SparseVector& q, std::span<const SparseVector> docs, DocId winner, Sink&& sink) {
  const double qnorm = q.norm();
  const double s1 = dot(q, docs[winner]);
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (d == winner) continue;
    const double s2 = dot(q, docs[d]);
    if (!(s1 > s2)) continue;
    const double diff = std::sqrt(squared_distance(docs[winner], docs[d]));
    if (!(diff > 0.0)) continue;
    const double mu = normalized_margin_from_parts(s1, s2, qnorm, diff);
    if (mu > 0.0) sink(static_cast<DocId>(d), mu);
  }
}

}  // namespace

std::vector<double> positive_margins(const SparseVector& q, std::span<const SparseVector> docs, DocId winner) {
  if (winner >= docs.size()) throw std::out_of_range("positive_margins: winner out of range");
  std::vector<double> out;
  for_each_positive_margin(q, docs, winner, [&](DocId, double mu) { out.push_back(mu); });
  std::sort(out.begin(), out.end());
  return out;
}

TripleBank harvest_triples(std::vector<SparseVector> docs, std::vector<SparseVector> queries, unsigned threads) {
  TripleBank bank;
  bank.docs = std::move(docs);
  bank.queries = std::move(queries);
  std::vector<std::vector<MarginTriple>> per_query(bank.queries.size());
  std::vector<std::uint8_t> skipped(bank.queries.size(), 0);
  parallel_for(bank.queries.size(), threads, [&](std::size_t qi) {
    const auto& q = bank.queries[qi];
    const auto winner = sparse_winner(q, bank.docs);
    if (!winner) {
      skipped[qi] = 1;
      return;
    }
    for_each_positive_margin(q, bank.docs, *winner, [&](DocId d, double mu) {
      per_query[qi].push_back({static_cast<std::uint32_t>(qi), *winner, d, mu});
    });
  });
  for (std::size_t qi = 0; qi < per_query.size(); ++qi) {
    bank.skipped_queries += skipped[qi];
    bank.triples.insert(bank.triples.end(), per_query[qi].begin(), per_query[qi].end());
  }
  return bank;
}

TripleBank harvest_triples(const InvertedIndex& index, std::span<const Document> queries, unsigned threads) {
  std::vector<SparseVector> docs;
  docs.reserve(index.num_docs());
  for (std::size_t d = 0; d < index.num_docs(); ++d) docs.push_back(index.doc_vector(static_cast<DocId>(d)));
  std::vector<SparseVector> qs;
  qs.reserve(queries.size());
  for (const auto& q : queries) qs.push_back(query_vector(q, index.scheme(), index.vocab()));
  return harvest_triples(std::move(docs), std::move(qs), threads);
}

// ---------------------------------------------------------------------------

double inverse_rate(double eps) { return 1.0 / margin_rate(eps); }

std::string_view to_string(Binning b) {
  switch (b) {
    case Binning::quantile:
      return "quantile";
    case Binning::log:
      return "log";
    case Binning::linear:
      return "linear";
  }
  return "quantile";
}

Binning parse_binning(std::string_view name) {
  if (name == "quantile") return Binning::quantile;
  if (name == "log") return Binning::log;
  if (name == "linear") return Binning::linear;
  throw std::invalid_argument("unknown binning: " + std::string(name));
}

void MinKConfig::validate() const {
  grid.validate();
  if (!(target > 0.0 && target < 1.0)) throw std::invalid_argument("min-k: target must be in (0, 1)");
  if (trials < 1) throw std::invalid_argument("min-k: trials must be >= 1");
  if (num_bins < 1) throw std::invalid_argument("min-k: num_bins must be >= 1");
}

nlohmann::ordered_json MinKConfig::to_json() const {
  return {{"grid", grid.to_json()},
          {"target", target},
          {"trials", trials},
          {"binning", to_string(binning)},
          {"num_bins", num_bins},
          {"min_bin_count", min_bin_count},
          {"samples_per_bin", samples_per_bin},
          {"kind", to_string(kind)},
          {"seed", seed}};
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of empty data");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must be in [0, 1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

namespace {

std::vector<std::vector<std::size_t>> make_bins(std::span<const double> x, Binning binning, std::uint32_t num_bins) {
  std::vector<std::vector<std::size_t>> bins(num_bins);
  const std::size_t n = x.size();
  if (n == 0) return {};
  if (binning == Binning::quantile) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    for (std::uint32_t b = 0; b < num_bins; ++b) {
      const std::size_t lo = n * b / num_bins;
      const std::size_t hi = n * (b + 1) / num_bins;
      bins[b].assign(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi));
    }
  } else {
    const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
    const double lo = *mn, hi = *mx;
    for (std::size_t i = 0; i < n; ++i) {
      double pos = 0.0;
      if (hi > lo) pos = binning == Binning::log ? std::log(x[i] / lo) / std::log(hi / lo) : (x[i] - lo) / (hi - lo);
      const auto b = std::min<std::size_t>(num_bins - 1, static_cast<std::size_t>(pos * num_bins));
      bins[b].push_back(i);
    }
  }
  return bins;
}

std::vector<std::size_t> sample_members(std::vector<std::size_t> members, std::uint32_t samples, std::uint64_t seed) {
  if (samples == 0 || samples >= members.size()) return members;
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto j = i + rng.below(members.size() - i);
    std::swap(members[i], members[j]);
  }
  members.resize(samples);
  std::sort(members.begin(), members.end());
  return members;
}

}  // namespace

MinKReport min_k_per_bin(const TripleBank& bank, const MinKConfig& cfg) {
  cfg.validate();
  if (bank.triples.empty()) throw std::invalid_argument("min-k: no triples");
  MinKReport report;
  report.config = cfg;

  std::vector<double> x(bank.triples.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = inverse_rate(bank.triples[i].margin);
  auto bins = make_bins(x, cfg.binning, cfg.num_bins);
  const auto ends = stage_ends(cfg.grid);
  const double coef = 2.0 * std::log(4.0 / (1.0 - cfg.target));

  for (std::size_t b = 0; b < bins.size(); ++b) {
    auto& members = bins[b];
    if (members.size() < std::max<std::uint32_t>(1, cfg.min_bin_count)) {
      report.dropped_triples += members.size();
      continue;
    }
    MinKBin bin;
    std::vector<double> xs;
    xs.reserve(members.size());
    for (auto i : members) xs.push_back(x[i]);
    std::sort(xs.begin(), xs.end());
    bin.lo = xs.front();
    bin.hi = xs.back();
    bin.n_triples = members.size();
    bin.stat = quantile_sorted(xs, 0.5);
    bin.bound_k = static_cast<std::uint64_t>(std::ceil(coef * bin.stat));

    const auto sampled = sample_members(members, cfg.samples_per_bin, hash3(cfg.seed, kBinSampleStream, b));
    bin.n_sampled = sampled.size();
    std::map<std::uint32_t, std::vector<SparseVector>> groups;
    for (auto i : sampled) {
      const auto& t = bank.triples[i];
      groups[t.query].push_back(bank.docs[t.winner] - bank.docs[t.loser]);
    }
    const double total = static_cast<double>(bin.n_sampled) * cfg.trials;

    for (const std::size_t end : ends) {
      const std::span<const std::uint32_t> ks(cfg.grid.values.data(), end);
      std::vector<std::uint64_t> errors(end, 0);
      for (const auto& [qi, diffs] : groups) {
        const auto counts = grouped_error_counts(bank.queries[qi], diffs, cfg.kind, ks, cfg.trials, cfg.seed, cfg.threads);
        for (const auto& c : counts) {
          for (std::size_t g = 0; g < end; ++g) errors[g] += c[g];
        }
      }
      for (std::size_t g = 0; g < end; ++g) {
        const double acc = 1.0 - static_cast<double>(errors[g]) / total;
        if (acc >= cfg.target) {
          bin.min_k = ks[g];
          bin.accuracy = acc;
          break;
        }
        bin.accuracy = acc;
      }
      if (bin.min_k) break;
    }
    bin.sigma = sigma_of(bin.accuracy, total);
    report.bins.push_back(bin);
  }
  return report;
}

std::string MinKReport::csv() const {
  CsvTable t({"bin_lo", "bin_hi", "n_triples", "stat", "min_k", "trials", "grid_id", "n_sampled", "accuracy", "sigma",
              "reached", "bound_k"});
  for (const auto& b : bins) {
    t.row({field(b.lo), field(b.hi), field(b.n_triples), field(b.stat), opt_field(b.min_k), field(config.trials),
           config.grid.label, field(b.n_sampled), field(b.accuracy), field(b.sigma), field(b.min_k.has_value()),
           field(b.bound_k)});
  }
  return t.str();
}

nlohmann::ordered_json MinKReport::metadata() const {
  return {{"config", config.to_json()},
          {"statistic", "median over bin of (eps^2/2 - eps^3/3)^-1"},
          {"bound_coefficient", 2.0 * std::log(4.0 / (1.0 - config.target))},
          {"num_bins_reported", bins.size()},
          {"dropped_triples", dropped_triples},
          {"matrix_seeds", "seed + t for trial t"},
          {"stage_rows", {kStageRows[0], kStageRows[1]}}};
}

double linear_fit_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("linear fit: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (syy == 0.0 || sxx == 0.0) return 0.0;
  return sxy * sxy / (sxx * syy);
}

// ---------------------------------------------------------------------------

MarginReport margin_quantiles_by_length(std::span<const LengthCorpus> corpora, std::span<const std::uint32_t> ranks,
                                        unsigned threads) {
  MarginReport report;
  report.ranks.assign(ranks.begin(), ranks.end());
  for (auto r : ranks) {
    if (r < 1) throw std::invalid_argument("margin ranks must be >= 1");
  }
  for (const auto& corpus : corpora) {
    const std::size_t nq = corpus.queries.size();
    // per query, per rank: margin or NaN
    std::vector<std::vector<double>> at_rank(nq, std::vector<double>(ranks.size(), std::nan("")));
    std::vector<std::uint8_t> skipped(nq, 0);
    parallel_for(nq, threads, [&](std::size_t qi) {
      const auto winner = sparse_winner(corpus.queries[qi], corpus.docs);
      if (!winner) {
        skipped[qi] = 1;
        return;
      }
      const auto margins = positive_margins(corpus.queries[qi], corpus.docs, *winner);
      for (std::size_t r = 0; r < ranks.size(); ++r) {
        if (margins.size() >= ranks[r]) at_rank[qi][r] = margins[ranks[r] - 1];
      }
    });
    report.skipped_queries.push_back(static_cast<std::size_t>(std::count(skipped.begin(), skipped.end(), 1)));
    for (std::size_t r = 0; r < ranks.size(); ++r) {
      std::vector<double> vals;
      for (std::size_t qi = 0; qi < nq; ++qi) {
        if (!std::isnan(at_rank[qi][r])) vals.push_back(at_rank[qi][r]);
      }
      if (vals.empty()) continue;
      std::sort(vals.begin(), vals.end());
      MarginCell cell;
      cell.length = corpus.length;
      cell.rank = ranks[r];
      cell.n_queries = vals.size();
      cell.q25 = quantile_sorted(vals, 0.25);
      cell.median = quantile_sorted(vals, 0.5);
      cell.q75 = quantile_sorted(vals, 0.75);
      cell.se_median = 1.2533 * ((cell.q75 - cell.q25) / 1.349) / std::sqrt(static_cast<double>(vals.size()));
      report.cells.push_back(cell);
    }
  }
  return report;
}

std::string MarginReport::csv() const {
  CsvTable t({"length", "rank", "n_queries", "q25", "median", "q75", "se_median"});
  for (const auto& c : cells) {
    t.row({field(c.length), field(c.rank), field(c.n_queries), field(c.q25), field(c.median), field(c.q75),
           field(c.se_median)});
  }
  return t.str();
}

nlohmann::ordered_json MarginReport::metadata() const {
  return {{"ranks", ranks},
          {"quantiles", "type 7 (linear interpolation)"},
          {"margins", "strictly positive normalized margins against the per-query winner"},
          {"skipped_queries", skipped_queries}};
}

// ---------------------------------------------------------------------------

void RecallConfig::validate() const {
  grid.validate();
  if (r < 1) throw std::invalid_argument("recall: r must be >= 1");
  if (trials < 1) throw std::invalid_argument("recall: trials must be >= 1");
  if (targets.empty()) throw std::invalid_argument("recall: no targets");
  for (double t : targets) {
    if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("recall: targets must be in (0, 1)");
  }
}

nlohmann::ordered_json RecallConfig::to_json() const {
  return {{"grid", grid.to_json()}, {"r", r},         {"targets", targets},         {"trials", trials},
          {"max_queries", max_queries}, {"kind", to_string(kind)}, {"seed", seed}};
}

RecallReport min_k_for_recall(std::span<const LengthCorpus> corpora, const RecallConfig& cfg) {
  cfg.validate();
  RecallReport report;
  report.config = cfg;
  const auto ends = stage_ends(cfg.grid);
  const double max_target = *std::max_element(cfg.targets.begin(), cfg.targets.end());

  for (const auto& corpus : corpora) {
    struct Picked {
      std::size_t query;
      DocId winner;
      std::vector<double> margins;
    };
    std::vector<Picked> picked;
    for (std::size_t qi = 0; qi < corpus.queries.size(); ++qi) {
      if (cfg.max_queries && picked.size() >= cfg.max_queries) break;
      const auto w = sparse_winner(corpus.queries[qi], corpus.docs);
      if (!w) continue;
      picked.push_back({qi, *w, positive_margins(corpus.queries[qi], corpus.docs, *w)});
    }
    const double total = static_cast<double>(picked.size()) * cfg.trials;

    std::vector<double> recall;
    for (const std::size_t end : ends) {
      const std::span<const std::uint32_t> ks(cfg.grid.values.data(), end);
      std::vector<std::uint64_t> fails(end, 0);
      for (const auto& p : picked) {
        const auto c = recall_failure_counts(corpus.queries[p.query], corpus.docs, p.winner, cfg.r, cfg.kind, ks,
                                             cfg.trials, cfg.seed, cfg.threads);
        for (std::size_t g = 0; g < end; ++g) fails[g] += c[g];
      }
      recall.assign(end, 0.0);
      for (std::size_t g = 0; g < end; ++g) recall[g] = total > 0 ? 1.0 - static_cast<double>(fails[g]) / total : 0.0;
      if (std::any_of(recall.begin(), recall.end(), [&](double r) { return r >= max_target; })) break;
    }

    for (double target : cfg.targets) {
      RecallCell cell;
      cell.length = corpus.length;
      cell.target = target;
      cell.n_samples = static_cast<std::size_t>(total);
      for (std::size_t g = 0; g < recall.size(); ++g) {
        if (recall[g] >= target) {
          cell.min_k = cfg.grid.values[g];
          cell.recall = recall[g];
          break;
        }
      }
      if (!cell.min_k && !recall.empty()) cell.recall = recall.back();
      cell.sigma = sigma_of(cell.recall, total);
      for (std::size_t g = 0; g < recall.size(); ++g) {
        if (recall[g] >= target - sigma_of(recall[g], total)) {
          cell.relaxed_min_k = cfg.grid.values[g];
          break;
        }
      }
      std::vector<double> ks;
      for (const auto& p : picked) {
        if (p.margins.size() < cfg.r) continue;
        const double eps = p.margins[cfg.r - 1];
        ks.push_back(static_cast<double>(sufficient_k_recall(eps, 1.0 - target, p.margins.size(), cfg.r)));
      }
      if (!ks.empty()) {
        std::sort(ks.begin(), ks.end());
        cell.recall_bound_k = static_cast<std::uint64_t>(std::ceil(quantile_sorted(ks, 0.5)));
      }
      report.cells.push_back(cell);
    }
  }
  return report;
}

std::string RecallReport::csv() const {
  CsvTable t({"length", "target", "n_samples", "min_k", "recall_at_min_k", "sigma", "reached", "recall_bound_k"});
  for (const auto& c : cells) {
    t.row({field(c.length), field(c.target), field(c.n_samples), opt_field(c.min_k), field(c.recall), field(c.sigma),
           field(c.min_k.has_value()), opt_field(c.recall_bound_k)});
  }
  return t.str();
}

nlohmann::ordered_json RecallReport::metadata() const {
  return {{"config", config.to_json()},
          {"failure", "at least r other documents score >= the sparse winner under projection"},
          {"matrix_seeds", "seed + t for trial t, shared by all queries"},
          {"stage_rows", {kStageRows[0], kStageRows[1]}}};
}

// ---------------------------------------------------------------------------

void LengthSynthSpec::validate() const {
  if (lengths.empty()) throw std::invalid_argument("length synth: no lengths");
  for (auto l : lengths) {
    if (l < 25) throw std::invalid_argument("length synth: lengths must be >= 25");
  }
  if (queries_per_length < 1) throw std::invalid_argument("length synth: queries_per_length must be >= 1");
  if (docs_per_length < 3ULL * queries_per_length) {
    throw std::invalid_argument("length synth: docs_per_length must be >= 3 * queries_per_length");
  }
}

nlohmann::ordered_json LengthSynthSpec::to_json() const {
  return {{"lengths", lengths},
          {"docs_per_length", docs_per_length},
          {"queries_per_length", queries_per_length},
          {"vocab_size", vocab_size},
          {"exponent", exponent},
          {"scheme", to_string(scheme)},
          {"seed", seed}};
}

IctSpec LengthSynthSpec::ict_spec(std::uint32_t length) const {
  IctSpec s;
  s.max_passage_len = length;
  s.num_queries = queries_per_length;
  s.max_passages = docs_per_length - s.distractors_per_gold * queries_per_length;
  s.seed = hash3(seed, kIctLengthStream, length);
  return s;
}

ZipfSpec LengthSynthSpec::zipf_spec(std::uint32_t length) const {
  ZipfSpec z;
  const std::uint32_t passages = ict_spec(length).max_passages;
  z.num_docs = (passages + 3) / 4;
  z.min_len = z.max_len = 4 * length;
  z.vocab_size = vocab_size;
  z.exponent = exponent;
  z.seed = hash3(seed, kZipfLengthStream, length);
  return z;
}

LengthCorpus vectorize_ict(std::uint32_t length, const IctCorpus& ict, Scheme scheme, const Bm25Params& params) {
  const Corpus corpus = Corpus::build(ict.docs, TokenMode::unigram);
  LengthCorpus out;
  out.length = length;
  out.docs.reserve(corpus.docs.size());
  for (const auto& d : corpus.docs) out.docs.push_back(doc_vector(d, scheme, corpus.vocab, params));
  for (const auto& q : ict.queries) out.queries.push_back(query_vector(make_query(q, corpus), scheme, corpus.vocab));
  return out;
}

std::vector<LengthCorpus> synthesize_length_corpora(const LengthSynthSpec& spec) {
  spec.validate();
  std::vector<LengthCorpus> out;
  for (auto length : spec.lengths) {
    const auto source = generate_zipf_documents(spec.zipf_spec(length));
    const auto ict = synthesize_ict(source, spec.ict_spec(length));
    out.push_back(vectorize_ict(length, ict, spec.scheme));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

TrendCheck check_trend(std::span<const double> values, std::span<const double> tolerances, std::size_t max_inversions,
                       bool increasing) {
  if (values.empty() || tolerances.size() != values.size() - 1) {
    throw std::invalid_argument("trend: need one tolerance per step");
  }
  TrendCheck out;
  bool all_tolerated = true;
  for (std::size_t i = 1; i < values.size(); ++i) {
    const double step = increasing ? values[i - 1] - values[i] : values[i] - values[i - 1];
    if (step > 0.0) {
      ++out.inversions;
      if (step <= tolerances[i - 1]) {
        ++out.tolerated;
      } else {
        all_tolerated = false;
      }
    }
  }
  out.passed = all_tolerated && out.inversions <= max_inversions;
  return out;
}

}  // namespace

TrendCheck check_non_increasing(std::span<const double> values, std::span<const double> tolerances,
                                std::size_t max_inversions) {
  return check_trend(values, tolerances, max_inversions, false);
}

TrendCheck check_non_decreasing(std::span<const double> values, std::span<const double> tolerances,
                                std::size_t max_inversions) {
  return check_trend(values, tolerances, max_inversions, true);
}

}  // namespace mlab
