#include "mlab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "binary_io.hpp"
#include "mlab/io.hpp"

namespace mlab {

namespace {
constexpr std::string_view kDenseMagic = "MLDX1";
constexpr std::uint32_t kDenseVersion = 1;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

DenseIndex::DenseIndex(std::uint32_t dim, std::optional<ProjectionSpec> provenance)
    : dim_(dim), provenance_(std::move(provenance)) {
  if (dim_ == 0) throw std::invalid_argument("dense index: dim must be >= 1");
}

void DenseIndex::add(DocId doc, std::int32_t segment, std::span<const double> vec) {
  if (vec.size() != dim_) {
    throw std::invalid_argument("dense index: vector dim " + std::to_string(vec.size()) + " != " + std::to_string(dim_));
  }
  entries_.push_back({doc, segment});
  data_.insert(data_.end(), vec.begin(), vec.end());
  doc_bound_ = std::max<std::size_t>(doc_bound_, std::size_t{doc} + 1);
}

std::span<const double> DenseIndex::vector(std::size_t entry) const {
  if (entry >= entries_.size()) throw std::out_of_range("dense index: entry out of range");
  return std::span(data_).subspan(entry * dim_, dim_);
}

std::vector<double> DenseIndex::score_docs(std::span<const double> query) const {
  if (query.size() != dim_) {
    throw std::invalid_argument("dense query dim " + std::to_string(query.size()) + " != index dim " +
                                std::to_string(dim_));
  }
  std::vector<double> best(doc_bound_, kNegInf);
  for (std::size_t e = 0; e < entries_.size(); ++e) {
    const double s = dot(query, vector(e));
    auto& b = best[entries_[e].doc];
    if (s > b) b = s;
  }
  return best;
}

std::string DenseIndex::serialize() const {
  detail::ByteWriter w;
  w.raw(kDenseMagic);
  w.u32(kDenseVersion);
  w.u32(dim_);
  w.u64(entries_.size());
  w.u32(provenance_ ? 1 : 0);
  if (provenance_) {
    w.u32(static_cast<std::uint32_t>(provenance_->kind));
    w.u32(provenance_->k);
    w.u64(provenance_->v);
    w.u64(provenance_->seed);
  }
  for (std::size_t e = 0; e < entries_.size(); ++e) {
    w.u32(entries_[e].doc);
    w.u32(static_cast<std::uint32_t>(entries_[e].segment));
    for (double x : vector(e)) w.f64(x);
  }
  return w.take();
}

DenseIndex DenseIndex::deserialize(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(kDenseMagic.size()) != kDenseMagic) throw std::runtime_error("not an MLDX1 dense index");
  if (r.u32() != kDenseVersion) throw std::runtime_error("unsupported dense index version");
  const std::uint32_t dim = r.u32();
  const std::uint64_t n = r.u64();
  std::optional<ProjectionSpec> prov;
  if (r.u32()) {
    ProjectionSpec s;
    const auto kind = r.u32();
    if (kind > 1) throw std::runtime_error("dense index: bad projection kind");
    s.kind = static_cast<ProjectionKind>(kind);
    s.k = r.u32();
    s.v = r.u64();
    s.seed = r.u64();
    prov = s;
  }
  DenseIndex idx(dim, prov);
  std::vector<double> buf(dim);
  for (std::uint64_t e = 0; e < n; ++e) {
    const DocId doc = r.u32();
    const auto seg = static_cast<std::int32_t>(r.u32());
    for (auto& x : buf) x = r.f64();
    idx.add(doc, seg, buf);
  }
  if (!r.done()) throw std::runtime_error("dense index: trailing bytes");
  return idx;
}

void DenseIndex::save(const std::filesystem::path& path) const { write_file_atomic(path, serialize()); }

DenseIndex DenseIndex::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

std::vector<ScoredDoc> dense_topk(std::span<const double> query, const DenseIndex& index, std::size_t k) {
  if (k == 0) throw std::invalid_argument("dense_topk: k must be >= 1");
  const auto best = index.score_docs(query);
  std::vector<ScoredDoc> present;
  present.reserve(best.size());
  for (std::size_t d = 0; d < best.size(); ++d) {
    if (best[d] != kNegInf) present.push_back({static_cast<DocId>(d), best[d]});
  }
  k = std::min(k, present.size());
  std::partial_sort(present.begin(), present.begin() + static_cast<std::ptrdiff_t>(k), present.end(), ranks_before);
  present.resize(k);
  return present;
}

void HybridConfig::validate(std::size_t k) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("hybrid: lambda must be finite and >= 0");
  if (n_best < k) throw std::invalid_argument("hybrid: n_best must be >= k");
}

namespace {

std::vector<DocId> candidate_union(std::span<const double> sparse_scores, std::span<const double> dense_scores,
                                   std::size_t n_best) {
  std::vector<DocId> docs;
  for (const auto& s : topk_from_scores(sparse_scores, n_best)) docs.push_back(s.doc);
  for (const auto& s : topk_from_scores(dense_scores, n_best)) docs.push_back(s.doc);
  std::sort(docs.begin(), docs.end());
  docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
  return docs;
}

std::vector<ScoredDoc> rescore(std::span<const DocId> candidates, std::span<const double> sparse_scores,
                               std::span<const double> dense_scores, double lambda, std::size_t k) {
  std::vector<ScoredDoc> out;
  out.reserve(candidates.size());
  for (DocId d : candidates) {
    const double s = sparse_scores[d];
    out.push_back({d, lambda == 0.0 ? s : s + lambda * dense_scores[d]});
  }
  k = std::min(k, out.size());
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), ranks_before);
  out.resize(k);
  return out;
}

}  // namespace

std::vector<ScoredDoc> hybrid_topk(std::span<const double> sparse_scores, std::span<const double> dense_scores,
                                   const HybridConfig& cfg, std::size_t k) {
  if (k == 0) throw std::invalid_argument("hybrid_topk: k must be >= 1");
  cfg.validate(k);
  if (sparse_scores.size() != dense_scores.size()) throw std::invalid_argument("hybrid: score arrays differ in size");
  const auto candidates = candidate_union(sparse_scores, dense_scores, cfg.n_best);
  return rescore(candidates, sparse_scores, dense_scores, cfg.lambda, k);
}

std::vector<ScoredDoc> hybrid_topk(const SparseVector& sparse_query, const InvertedIndex& sparse_index,
                                   std::span<const double> dense_query, const DenseIndex& dense_index,
                                   const HybridConfig& cfg, std::size_t k) {
  auto sparse = sparse_index.score_all(sparse_query);
  auto dense = dense_index.score_docs(dense_query);
  if (dense.size() > sparse.size()) throw std::invalid_argument("hybrid: dense index has docs unknown to sparse index");
  dense.resize(sparse.size(), kNegInf);
  return hybrid_topk(sparse, dense, cfg, k);
}

LambdaSweep tune_lambda(std::span<const HybridDevQuery> dev, std::size_t n_best, double max_lambda, double step) {
  if (dev.empty()) throw std::invalid_argument("tune_lambda: empty dev set");
  if (!(step > 0.0) || !(max_lambda >= 0.0)) throw std::invalid_argument("tune_lambda: bad grid");
  constexpr std::size_t kCutoff = 10;
  std::vector<std::vector<DocId>> unions;
  std::vector<std::optional<DocId>> gold;
  for (const auto& q : dev) {
    if (q.sparse_scores.size() != q.dense_scores.size()) throw std::invalid_argument("tune_lambda: score size mismatch");
    unions.push_back(candidate_union(q.sparse_scores, q.dense_scores, std::max(n_best, kCutoff)));
    gold.push_back(q.gold);
  }
  LambdaSweep sweep;
  const auto steps = static_cast<std::size_t>(std::llround(max_lambda / step));
  std::vector<std::vector<DocId>> rankings(dev.size());
  for (std::size_t i = 0; i <= steps; ++i) {
    const double lambda = static_cast<double>(i) * step;
    for (std::size_t q = 0; q < dev.size(); ++q) {
      rankings[q] = doc_ids(rescore(unions[q], dev[q].sparse_scores, dev[q].dense_scores, lambda, kCutoff));
    }
    const double mrr = mrr_at(rankings, gold, kCutoff);
    sweep.lambdas.push_back(lambda);
    sweep.mrrs.push_back(mrr);
    if (i == 0 || mrr > sweep.best_mrr) {
      sweep.best_mrr = mrr;
      sweep.best_lambda = lambda;
    }
  }
  return sweep;
}

double mrr_at(std::span<const std::vector<DocId>> rankings, std::span<const std::optional<DocId>> gold,
              std::size_t cutoff) {
  if (cutoff < 1) throw std::invalid_argument("mrr: cutoff must be >= 1");
  if (rankings.size() != gold.size()) throw std::invalid_argument("mrr: rankings/gold size mismatch");
  if (rankings.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (!gold[q]) throw std::invalid_argument("mrr: query " + std::to_string(q) + " has no gold label");
    const auto& r = rankings[q];
    const std::size_t n = std::min(cutoff, r.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (r[i] == *gold[q]) {
        sum += 1.0 / static_cast<double>(i + 1);
        break;
      }
    }
  }
  return sum / static_cast<double>(rankings.size());
}

double recall_at(std::span<const std::vector<DocId>> rankings, std::span<const std::optional<DocId>> gold,
                 std::size_t r) {
  if (r < 1) throw std::invalid_argument("recall: r must be >= 1");
  if (rankings.size() != gold.size()) throw std::invalid_argument("recall: rankings/gold size mismatch");
  if (rankings.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (!gold[q]) throw std::invalid_argument("recall: query " + std::to_string(q) + " has no gold label");
    const auto& list = rankings[q];
    const auto end = list.begin() + static_cast<std::ptrdiff_t>(std::min(r, list.size()));
    if (std::find(list.begin(), end, *gold[q]) != end) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

std::size_t passages_within_budget(std::span<const RankedPassage> ranked, std::size_t budget) {
  std::size_t used = 0;
  std::size_t taken = 0;
  for (const auto& p : ranked) {
    if (taken > 0 && used + p.length > budget) break;
    used += p.length;
    ++taken;
  }
  return taken;
}

double recall_at_tokens(std::span<const RankedPassage> ranked, std::size_t budget) {
  const std::size_t n = passages_within_budget(ranked, budget);
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked[i].has_answer) return 1.0;
  }
  return 0.0;
}

std::vector<DocId> doc_ids(std::span<const ScoredDoc> ranked) {
  std::vector<DocId> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) out.push_back(r.doc);
  return out;
}

}  // namespace mlab
