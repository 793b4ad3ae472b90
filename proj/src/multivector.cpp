#include "mlab/multivector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mlab/bounds.hpp"
#include "mlab/random.hpp"

namespace mlab {

std::string_view to_string(Segmentation::Scheme s) {
  return s == Segmentation::Scheme::contiguous ? "contiguous" : "hashed";
}

void Segmentation::validate() const {
  if (m < 1) throw std::invalid_argument("segmentation: m must be >= 1");
  if (v < 1) throw std::invalid_argument("segmentation: v must be >= 1");
}

std::uint32_t Segmentation::segment_of(TermId term) const {
  if (term >= v) throw std::out_of_range("segmentation: term id >= v");
  if (scheme == Scheme::contiguous) {
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(term) * m) / v);
  }
  return static_cast<std::uint32_t>(mix64(seed ^ term) % m);
}

nlohmann::ordered_json Segmentation::to_json() const {
  return {{"m", m}, {"scheme", to_string(scheme)}, {"v", v}, {"seed", seed}};
}

Segmentation Segmentation::from_json(const nlohmann::json& j) {
  Segmentation s;
  s.m = j.at("m").get<std::uint32_t>();
  const auto scheme = j.at("scheme").get<std::string>();
  if (scheme == "contiguous") {
    s.scheme = Scheme::contiguous;
  } else if (scheme == "hashed") {
    s.scheme = Scheme::hashed;
  } else {
    throw std::invalid_argument("segmentation: unknown scheme " + scheme);
  }
  s.v = j.value("v", std::uint64_t{1});
  s.seed = j.value("seed", std::uint64_t{0});
  s.validate();
  return s;
}

std::vector<SparseVector> segment(const SparseVector& d, const Segmentation& seg) {
  seg.validate();
  std::vector<std::vector<SparseEntry>> parts(seg.m);
  for (const auto& e : d.entries()) parts[seg.segment_of(e.term)].push_back(e);
  std::vector<SparseVector> out;
  out.reserve(seg.m);
  for (auto& p : parts) out.push_back(SparseVector::from_entries(std::move(p)));
  return out;
}

MultiVecDoc encode_multivec(DocId doc, const SparseVector& d, const Segmentation& seg, const ProjectionSpec& spec) {
  MultiVecDoc out{doc, {}};
  for (const auto& part : segment(d, seg)) out.vectors.push_back(project(spec, part));
  return out;
}

double multivec_score(const DenseVector& query, const MultiVecDoc& doc) {
  if (doc.vectors.empty()) throw std::invalid_argument("multivec_score: document has no vectors");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : doc.vectors) {
    if (v.dim() != query.dim()) throw std::invalid_argument("multivec_score: dimension mismatch");
    best = std::max(best, dot(query, v));
  }
  return best;
}

DenseIndex build_expanded_index(std::span<const MultiVecDoc> docs) {
  if (docs.empty() || docs.front().vectors.empty()) throw std::invalid_argument("expanded index: empty corpus");
  DenseIndex idx(static_cast<std::uint32_t>(docs.front().vectors.front().dim()));
  for (const auto& d : docs) {
    for (std::size_t j = 0; j < d.vectors.size(); ++j) idx.add(d.doc, static_cast<std::int32_t>(j), d.vectors[j].values);
  }
  return idx;
}

std::vector<ScoredDoc> expanded_index_topk(const DenseVector& query, const DenseIndex& expanded, std::size_t k) {
  if (k == 0) throw std::invalid_argument("expanded_index_topk: k must be >= 1");
  if (query.dim() != expanded.dim()) throw std::invalid_argument("expanded_index_topk: dimension mismatch");
  struct Hit {
    DocId doc;
    double score;
  };
  std::vector<Hit> hits;
  hits.reserve(expanded.size());
  for (std::size_t e = 0; e < expanded.size(); ++e) {
    hits.push_back({expanded.entries()[e].doc, dot(query.values, expanded.vector(e))});
  }
  std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
    return a.score > b.score || (a.score == b.score && a.doc < b.doc);
  });
  std::vector<ScoredDoc> out;
  std::vector<bool> seen(expanded.doc_bound(), false);
  for (const auto& h : hits) {
    if (seen[h.doc]) continue;
    seen[h.doc] = true;
    out.push_back({h.doc, h.score});
    if (out.size() == k) break;
  }
  return out;
}

std::vector<ScoredDoc> expanded_index_topk(const DenseVector& query, std::span<const MultiVecDoc> docs, std::size_t k) {
  return expanded_index_topk(query, build_expanded_index(docs), k);
}

SegmentMarginCheck check_segment_margin(const SparseVector& q, const SparseVector& d1, const SparseVector& d2,
                                        const Segmentation& seg) {
  const double s1 = dot(q, d1);
  const double s2 = dot(q, d2);
  if (!(s1 > s2)) throw std::invalid_argument("check_segment_margin: need <q,d1> > <q,d2>");
  constexpr double kTol = 1e-9;
  SegmentMarginCheck out;
  out.margin_full = normalized_margin(q, d1, d2);

  const auto parts1 = segment(d1, seg);
  const auto parts2 = segment(d2, seg);
  std::vector<double> seg2(seg.m);
  for (std::uint32_t i = 0; i < seg.m; ++i) seg2[i] = dot(q, parts2[i]);
  const double max2 = *std::max_element(seg2.begin(), seg2.end());

  for (std::uint32_t i = 0; i < seg.m; ++i) {
    const double a = dot(q, parts1[i]);
    if (std::abs(a - s1) <= kTol * std::max(1.0, std::abs(s1)) && seg2[i] <= s2 && a > seg2[i]) {
      out.conditions_hold = true;
      out.witness = i;
      out.same_max_segment = seg2[i] == max2;
      out.margin_segment = normalized_margin(q, parts1[i], parts2[i]);
      out.satisfied = out.margin_segment >= out.margin_full - kTol;
      break;
    }
  }
  return out;
}

}  // namespace mlab
