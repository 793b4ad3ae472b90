// Python bindings for the retrieval core and the fidelity lab.
//
// Sparse vectors cross the boundary as {term_id: weight} dicts, dense vectors
// as lists of floats.

#include <map>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "mlab/attention.hpp"
#include "mlab/bounds.hpp"
#include "mlab/corpus.hpp"
#include "mlab/engine.hpp"
#include "mlab/lab.hpp"
#include "mlab/projection.hpp"
#include "mlab/sparse_scoring.hpp"
#include "mlab/verify.hpp"

namespace py = pybind11;
using namespace mlab;

namespace {

using PySparse = std::map<TermId, double>;

SparseVector to_sparse(const PySparse& m) {
  std::vector<SparseEntry> e;
  e.reserve(m.size());
  for (const auto& [t, w] : m) e.push_back({t, w});
  return SparseVector::from_entries(std::move(e));
}

PySparse from_sparse(const SparseVector& v) {
  PySparse m;
  for (const auto& e : v.entries()) m.emplace(e.term, e.weight);
  return m;
}

std::vector<SparseVector> to_sparse_list(const std::vector<PySparse>& xs) {
  std::vector<SparseVector> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(to_sparse(x));
  return out;
}

ProjectionSpec make_spec(const std::string& kind, std::uint32_t k, std::uint64_t v, std::uint64_t seed) {
  ProjectionSpec spec{parse_projection_kind(kind), k, v, seed};
  spec.validate();
  return spec;
}

// A sparse index together with the corpus vocabulary used to tokenize queries.
class PySparseIndex {
 public:
  PySparseIndex(const std::vector<std::pair<std::string, std::string>>& docs, const std::string& scheme,
                const std::string& tokens, double k1, double b)
      : index_(build(docs, scheme, tokens, k1, b)) {}
  explicit PySparseIndex(InvertedIndex index) : index_(std::move(index)) {}

  SparseVector query(const std::string& text) const {
    Document q{"q", tokenize(text, index_.token_mode(), index_.vocab())};
    return query_vector(q, index_.scheme(), index_.vocab());
  }

  std::vector<std::pair<std::string, double>> search(const std::string& text, std::size_t k) const {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& s : sparse_topk(query(text), index_, k)) out.emplace_back(index_.doc_id(s.doc), s.score);
    return out;
  }

  const InvertedIndex& index() const { return index_; }

 private:
  static InvertedIndex build(const std::vector<std::pair<std::string, std::string>>& docs, const std::string& scheme,
                             const std::string& tokens, double k1, double b) {
    std::vector<RawDocument> raw;
    raw.reserve(docs.size());
    for (const auto& [id, text] : docs) raw.push_back({id, text});
    Bm25Params params{k1, b};
    params.validate();
    return InvertedIndex::build(Corpus::build(raw, parse_token_mode(tokens)), parse_scheme(scheme), params);
  }

  InvertedIndex index_;
};

}  // namespace

PYBIND11_MODULE(_mlab, m) {
  m.doc() = "Sparse, projected and multi-vector retrieval with a Monte Carlo fidelity lab";

  // Bounds.
  m.def("normalized_margin",
        [](const PySparse& q, const PySparse& d1, const PySparse& d2) {
          return normalized_margin(to_sparse(q), to_sparse(d1), to_sparse(d2));
        },
        py::arg("q"), py::arg("d1"), py::arg("d2"));
  m.def("margin_rate", &margin_rate, py::arg("eps"));
  m.def("pairwise_error_bound", &pairwise_error_bound, py::arg("eps"), py::arg("k"));
  m.def("sufficient_k_pairwise", &sufficient_k_pairwise, py::arg("eps"), py::arg("beta"));
  m.def("sufficient_k_quadratic", &sufficient_k_quadratic, py::arg("eps"), py::arg("beta"));
  m.def("recall_error_bound", &recall_error_bound, py::arg("eps"), py::arg("k"), py::arg("collection_size"),
        py::arg("r0"));
  m.def("sufficient_k_recall", &sufficient_k_recall, py::arg("eps"), py::arg("beta"), py::arg("collection_size"),
        py::arg("r0"));
  m.def("boolean_min_margin", &boolean_min_margin, py::arg("max_query_terms"), py::arg("max_doc_terms"));
  m.def("sufficient_k_boolean", &sufficient_k_boolean, py::arg("max_query_terms"), py::arg("max_doc_terms"),
        py::arg("beta"));
  m.def("attention_sufficient_k", &attention_sufficient_k, py::arg("max_query_tokens"), py::arg("vocab_size"),
        py::arg("beta"));

  // Scoring primitives.
  m.def("idf", py::overload_cast<std::uint64_t, std::uint64_t>(&idf), py::arg("num_docs"), py::arg("df"));
  m.def("bm25_doc_weight",
        [](std::uint32_t tf, double doc_len, double avgdl, double k1, double b) {
          return bm25_doc_weight(tf, doc_len, avgdl, Bm25Params{k1, b});
        },
        py::arg("tf"), py::arg("doc_len"), py::arg("avgdl"), py::arg("k1") = 1.2, py::arg("b") = 0.75);
  m.def("hard_attention",
        [](const std::vector<TermId>& x, const std::vector<TermId>& y) { return hard_attention_indicator(x, y); },
        py::arg("x"), py::arg("y"));

  // Projection.
  m.def("project",
        [](const PySparse& x, const std::string& kind, std::uint32_t k, std::uint64_t v, std::uint64_t seed) {
          return project(make_spec(kind, k, v, seed), to_sparse(x)).values;
        },
        py::arg("x"), py::arg("kind"), py::arg("k"), py::arg("v"), py::arg("seed"));

  // Sparse index.
  py::class_<PySparseIndex>(m, "SparseIndex")
      .def(py::init<const std::vector<std::pair<std::string, std::string>>&, const std::string&, const std::string&,
                    double, double>(),
           py::arg("docs"), py::arg("scheme") = "bm25", py::arg("tokens") = "unigram", py::arg("k1") = 1.2,
           py::arg("b") = 0.75)
      .def_static("load", [](const std::string& path) { return PySparseIndex(InvertedIndex::load(path)); })
      .def("save", [](const PySparseIndex& s, const std::string& path) { s.index().save(path); })
      .def("__len__", [](const PySparseIndex& s) { return s.index().num_docs(); })
      .def_property_readonly("scheme", [](const PySparseIndex& s) { return std::string(to_string(s.index().scheme())); })
      .def_property_readonly("doc_ids", [](const PySparseIndex& s) {
        return std::vector<std::string>(s.index().doc_ids().begin(), s.index().doc_ids().end());
      })
      .def("query_vector", [](const PySparseIndex& s, const std::string& text) { return from_sparse(s.query(text)); })
      .def("doc_vector", [](const PySparseIndex& s, DocId d) { return from_sparse(s.index().doc_vector(d)); })
      .def("score_all", [](const PySparseIndex& s, const std::string& text) { return s.index().score_all(s.query(text)); })
      .def("search", &PySparseIndex::search, py::arg("query"), py::arg("k") = 10);

  // Monte Carlo lab.
  m.def("default_grid", [] { return KGrid::default_grid().values; });
  m.def("pairwise_error_counts",
        [](const PySparse& q, const PySparse& d1, const PySparse& d2, const std::string& kind,
           const std::vector<std::uint32_t>& ks, std::uint32_t trials, std::uint64_t seed, unsigned threads) {
          return pairwise_error_counts(to_sparse(q), to_sparse(d1), to_sparse(d2), parse_projection_kind(kind), ks,
                                       trials, seed, threads);
        },
        py::arg("q"), py::arg("d1"), py::arg("d2"), py::arg("kind"), py::arg("ks"), py::arg("trials"),
        py::arg("seed"), py::arg("threads") = 1);
  m.def("min_k_per_bin",
        [](const std::vector<PySparse>& docs, const std::vector<PySparse>& queries, std::uint64_t seed,
           std::uint32_t trials, std::uint32_t num_bins, std::uint32_t samples_per_bin,
           const std::vector<std::uint32_t>& grid, const std::string& binning, unsigned threads) {
          const auto bank = harvest_triples(to_sparse_list(docs), to_sparse_list(queries), threads);
          MinKConfig cfg;
          if (!grid.empty()) cfg.grid = KGrid::from_values(grid);
          cfg.seed = seed;
          cfg.trials = trials;
          cfg.num_bins = num_bins;
          cfg.samples_per_bin = samples_per_bin;
          cfg.binning = parse_binning(binning);
          cfg.threads = threads;
          return min_k_per_bin(bank, cfg).csv();
        },
        py::arg("docs"), py::arg("queries"), py::arg("seed"), py::arg("trials") = 1000, py::arg("num_bins") = 10,
        py::arg("samples_per_bin") = 20, py::arg("grid") = std::vector<std::uint32_t>{},
        py::arg("binning") = "quantile", py::arg("threads") = 1,
        "Harvests margin triples and returns the min-k CSV.");
  m.def("verify_bounds",
        [](std::uint32_t trials, std::uint64_t seed, unsigned threads) {
          VerifyConfig cfg;
          cfg.trials = trials;
          cfg.seed = seed;
          cfg.threads = threads;
          py::list out;
          for (const auto& o : verify_bounds(cfg)) {
            py::dict row;
            row["id"] = o.id;
            row["title"] = o.title;
            row["passed"] = o.passed;
            row["detail"] = o.detail;
            out.append(row);
          }
          return out;
        },
        py::arg("trials") = 1000, py::arg("seed") = 1, py::arg("threads") = 1);
}
