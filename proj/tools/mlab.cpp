// mlab command-line driver: corpus -> indexes -> lab -> reports.
//
// Exit codes: 0 success, 1 runtime failure, 2 bad arguments. Errors are one
// line on stderr: "mlab: error: <subcommand>: <message>".

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mlab/bounds.hpp"
#include "mlab/corpus.hpp"
#include "mlab/engine.hpp"
#include "mlab/ict.hpp"
#include "mlab/io.hpp"
#include "mlab/lab.hpp"
#include "mlab/multivector.hpp"
#include "mlab/parallel.hpp"
#include "mlab/projection.hpp"
#include "mlab/random.hpp"
#include "mlab/sparse_scoring.hpp"
#include "mlab/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct BadArgs : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::string file_hash(const fs::path& p) { return mlab::fnv1a_hex(mlab::read_file(p)); }

fs::path meta_path(const fs::path& out) { return fs::path(out.string() + ".meta.json"); }

// Writes `body` and its sidecar. The config hash covers everything that can
// change the bytes of the output: not thread counts, not output paths.
void emit(const fs::path& out, const std::string& body, const std::string& subcommand, const json& config,
          json extra = json::object()) {
  json meta;
  meta["tool"] = "mlab";
  meta["subcommand"] = subcommand;
  meta["config"] = config;
  meta["config_hash"] = mlab::fnv1a_hex(config.dump());
  meta["output"] = out.filename().string();
  meta["output_hash"] = mlab::fnv1a_hex(body);
  for (auto& [key, value] : extra.items()) meta[key] = value;
  mlab::write_file_atomic(out, body);
  mlab::write_file_atomic(meta_path(out), meta.dump(2) + "\n");
}

std::vector<mlab::Document> tokenize_queries(const mlab::InvertedIndex& index, std::span<const mlab::RawQuery> raw) {
  std::vector<mlab::Document> out;
  out.reserve(raw.size());
  for (const auto& q : raw) out.push_back({q.id, mlab::tokenize(q.text, index.token_mode(), index.vocab())});
  return out;
}

std::unordered_map<std::string, mlab::DocId> doc_positions(const mlab::InvertedIndex& index) {
  std::unordered_map<std::string, mlab::DocId> pos;
  const auto ids = index.doc_ids();
  for (std::size_t d = 0; d < ids.size(); ++d) pos.emplace(ids[d], static_cast<mlab::DocId>(d));
  return pos;
}

std::optional<mlab::DocId> gold_of(const mlab::RawQuery& q, const std::unordered_map<std::string, mlab::DocId>& pos) {
  if (q.gold_id.empty()) return std::nullopt;
  const auto it = pos.find(q.gold_id);
  if (it == pos.end()) return std::nullopt;
  return it->second;
}

mlab::DenseVector project_query(const mlab::InvertedIndex& index, const mlab::DenseIndex& dense,
                                const mlab::Document& q) {
  if (!dense.provenance()) throw std::invalid_argument("dense index has no projection provenance");
  return mlab::project(*dense.provenance(), mlab::query_vector(q, index.scheme(), index.vocab()));
}

// ---------------------------------------------------------------------------
// Option groups shared by several subcommands.

struct Bm25Opts {
  double k1 = 1.2;
  double b = 0.75;
  mlab::Bm25Params params() const {
    mlab::Bm25Params p{k1, b};
    p.validate();
    return p;
  }
};

void add_bm25(CLI::App* cmd, Bm25Opts& o) {
  cmd->add_option("--k1", o.k1, "BM25 tf saturation")->capture_default_str();
  cmd->add_option("--b", o.b, "BM25 length normalization")->capture_default_str();
}

std::uint64_t require_seed(const std::optional<std::uint64_t>& seed) {
  if (!seed) throw BadArgs("--seed is required");
  return *seed;
}

mlab::KGrid make_grid(bool grid_default, const std::vector<std::uint32_t>& values) {
  if (grid_default && !values.empty()) throw BadArgs("--grid-default and --grid are exclusive");
  if (values.empty()) return mlab::KGrid::default_grid();
  auto g = mlab::KGrid::from_values(values);
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------

struct IngestOpts {
  std::string input, out, tokens = "unigram";
};

int run_ingest(const IngestOpts& o) {
  const auto raw = mlab::read_documents_jsonl(o.input);
  const auto mode = mlab::parse_token_mode(o.tokens);
  const auto corpus = mlab::Corpus::build(raw, mode);
  std::vector<mlab::RawDocument> kept;
  kept.reserve(corpus.docs.size());
  for (const auto& r : raw) {
    if (corpus.find(r.id)) kept.push_back(r);
  }
  const json config = {{"input_hash", file_hash(o.input)}, {"tokens", o.tokens}};
  emit(o.out, mlab::documents_to_jsonl(kept), "ingest", config,
       {{"num_docs", corpus.docs.size()},
        {"skipped_empty", corpus.skipped_empty},
        {"vocab_size", corpus.vocab.size()},
        {"avgdl", corpus.vocab.avgdl()}});
  return 0;
}

struct SynthOpts {
  std::optional<std::uint64_t> seed;
  std::string source, out_docs, out_queries;
  mlab::IctSpec ict;
  mlab::ZipfSpec zipf;
};

int run_synth(SynthOpts o) {
  o.ict.seed = require_seed(o.seed);
  o.ict.validate();
  json config = {{"ict", o.ict.to_json()}};
  std::vector<mlab::RawDocument> source;
  if (o.source.empty()) {
    o.zipf.seed = mlab::hash3(o.ict.seed, 9, 0);
    o.zipf.validate();
    source = mlab::generate_zipf_documents(o.zipf);
    config["zipf"] = o.zipf.to_json();
  } else {
    source = mlab::read_documents_jsonl(o.source);
    config["source_hash"] = file_hash(o.source);
  }
  const auto ict = mlab::synthesize_ict(source, o.ict);
  json extra = ict.metadata(o.ict);
  emit(o.out_docs, mlab::documents_to_jsonl(ict.docs), "synth-ict", config, extra);
  emit(o.out_queries, mlab::queries_to_jsonl(ict.queries), "synth-ict", config, extra);
  return 0;
}

struct IndexSparseOpts {
  std::string docs, out, scheme = "bm25", tokens = "unigram";
  Bm25Opts bm25;
};

int run_index_sparse(const IndexSparseOpts& o) {
  const auto raw = mlab::read_documents_jsonl(o.docs);
  const auto corpus = mlab::Corpus::build(raw, mlab::parse_token_mode(o.tokens));
  const auto index = mlab::InvertedIndex::build(corpus, mlab::parse_scheme(o.scheme), o.bm25.params());
  const std::string bytes = index.serialize();
  const json config = {{"docs_hash", file_hash(o.docs)}, {"scheme", o.scheme}, {"tokens", o.tokens},
                       {"k1", o.bm25.k1},                {"b", o.bm25.b}};
  json extra = index.metadata();
  extra["skipped_empty"] = corpus.skipped_empty;
  emit(o.out, bytes, "index-sparse", config, {{"index", extra}});
  return 0;
}

struct IndexDenseOpts {
  std::optional<std::uint64_t> seed;
  std::string index, out, kind = "rademacher", segmentation = "contiguous";
  std::uint32_t k = 768;
  std::uint32_t m = 1;
  unsigned threads = 1;
};

int run_index_dense(const IndexDenseOpts& o) {
  const auto seed = require_seed(o.seed);
  const auto sparse = mlab::InvertedIndex::load(o.index);
  mlab::ProjectionSpec spec{mlab::parse_projection_kind(o.kind), o.k,
                            std::max<std::uint64_t>(1, sparse.vocab().size()), seed};
  spec.validate();
  mlab::Segmentation seg;
  seg.m = o.m;
  seg.v = spec.v;
  seg.seed = seed;
  if (o.segmentation == "contiguous") {
    seg.scheme = mlab::Segmentation::Scheme::contiguous;
  } else if (o.segmentation == "hashed") {
    seg.scheme = mlab::Segmentation::Scheme::hashed;
  } else {
    throw BadArgs("unknown segmentation: " + o.segmentation);
  }
  seg.validate();

  const std::size_t n = sparse.num_docs();
  std::vector<mlab::MultiVecDoc> encoded(n);
  mlab::parallel_for(n, o.threads, [&](std::size_t d) {
    const auto id = static_cast<mlab::DocId>(d);
    if (o.m == 1) {
      encoded[d] = {id, {mlab::project(spec, sparse.doc_vector(id))}};
    } else {
      encoded[d] = mlab::encode_multivec(id, sparse.doc_vector(id), seg, spec);
    }
  });
  mlab::DenseIndex dense(spec.k, spec);
  for (const auto& doc : encoded) {
    for (std::size_t j = 0; j < doc.vectors.size(); ++j) {
      dense.add(doc.doc, o.m == 1 ? mlab::DenseIndex::kNoSegment : static_cast<std::int32_t>(j),
                doc.vectors[j].values);
    }
  }
  const json config = {{"index_hash", file_hash(o.index)}, {"projection", spec.to_json()}, {"segmentation", seg.to_json()}};
  emit(o.out, dense.serialize(), "index-dense", config, {{"entries", dense.size()}});
  return 0;
}

struct TriplesOpts {
  std::string index, queries, out;
  unsigned threads = 1;
};

int run_triples(const TriplesOpts& o) {
  const auto index = mlab::InvertedIndex::load(o.index);
  const auto raw = mlab::read_queries_jsonl(o.queries);
  const auto queries = tokenize_queries(index, raw);
  const auto bank = mlab::harvest_triples(index, queries, o.threads);
  mlab::CsvTable t({"query_id", "winner_id", "loser_id", "margin", "inverse_rate"});
  for (const auto& tr : bank.triples) {
    t.row({raw[tr.query].id, index.doc_id(tr.winner), index.doc_id(tr.loser), mlab::field(tr.margin),
           mlab::field(mlab::inverse_rate(tr.margin))});
  }
  const json config = {{"index_hash", file_hash(o.index)}, {"queries_hash", file_hash(o.queries)}};
  emit(o.out, t.str(), "triples", config,
       {{"num_triples", bank.triples.size()}, {"skipped_queries", bank.skipped_queries}});
  return 0;
}

struct MinKOpts {
  std::optional<std::uint64_t> seed;
  std::string index, queries, out, binning = "quantile", kind = "rademacher";
  bool grid_default = false;
  std::vector<std::uint32_t> grid;
  double target = 0.95;
  std::uint32_t trials = 1000, bins = 10, min_bin_count = 1, samples_per_bin = 20;
  unsigned threads = 1;
};

int run_min_k(const MinKOpts& o) {
  mlab::MinKConfig cfg;
  cfg.seed = require_seed(o.seed);
  cfg.grid = make_grid(o.grid_default, o.grid);
  cfg.target = o.target;
  cfg.trials = o.trials;
  cfg.binning = mlab::parse_binning(o.binning);
  cfg.num_bins = o.bins;
  cfg.min_bin_count = o.min_bin_count;
  cfg.samples_per_bin = o.samples_per_bin;
  cfg.kind = mlab::parse_projection_kind(o.kind);
  cfg.threads = o.threads;
  cfg.validate();

  const auto index = mlab::InvertedIndex::load(o.index);
  const auto raw = mlab::read_queries_jsonl(o.queries);
  const auto bank = mlab::harvest_triples(index, tokenize_queries(index, raw), o.threads);
  const auto report = mlab::min_k_per_bin(bank, cfg);

  std::vector<double> x, y;
  for (const auto& b : report.bins) {
    if (!b.min_k) continue;
    x.push_back(b.stat);
    y.push_back(*b.min_k);
  }
  json config = cfg.to_json();
  config["index_hash"] = file_hash(o.index);
  config["queries_hash"] = file_hash(o.queries);
  emit(o.out, report.csv(), "min-k", config,
       {{"report", report.metadata()},
        {"num_triples", bank.triples.size()},
        {"skipped_queries", bank.skipped_queries},
        {"fit_r2", mlab::linear_fit_r2(x, y)},
        {"bm25_variant", mlab::kBm25Variant}});
  return 0;
}

struct LengthOpts {
  std::optional<std::uint64_t> seed;
  std::vector<std::uint32_t> lengths = {50, 100, 200, 400};
  std::uint32_t docs_per_length = 5000, queries_per_length = 500, vocab_size = 20000;
  double exponent = 1.0;
  std::string scheme = "bm25";

  mlab::LengthSynthSpec spec() const {
    mlab::LengthSynthSpec s;
    s.lengths = lengths;
    s.docs_per_length = docs_per_length;
    s.queries_per_length = queries_per_length;
    s.vocab_size = vocab_size;
    s.exponent = exponent;
    s.scheme = mlab::parse_scheme(scheme);
    s.seed = require_seed(seed);
    s.validate();
    return s;
  }
};

void add_length_opts(CLI::App* cmd, LengthOpts& o) {
  cmd->add_option("--seed", o.seed, "corpus and matrix seed");
  cmd->add_option("--lengths", o.lengths, "passage length bins")->capture_default_str();
  cmd->add_option("--docs-per-length", o.docs_per_length)->capture_default_str();
  cmd->add_option("--queries-per-length", o.queries_per_length)->capture_default_str();
  cmd->add_option("--vocab-size", o.vocab_size)->capture_default_str();
  cmd->add_option("--zipf-exponent", o.exponent)->capture_default_str();
  cmd->add_option("--scheme", o.scheme, "boolean, tfidf or bm25")->capture_default_str();
}

struct MarginsOpts {
  LengthOpts len;
  std::vector<std::uint32_t> ranks = {10, 100, 1000};
  std::string out;
  unsigned threads = 1;
};

int run_margins(const MarginsOpts& o) {
  const auto spec = o.len.spec();
  const auto corpora = mlab::synthesize_length_corpora(spec);
  const auto report = mlab::margin_quantiles_by_length(corpora, o.ranks, o.threads);
  json config = {{"corpora", spec.to_json()}, {"ranks", o.ranks}};
  emit(o.out, report.csv(), "margins-by-length", config,
       {{"report", report.metadata()}, {"bm25_variant", mlab::kBm25Variant}});
  return 0;
}

struct RecallOpts {
  LengthOpts len;
  bool grid_default = false;
  std::vector<std::uint32_t> grid;
  std::uint32_t r = 10, trials = 100, max_queries = 0;
  std::vector<double> targets = {0.7, 0.8, 0.9, 0.95};
  std::string kind = "rademacher", out;
  unsigned threads = 1;
};

int run_recall(const RecallOpts& o) {
  const auto spec = o.len.spec();
  mlab::RecallConfig cfg;
  cfg.grid = make_grid(o.grid_default, o.grid);
  cfg.r = o.r;
  cfg.targets = o.targets;
  cfg.trials = o.trials;
  cfg.max_queries = o.max_queries;
  cfg.kind = mlab::parse_projection_kind(o.kind);
  cfg.seed = spec.seed;
  cfg.threads = o.threads;
  cfg.validate();
  const auto corpora = mlab::synthesize_length_corpora(spec);
  const auto report = mlab::min_k_for_recall(corpora, cfg);
  json config = {{"corpora", spec.to_json()}, {"recall", cfg.to_json()}};
  emit(o.out, report.csv(), "recall-min-k", config,
       {{"report", report.metadata()}, {"bm25_variant", mlab::kBm25Variant}});
  return 0;
}

struct RetrieveOpts {
  std::string index, dense, queries, out, mode = "sparse";
  std::size_t k = 10, n_best = 100;
  double lambda = 1.0;
  unsigned threads = 1;
};

int run_retrieve(const RetrieveOpts& o) {
  const auto index = mlab::InvertedIndex::load(o.index);
  const auto raw = mlab::read_queries_jsonl(o.queries);
  const auto queries = tokenize_queries(index, raw);
  if (o.mode != "sparse" && o.mode != "dense" && o.mode != "hybrid") throw BadArgs("unknown mode: " + o.mode);
  if (o.k < 1) throw BadArgs("--k must be >= 1");
  std::optional<mlab::DenseIndex> dense;
  if (o.mode != "sparse") {
    if (o.dense.empty()) throw BadArgs("--dense is required for mode " + o.mode);
    dense = mlab::DenseIndex::load(o.dense);
  }
  const mlab::HybridConfig hcfg{o.lambda, o.n_best};
  if (o.mode == "hybrid") hcfg.validate(o.k);

  std::vector<std::string> lines(queries.size());
  mlab::parallel_for(queries.size(), o.threads, [&](std::size_t i) {
    const auto q = mlab::query_vector(queries[i], index.scheme(), index.vocab());
    std::vector<mlab::ScoredDoc> ranked;
    if (o.mode == "sparse") {
      ranked = mlab::sparse_topk(q, index, o.k);
    } else {
      const auto qv = project_query(index, *dense, queries[i]);
      ranked = o.mode == "dense" ? mlab::dense_topk(qv, *dense, o.k)
                                 : mlab::hybrid_topk(q, index, qv.values, *dense, hcfg, o.k);
    }
    std::string s;
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      s += raw[i].id + '\t' + index.doc_id(ranked[r].doc) + '\t' + std::to_string(r + 1) + '\t' +
           mlab::format_double(ranked[r].score) + '\n';
    }
    lines[i] = std::move(s);
  });
  std::string body;
  for (const auto& l : lines) body += l;

  json config = {{"index_hash", file_hash(o.index)}, {"queries_hash", file_hash(o.queries)}, {"mode", o.mode},
                 {"k", o.k}};
  if (dense) config["dense_hash"] = file_hash(o.dense);
  if (o.mode == "hybrid") {
    config["lambda"] = o.lambda;
    config["n_best"] = o.n_best;
  }
  emit(o.out, body, "retrieve", config);
  return 0;
}

struct EvalOpts {
  std::string run, queries, out, index;
  std::size_t cutoff = 10;
  std::vector<std::size_t> recall = {1, 5, 10, 20, 100};
  std::size_t token_budget = 400;
};

int run_eval(const EvalOpts& o) {
  const auto raw = mlab::read_queries_jsonl(o.queries);
  // Doc ids are local to this evaluation: every string seen gets a number.
  std::unordered_map<std::string, mlab::DocId> ids;
  auto id_of = [&](const std::string& s) {
    return ids.emplace(s, static_cast<mlab::DocId>(ids.size())).first->second;
  };
  std::unordered_map<std::string, std::size_t> qpos;
  for (std::size_t i = 0; i < raw.size(); ++i) qpos.emplace(raw[i].id, i);

  std::vector<std::vector<std::pair<std::size_t, std::string>>> runs(raw.size());
  std::istringstream in(mlab::read_file(o.run));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, '\t')) cols.push_back(c);
    if (cols.size() != 4) throw std::runtime_error("run line " + std::to_string(lineno) + ": expected 4 columns");
    const auto it = qpos.find(cols[0]);
    if (it == qpos.end()) throw std::runtime_error("run line " + std::to_string(lineno) + ": unknown query " + cols[0]);
    runs[it->second].emplace_back(std::stoul(cols[2]), cols[1]);
  }

  std::optional<mlab::InvertedIndex> index;
  std::unordered_map<std::string, std::uint32_t> lengths;
  if (!o.index.empty()) {
    index = mlab::InvertedIndex::load(o.index);
    for (std::size_t d = 0; d < index->num_docs(); ++d) lengths.emplace(index->doc_id(d), index->doc_lengths()[d]);
  }

  std::vector<std::vector<mlab::DocId>> rankings(raw.size());
  std::vector<std::optional<mlab::DocId>> gold(raw.size());
  double tokens_hits = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto& r = runs[i];
    std::sort(r.begin(), r.end());
    std::vector<mlab::RankedPassage> passages;
    for (const auto& [rank, doc] : r) {
      rankings[i].push_back(id_of(doc));
      if (index) {
        const auto it = lengths.find(doc);
        if (it == lengths.end()) throw std::runtime_error("doc " + doc + " not in index");
        passages.push_back({it->second, doc == raw[i].gold_id});
      }
    }
    if (raw[i].gold_id.empty()) throw std::runtime_error("query " + raw[i].id + " has no gold_id");
    gold[i] = id_of(raw[i].gold_id);
    if (index && !passages.empty()) tokens_hits += mlab::recall_at_tokens(passages, o.token_budget);
  }

  mlab::CsvTable t({"metric", "value", "n_queries"});
  t.row({"mrr@" + std::to_string(o.cutoff), mlab::field(mlab::mrr_at(rankings, gold, o.cutoff)),
         mlab::field(raw.size())});
  for (auto r : o.recall) {
    t.row({"recall@" + std::to_string(r), mlab::field(mlab::recall_at(rankings, gold, r)), mlab::field(raw.size())});
  }
  if (index) {
    const double v = raw.empty() ? 0.0 : tokens_hits / static_cast<double>(raw.size());
    t.row({"recall@" + std::to_string(o.token_budget) + "tokens", mlab::field(v), mlab::field(raw.size())});
  }
  json config = {{"run_hash", file_hash(o.run)}, {"queries_hash", file_hash(o.queries)}, {"cutoff", o.cutoff},
                 {"recall", o.recall}};
  if (index) {
    config["index_hash"] = file_hash(o.index);
    config["token_budget"] = o.token_budget;
  }
  emit(o.out, t.str(), "eval", config);
  return 0;
}

struct TuneOpts {
  std::string index, dense, queries, out;
  std::size_t n_best = 100;
  double max_lambda = 5.0, step = 0.05;
  unsigned threads = 1;
};

int run_tune(const TuneOpts& o) {
  const auto index = mlab::InvertedIndex::load(o.index);
  const auto dense = mlab::DenseIndex::load(o.dense);
  const auto raw = mlab::read_queries_jsonl(o.queries);
  const auto queries = tokenize_queries(index, raw);
  const auto pos = doc_positions(index);
  std::vector<mlab::HybridDevQuery> dev(queries.size());
  mlab::parallel_for(queries.size(), o.threads, [&](std::size_t i) {
    const auto q = mlab::query_vector(queries[i], index.scheme(), index.vocab());
    dev[i].sparse_scores = index.score_all(q);
    dev[i].dense_scores = dense.score_docs(project_query(index, dense, queries[i]).values);
    dev[i].dense_scores.resize(index.num_docs(), -std::numeric_limits<double>::infinity());
    dev[i].gold = gold_of(raw[i], pos);
  });
  for (std::size_t i = 0; i < dev.size(); ++i) {
    if (!dev[i].gold) throw std::runtime_error("query " + raw[i].id + " has no gold document in the index");
  }
  const auto sweep = mlab::tune_lambda(dev, o.n_best, o.max_lambda, o.step);
  mlab::CsvTable t({"lambda", "mrr@10"});
  for (std::size_t i = 0; i < sweep.lambdas.size(); ++i) {
    t.row({mlab::field(sweep.lambdas[i]), mlab::field(sweep.mrrs[i])});
  }
  const json config = {{"index_hash", file_hash(o.index)}, {"dense_hash", file_hash(o.dense)},
                       {"queries_hash", file_hash(o.queries)}, {"n_best", o.n_best},
                       {"max_lambda", o.max_lambda}, {"step", o.step}};
  emit(o.out, t.str(), "tune-hybrid", config, {{"best_lambda", sweep.best_lambda}, {"best_mrr", sweep.best_mrr}});
  std::cout << "best_lambda\t" << mlab::format_double(sweep.best_lambda) << "\nbest_mrr@10\t"
            << mlab::format_double(sweep.best_mrr) << "\n";
  return 0;
}

struct VerifyOpts {
  std::optional<std::uint64_t> seed;
  std::uint32_t trials = 1000;
  unsigned threads = 1;
  std::string out;
};

int run_verify(const VerifyOpts& o) {
  mlab::VerifyConfig cfg;
  cfg.seed = require_seed(o.seed);
  cfg.trials = o.trials;
  cfg.threads = o.threads;
  const auto outcomes = mlab::verify_bounds(cfg);
  std::size_t failed = 0;
  mlab::CsvTable t({"check", "passed", "detail"});
  for (const auto& c : outcomes) {
    std::cout << (c.passed ? "PASS" : "FAIL") << "  " << c.id << "  " << c.title << "  [" << c.detail << "]\n";
    if (!c.passed) ++failed;
    auto detail = c.detail;
    std::replace(detail.begin(), detail.end(), ',', ';');
    t.row({c.id, mlab::field(c.passed), detail});
  }
  if (!o.out.empty()) emit(o.out, t.str(), "verify-bounds", cfg.to_json());
  if (failed > 0) throw std::runtime_error(std::to_string(failed) + " of " + std::to_string(outcomes.size()) +
                                           " checks failed");
  return 0;
}

// ---------------------------------------------------------------------------
// Optional JSON config: {"key": value} becomes "--key value" placed before the
// command-line flags, so flags given explicitly win (last value taken).

std::vector<std::string> config_args(const fs::path& path) {
  const auto j = nlohmann::json::parse(mlab::read_file(path));
  if (!j.is_object()) throw BadArgs("config must be a JSON object");
  std::vector<std::string> args;
  auto scalar = [](const nlohmann::json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number() || v.is_boolean()) return v.dump();
    throw BadArgs("config values must be scalars or arrays of scalars");
  };
  for (const auto& [key, value] : j.items()) {
    if (key == "config") throw BadArgs("config files cannot nest");
    const std::string flag = "--" + key;
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back(flag);
    } else if (value.is_array()) {
      for (const auto& v : value) {
        args.push_back(flag);
        args.push_back(scalar(v));
      }
    } else {
      args.push_back(flag);
      args.push_back(scalar(value));
    }
  }
  return args;
}

// Splits "--config PATH" / "--config=PATH" out of argv and splices the file's
// flags in right after the subcommand name.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<std::string> config;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw BadArgs("--config needs a path");
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config) return rest;
  if (rest.empty() || rest[0].starts_with("-")) throw BadArgs("--config must follow a subcommand");
  auto extra = config_args(*config);
  rest.insert(rest.begin() + 1, extra.begin(), extra.end());
  return rest;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mlab: sparse, projected and multi-vector retrieval with a Monte Carlo fidelity lab"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all");

  auto threads_opt = [](CLI::App* cmd, unsigned& t) {
    cmd->add_option("--threads", t, "worker threads; results do not depend on it")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  };
  auto vector_opt = [](CLI::Option* o) { return o->multi_option_policy(CLI::MultiOptionPolicy::TakeAll)->delimiter(','); };

  IngestOpts ingest;
  auto* c_ingest = app.add_subcommand("ingest", "validate and normalize a JSONL document collection");
  c_ingest->add_option("--input", ingest.input)->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--out", ingest.out)->required();
  c_ingest->add_option("--tokens", ingest.tokens, "unigram or unigram+bigram")->capture_default_str();

  SynthOpts synth;
  auto* c_synth = app.add_subcommand("synth-ict", "synthesize an inverse-cloze-task corpus");
  c_synth->add_option("--seed", synth.seed);
  c_synth->add_option("--source", synth.source, "source JSONL; Zipf text is generated when omitted")
      ->check(CLI::ExistingFile);
  c_synth->add_option("--out-docs", synth.out_docs)->required();
  c_synth->add_option("--out-queries", synth.out_queries)->required();
  c_synth->add_option("--min-query-len", synth.ict.min_query_len)->capture_default_str();
  c_synth->add_option("--max-query-len", synth.ict.max_query_len)->capture_default_str();
  c_synth->add_option("--distractors", synth.ict.distractors_per_gold)->capture_default_str();
  c_synth->add_option("--edits", synth.ict.edit_count)->capture_default_str();
  c_synth->add_option("--max-passage-len", synth.ict.max_passage_len)->capture_default_str();
  c_synth->add_option("--num-queries", synth.ict.num_queries, "0 = every eligible passage")->capture_default_str();
  c_synth->add_option("--max-passages", synth.ict.max_passages, "0 = no cap")->capture_default_str();
  c_synth->add_option("--zipf-docs", synth.zipf.num_docs)->capture_default_str();
  c_synth->add_option("--zipf-min-len", synth.zipf.min_len)->capture_default_str();
  c_synth->add_option("--zipf-max-len", synth.zipf.max_len)->capture_default_str();
  c_synth->add_option("--vocab-size", synth.zipf.vocab_size)->capture_default_str();
  c_synth->add_option("--zipf-exponent", synth.zipf.exponent)->capture_default_str();

  IndexSparseOpts isparse;
  auto* c_isparse = app.add_subcommand("index-sparse", "build a boolean, tf-idf or BM25 inverted index");
  c_isparse->add_option("--docs", isparse.docs)->required()->check(CLI::ExistingFile);
  c_isparse->add_option("--out", isparse.out)->required();
  c_isparse->add_option("--scheme", isparse.scheme, "boolean, tfidf or bm25")->capture_default_str();
  c_isparse->add_option("--tokens", isparse.tokens, "unigram or unigram+bigram")->capture_default_str();
  add_bm25(c_isparse, isparse.bm25);

  IndexDenseOpts idense;
  auto* c_idense = app.add_subcommand("index-dense", "project a sparse index into a dense (multi-vector) index");
  c_idense->add_option("--seed", idense.seed);
  c_idense->add_option("--index", idense.index, "sparse index")->required()->check(CLI::ExistingFile);
  c_idense->add_option("--out", idense.out)->required();
  c_idense->add_option("--k", idense.k, "embedding size")->check(CLI::PositiveNumber)->capture_default_str();
  c_idense->add_option("--kind", idense.kind, "rademacher or gaussian")->capture_default_str();
  c_idense->add_option("--m", idense.m, "vectors per document")->check(CLI::PositiveNumber)->capture_default_str();
  c_idense->add_option("--segmentation", idense.segmentation, "contiguous or hashed")->capture_default_str();
  threads_opt(c_idense, idense.threads);

  TriplesOpts triples;
  auto* c_triples = app.add_subcommand("triples", "harvest (query, winner, loser) margin triples");
  c_triples->add_option("--index", triples.index)->required()->check(CLI::ExistingFile);
  c_triples->add_option("--queries", triples.queries)->required()->check(CLI::ExistingFile);
  c_triples->add_option("--out", triples.out)->required();
  threads_opt(c_triples, triples.threads);

  MinKOpts mink;
  auto* c_mink = app.add_subcommand("min-k", "minimum embedding size per margin bin");
  c_mink->add_option("--seed", mink.seed);
  c_mink->add_option("--index", mink.index)->required()->check(CLI::ExistingFile);
  c_mink->add_option("--queries", mink.queries)->required()->check(CLI::ExistingFile);
  c_mink->add_option("--out", mink.out)->required();
  c_mink->add_flag("--grid-default", mink.grid_default, "40 geometric values over [32, 9472]");
  vector_opt(c_mink->add_option("--grid", mink.grid, "explicit k values"));
  c_mink->add_option("--target", mink.target)->capture_default_str();
  c_mink->add_option("--trials", mink.trials)->check(CLI::PositiveNumber)->capture_default_str();
  c_mink->add_option("--binning", mink.binning, "quantile, log or linear")->capture_default_str();
  c_mink->add_option("--bins", mink.bins)->check(CLI::PositiveNumber)->capture_default_str();
  c_mink->add_option("--min-bin-count", mink.min_bin_count)->capture_default_str();
  c_mink->add_option("--samples-per-bin", mink.samples_per_bin, "0 = all triples")->capture_default_str();
  c_mink->add_option("--kind", mink.kind, "rademacher or gaussian")->capture_default_str();
  threads_opt(c_mink, mink.threads);

  MarginsOpts margins;
  auto* c_margins = app.add_subcommand("margins-by-length", "rank-r smallest margins per passage length");
  add_length_opts(c_margins, margins.len);
  vector_opt(c_margins->add_option("--ranks", margins.ranks))->capture_default_str();
  c_margins->add_option("--out", margins.out)->required();
  threads_opt(c_margins, margins.threads);

  RecallOpts recall;
  auto* c_recall = app.add_subcommand("recall-min-k", "minimum embedding size for recall@r per passage length");
  add_length_opts(c_recall, recall.len);
  c_recall->add_flag("--grid-default", recall.grid_default);
  vector_opt(c_recall->add_option("--grid", recall.grid));
  c_recall->add_option("--r", recall.r)->check(CLI::PositiveNumber)->capture_default_str();
  vector_opt(c_recall->add_option("--targets", recall.targets))->capture_default_str();
  c_recall->add_option("--trials", recall.trials)->check(CLI::PositiveNumber)->capture_default_str();
  c_recall->add_option("--max-queries", recall.max_queries, "0 = all")->capture_default_str();
  c_recall->add_option("--kind", recall.kind)->capture_default_str();
  c_recall->add_option("--out", recall.out)->required();
  threads_opt(c_recall, recall.threads);

  RetrieveOpts retrieve;
  auto* c_retrieve = app.add_subcommand("retrieve", "rank documents for each query (TSV)");
  c_retrieve->add_option("--index", retrieve.index)->required()->check(CLI::ExistingFile);
  c_retrieve->add_option("--dense", retrieve.dense)->check(CLI::ExistingFile);
  c_retrieve->add_option("--queries", retrieve.queries)->required()->check(CLI::ExistingFile);
  c_retrieve->add_option("--out", retrieve.out)->required();
  c_retrieve->add_option("--mode", retrieve.mode, "sparse, dense or hybrid")->capture_default_str();
  c_retrieve->add_option("--k", retrieve.k)->capture_default_str();
  c_retrieve->add_option("--lambda", retrieve.lambda)->capture_default_str();
  c_retrieve->add_option("--n-best", retrieve.n_best)->capture_default_str();
  threads_opt(c_retrieve, retrieve.threads);

  EvalOpts eval;
  auto* c_eval = app.add_subcommand("eval", "MRR and recall of a run against gold labels (CSV)");
  c_eval->add_option("--run", eval.run)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--queries", eval.queries)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--out", eval.out)->required();
  c_eval->add_option("--index", eval.index, "sparse index; enables recall at a token budget")
      ->check(CLI::ExistingFile);
  c_eval->add_option("--cutoff", eval.cutoff)->check(CLI::PositiveNumber)->capture_default_str();
  vector_opt(c_eval->add_option("--recall", eval.recall))->capture_default_str();
  c_eval->add_option("--token-budget", eval.token_budget)->capture_default_str();

  TuneOpts tune;
  auto* c_tune = app.add_subcommand("tune-hybrid", "grid search of the hybrid weight on a dev set");
  c_tune->add_option("--index", tune.index)->required()->check(CLI::ExistingFile);
  c_tune->add_option("--dense", tune.dense)->required()->check(CLI::ExistingFile);
  c_tune->add_option("--queries", tune.queries)->required()->check(CLI::ExistingFile);
  c_tune->add_option("--out", tune.out)->required();
  c_tune->add_option("--n-best", tune.n_best)->capture_default_str();
  c_tune->add_option("--max-lambda", tune.max_lambda)->capture_default_str();
  c_tune->add_option("--step", tune.step)->capture_default_str();
  threads_opt(c_tune, tune.threads);

  VerifyOpts verify;
  auto* c_verify = app.add_subcommand("verify-bounds", "run the bound verification suite");
  c_verify->add_option("--seed", verify.seed);
  c_verify->add_option("--trials", verify.trials)->check(CLI::PositiveNumber)->capture_default_str();
  c_verify->add_option("--out", verify.out, "optional CSV of the table");
  threads_opt(c_verify, verify.threads);

  std::string which = "mlab";
  try {
    auto args = expand_config(argc, argv);
    if (!args.empty() && !args[0].starts_with("-")) which = args[0];
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (*c_ingest) return run_ingest(ingest);
    if (*c_synth) return run_synth(synth);
    if (*c_isparse) return run_index_sparse(isparse);
    if (*c_idense) return run_index_dense(idense);
    if (*c_triples) return run_triples(triples);
    if (*c_mink) return run_min_k(mink);
    if (*c_margins) return run_margins(margins);
    if (*c_recall) return run_recall(recall);
    if (*c_retrieve) return run_retrieve(retrieve);
    if (*c_eval) return run_eval(eval);
    if (*c_tune) return run_tune(tune);
    if (*c_verify) return run_verify(verify);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "mlab: error: " << which << ": " << one_line(e.what()) << "\n";
    return 2;
  } catch (const BadArgs& e) {
    std::cerr << "mlab: error: " << which << ": " << one_line(e.what()) << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "mlab: error: " << which << ": " << one_line(e.what()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "mlab: error: " << which << ": " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}
