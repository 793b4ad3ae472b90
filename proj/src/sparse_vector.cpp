#include "mlab/sparse_vector.hpp"

#include <algorithm>
#include <cmath>

namespace mlab {

SparseVector::SparseVector(std::vector<SparseEntry> sorted_nonzero) : entries_(std::move(sorted_nonzero)) {
  for (const auto& e : entries_) squared_norm_ += e.weight * e.weight;
}

SparseVector SparseVector::from_entries(std::vector<SparseEntry> entries) {
  std::stable_sort(entries.begin(), entries.end(),
                   [](const SparseEntry& a, const SparseEntry& b) { return a.term < b.term; });
  std::vector<SparseEntry> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (!out.empty() && out.back().term == e.term) {
      out.back().weight += e.weight;
    } else {
      out.push_back(e);
    }
  }
  std::erase_if(out, [](const SparseEntry& e) { return e.weight == 0.0; });
  return SparseVector(std::move(out));
}

SparseVector SparseVector::from_pairs(std::span<const std::pair<TermId, double>> pairs) {
  std::vector<SparseEntry> entries;
  entries.reserve(pairs.size());
  for (const auto& [t, w] : pairs) entries.push_back({t, w});
  return from_entries(std::move(entries));
}

SparseVector SparseVector::indicator(std::span<const TermId> terms) {
  std::vector<TermId> sorted(terms.begin(), terms.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<SparseEntry> entries;
  entries.reserve(sorted.size());
  for (TermId t : sorted) entries.push_back({t, 1.0});
  return SparseVector(std::move(entries));
}

double SparseVector::norm() const noexcept { return std::sqrt(squared_norm_); }

double SparseVector::at(TermId term) const noexcept {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), term,
                             [](const SparseEntry& e, TermId t) { return e.term < t; });
  return (it != entries_.end() && it->term == term) ? it->weight : 0.0;
}

double dot(const SparseVector& a, const SparseVector& b) noexcept {
  auto x = a.entries();
  auto y = b.entries();
  std::size_t i = 0, j = 0;
  double sum = 0.0;
  while (i < x.size() && j < y.size()) {
    if (x[i].term < y[j].term) {
      ++i;
    } else if (y[j].term < x[i].term) {
      ++j;
    } else {
      sum += x[i].weight * y[j].weight;
      ++i;
      ++j;
    }
  }
  return sum;
}

SparseVector combine(double alpha, const SparseVector& x, double beta, const SparseVector& y) {
  std::vector<SparseEntry> out;
  out.reserve(x.nnz() + y.nnz());
  auto a = x.entries();
  auto b = y.entries();
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].term < b[j].term)) {
      out.push_back({a[i].term, alpha * a[i].weight});
      ++i;
    } else if (i == a.size() || b[j].term < a[i].term) {
      out.push_back({b[j].term, beta * b[j].weight});
      ++j;
    } else {
      out.push_back({a[i].term, alpha * a[i].weight + beta * b[j].weight});
      ++i;
      ++j;
    }
  }
  std::erase_if(out, [](const SparseEntry& e) { return e.weight == 0.0; });
  return SparseVector::from_entries(std::move(out));
}

SparseVector scaled(const SparseVector& x, double alpha) { return combine(alpha, x, 0.0, SparseVector{}); }

double squared_distance(const SparseVector& x, const SparseVector& y) noexcept {
  auto a = x.entries();
  auto b = y.entries();
  std::size_t i = 0, j = 0;
  double sum = 0.0;
  while (i < a.size() || j < b.size()) {
    double diff;
    if (j == b.size() || (i < a.size() && a[i].term < b[j].term)) {
      diff = a[i++].weight;
    } else if (i == a.size() || b[j].term < a[i].term) {
      diff = -b[j++].weight;
    } else {
      diff = a[i++].weight - b[j++].weight;
    }
    sum += diff * diff;
  }
  return sum;
}

}  // namespace mlab
