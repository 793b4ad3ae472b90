#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mlab {

using TermId = std::uint32_t;
using DocId = std::uint32_t;

struct SparseEntry {
  TermId term;
  double weight;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Sparse real vector over a vocabulary: strictly increasing term ids, no
/// stored zeros, squared norm cached at construction.
class SparseVector {
 public:
  SparseVector() = default;

  /// Accepts entries in any order; duplicate terms are summed and zero
  /// results dropped.
  static SparseVector from_entries(std::vector<SparseEntry> entries);
  static SparseVector from_pairs(std::span<const std::pair<TermId, double>> pairs);
  /// Indicator vector of a term set (duplicates collapse to weight 1).
  static SparseVector indicator(std::span<const TermId> terms);

  std::span<const SparseEntry> entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  double squared_norm() const noexcept { return squared_norm_; }
  double norm() const noexcept;
  /// Weight at `term`, 0 when absent. O(log nnz).
  double at(TermId term) const noexcept;

  friend bool operator==(const SparseVector& a, const SparseVector& b) { return a.entries_ == b.entries_; }

 private:
  explicit SparseVector(std::vector<SparseEntry> sorted_nonzero);

  std::vector<SparseEntry> entries_;
  double squared_norm_ = 0.0;
};

/// Merge-join inner product.
double dot(const SparseVector& a, const SparseVector& b) noexcept;

/// alpha*x + beta*y.
SparseVector combine(double alpha, const SparseVector& x, double beta, const SparseVector& y);

inline SparseVector operator-(const SparseVector& x, const SparseVector& y) { return combine(1.0, x, -1.0, y); }
inline SparseVector operator+(const SparseVector& x, const SparseVector& y) { return combine(1.0, x, 1.0, y); }

SparseVector scaled(const SparseVector& x, double alpha);

/// ||x - y||^2 without materializing the difference.
double squared_distance(const SparseVector& x, const SparseVector& y) noexcept;

}  // namespace mlab
