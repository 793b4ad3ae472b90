#pragma once

// Prefix inner products <Aq, A e_j> at every value of a k-grid for one
// projection draw. All quantities are unscaled: the 1/sqrt(k) factor is common
// to both sides of every comparison the runners make.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include "mlab/projection.hpp"
#include "mlab/random.hpp"
#include "mlab/sparse_vector.hpp"

namespace mlab::detail {

class ResponseKernel {
 public:
  /// `ks` must be non-empty and strictly increasing. With `use_table`, the
  /// Rademacher path precomputes signed sums of u over every 8-row block, which
  /// pays off once a draw serves a few dozen columns.
  ResponseKernel(ProjectionKind kind, std::span<const std::uint32_t> ks, bool use_table)
      : kind_(kind), ks_(ks.begin(), ks.end()), rows_(ks.back()),
        use_table_(use_table && kind == ProjectionKind::rademacher), u_(rows_) {
    if (use_table_) table_.resize((rows_ + 7) / 8 * 256);
    if (kind_ == ProjectionKind::gaussian) column_.resize(rows_);
    blocks_.resize((rows_ + 63) / 64);
  }

  std::size_t grid_size() const noexcept { return ks_.size(); }

  /// u = A q for the matrix with this seed.
  void reset(std::uint64_t seed, const SparseVector& q) {
    seed_ = seed;
    project_raw(kind_, seed, q, u_);
    if (use_table_) build_table();
  }

  /// out[g] = sum over i < ks[g] of u_i z(seed, i, column).
  void response(std::uint64_t column, double* out) {
    if (kind_ == ProjectionKind::gaussian) {
      raw_column(kind_, seed_, column, column_);
      double acc = 0.0;
      std::size_t i = 0;
      for (std::size_t g = 0; g < ks_.size(); ++g) {
        for (; i < ks_[g]; ++i) acc += u_[i] * column_[i];
        out[g] = acc;
      }
      return;
    }
    const std::uint64_t head = hash3_head(seed_, column);
    for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b] = hash3_tail(head, b);
    if (use_table_) {
      table_response(out);
    } else {
      direct_response(out);
    }
  }

 private:
  std::uint64_t sign_bit(std::size_t row) const noexcept { return (blocks_[row >> 6] >> (row & 63)) & 1U; }

  double signed_u(std::size_t row) const noexcept {
    return std::bit_cast<double>(std::bit_cast<std::uint64_t>(u_[row]) ^ (sign_bit(row) << 63));
  }

  void direct_response(double* out) const {
    double acc = 0.0;
    std::size_t i = 0;
    for (std::size_t g = 0; g < ks_.size(); ++g) {
      for (; i < ks_[g]; ++i) acc += signed_u(i);
      out[g] = acc;
    }
  }

  void table_response(double* out) const {
    double acc = 0.0;
    std::size_t c = 0;  // next 8-row chunk
    for (std::size_t g = 0; g < ks_.size(); ++g) {
      const std::size_t full = ks_[g] / 8;
      for (; c < full; ++c) {
        const auto byte = (blocks_[c >> 3] >> ((c & 7) * 8)) & 0xFFU;
        acc += table_[c * 256 + byte];
      }
      double partial = acc;
      for (std::size_t i = full * 8; i < ks_[g]; ++i) partial += signed_u(i);
      out[g] = partial;
    }
  }

  void build_table() {
    const std::size_t chunks = (rows_ + 7) / 8;
    for (std::size_t c = 0; c < chunks; ++c) {
      double* t = table_.data() + c * 256;
      double base = 0.0;
      const std::size_t n = std::min<std::size_t>(8, rows_ - c * 8);
      for (std::size_t r = 0; r < n; ++r) base += u_[c * 8 + r];
      t[0] = base;
      for (unsigned mask = 1; mask < 256; ++mask) {
        const unsigned low = static_cast<unsigned>(std::countr_zero(mask));
        const double x = low < n ? u_[c * 8 + low] : 0.0;
        t[mask] = t[mask & (mask - 1)] - 2.0 * x;
      }
    }
  }

  ProjectionKind kind_;
  std::vector<std::uint32_t> ks_;
  std::size_t rows_;
  bool use_table_;
  std::uint64_t seed_ = 0;
  std::vector<double> u_;
  std::vector<double> table_;
  std::vector<double> column_;
  std::vector<std::uint64_t> blocks_;
};

/// A sparse vector re-expressed as (row in a response matrix, weight) pairs.
struct CompiledVector {
  std::vector<std::uint32_t> rows;
  std::vector<double> weights;
};

/// Sorted, deduplicated union of the supports of `vs`.
inline std::vector<TermId> support_union(std::span<const SparseVector* const> vs) {
  std::vector<TermId> terms;
  for (const auto* v : vs) {
    for (const auto& e : v->entries()) terms.push_back(e.term);
  }
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  return terms;
}

inline CompiledVector compile(const SparseVector& x, std::span<const TermId> terms) {
  CompiledVector out;
  for (const auto& e : x.entries()) {
    const auto it = std::lower_bound(terms.begin(), terms.end(), e.term);
    out.rows.push_back(static_cast<std::uint32_t>(it - terms.begin()));
    out.weights.push_back(e.weight);
  }
  return out;
}

/// acc[g] = sum_i w_i R[row_i][g] for a row-major |terms| x G response matrix.
inline void combine_responses(const CompiledVector& x, std::span<const double> responses, std::size_t grid,
                              double* acc) {
  std::fill(acc, acc + grid, 0.0);
  for (std::size_t i = 0; i < x.rows.size(); ++i) {
    const double w = x.weights[i];
    const double* r = responses.data() + static_cast<std::size_t>(x.rows[i]) * grid;
    for (std::size_t g = 0; g < grid; ++g) acc[g] += w * r[g];
  }
}

/// Fills the |terms| x G response matrix for the current draw.
inline void fill_responses(ResponseKernel& kernel, std::span<const TermId> terms, std::vector<double>& responses) {
  const std::size_t grid = kernel.grid_size();
  responses.resize(terms.size() * grid);
  for (std::size_t j = 0; j < terms.size(); ++j) kernel.response(terms[j], responses.data() + j * grid);
}

/// Below this many columns per draw the table costs more than it saves.
inline constexpr std::size_t kTableMinColumns = 40;

}  // namespace mlab::detail
