#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlab/sparse_vector.hpp"

namespace mlab {

enum class ProjectionKind { rademacher, gaussian };

std::string_view to_string(ProjectionKind kind);
ProjectionKind parse_projection_kind(std::string_view name);

/// Defines a k x v random matrix A reproducibly. Entries are never stored.
///
/// Entry (i, j) is z(seed, i, j) / sqrt(k), where z is drawn from a counter
/// hash (see `raw_column`):
///   rademacher: z = +1 or -1, bit (i mod 64) of hash3(seed, j, i / 64);
///   gaussian:   Box-Muller on the pair p = i / 2 with
///               u1 from hash3(seed, j, 2p), u2 from hash3(seed, j, 2p + 1);
///               even rows take the cosine branch, odd rows the sine branch.
/// Because z does not depend on k, the matrix for k' < k is a rescaled row
/// prefix of the matrix for k. Experiment runners use this to evaluate a
/// whole grid of dimensions from one draw.
struct ProjectionSpec {
  ProjectionKind kind = ProjectionKind::rademacher;
  std::uint32_t k = 1;
  std::uint64_t v = 1;
  std::uint64_t seed = 0;

  void validate() const;
  double scale() const noexcept;
  nlohmann::ordered_json to_json() const;
  static ProjectionSpec from_json(const nlohmann::json& j);

  friend bool operator==(const ProjectionSpec&, const ProjectionSpec&) = default;
};

struct DenseVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const DenseVector&, const DenseVector&) = default;
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;
inline double dot(const DenseVector& a, const DenseVector& b) noexcept { return dot(a.values, b.values); }
double squared_norm(const DenseVector& x) noexcept;

/// Unscaled column j of the infinite-row matrix, rows [0, out.size()).
void raw_column(ProjectionKind kind, std::uint64_t seed, std::uint64_t column, std::span<double> out);

/// Adds weight * z(seed, i, column) to out[i] for i in [0, out.size()).
void accumulate_raw_column(ProjectionKind kind, std::uint64_t seed, std::uint64_t column, double weight,
                           std::span<double> out);

/// A[row, col]. Throws std::out_of_range outside the k x v shape.
double entry(const ProjectionSpec& spec, std::size_t row, std::uint64_t col);

/// f(x) = A x in O(k * nnz(x)) time and O(k) extra memory.
DenseVector project(const ProjectionSpec& spec, const SparseVector& x);

/// Unscaled A x over rows [0, out.size()); used by the Monte-Carlo runners.
void project_raw(ProjectionKind kind, std::uint64_t seed, const SparseVector& x, std::span<double> out);

}  // namespace mlab
