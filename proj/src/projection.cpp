#include "mlab/projection.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mlab/random.hpp"

namespace mlab {

std::string_view to_string(ProjectionKind kind) {
  return kind == ProjectionKind::rademacher ? "rademacher" : "gaussian";
}

ProjectionKind parse_projection_kind(std::string_view name) {
  if (name == "rademacher") return ProjectionKind::rademacher;
  if (name == "gaussian") return ProjectionKind::gaussian;
  throw std::invalid_argument("unknown projection kind: " + std::string(name));
}

void ProjectionSpec::validate() const {
  if (k < 1) throw std::invalid_argument("projection: k must be >= 1");
  if (v < 1) throw std::invalid_argument("projection: v must be >= 1");
}

double ProjectionSpec::scale() const noexcept { return 1.0 / std::sqrt(static_cast<double>(k)); }

nlohmann::ordered_json ProjectionSpec::to_json() const {
  return {{"kind", to_string(kind)}, {"k", k}, {"v", v}, {"seed", seed}};
}

ProjectionSpec ProjectionSpec::from_json(const nlohmann::json& j) {
  ProjectionSpec s;
  s.kind = parse_projection_kind(j.at("kind").get<std::string>());
  s.k = j.at("k").get<std::uint32_t>();
  s.v = j.at("v").get<std::uint64_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.validate();
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double sum = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

double squared_norm(const DenseVector& x) noexcept { return dot(x.values, x.values); }

namespace {

inline void gaussian_pair(std::uint64_t head, std::uint64_t pair, double& even, double& odd) {
  const double u1 = 1.0 - to_unit(hash3_tail(head, 2 * pair));  // (0, 1]
  const double u2 = to_unit(hash3_tail(head, 2 * pair + 1));
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  even = r * std::cos(theta);
  odd = r * std::sin(theta);
}

template <typename Sink>
void walk_column(ProjectionKind kind, std::uint64_t seed, std::uint64_t column, std::size_t rows, Sink&& sink) {
  if (kind == ProjectionKind::rademacher) {
    const std::uint64_t head = hash3_head(seed, column);
    for (std::size_t base = 0; base < rows; base += 64) {
      const std::uint64_t bits = hash3_tail(head, base / 64);
      const std::size_t n = std::min<std::size_t>(64, rows - base);
      for (std::size_t b = 0; b < n; ++b) sink(base + b, ((bits >> b) & 1U) ? -1.0 : 1.0);
    }
  } else {
    const std::uint64_t head = hash3_head(seed, column);
    for (std::size_t i = 0; i < rows; i += 2) {
      double even, odd;
      gaussian_pair(head, i / 2, even, odd);
      sink(i, even);
      if (i + 1 < rows) sink(i + 1, odd);
    }
  }
}

}  // namespace

void raw_column(ProjectionKind kind, std::uint64_t seed, std::uint64_t column, std::span<double> out) {
  walk_column(kind, seed, column, out.size(), [&](std::size_t i, double z) { out[i] = z; });
}

void accumulate_raw_column(ProjectionKind kind, std::uint64_t seed, std::uint64_t column, double weight,
                           std::span<double> out) {
  if (kind == ProjectionKind::rademacher) {
    const double w[2] = {weight, -weight};
    const std::uint64_t head = hash3_head(seed, column);
    for (std::size_t base = 0; base < out.size(); base += 64) {
      const std::uint64_t bits = hash3_tail(head, base / 64);
      const std::size_t n = std::min<std::size_t>(64, out.size() - base);
      double* dst = out.data() + base;
      for (std::size_t b = 0; b < n; ++b) dst[b] += w[(bits >> b) & 1U];
    }
  } else {
    walk_column(kind, seed, column, out.size(), [&](std::size_t i, double z) { out[i] += weight * z; });
  }
}

double entry(const ProjectionSpec& spec, std::size_t row, std::uint64_t col) {
  if (row >= spec.k || col >= spec.v) throw std::out_of_range("projection entry index out of range");
  double z;
  if (spec.kind == ProjectionKind::rademacher) {
    const std::uint64_t bits = hash3(spec.seed, col, row / 64);
    z = ((bits >> (row % 64)) & 1U) ? -1.0 : 1.0;
  } else {
    double even, odd;
    gaussian_pair(hash3_head(spec.seed, col), row / 2, even, odd);
    z = (row % 2 == 0) ? even : odd;
  }
  return z * spec.scale();
}

void project_raw(ProjectionKind kind, std::uint64_t seed, const SparseVector& x, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& e : x.entries()) accumulate_raw_column(kind, seed, e.term, e.weight, out);
}

DenseVector project(const ProjectionSpec& spec, const SparseVector& x) {
  spec.validate();
  if (!x.empty() && x.entries().back().term >= spec.v) throw std::out_of_range("project: term id >= v");
  DenseVector out{std::vector<double>(spec.k, 0.0)};
  project_raw(spec.kind, spec.seed, x, out.values);
  const double s = spec.scale();
  for (auto& y : out.values) y *= s;
  return out;
}

}  // namespace mlab
