#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fixbias/errors.hpp"

namespace fixbias {

enum class GridKind { UnitInterval, TruncatedLattice };

/// Uniform grid with spacing 1/N. Either the N+1 nodes j/N of [0,1], or the
/// 2M+1 lattice points -M/N, ..., M/N of a window cut out of N^-1 Z.
///
/// Nodes are never stored; node(i) is computed as an integer over N so the
/// coordinates are exact to one rounding.
class Grid {
 public:
  static Grid unit(int n_intervals) {
    if (n_intervals < 2) {
      throw InvalidArgument("unit grid needs N >= 2, got " + std::to_string(n_intervals));
    }
    return Grid(n_intervals, 0, GridKind::UnitInterval);
  }

  static Grid lattice(int n_intervals, int half_width) {
    if (n_intervals < 1) {
      throw InvalidArgument("lattice grid needs N >= 1, got " + std::to_string(n_intervals));
    }
    if (half_width < 1) {
      throw InvalidArgument("lattice half-width must be positive, got " +
                            std::to_string(half_width));
    }
    return Grid(n_intervals, half_width, GridKind::TruncatedLattice);
  }

  int n_intervals() const noexcept { return n_; }
  int half_width() const noexcept { return m_; }
  GridKind kind() const noexcept { return kind_; }
  double spacing() const noexcept { return 1.0 / n_; }

  std::size_t size() const noexcept {
    return kind_ == GridKind::UnitInterval ? static_cast<std::size_t>(n_) + 1
                                           : 2 * static_cast<std::size_t>(m_) + 1;
  }

  /// Integer lattice index of storage slot i (j for t_j = j/N).
  long index(std::size_t i) const noexcept { return static_cast<long>(i) + first_; }

  double node(std::size_t i) const noexcept {
    return static_cast<double>(index(i)) / static_cast<double>(n_);
  }

  std::vector<double> nodes() const {
    std::vector<double> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = node(i);
    return out;
  }

  bool operator==(const Grid& other) const noexcept {
    return n_ == other.n_ && m_ == other.m_ && kind_ == other.kind_;
  }

 private:
  Grid(int n, int m, GridKind kind)
      : n_(n), m_(m), kind_(kind), first_(kind == GridKind::UnitInterval ? 0 : -m) {}

  int n_;
  int m_;
  GridKind kind_;
  long first_;
};

inline Grid make_unit_grid(int n_intervals) { return Grid::unit(n_intervals); }

/// Lattice window of half-width M; defaults to M = 8N.
inline Grid make_lattice_grid(int n_intervals, int half_width = 0) {
  return Grid::lattice(n_intervals, half_width > 0 ? half_width : 8 * n_intervals);
}

namespace detail {

inline void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument(std::string(what) + " contains a non-finite value");
  }
}

}  // namespace detail

/// Real values at the nodes of a grid.
class LatticeFunction {
 public:
  LatticeFunction(Grid grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw InvalidArgument("lattice function has " + std::to_string(values_.size()) +
                            " values for a grid of " + std::to_string(grid_.size()) + " nodes");
    }
    detail::require_finite(values_, "lattice function");
  }

  static LatticeFunction zeros(const Grid& grid) {
    return LatticeFunction(grid, std::vector<double>(grid.size(), 0.0));
  }

  template <class Fn>
  static LatticeFunction sample(const Grid& grid, Fn&& fn) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid.node(i));
    return LatticeFunction(grid, std::move(v));
  }

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }

  friend LatticeFunction operator-(const LatticeFunction& a, const LatticeFunction& b) {
    check_same_grid(a, b);
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values_[i] - b.values_[i];
    return LatticeFunction(a.grid_, std::move(v));
  }

  friend LatticeFunction operator+(const LatticeFunction& a, const LatticeFunction& b) {
    check_same_grid(a, b);
    std::vector<double> v(a.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values_[i] + b.values_[i];
    return LatticeFunction(a.grid_, std::move(v));
  }

  friend LatticeFunction operator*(double s, const LatticeFunction& a) {
    std::vector<double> v(a.values_);
    for (double& x : v) x *= s;
    return LatticeFunction(a.grid_, std::move(v));
  }

  static void check_same_grid(const LatticeFunction& a, const LatticeFunction& b) {
    if (!(a.grid_ == b.grid_)) throw InvalidArgument("lattice functions live on different grids");
  }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Network parameters. For ReLU-on-[0,1] models: interior weights w(t_1..t_{N-1})
/// plus the affine pair (b, c). For lattice models: one weight per node and no
/// affine part.
///
/// The parameter-space norm is (1/N) sum |w|^2 + |b|^2 + |c|^2.
class ParamVector {
 public:
  static ParamVector with_affine(int n_intervals, std::vector<double> weights, double bias,
                                 double slope) {
    return ParamVector(n_intervals, std::move(weights), true, bias, slope);
  }

  static ParamVector weights_only(int n_intervals, std::vector<double> weights) {
    return ParamVector(n_intervals, std::move(weights), false, 0.0, 0.0);
  }

  int n_intervals() const noexcept { return n_; }
  bool has_affine() const noexcept { return affine_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double bias() const noexcept { return b_; }
  double slope() const noexcept { return c_; }

  /// Total number of scalar parameters.
  std::size_t dim() const noexcept { return weights_.size() + (affine_ ? 2 : 0); }

  /// Flat coordinates (w..., b, c).
  std::vector<double> coords() const {
    std::vector<double> out(weights_);
    if (affine_) {
      out.push_back(b_);
      out.push_back(c_);
    }
    return out;
  }

  /// Rebuilds a vector with this one's layout from flat coordinates.
  ParamVector with_coords(std::span<const double> x) const {
    if (x.size() != dim()) throw InvalidArgument("coordinate count does not match parameter layout");
    std::vector<double> w(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(weights_.size()));
    return affine_ ? with_affine(n_, std::move(w), x[weights_.size()], x[weights_.size() + 1])
                   : weights_only(n_, std::move(w));
  }

  /// Diagonal of the Gram matrix of the parameter inner product in flat coordinates.
  std::vector<double> gram_diagonal() const {
    std::vector<double> g(weights_.size(), 1.0 / n_);
    if (affine_) {
      g.push_back(1.0);
      g.push_back(1.0);
    }
    return g;
  }

  ParamVector zeros_like() const { return with_coords(std::vector<double>(dim(), 0.0)); }

  bool same_layout(const ParamVector& o) const noexcept {
    return n_ == o.n_ && affine_ == o.affine_ && weights_.size() == o.weights_.size();
  }

  /// this + s * other
  ParamVector axpy(double s, const ParamVector& other) const {
    check_layout(other);
    std::vector<double> w(weights_);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += s * other.weights_[i];
    return ParamVector(n_, std::move(w), affine_, b_ + s * other.b_, c_ + s * other.c_);
  }

  friend ParamVector operator-(const ParamVector& a, const ParamVector& b) { return a.axpy(-1.0, b); }

  void check_layout(const ParamVector& other) const {
    if (!same_layout(other)) throw InvalidArgument("parameter vectors have different layouts");
  }

 private:
  ParamVector(int n, std::vector<double> w, bool affine, double b, double c)
      : n_(n), weights_(std::move(w)), affine_(affine), b_(affine ? b : 0.0), c_(affine ? c : 0.0) {
    if (n_ < 1) throw InvalidArgument("parameter vector needs N >= 1");
    detail::require_finite(weights_, "parameter weights");
    if (!std::isfinite(b_) || !std::isfinite(c_)) {
      throw InvalidArgument("parameter affine part is not finite");
    }
  }

  int n_;
  std::vector<double> weights_;
  bool affine_;
  double b_;
  double c_;
};

inline double relu(double z) noexcept { return z > 0.0 ? z : 0.0; }

inline double frex(double z) noexcept { return std::exp(-std::abs(z)); }

/// (1/N) sum over all nodes of f*g.
inline double inner_product_X(const LatticeFunction& f, const LatticeFunction& g) {
  LatticeFunction::check_same_grid(f, g);
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return s / f.grid().n_intervals();
}

inline double norm_X(const LatticeFunction& f) { return std::sqrt(inner_product_X(f, f)); }

inline double inner_product_W(const ParamVector& p, const ParamVector& q) {
  p.check_layout(q);
  double s = 0.0;
  auto pw = p.weights();
  auto qw = q.weights();
  for (std::size_t i = 0; i < pw.size(); ++i) s += pw[i] * qw[i];
  s /= p.n_intervals();
  if (p.has_affine()) s += p.bias() * q.bias() + p.slope() * q.slope();
  return s;
}

inline double norm_W(const ParamVector& p) { return std::sqrt(inner_product_W(p, p)); }

/// Piecewise-linear interpolant of node values on a unit-interval grid.
inline double pwl_eval(const LatticeFunction& f, double x) {
  const Grid& g = f.grid();
  if (g.kind() != GridKind::UnitInterval) throw InvalidArgument("pwl_eval needs a unit-interval grid");
  if (!(x >= 0.0 && x <= 1.0)) throw OutOfDomain("pwl_eval: x outside [0,1]");
  const int n = g.n_intervals();
  const double s = x * n;
  const long nearest = std::lround(s);
  if (static_cast<double>(nearest) / n == x) return f[static_cast<std::size_t>(nearest)];
  auto j = static_cast<std::size_t>(std::floor(s));
  if (j >= static_cast<std::size_t>(n)) return f[static_cast<std::size_t>(n)];
  const double frac = s - static_cast<double>(j);
  if (frac == 0.0) return f[j];
  return f[j] + frac * (f[j + 1] - f[j]);
}

}  // namespace fixbias
