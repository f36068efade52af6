#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fixbias/eigen.hpp"
#include "fixbias/fit.hpp"
#include "fixbias/grid.hpp"
#include "fixbias/matrix.hpp"
#include "fixbias/model.hpp"

namespace fixbias {

// ---------------------------------------------------------------------------
// Kernel of A = TT* for the ReLU model on [0,1]

/// K(x,y) = 1 + xy + int_0^1 relu(x-z) relu(y-z) dz, in closed form.
inline double kernel_K(double x, double y) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
    throw OutOfDomain("kernel_K: arguments must lie in [0,1]");
  }
  const double lo = std::min(x, y);
  const double hi = std::max(x, y);
  return 1.0 + x * y + lo * lo * (3.0 * hi - lo) / 6.0;
}

/// Same kernel with the z-integral done by an n-point midpoint rule.
inline double kernel_K_quadrature(double x, double y, std::size_t points) {
  if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
    throw OutOfDomain("kernel_K_quadrature: arguments must lie in [0,1]");
  }
  if (points == 0) throw InvalidArgument("kernel_K_quadrature: need at least one point");
  const double h = 1.0 / static_cast<double>(points);
  const double lo = std::min(x, y);
  double s = 0.0;
  for (std::size_t k = 0; k < points; ++k) {
    const double z = (static_cast<double>(k) + 0.5) * h;
    if (z >= lo) break;  // integrand vanishes past min(x,y)
    s += (x - z) * (y - z);
  }
  return 1.0 + x * y + s * h;
}

// ---------------------------------------------------------------------------
// Matrix realizations of T, TT*, T*T

enum class OperatorKind { TTstar, TstarT, TMatrix };

/// Raw matrix of T: flat parameter coordinates (w..., b, c) -> node values.
template <NetworkModel M>
DenseMatrix assemble_T_matrix(const M& model) {
  const ParamVector zero = model.zero_params();
  const std::size_t p = zero.dim();
  const std::size_t n = model.grid().size();
  DenseMatrix t(n, p);
  std::vector<double> e(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    e[k] = 1.0;
    const LatticeFunction col = model.forward(zero.with_coords(e));
    for (std::size_t i = 0; i < n; ++i) t(i, k) = col[i];
    e[k] = 0.0;
  }
  return t;
}

/// TT* acting on node values. The function-space inner product is a multiple
/// of the Euclidean one, so this matrix is symmetric as an operator matrix.
template <NetworkModel M>
SymmetricMatrix assemble_TTstar(const M& model) {
  const Grid& g = model.grid();
  const std::size_t n = g.size();
  DenseMatrix a(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    e[k] = 1.0;
    const LatticeFunction col = model.forward(model.adjoint(LatticeFunction(g, e)));
    for (std::size_t i = 0; i < n; ++i) a(i, k) = col[i];
    e[k] = 0.0;
  }
  return SymmetricMatrix(a);
}

/// T*T written in coordinates that are orthonormal for the parameter inner
/// product (weights scaled by 1/sqrt(N)), where it is a symmetric matrix.
template <NetworkModel M>
SymmetricMatrix assemble_TstarT(const M& model) {
  const ParamVector zero = model.zero_params();
  const std::size_t p = zero.dim();
  const std::vector<double> gram = zero.gram_diagonal();
  DenseMatrix a(p, p);
  std::vector<double> e(p, 0.0);
  for (std::size_t k = 0; k < p; ++k) {
    e[k] = 1.0 / std::sqrt(gram[k]);
    const std::vector<double> col = model.adjoint(model.forward(zero.with_coords(e))).coords();
    for (std::size_t i = 0; i < p; ++i) a(i, k) = col[i] * std::sqrt(gram[i]);
    e[k] = 0.0;
  }
  return SymmetricMatrix(a);
}

template <NetworkModel M>
DenseMatrix assemble_operator(const M& model, OperatorKind which) {
  switch (which) {
    case OperatorKind::TTstar:
      return assemble_TTstar(model).dense();
    case OperatorKind::TstarT:
      return assemble_TstarT(model).dense();
    case OperatorKind::TMatrix:
      break;
  }
  return assemble_T_matrix(model);
}

/// I - 2 eps M for a symmetric M.
inline SymmetricMatrix iteration_matrix(const SymmetricMatrix& m, double eps) {
  DenseMatrix s(m.dim(), m.dim());
  for (std::size_t i = 0; i < m.dim(); ++i)
    for (std::size_t j = 0; j < m.dim(); ++j) s(i, j) = (i == j ? 1.0 : 0.0) - 2.0 * eps * m(i, j);
  return SymmetricMatrix(s);
}

// ---------------------------------------------------------------------------
// Eigenvalue decay

struct DecayFit {
  double exponent;
  double constant;  ///< log c in log(lambda_j) = exponent * log(j) + log c
  std::size_t j_lo;
  std::size_t j_hi;
};

/// Least-squares fit of log(lambda_j) against log(j) for j in [j_lo, j_hi]
/// (indices into the descending spectrum, lambda_0 largest).
inline DecayFit eig_decay_fit(std::span<const double> eigenvalues, std::size_t j_lo, std::size_t j_hi) {
  if (j_lo < 1 || j_hi < j_lo || j_hi >= eigenvalues.size()) {
    throw InvalidArgument("eig_decay_fit: index range outside the spectrum (j_lo must be >= 1)");
  }
  if (j_hi - j_lo + 1 < 8) throw InvalidArgument("eig_decay_fit: need at least 8 indices");
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t j = j_lo; j <= j_hi; ++j) {
    if (!(eigenvalues[j] > 0.0)) throw InvalidArgument("eig_decay_fit: nonpositive eigenvalue in range");
    x.push_back(std::log(static_cast<double>(j)));
    y.push_back(std::log(eigenvalues[j]));
  }
  const LineFit line = least_squares_line(x, y);
  return {line.slope, line.intercept, j_lo, j_hi};
}

inline DecayFit eig_decay_fit(const EigenDecomposition& eig, std::size_t j_lo, std::size_t j_hi) {
  return eig_decay_fit(eig.values, j_lo, j_hi);
}

// ---------------------------------------------------------------------------
// Fourth-order boundary value problem w'''' = f with
//   w'''(0) + w(0) = 0, w''(0) - w'(0) = 0, w''(1) = 0, w'''(1) = 0.

struct BvpResidual {
  double interior_max;
  /// w'''(0)+w(0), w''(0)-w'(0), w''(1), w'''(1)
  std::array<double, 4> bc;
};

/// Residuals of w against the boundary value problem, using the 5-point
/// fourth difference on the interior (three nodes dropped at each end) and
/// second-order one-sided stencils at the boundaries.
inline BvpResidual bvp_residual(const LatticeFunction& f, const LatticeFunction& w) {
  LatticeFunction::check_same_grid(f, w);
  const Grid& g = f.grid();
  if (g.kind() != GridKind::UnitInterval) throw InvalidArgument("bvp_residual needs a unit-interval grid");
  const int n = g.n_intervals();
  if (n < 8) throw InvalidArgument("bvp_residual: N must be at least 8 for the stencils");
  const double h = 1.0 / n;
  const double n4 = std::pow(static_cast<double>(n), 4);

  double interior = 0.0;
  for (int j = 3; j <= n - 3; ++j) {
    const double d4 = n4 * (w[j - 2] - 4.0 * w[j - 1] + 6.0 * w[j] - 4.0 * w[j + 1] + w[j + 2]);
    interior = std::max(interior, std::abs(d4 - f[j]));
  }

  const double d1_0 = (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * h);
  const double d2_0 = (2.0 * w[0] - 5.0 * w[1] + 4.0 * w[2] - w[3]) / (h * h);
  const double d3_0 =
      (-5.0 * w[0] + 18.0 * w[1] - 24.0 * w[2] + 14.0 * w[3] - 3.0 * w[4]) / (2.0 * h * h * h);
  const double d2_1 = (2.0 * w[n] - 5.0 * w[n - 1] + 4.0 * w[n - 2] - w[n - 3]) / (h * h);
  const double d3_1 = (5.0 * w[n] - 18.0 * w[n - 1] + 24.0 * w[n - 2] - 14.0 * w[n - 3] +
                       3.0 * w[n - 4]) /
                      (2.0 * h * h * h);

  return {interior, {d3_0 + w[0], d2_0 - d1_0, d2_1, d3_1}};
}

// ---------------------------------------------------------------------------
// Mode-wise error decay

namespace detail {

inline void require_contraction(std::span<const double> eigenvalues, double eps) {
  if (!(eps > 0.0)) throw RejectedConfig("learning rate must be positive");
  const double top = *std::max_element(eigenvalues.begin(), eigenvalues.end());
  if (!(2.0 * eps * top < 1.0)) {
    throw RejectedConfig("learning rate violates 2*eps*lambda_max < 1");
  }
}

}  // namespace detail

/// Entry (j, c) = |(1 - 2 eps lambda_j)^n_c <u_j, e0>|, Euclidean projections.
inline DenseMatrix mode_error_curve(const EigenDecomposition& eig, std::span<const double> e0,
                                    double eps, std::span<const long> n_list) {
  detail::require_contraction(eig.values, eps);
  if (e0.size() != eig.size()) throw InvalidArgument("mode_error_curve: error vector size mismatch");
  DenseMatrix out(eig.size(), n_list.size());
  for (std::size_t j = 0; j < eig.size(); ++j) {
    const double coeff = std::abs(dot(eig.vector(j), e0));
    const double rho = 1.0 - 2.0 * eps * eig.values[j];
    for (std::size_t c = 0; c < n_list.size(); ++c) {
      if (n_list[c] < 0) throw InvalidArgument("mode_error_curve: negative iteration count");
      out(j, c) = std::pow(rho, static_cast<double>(n_list[c])) * coeff;
    }
  }
  return out;
}

/// Smallest n >= 1 with rho^n <= level, for 0 <= rho < 1.
inline long first_crossing(double rho, double level = 0.5) {
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidArgument("first_crossing: factor must lie in [0,1)");
  if (rho <= level) return 1;
  auto n = static_cast<long>(std::ceil(std::log(level) / std::log(rho)));
  n = std::max(n, 1L);
  while (std::pow(rho, static_cast<double>(n)) > level) ++n;
  while (n > 1 && std::pow(rho, static_cast<double>(n - 1)) <= level) --n;
  return n;
}

/// Per-mode half-life: first n at which (1 - 2 eps lambda_j)^n drops to 1/2.
inline std::vector<long> mode_half_lives(std::span<const double> eigenvalues, double eps) {
  detail::require_contraction(eigenvalues, eps);
  std::vector<long> out(eigenvalues.size());
  for (std::size_t j = 0; j < eigenvalues.size(); ++j) {
    out[j] = first_crossing(1.0 - 2.0 * eps * eigenvalues[j]);
  }
  return out;
}

/// Slope of log(n_j) against log(j) over j in [j_lo, j_hi].
inline LineFit half_life_fit(std::span<const long> half_lives, std::size_t j_lo, std::size_t j_hi) {
  if (j_lo < 1 || j_hi < j_lo || j_hi >= half_lives.size()) {
    throw InvalidArgument("half_life_fit: index range outside the spectrum");
  }
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t j = j_lo; j <= j_hi; ++j) {
    x.push_back(std::log(static_cast<double>(j)));
    y.push_back(std::log(static_cast<double>(half_lives[j])));
  }
  return least_squares_line(x, y);
}

}  // namespace fixbias
