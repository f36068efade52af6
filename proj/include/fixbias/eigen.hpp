#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fixbias/matrix.hpp"

namespace fixbias {

/// Eigenvalues sorted descending, with matching Euclidean-orthonormal
/// eigenvectors stored one per row of `vectors`.
struct EigenDecomposition {
  std::vector<double> values;
  DenseMatrix vectors;

  std::size_t size() const noexcept { return values.size(); }
  std::span<const double> vector(std::size_t j) const { return vectors.row(j); }
  double max_value() const { return values.front(); }
  double min_value() const { return values.back(); }
};

struct JacobiOptions {
  double relative_tolerance = 1e-13;
  int max_sweeps = 100;
  bool compute_vectors = true;
};

namespace detail {

inline double off_diagonal_norm(const DenseMatrix& a) {
  double s = 0.0;
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace detail

/// Cyclic Jacobi eigensolver. Sweeps the strict upper triangle row by row,
/// annihilating each entry with a plane rotation, until the off-diagonal
/// Frobenius norm falls to relative_tolerance * ||M||_F.
///
/// Output is deterministic for identical input. Eigenvector signs are fixed so
/// the first numerically nonzero component is positive.
inline EigenDecomposition eigh(const SymmetricMatrix& m, const JacobiOptions& opt = {}) {
  const std::size_t n = m.dim();
  if (n == 0) throw InvalidArgument("eigh: empty matrix");
  if (n > 2048) throw InvalidArgument("eigh: dimension above 2048");

  DenseMatrix a = m.dense();
  DenseMatrix v = opt.compute_vectors ? DenseMatrix::identity(n) : DenseMatrix();
  const double scale = a.frobenius_norm();
  const double threshold = opt.relative_tolerance * scale;

  double off = detail::off_diagonal_norm(a);
  int sweep = 0;
  while (off > threshold) {
    if (sweep == opt.max_sweeps) {
      throw ConvergenceFailure("eigh: Jacobi did not converge in " + std::to_string(opt.max_sweeps) +
                                   " sweeps; off-diagonal norm " + std::to_string(off),
                               off);
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        double t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        if (theta < 0.0) t = -t;
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = a(k, p);
          const double akq = a(k, q);
          const double nkp = c * akp - s * akq;
          const double nkq = s * akp + c * akq;
          a(k, p) = nkp;
          a(p, k) = nkp;
          a(k, q) = nkq;
          a(q, k) = nkq;
        }
        a(p, p) = app - t * apq;
        a(q, q) = aqq + t * apq;
        a(p, q) = 0.0;
        a(q, p) = 0.0;

        if (opt.compute_vectors) {
          // rows of v hold the accumulated rotation's columns transposed
          auto vp = v.row(p);
          auto vq = v.row(q);
          for (std::size_t k = 0; k < n; ++k) {
            const double x = vp[k];
            const double y = vq[k];
            vp[k] = c * x - s * y;
            vq[k] = s * x + c * y;
          }
        }
      }
    }
    ++sweep;
    off = detail::off_diagonal_norm(a);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.values.resize(n);
  if (opt.compute_vectors) out.vectors = DenseMatrix(n, n);
  for (std::size_t r = 0; r < n; ++r) {
    out.values[r] = a(order[r], order[r]);
    if (!opt.compute_vectors) continue;
    auto src = v.row(order[r]);
    auto dst = out.vectors.row(r);
    double biggest = 0.0;
    for (double x : src) biggest = std::max(biggest, std::abs(x));
    double sign = 1.0;
    for (double x : src) {
      if (std::abs(x) > 1e-12 * biggest) {
        sign = x < 0.0 ? -1.0 : 1.0;
        break;
      }
    }
    for (std::size_t k = 0; k < n; ++k) dst[k] = sign * src[k];
  }
  return out;
}

/// max_j ||A u_j - lambda_j u_j||_2
inline double max_eigen_residual(const SymmetricMatrix& m, const EigenDecomposition& eig) {
  double worst = 0.0;
  for (std::size_t j = 0; j < eig.size(); ++j) {
    auto u = eig.vector(j);
    auto au = m.multiply(u);
    double s = 0.0;
    for (std::size_t k = 0; k < au.size(); ++k) {
      const double r = au[k] - eig.values[j] * u[k];
      s += r * r;
    }
    worst = std::max(worst, std::sqrt(s));
  }
  return worst;
}

/// max_{i,j} |<u_i, u_j> - delta_ij|
inline double max_orthonormality_error(const EigenDecomposition& eig) {
  double worst = 0.0;
  for (std::size_t i = 0; i < eig.size(); ++i)
    for (std::size_t j = i; j < eig.size(); ++j) {
      const double d = dot(eig.vector(i), eig.vector(j)) - (i == j ? 1.0 : 0.0);
      worst = std::max(worst, std::abs(d));
    }
  return worst;
}

}  // namespace fixbias
