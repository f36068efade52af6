#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fixbias/errors.hpp"

namespace fixbias {

/// Row-major dense real matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<double> multiply(std::span<const double> x) const {
    if (x.size() != cols_) throw InvalidArgument("matrix-vector size mismatch");
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      const double* r = data_.data() + i * cols_;
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += r[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  DenseMatrix multiply(const DenseMatrix& b) const {
    if (cols_ != b.rows_) throw InvalidArgument("matrix-matrix size mismatch");
    DenseMatrix c(rows_, b.cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t k = 0; k < cols_; ++k) {
        const double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += a * b(k, j);
      }
    }
    return c;
  }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Dense symmetric matrix. Construction symmetrizes (M + M^T)/2, so the stored
/// entries satisfy a(i,j) == a(j,i) bit for bit.
class SymmetricMatrix {
 public:
  explicit SymmetricMatrix(const DenseMatrix& m) : a_(m.rows(), m.cols()) {
    if (m.rows() != m.cols()) throw InvalidArgument("symmetric matrix must be square");
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i) {
      a_(i, i) = m(i, i);
      for (std::size_t j = i + 1; j < n; ++j) {
        const double v = 0.5 * (m(i, j) + m(j, i));
        a_(i, j) = v;
        a_(j, i) = v;
      }
    }
  }

  std::size_t dim() const noexcept { return a_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return a_(i, j); }
  const DenseMatrix& dense() const noexcept { return a_; }

  std::vector<double> multiply(std::span<const double> x) const { return a_.multiply(x); }

 private:
  DenseMatrix a_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace fixbias
