#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "core/alloc_stats.hpp"
#include "core/error.hpp"

namespace onebit {

/// Dense real matrix, column-major storage. Column-major order is a fixed
/// contract of this library: columns are the unit of work everywhere
/// (column normalization, per-class accumulation, per-column extraction),
/// and the C API exchanges buffers in the same order.
class DenseMatrix {
 public:
  DenseMatrix(Index rows, Index cols) : rows_(rows), cols_(cols) {
    if (rows < 1 || cols < 1) {
      throw DimensionError("DenseMatrix dimensions must be at least 1x1");
    }
    AllocStats::record(static_cast<std::uint64_t>(rows) *
                       static_cast<std::uint64_t>(cols));
    data_.assign(static_cast<std::size_t>(rows * cols), 0.0);
  }

  static DenseMatrix identity(Index n) {
    DenseMatrix m(n, n);
    for (Index i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index size() const { return rows_ * cols_; }

  double& operator()(Index r, Index c) {
    return data_[static_cast<std::size_t>(c * rows_ + r)];
  }
  double operator()(Index r, Index c) const {
    return data_[static_cast<std::size_t>(c * rows_ + r)];
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> col(Index c) {
    return {data_.data() + c * rows_, static_cast<std::size_t>(rows_)};
  }
  std::span<const double> col(Index c) const {
    return {data_.data() + c * rows_, static_cast<std::size_t>(rows_)};
  }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (double v : data_) s += v * v;
    return std::sqrt(s);
  }

  double column_norm(Index c) const {
    double s = 0.0;
    for (double v : col(c)) s += v * v;
    return std::sqrt(s);
  }

  void scale(double a) {
    for (double& v : data_) v *= a;
  }

  DenseMatrix transposed() const {
    DenseMatrix t(cols_, rows_);
    for (Index c = 0; c < cols_; ++c) {
      for (Index r = 0; r < rows_; ++r) t(c, r) = (*this)(r, c);
    }
    return t;
  }

 private:
  Index rows_;
  Index cols_;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// dst += s * src (same shape).
inline void add_scaled(DenseMatrix& dst, const DenseMatrix& src, double s) {
  if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
    throw DimensionError("add_scaled: shape mismatch");
  }
  double* d = dst.data();
  const double* p = src.data();
  const Index n = dst.size();
  for (Index i = 0; i < n; ++i) d[i] += s * p[i];
}

inline DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError("subtract: shape mismatch");
  }
  DenseMatrix out(a.rows(), a.cols());
  const Index n = a.size();
  for (Index i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
  return out;
}

/// C = A * B.
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimensions");
  DenseMatrix c(a.rows(), b.cols());
  for (Index j = 0; j < b.cols(); ++j) {
    auto cj = c.col(j);
    for (Index k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj == 0.0) continue;
      auto ak = a.col(k);
      for (Index i = 0; i < a.rows(); ++i) cj[i] += ak[i] * bkj;
    }
  }
  return c;
}

/// C = A^T * B.
inline DenseMatrix matmul_ta(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_ta: inner dimensions");
  DenseMatrix c(a.cols(), b.cols());
  for (Index j = 0; j < b.cols(); ++j) {
    for (Index i = 0; i < a.cols(); ++i) {
      c(i, j) = dot(a.col(i), b.col(j));
    }
  }
  return c;
}

}  // namespace onebit
