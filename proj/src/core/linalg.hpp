#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "core/dense_matrix.hpp"

namespace onebit {

/// Matrix with orthonormal columns. The constructor enforces
/// max|Q^T Q - I| <= 1e-10 so downstream code can rely on it.
class OrthonormalBasis {
 public:
  explicit OrthonormalBasis(DenseMatrix q);

  const DenseMatrix& matrix() const { return q_; }
  Index rows() const { return q_.rows(); }
  Index cols() const { return q_.cols(); }

  static constexpr double kOrthoTol = 1e-10;

 private:
  DenseMatrix q_;
};

namespace linalg {

/// Symmetric operator on R^n presented as a matrix-vector product.
using LinearOp =
    std::function<void(std::span<const double> in, std::span<double> out)>;

struct QrResult {
  OrthonormalBasis q;
  DenseMatrix r;
};

/// Thin Householder QR of an n x p matrix (n >= p) with the sign convention
/// R_ii >= 0, which makes the factorization unique for full-rank input.
/// Throws RankDeficiencyError (with the column index) when some
/// |R_ii| < 1e-12 * sigma_1(A).
QrResult qr_thin(const DenseMatrix& a);

/// Orthonormal basis approximating the invariant subspace of the r
/// eigenvalues of largest magnitude, by block power iteration with QR
/// re-orthonormalization. Magnitude ordering means sign-paired spectra
/// (the Hermitian dilation case) converge to the paired subspace.
OrthonormalBasis top_subspace(const LinearOp& op, Index n, Index r,
                              Index power_iters, std::uint64_t seed);

/// Largest singular value by power iteration on the Gram operator M^T M.
/// Throws ConvergenceError (carrying the best estimate) if the relative
/// change has not fallen below rel_tol within max_iters sweeps.
double spectral_norm(const DenseMatrix& m, double rel_tol = 1e-6,
                     Index max_iters = 500, std::uint64_t seed = 0);

/// Tangent of the largest principal angle between the column spans.
/// cos from the singular values of U1^T U2, sin from those of
/// (I - U1 U1^T) U2; returns +infinity when the spans are orthogonal to
/// working precision (smallest cos below 1e-12).
double tan_largest_principal_angle(const OrthonormalBasis& u1,
                                   const OrthonormalBasis& u2);

/// Sine of the largest principal angle between the column spans.
double sin_largest_principal_angle(const OrthonormalBasis& u1,
                                   const OrthonormalBasis& u2);

struct SymmetricEigen {
  std::vector<double> values;  // descending
  DenseMatrix vectors;         // column i pairs with values[i]
};

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Deterministic and accurate to machine precision; intended for oracle and
/// verification work at moderate sizes, not as a large-scale solver.
SymmetricEigen jacobi_eigen(const DenseMatrix& a);

struct Svd {
  DenseMatrix u;
  std::vector<double> sigma;  // descending, length min(rows, cols)
  DenseMatrix v;
};

/// Singular value decomposition by one-sided Jacobi orthogonalization.
/// Computes small singular values with high relative accuracy, which the
/// rank checks depend on.
Svd jacobi_svd(const DenseMatrix& a);

}  // namespace linalg
}  // namespace onebit
