#pragma once

#include <cstdint>
#include <vector>

#include "core/dense_matrix.hpp"
#include "core/linalg.hpp"
#include "core/metrics_record.hpp"
#include "core/sensing.hpp"

namespace onebit::metrics {

/// Spectral-norm gap ||W - W*||_2. Equals the dilated gap because Hermitian
/// dilation preserves the spectral norm.
double recovery_error(const DenseMatrix& w, const DenseMatrix& w_star);

/// Frozen evaluation set: test features plus noise-free ground-truth signs.
struct EvalSet {
  DenseMatrix x = DenseMatrix(1, 1);      // d1 x n_test
  DenseMatrix truth = DenseMatrix(1, 1);  // n_test x d2, entries in {-1, +1}
};

EvalSet make_eval_set(const sensing::GroundTruthModel& model, Index n_test,
                      std::uint64_t seed);

/// Fraction of label-matrix entries where sign(X^T W) disagrees with the
/// ground-truth signs, normalized per entry.
double hamming_on(const EvalSet& eval, const DenseMatrix& w);

/// Macro-averaged AUC over classes, in [0, 1]. Per-class AUC uses the
/// rank-sum formula with midrank tie handling; classes whose truth column is
/// single-class are skipped. Throws when every class is skipped.
double average_auc_on(const EvalSet& eval, const DenseMatrix& w);

/// Convenience wrappers that draw n_test fresh Gaussian instances.
double hamming_prediction_error(const DenseMatrix& w,
                                const sensing::GroundTruthModel& model,
                                Index n_test, std::uint64_t seed);
double average_auc(const DenseMatrix& w, const sensing::GroundTruthModel& model,
                   Index n_test, std::uint64_t seed);

/// Rank-sum AUC of one score vector against binary truth, midrank ties.
double auc_from_scores(const std::vector<double>& scores,
                       const std::vector<bool>& positive);

/// Eigenbasis of the dilated planted matrix: [[U/sqrt2, U/sqrt2],
/// [V/sqrt2, -V/sqrt2]], the 2k columns pairing eigenvalues +sigma, -sigma.
OrthonormalBasis dilated_basis(const sensing::GroundTruthModel& model);

struct SubspaceDiagnostics {
  double tan_theta = 0.0;
  double eps = 0.0;  // ||W* - W||_2, equal to the dilated gap
};

SubspaceDiagnostics subspace_diagnostics(const OrthonormalBasis& u,
                                         const DenseMatrix& w,
                                         const sensing::GroundTruthModel& model);

}  // namespace onebit::metrics
