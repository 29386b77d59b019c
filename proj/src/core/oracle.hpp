#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core/dense_matrix.hpp"
#include "core/sensing.hpp"

namespace onebit::oracle {

/// Outcome of one verification check. Two kinds: a target comparison
/// (|statistic - target| <= tolerance) and a bound comparison
/// (statistic <= bound + tolerance).
struct OracleReport {
  enum class Kind { target, bound };

  std::string name;
  std::vector<std::pair<std::string, double>> parameters;
  double statistic = 0.0;
  double bound_or_target = 0.0;
  double tolerance = 0.0;
  Kind kind = Kind::bound;
  bool pass = false;
  Index n_samples = 0;
  std::uint64_t seed = 0;

  void finalize() {
    pass = kind == Kind::target
               ? std::abs(statistic - bound_or_target) <= tolerance
               : statistic <= bound_or_target + tolerance;
  }

  nlohmann::ordered_json to_json() const;
};

struct VectorEstimate {
  std::vector<double> estimate;
  OracleReport report;
};

struct MatrixEstimate {
  DenseMatrix estimate;
  OracleReport report;
};

/// Monte-Carlo check of the plug-in expectation in vector form:
/// mean of sign(<g, w>) g over n Gaussian draws against sqrt(2/pi) w,
/// with the CLT allowance 3 sqrt(d/n).
VectorEstimate mc_lemma1_vector(const std::vector<double>& w, Index n,
                                std::uint64_t seed);

/// Matrix form through the sensing operator: the rescaled mean of
/// sign(<x e^T, W>) x e^T against W, max-entry deviation vs (3/lambda)
/// sqrt(d1 d2 / n).
MatrixEstimate mc_lemma1_matrix(const DenseMatrix& w, Index n,
                                std::uint64_t seed);

/// Closed form of E{ g g^T |sign(<g,w>) - sign(<g,w'>)|^2 } in the rotated
/// frame w = e1, w' = cos(a) e1 + sin(a) e2:
///   M11 = (4a - 2 sin 2a)/pi, M22 = (4a + 2 sin 2a)/pi,
///   M12 = M21 = -(4/pi) sin^2 a, Mii = 4a/pi for i >= 3.
/// These are this library's own derivation and are cross-validated against
/// mc_second_moment before being trusted anywhere.
DenseMatrix closed_form_second_moment(double alpha, Index d);

/// Monte-Carlo second moment with the closed form (rotated into the (w, w')
/// frame) as target; also reports the fitted disagreement constants
/// ||M||_2 / ||w - w'||_2 and trace / (d ||w - w'||_2).
MatrixEstimate mc_second_moment(const std::vector<double>& w,
                                const std::vector<double>& w_prime, Index n,
                                std::uint64_t seed);

/// || (sqrt(d2)/(lambda m)) (A' sign A(W) - A' sign A(W')) - (W - W') ||_2,
/// the empirical isometry defect between two column-normalized matrices.
double rip_residual(const DenseMatrix& w, const DenseMatrix& w_prime,
                    const sensing::MiniBatch& batch);

/// Materializes the (small) dilation and verifies its eigenvalues pair as
/// +-sigma_i of W within 1e-8, and that the spectral norms agree.
OracleReport check_dilation_spectrum(const DenseMatrix& w);

/// Applies the normalize/dilate pipeline to w_tilde and verifies
/// ||W* - W||_2 <= 4 sqrt(k) ||W* - W~||_2.
OracleReport check_normalization_loss(const sensing::GroundTruthModel& model,
                                      const DenseMatrix& w_tilde, Index k);

/// Perturbs the dilated matrix by random symmetric noise of spectral norm
/// eps and verifies sin(theta) <= 2 eps / (sigma_2k - sigma_2k+1) between the
/// top eigenspaces, over the given number of trials.
OracleReport check_wedin_init(const DenseMatrix& w, double eps, Index trials,
                              std::uint64_t seed);

}  // namespace onebit::oracle
