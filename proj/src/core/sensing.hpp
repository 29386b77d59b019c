#pragma once

#include <cstdint>
#include <vector>

#include "core/dense_matrix.hpp"

namespace onebit::sensing {

/// sign with the convention sign(0) = +1. Ties have probability zero under
/// the Gaussian model but must be deterministic for reproducibility.
inline double sign_scalar(double x) { return x >= 0.0 ? 1.0 : -1.0; }

/// Noise applied to generated labels: additive Gaussian inside the sign,
/// or adversarial label flips after it.
struct NoiseSpec {
  enum class Kind { none, gaussian, flip };
  Kind kind = Kind::none;
  double xi = 0.0;  // gaussian std deviation
  double p = 0.0;   // flip probability

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(double xi);
  static NoiseSpec flip(double p);
};

/// Planted column-normalized rank-k matrix with its factors.
struct GroundTruthModel {
  DenseMatrix w_star;   // d1 x d2, unit-norm columns
  Index k = 0;          // rank bound
  DenseMatrix u_star;   // d1 x k, left singular factor of w_star
  DenseMatrix v_star;   // d2 x k, right singular factor
  std::vector<double> sigma;  // descending singular values, length k

  Index d1() const { return w_star.rows(); }
  Index d2() const { return w_star.cols(); }
};

/// One mini-batch of one-bit observations. The one-hot sampling vector is
/// stored as the class index; the sqrt(d2) scale of the normalized sampler
/// is applied analytically by the operator, never materialized.
struct MiniBatch {
  Index m = 0;
  DenseMatrix x;                    // d1 x m feature columns
  std::vector<Index> class_index;   // length m, 0-based in [0, d2)
  std::vector<double> y;            // length m, entries in {-1, +1}
  Index d2 = 0;

  MiniBatch(Index d1, Index m_, Index d2_)
      : m(m_), x(d1, m_), class_index(static_cast<std::size_t>(m_), 0),
        y(static_cast<std::size_t>(m_), 1.0), d2(d2_) {}
};

/// W* = column-normalize(U V^T) with iid standard Gaussian factors; the
/// stored factors and singular values are recomputed from the normalized
/// matrix. Deterministic given the seed.
GroundTruthModel make_ground_truth(Index d1, Index d2, Index k,
                                   std::uint64_t seed);

/// Test hook: clean labels y_i = sign(sqrt(d2) x_i^T W[:, j_i]) for a batch
/// whose features and class indices were injected by the caller.
void fill_clean_labels(MiniBatch& batch, const DenseMatrix& w);

/// Test hook: applies the configured noise to already-clean labels.
/// Gaussian noise is added to the margin before re-taking the sign; flips
/// negate each label independently.
void apply_label_noise(MiniBatch& batch, const DenseMatrix& w,
                       const NoiseSpec& noise, std::uint64_t seed);

/// Generates observation i of the single-label stream for the given seed:
/// feature column, class index, one-bit label under the noise model. The
/// batch sampler and streaming consumers share this, so identical seeds
/// yield identical observations everywhere.
void draw_observation(const GroundTruthModel& model, const NoiseSpec& noise,
                      std::uint64_t seed, Index i, std::span<double> x_out,
                      Index* class_out, double* label_out);

/// Fresh single-label batch: iid Gaussian features, uniform class indices,
/// one-bit labels under the given noise. Deterministic given the seed and
/// independent of the worker thread count.
MiniBatch sample_batch(const GroundTruthModel& model, Index m,
                       const NoiseSpec& noise, std::uint64_t seed);

/// Full-observation sampler: pairs arrive in blocks that share one feature
/// vector and enumerate the classes in order, so n_pairs = d2 with one block
/// reproduces a full label vector for a single instance.
MiniBatch sample_full_observation(const GroundTruthModel& model, Index n_pairs,
                                  const NoiseSpec& noise, std::uint64_t seed);

/// The sensing operator: entry i is sqrt(d2) x_i^T W[:, j_i].
std::vector<double> apply_sensing(const DenseMatrix& w, const MiniBatch& batch);

/// Adjoint of the sensing operator: sum_i r_i sqrt(d2) x_i e_{j_i}^T,
/// accumulated column by column.
DenseMatrix apply_adjoint(const std::vector<double>& r, const MiniBatch& batch,
                          Index d1, Index d2);

}  // namespace onebit::sensing
