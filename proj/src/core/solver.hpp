#pragma once

#include <cstdint>
#include <vector>

#include "core/dense_matrix.hpp"
#include "core/linalg.hpp"
#include "core/metrics_record.hpp"
#include "core/sensing.hpp"

namespace onebit::solver {

inline constexpr double kPlugInLambda = 0.7978845608028654;  // sqrt(2/pi)

struct SolverConfig {
  Index d1 = 0;
  Index d2 = 0;
  Index k = 0;
  Index m = 0;           // batch size
  Index iterations = 0;  // outer iterations T
  double lambda = kPlugInLambda;
  Index init_power_iters = 30;
  double norm_floor = 1e-12;  // columns below this are degenerate
  std::uint64_t seed = 0;
  bool full_observation = false;

  void validate() const;
};

/// Solver state: the factored estimate pair and the extracted
/// column-normalized iterate. U and V have 2k columns because the dilated
/// target carries each singular value twice, once per sign.
struct FactoredIterate {
  OrthonormalBasis u;  // (d1+d2) x 2k
  DenseMatrix v;       // (d1+d2) x 2k
  DenseMatrix w;       // d1 x d2, column-normalized once t >= 1
  Index t = 0;
  Index degenerate_columns = 0;  // fallbacks taken in the last extraction
};

/// H = (sqrt(d2) / (m lambda)) A'(y - sign(A(W))).
DenseMatrix compute_residual_matrix(const DenseMatrix& w,
                                    const sensing::MiniBatch& batch,
                                    double lambda);

/// Action of the Hermitian dilation [[0, M], [M^T, 0]] on a block of
/// (d1+d2)-vectors: top rows become M * bottom(U), bottom rows M^T * top(U).
/// The dilated matrix itself is never formed.
DenseMatrix dilated_apply(const DenseMatrix& m, const DenseMatrix& u_in);

/// W = column-normalize(U_top V_bot^T). A column whose norm falls below
/// norm_floor keeps the previous iterate's column; if that column is itself
/// below the floor (the all-zero start), the first canonical basis vector is
/// used. degenerate_count reports how many columns fell back.
DenseMatrix extract_normalize(const DenseMatrix& u, const DenseMatrix& v,
                              Index d1, Index d2, const DenseMatrix& prev_w,
                              double norm_floor, Index* degenerate_count);

/// In-place column normalization with the fallback rule above.
void normalize_columns(DenseMatrix& w, const DenseMatrix& prev_w,
                       double norm_floor, Index* degenerate_count);

/// Initialization: U0 spans the top-2k eigenspace of the dilated plug-in
/// estimate (sqrt(d2)/(m lambda)) A'(y); V0 = 0, W0 = 0.
FactoredIterate init_state(const sensing::MiniBatch& first_batch,
                           const SolverConfig& config);

/// One outer iteration: residual from the current extracted iterate, one
/// implicit dilated power step with QR, V refresh against the new basis,
/// then extraction of the next column-normalized iterate. The same batch
/// serves the U and V updates.
FactoredIterate solver_step(const FactoredIterate& state,
                            const sensing::MiniBatch& batch,
                            const SolverConfig& config);

struct EvalOptions {
  Index n_test = 0;         // 0 disables hamming/auc in the history
  std::uint64_t eval_seed = 0;
  bool measure_time = true;  // false zeroes elapsed_ms for reproducible output
};

struct RunResult {
  DenseMatrix w_final;
  std::vector<metrics::MetricsRecord> history;
};

/// Full run: one initialization batch plus T fresh batches, one record per
/// iteration. Batch b uses the seed stream derive_seed(config.seed, b).
RunResult run(const SolverConfig& config, const sensing::GroundTruthModel& model,
              const sensing::NoiseSpec& noise, const EvalOptions& eval);

/// Plug-in baseline: (sqrt(d2)/(lambda M)) A'(y) accumulated over M one-bit
/// observations in a single pass, then column-normalized. No rank
/// projection; this is the column-by-column estimator the solver is compared
/// against.
DenseMatrix naive_plug_in(const sensing::GroundTruthModel& model,
                          Index total_samples, const sensing::NoiseSpec& noise,
                          std::uint64_t seed);

}  // namespace onebit::solver
