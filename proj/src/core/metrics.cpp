#include "core/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace onebit::metrics {

double recovery_error(const DenseMatrix& w, const DenseMatrix& w_star) {
  if (w.rows() != w_star.rows() || w.cols() != w_star.cols()) {
    throw DimensionError("recovery_error: shape mismatch");
  }
  const DenseMatrix diff = subtract(w, w_star);
  if (diff.max_abs() == 0.0) return 0.0;
  return linalg::spectral_norm(diff, 1e-10, 50000, 0);
}

EvalSet make_eval_set(const sensing::GroundTruthModel& model, Index n_test,
                      std::uint64_t seed) {
  if (n_test < 1) throw ConfigError("n_test", "make_eval_set: n_test >= 1");
  const Index d1 = model.d1();
  const Index d2 = model.d2();
  EvalSet eval{DenseMatrix(d1, n_test), DenseMatrix(n_test, d2)};
  for (Index i = 0; i < n_test; ++i) {
    CounterRng rng(seed, Rng::eval_x, 0, static_cast<std::uint64_t>(i));
    auto xi = eval.x.col(i);
    for (Index r = 0; r < d1; ++r) xi[r] = rng.next_gaussian();
  }
  for (Index j = 0; j < d2; ++j) {
    auto wj = model.w_star.col(j);
    for (Index i = 0; i < n_test; ++i) {
      eval.truth(i, j) = sensing::sign_scalar(dot(eval.x.col(i), wj));
    }
  }
  return eval;
}

double hamming_on(const EvalSet& eval, const DenseMatrix& w) {
  const Index n = eval.x.cols();
  const Index d2 = eval.truth.cols();
  if (w.rows() != eval.x.rows() || w.cols() != d2) {
    throw DimensionError("hamming_on: W shape does not match eval set");
  }
  Index disagreements = 0;
  for (Index j = 0; j < d2; ++j) {
    auto wj = w.col(j);
    for (Index i = 0; i < n; ++i) {
      const double pred = sensing::sign_scalar(dot(eval.x.col(i), wj));
      if (pred != eval.truth(i, j)) ++disagreements;
    }
  }
  return static_cast<double>(disagreements) / static_cast<double>(n * d2);
}

double auc_from_scores(const std::vector<double>& scores,
                       const std::vector<bool>& positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Midranks over tied score runs.
  std::vector<double> rank(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = mid;
    i = j + 1;
  }

  std::size_t n_pos = 0;
  double rank_sum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (positive[t]) {
      ++n_pos;
      rank_sum += rank[t];
    }
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw NumericError("auc_from_scores: single-class truth");
  }
  const double u = rank_sum - 0.5 * static_cast<double>(n_pos) *
                                  static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double average_auc_on(const EvalSet& eval, const DenseMatrix& w) {
  const Index n = eval.x.cols();
  const Index d2 = eval.truth.cols();
  if (w.rows() != eval.x.rows() || w.cols() != d2) {
    throw DimensionError("average_auc_on: W shape does not match eval set");
  }
  double sum = 0.0;
  Index kept = 0;
  std::vector<double> scores(static_cast<std::size_t>(n));
  std::vector<bool> positive(static_cast<std::size_t>(n));
  for (Index j = 0; j < d2; ++j) {
    auto wj = w.col(j);
    bool has_pos = false;
    bool has_neg = false;
    for (Index i = 0; i < n; ++i) {
      scores[static_cast<std::size_t>(i)] = dot(eval.x.col(i), wj);
      const bool pos = eval.truth(i, j) > 0.0;
      positive[static_cast<std::size_t>(i)] = pos;
      has_pos = has_pos || pos;
      has_neg = has_neg || !pos;
    }
    if (!has_pos || !has_neg) continue;  // single-class column
    sum += auc_from_scores(scores, positive);
    ++kept;
  }
  if (kept == 0) throw NumericError("average_auc: AUC undefined, all classes single-class");
  return sum / static_cast<double>(kept);
}

double hamming_prediction_error(const DenseMatrix& w,
                                const sensing::GroundTruthModel& model,
                                Index n_test, std::uint64_t seed) {
  return hamming_on(make_eval_set(model, n_test, seed), w);
}

double average_auc(const DenseMatrix& w,
                   const sensing::GroundTruthModel& model, Index n_test,
                   std::uint64_t seed) {
  if (n_test < 2) throw ConfigError("n_test", "average_auc: n_test >= 2");
  return average_auc_on(make_eval_set(model, n_test, seed), w);
}

OrthonormalBasis dilated_basis(const sensing::GroundTruthModel& model) {
  const Index d1 = model.d1();
  const Index d2 = model.d2();
  const Index k = model.k;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  DenseMatrix q(d1 + d2, 2 * k);
  for (Index c = 0; c < k; ++c) {
    auto uc = model.u_star.col(c);
    auto vc = model.v_star.col(c);
    auto plus = q.col(c);
    auto minus = q.col(k + c);
    for (Index i = 0; i < d1; ++i) {
      plus[i] = uc[i] * inv_sqrt2;
      minus[i] = uc[i] * inv_sqrt2;
    }
    for (Index i = 0; i < d2; ++i) {
      plus[static_cast<std::size_t>(d1 + i)] = vc[i] * inv_sqrt2;
      minus[static_cast<std::size_t>(d1 + i)] = -vc[i] * inv_sqrt2;
    }
  }
  return OrthonormalBasis(std::move(q));
}

SubspaceDiagnostics subspace_diagnostics(
    const OrthonormalBasis& u, const DenseMatrix& w,
    const sensing::GroundTruthModel& model) {
  const OrthonormalBasis planted = dilated_basis(model);
  SubspaceDiagnostics diag;
  diag.tan_theta = linalg::tan_largest_principal_angle(planted, u);
  diag.eps = recovery_error(w, model.w_star);
  return diag;
}

}  // namespace onebit::metrics
