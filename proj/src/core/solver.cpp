#include "core/solver.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "core/metrics.hpp"
#include "core/rng.hpp"
#include "core/threading.hpp"

namespace onebit::solver {

namespace {
// Seed-space tag for the initialization power iteration, separating it from
// the per-batch streams (which use batch numbers 0..T).
constexpr std::uint64_t kInitSeedTag = 0x707077ULL;
}  // namespace

void SolverConfig::validate() const {
  if (d1 < 2) throw ConfigError("d1", "solver: d1 must be >= 2");
  if (d2 < 1) throw ConfigError("d2", "solver: d2 must be >= 1");
  if (k < 1) throw ConfigError("k", "solver: k must be >= 1");
  if (2 * k > d1 + d2) throw ConfigError("k", "solver: need 2k <= d1 + d2");
  if (m < 1) throw ConfigError("m", "solver: m must be >= 1");
  if (iterations < 0) throw ConfigError("T", "solver: T must be >= 0");
  if (lambda <= 0.0) throw ConfigError("lambda", "solver: lambda must be > 0");
  if (init_power_iters < 1) {
    throw ConfigError("init_power_iters", "solver: init_power_iters >= 1");
  }
  if (norm_floor < 0.0) {
    throw ConfigError("norm_floor", "solver: norm_floor must be >= 0");
  }
}

DenseMatrix compute_residual_matrix(const DenseMatrix& w,
                                    const sensing::MiniBatch& batch,
                                    double lambda) {
  std::vector<double> margins = sensing::apply_sensing(w, batch);
  for (Index i = 0; i < batch.m; ++i) {
    margins[static_cast<std::size_t>(i)] =
        batch.y[static_cast<std::size_t>(i)] -
        sensing::sign_scalar(margins[static_cast<std::size_t>(i)]);
  }
  DenseMatrix h = sensing::apply_adjoint(margins, batch, w.rows(), w.cols());
  h.scale(std::sqrt(static_cast<double>(w.cols())) /
          (static_cast<double>(batch.m) * lambda));
  return h;
}

DenseMatrix dilated_apply(const DenseMatrix& m, const DenseMatrix& u_in) {
  const Index d1 = m.rows();
  const Index d2 = m.cols();
  if (u_in.rows() != d1 + d2) {
    throw DimensionError("dilated_apply: block height must be d1 + d2");
  }
  const Index r = u_in.cols();
  DenseMatrix out(d1 + d2, r);
  for (Index c = 0; c < r; ++c) {
    auto uc = u_in.col(c);
    auto oc = out.col(c);
    // top := M * bottom(u)
    for (Index j = 0; j < d2; ++j) {
      const double b = uc[static_cast<std::size_t>(d1 + j)];
      if (b == 0.0) continue;
      auto mj = m.col(j);
      for (Index i = 0; i < d1; ++i) oc[i] += mj[i] * b;
    }
    // bottom := M^T * top(u)
    for (Index j = 0; j < d2; ++j) {
      oc[static_cast<std::size_t>(d1 + j)] =
          dot(m.col(j), uc.subspan(0, static_cast<std::size_t>(d1)));
    }
  }
  return out;
}

DenseMatrix extract_normalize(const DenseMatrix& u, const DenseMatrix& v,
                              Index d1, Index d2, const DenseMatrix& prev_w,
                              double norm_floor, Index* degenerate_count) {
  if (u.rows() != d1 + d2 || v.rows() != d1 + d2 || u.cols() != v.cols()) {
    throw DimensionError("extract_normalize: inconsistent factor shapes");
  }
  if (prev_w.rows() != d1 || prev_w.cols() != d2) {
    throw DimensionError("extract_normalize: prev_w shape");
  }
  const Index r = u.cols();
  DenseMatrix w(d1, d2);
  // W~ = U_top V_bot^T, assembled column by column.
  for (Index j = 0; j < d2; ++j) {
    auto wj = w.col(j);
    for (Index c = 0; c < r; ++c) {
      const double vb = v(d1 + j, c);
      if (vb == 0.0) continue;
      auto uc = u.col(c);
      for (Index i = 0; i < d1; ++i) wj[i] += uc[i] * vb;
    }
  }
  normalize_columns(w, prev_w, norm_floor, degenerate_count);
  return w;
}

void normalize_columns(DenseMatrix& w, const DenseMatrix& prev_w,
                       double norm_floor, Index* degenerate_count) {
  const Index d1 = w.rows();
  const Index d2 = w.cols();
  Index degenerate = 0;
  for (Index j = 0; j < d2; ++j) {
    auto wj = w.col(j);
    const double norm = w.column_norm(j);
    if (norm >= norm_floor && norm > 0.0) {
      const double inv = 1.0 / norm;
      for (Index i = 0; i < d1; ++i) wj[i] *= inv;
      continue;
    }
    ++degenerate;
    const double prev_norm = prev_w.column_norm(j);
    if (prev_norm >= norm_floor && prev_norm > 0.0) {
      auto pj = prev_w.col(j);
      std::copy(pj.begin(), pj.end(), wj.begin());
    } else {
      // All-zero history: deterministic unit fallback.
      std::fill(wj.begin(), wj.end(), 0.0);
      wj[0] = 1.0;
    }
  }
  if (degenerate_count != nullptr) *degenerate_count = degenerate;
}

FactoredIterate init_state(const sensing::MiniBatch& first_batch,
                           const SolverConfig& config) {
  config.validate();
  if (first_batch.x.rows() != config.d1 || first_batch.d2 != config.d2) {
    throw DimensionError("init_state: batch shape does not match config");
  }
  // Plug-in estimate without the sign(A(0)) correction: that term is the
  // adjoint of the all-ones vector, whose expectation is zero, and dropping
  // it lowers the variance of the start.
  DenseMatrix h0 = sensing::apply_adjoint(first_batch.y, first_batch,
                                          config.d1, config.d2);
  h0.scale(std::sqrt(static_cast<double>(config.d2)) /
           (static_cast<double>(first_batch.m) * config.lambda));

  const Index n = config.d1 + config.d2;
  const Index r = 2 * config.k;
  linalg::LinearOp op = [&h0, &config](std::span<const double> in,
                                       std::span<double> out) {
    const Index d1 = config.d1;
    const Index d2 = config.d2;
    for (Index i = 0; i < d1; ++i) {
      double s = 0.0;
      for (Index j = 0; j < d2; ++j) {
        s += h0(i, j) * in[static_cast<std::size_t>(d1 + j)];
      }
      out[static_cast<std::size_t>(i)] = s;
    }
    for (Index j = 0; j < d2; ++j) {
      out[static_cast<std::size_t>(d1 + j)] =
          dot(h0.col(j), in.subspan(0, static_cast<std::size_t>(d1)));
    }
  };
  OrthonormalBasis u0 = linalg::top_subspace(
      op, n, r, config.init_power_iters, derive_seed(config.seed, kInitSeedTag));

  return FactoredIterate{std::move(u0), DenseMatrix(n, r),
                         DenseMatrix(config.d1, config.d2), 0, 0};
}

FactoredIterate solver_step(const FactoredIterate& state,
                            const sensing::MiniBatch& batch,
                            const SolverConfig& config) {
  const Index d1 = config.d1;
  const Index d2 = config.d2;
  try {
    // M = H + W, one d1 x d2 workspace.
    DenseMatrix m = compute_residual_matrix(state.w, batch, config.lambda);
    add_scaled(m, state.w, 1.0);

    DenseMatrix powered = dilated_apply(m, state.u.matrix());
    linalg::QrResult qr = linalg::qr_thin(powered);
    DenseMatrix v_next = dilated_apply(m, qr.q.matrix());

    Index degenerate = 0;
    DenseMatrix w_next =
        extract_normalize(qr.q.matrix(), v_next, d1, d2, state.w,
                          config.norm_floor, &degenerate);
    return FactoredIterate{std::move(qr.q), std::move(v_next),
                           std::move(w_next), state.t + 1, degenerate};
  } catch (const RankDeficiencyError& e) {
    RankDeficiencyError tagged(
        e.column(), std::string(e.what()) + " at iteration " +
                        std::to_string(state.t + 1));
    tagged.set_iteration(state.t + 1);
    throw tagged;
  }
}

RunResult run(const SolverConfig& config,
              const sensing::GroundTruthModel& model,
              const sensing::NoiseSpec& noise, const EvalOptions& eval) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  auto elapsed_ms = [&start]() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
  };
  auto draw = [&](Index batch_no) {
    const std::uint64_t seed = derive_seed(config.seed,
                                           static_cast<std::uint64_t>(batch_no));
    return config.full_observation
               ? sensing::sample_full_observation(model, config.m, noise, seed)
               : sensing::sample_batch(model, config.m, noise, seed);
  };

  FactoredIterate state = init_state(draw(0), config);

  // Fixed evaluation set across iterations so the per-iteration trend is
  // comparable.
  metrics::EvalSet eval_set;
  const bool do_eval = eval.n_test > 0;
  if (do_eval) {
    eval_set = metrics::make_eval_set(model, eval.n_test, eval.eval_seed);
  }

  RunResult result{DenseMatrix(config.d1, config.d2), {}};
  result.history.reserve(static_cast<std::size_t>(config.iterations));
  for (Index t = 1; t <= config.iterations; ++t) {
    state = solver_step(state, draw(t), config);

    metrics::MetricsRecord rec;
    rec.t = t;
    rec.samples_seen = (t + 1) * config.m;
    rec.recovery_error = metrics::recovery_error(state.w, model.w_star);
    const auto diag = metrics::subspace_diagnostics(state.u, state.w, model);
    rec.tan_theta = diag.tan_theta;
    rec.degenerate_columns = state.degenerate_columns;
    if (do_eval) {
      rec.hamming = metrics::hamming_on(eval_set, state.w);
      rec.auc = metrics::average_auc_on(eval_set, state.w);
    }
    rec.elapsed_ms = eval.measure_time ? elapsed_ms() : 0.0;
    result.history.push_back(rec);
  }
  result.w_final = state.w;
  return result;
}

DenseMatrix naive_plug_in(const sensing::GroundTruthModel& model,
                          Index total_samples,
                          const sensing::NoiseSpec& noise,
                          std::uint64_t seed) {
  if (total_samples < 1) {
    throw ConfigError("total_samples", "naive_plug_in: total_samples >= 1");
  }
  const Index d1 = model.d1();
  const Index d2 = model.d2();
  const double scale = std::sqrt(static_cast<double>(d2));

  // Stream the observations: generate a chunk in parallel, fold it into the
  // accumulator serially so the sum order never depends on thread count.
  DenseMatrix acc(d1, d2);
  const Index chunk = kChunkSize;
  for (Index begin = 0; begin < total_samples; begin += chunk) {
    const Index end = std::min(total_samples, begin + chunk);
    const Index len = end - begin;
    DenseMatrix xs(d1, len);
    std::vector<Index> classes(static_cast<std::size_t>(len), 0);
    std::vector<double> labels(static_cast<std::size_t>(len), 0.0);
    parallel_chunks(len, 2048, [&](Index, Index lo, Index hi) {
      for (Index li = lo; li < hi; ++li) {
        sensing::draw_observation(model, noise, seed, begin + li, xs.col(li),
                                  &classes[static_cast<std::size_t>(li)],
                                  &labels[static_cast<std::size_t>(li)]);
      }
    });
    for (Index li = 0; li < len; ++li) {
      const Index j = classes[static_cast<std::size_t>(li)];
      const double factor = scale * labels[static_cast<std::size_t>(li)];
      auto xi = xs.col(li);
      auto aj = acc.col(j);
      for (Index r = 0; r < d1; ++r) aj[r] += factor * xi[r];
    }
  }
  acc.scale(scale / (kPlugInLambda * static_cast<double>(total_samples)));

  DenseMatrix zero(d1, d2);
  normalize_columns(acc, zero, 1e-12, nullptr);
  return acc;
}

}  // namespace onebit::solver
