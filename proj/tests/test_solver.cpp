#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "core/alloc_stats.hpp"
#include "core/linalg.hpp"
#include "core/metrics.hpp"
#include "core/rng.hpp"
#include "core/sensing.hpp"
#include "core/solver.hpp"

using onebit::DenseMatrix;
using onebit::Index;
using onebit::OrthonormalBasis;
namespace sensing = onebit::sensing;
namespace solver = onebit::solver;
namespace metrics = onebit::metrics;
namespace linalg = onebit::linalg;

namespace {

solver::SolverConfig desk_config(Index d1, Index d2, Index k, Index m,
                                 Index iterations, std::uint64_t seed) {
  solver::SolverConfig config;
  config.d1 = d1;
  config.d2 = d2;
  config.k = k;
  config.m = m;
  config.iterations = iterations;
  config.seed = seed;
  return config;
}

bool same_matrix(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Index i = 0; i < a.size(); ++i) {
    if (a.data()[i] != b.data()[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("residual vanishes exactly at the planted matrix") {
  const auto model = sensing::make_ground_truth(12, 6, 2, 5);
  const auto batch =
      sensing::sample_batch(model, 300, sensing::NoiseSpec::none(), 8);
  const DenseMatrix h =
      solver::compute_residual_matrix(model.w_star, batch, solver::kPlugInLambda);
  CHECK(h.max_abs() == 0.0);
}

TEST_CASE("residual at zero estimates the planted matrix") {
  const auto model = sensing::make_ground_truth(20, 5, 2, 11);
  const auto batch =
      sensing::sample_batch(model, 200000, sensing::NoiseSpec::none(), 12);
  DenseMatrix zero(20, 5);
  const DenseMatrix h =
      solver::compute_residual_matrix(zero, batch, solver::kPlugInLambda);
  const DenseMatrix diff = onebit::subtract(h, model.w_star);
  CHECK(diff.max_abs() <= 0.05);
}

TEST_CASE("residual approximates the one-step difference") {
  const auto model = sensing::make_ground_truth(20, 5, 2, 13);
  const auto other = sensing::make_ground_truth(20, 5, 2, 14);
  const auto batch =
      sensing::sample_batch(model, 200000, sensing::NoiseSpec::none(), 15);
  const DenseMatrix h = solver::compute_residual_matrix(
      other.w_star, batch, solver::kPlugInLambda);
  DenseMatrix target = onebit::subtract(model.w_star, other.w_star);
  const DenseMatrix gap = onebit::subtract(h, target);
  CHECK(linalg::spectral_norm(gap, 1e-8, 2000, 0) <= 0.15);
}

TEST_CASE("dilated_apply swaps blocks through M") {
  DenseMatrix m(2, 2);
  m(0, 0) = 1.0;
  m(1, 1) = 2.0;
  DenseMatrix u(4, 1);
  u(0, 0) = 1.0;
  const DenseMatrix out = solver::dilated_apply(m, u);
  CHECK(out(0, 0) == 0.0);
  CHECK(out(1, 0) == 0.0);
  CHECK(out(2, 0) == 1.0);
  CHECK(out(3, 0) == 0.0);
}

TEST_CASE("dilated_apply is a symmetric operator") {
  onebit::CounterRng rng(77, onebit::Rng::misc, 0, 0);
  DenseMatrix m(5, 3);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.next_gaussian();
  DenseMatrix u(8, 1);
  DenseMatrix v(8, 1);
  for (Index i = 0; i < 8; ++i) {
    u(i, 0) = rng.next_gaussian();
    v(i, 0) = rng.next_gaussian();
  }
  const DenseMatrix du = solver::dilated_apply(m, u);
  const DenseMatrix dv = solver::dilated_apply(m, v);
  const double lhs = onebit::dot(v.col(0), du.col(0));
  const double rhs = onebit::dot(dv.col(0), u.col(0));
  CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
}

TEST_CASE("dilated operator of a unit column has eigenvalues {1, -1, 0}") {
  DenseMatrix w(2, 1);
  w(0, 0) = 0.6;
  w(1, 0) = 0.8;
  // Materialize the 3x3 dilation by feeding basis vectors through the action.
  DenseMatrix dilation(3, 3);
  for (Index c = 0; c < 3; ++c) {
    DenseMatrix e(3, 1);
    e(c, 0) = 1.0;
    const DenseMatrix col = solver::dilated_apply(w, e);
    for (Index r = 0; r < 3; ++r) dilation(r, c) = col(r, 0);
  }
  const auto eig = linalg::jacobi_eigen(dilation);
  CHECK(eig.values[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eig.values[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eig.values[2] == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("extract_normalize rescales a diagonal product") {
  DenseMatrix u(4, 2);
  u(0, 0) = 1.0;
  u(1, 1) = 1.0;  // top block = I2
  DenseMatrix v(4, 2);
  v(2, 0) = 2.0;
  v(3, 1) = 3.0;  // bottom block = diag(2, 3)
  DenseMatrix prev(2, 2);
  Index degenerate = -1;
  const DenseMatrix w =
      solver::extract_normalize(u, v, 2, 2, prev, 1e-12, &degenerate);
  CHECK(same_matrix(w, DenseMatrix::identity(2)));
  CHECK(degenerate == 0);
}

TEST_CASE("extract_normalize falls back to the previous column") {
  DenseMatrix u(4, 2);
  u(0, 0) = 1.0;
  u(1, 1) = 1.0;
  DenseMatrix v(4, 2);
  v(2, 0) = 2.0;  // column 2 of the product is all zero
  const DenseMatrix prev = DenseMatrix::identity(2);
  Index degenerate = -1;
  const DenseMatrix w =
      solver::extract_normalize(u, v, 2, 2, prev, 1e-12, &degenerate);
  CHECK(degenerate == 1);
  CHECK(w(0, 1) == 0.0);
  CHECK(w(1, 1) == 1.0);  // kept from prev
  CHECK(w(0, 0) == 1.0);
}

TEST_CASE("extract_normalize yields unit columns on random input") {
  onebit::CounterRng rng(5, onebit::Rng::misc, 1, 0);
  DenseMatrix u(9, 4);
  DenseMatrix v(9, 4);
  for (Index i = 0; i < u.size(); ++i) {
    u.data()[i] = rng.next_gaussian();
    v.data()[i] = rng.next_gaussian();
  }
  DenseMatrix prev(5, 4);
  const DenseMatrix w = solver::extract_normalize(u, v, 5, 4, prev, 1e-12, nullptr);
  for (Index j = 0; j < 4; ++j) {
    CHECK(w.column_norm(j) == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("init_state starts from the zero estimate") {
  const auto model = sensing::make_ground_truth(12, 6, 2, 19);
  const auto config = desk_config(12, 6, 2, 500, 4, 19);
  const auto batch =
      sensing::sample_batch(model, 500, sensing::NoiseSpec::none(), 20);
  const auto state = solver::init_state(batch, config);
  CHECK(state.t == 0);
  CHECK(state.w.max_abs() == 0.0);
  CHECK(state.v.max_abs() == 0.0);
  CHECK(state.u.rows() == 18);
  CHECK(state.u.cols() == 4);
}

TEST_CASE("init_state is deterministic") {
  const auto model = sensing::make_ground_truth(12, 6, 2, 19);
  const auto config = desk_config(12, 6, 2, 500, 4, 19);
  const auto batch =
      sensing::sample_batch(model, 500, sensing::NoiseSpec::none(), 20);
  const auto a = solver::init_state(batch, config);
  const auto b = solver::init_state(batch, config);
  CHECK(same_matrix(a.u.matrix(), b.u.matrix()));
}

TEST_CASE("initialization angle improves with batch size") {
  const Index d1 = 50;
  const Index d2 = 20;
  const Index k = 3;
  const Index sizes[3] = {1000, 10000, 100000};
  std::vector<double> medians;
  for (Index s = 0; s < 3; ++s) {
    std::vector<double> angles;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto model = sensing::make_ground_truth(d1, d2, k, 500 + seed);
      auto config = desk_config(d1, d2, k, sizes[s], 1, 900 + seed);
      const auto batch = sensing::sample_batch(
          model, sizes[s], sensing::NoiseSpec::none(), 7000 + seed);
      const auto state = solver::init_state(batch, config);
      angles.push_back(linalg::tan_largest_principal_angle(
          metrics::dilated_basis(model), state.u));
    }
    std::sort(angles.begin(), angles.end());
    medians.push_back(0.5 * (angles[9] + angles[10]));
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("a noise-free step at the planted matrix stays put") {
  const auto model = sensing::make_ground_truth(15, 8, 2, 23);
  auto config = desk_config(15, 8, 2, 400, 1, 23);

  const OrthonormalBasis planted = metrics::dilated_basis(model);
  DenseMatrix v0 = solver::dilated_apply(model.w_star, planted.matrix());
  solver::FactoredIterate state{planted, std::move(v0), model.w_star, 1, 0};

  const auto batch =
      sensing::sample_batch(model, 400, sensing::NoiseSpec::none(), 29);
  const auto next = solver::solver_step(state, batch, config);

  CHECK(linalg::tan_largest_principal_angle(metrics::dilated_basis(model),
                                            next.u) <= 1e-8);
  const DenseMatrix gap = onebit::subtract(next.w, model.w_star);
  CHECK(linalg::spectral_norm(gap, 1e-10, 2000, 0) <= 1e-6);
}

TEST_CASE("solver_step is deterministic") {
  const auto model = sensing::make_ground_truth(12, 6, 2, 31);
  auto config = desk_config(12, 6, 2, 800, 3, 31);
  const auto init_batch =
      sensing::sample_batch(model, 800, sensing::NoiseSpec::none(), 32);
  const auto step_batch =
      sensing::sample_batch(model, 800, sensing::NoiseSpec::none(), 33);
  const auto s0 = solver::init_state(init_batch, config);
  const auto a = solver::solver_step(s0, step_batch, config);
  const auto b = solver::solver_step(s0, step_batch, config);
  CHECK(same_matrix(a.w, b.w));
  CHECK(same_matrix(a.u.matrix(), b.u.matrix()));
  CHECK(same_matrix(a.v, b.v));
  CHECK(a.t == 1);
}

TEST_CASE("error contracts over a short noise-free run") {
  const auto model = sensing::make_ground_truth(40, 20, 2, 37);
  auto config = desk_config(40, 20, 2, 8000, 6, 37);
  solver::EvalOptions eval;
  eval.n_test = 0;
  const auto result =
      solver::run(config, model, sensing::NoiseSpec::none(), eval);
  REQUIRE(result.history.size() == 6);
  CHECK(result.history.back().recovery_error <
        result.history.front().recovery_error);
  CHECK(result.history.back().recovery_error < 0.5);
  // Sample accounting: (t+1) * m.
  for (std::size_t i = 0; i < result.history.size(); ++i) {
    CHECK(result.history[i].samples_seen ==
          static_cast<Index>(i + 2) * config.m);
  }
}

TEST_CASE("full-observation mode also recovers") {
  const auto model = sensing::make_ground_truth(40, 20, 2, 38);
  auto config = desk_config(40, 20, 2, 8000, 6, 38);
  config.full_observation = true;
  solver::EvalOptions eval;
  eval.n_test = 0;
  const auto result =
      solver::run(config, model, sensing::NoiseSpec::none(), eval);
  CHECK(result.history.back().recovery_error <
        result.history.front().recovery_error);
  CHECK(result.history.back().recovery_error < 0.5);
}

TEST_CASE("zero-iteration run returns the zero start") {
  const auto model = sensing::make_ground_truth(12, 6, 2, 41);
  auto config = desk_config(12, 6, 2, 300, 0, 41);
  solver::EvalOptions eval;
  eval.n_test = 0;
  const auto result =
      solver::run(config, model, sensing::NoiseSpec::none(), eval);
  CHECK(result.history.empty());
  CHECK(result.w_final.max_abs() == 0.0);
}

TEST_CASE("run is deterministic") {
  const auto model = sensing::make_ground_truth(20, 10, 2, 43);
  auto config = desk_config(20, 10, 2, 2000, 4, 43);
  solver::EvalOptions eval;
  eval.n_test = 200;
  eval.eval_seed = 99;
  eval.measure_time = false;
  const auto a = solver::run(config, model, sensing::NoiseSpec::none(), eval);
  const auto b = solver::run(config, model, sensing::NoiseSpec::none(), eval);
  CHECK(same_matrix(a.w_final, b.w_final));
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].recovery_error == b.history[i].recovery_error);
    CHECK(a.history[i].auc == b.history[i].auc);
    CHECK(a.history[i].hamming == b.history[i].hamming);
    CHECK(a.history[i].elapsed_ms == 0.0);
  }
}

TEST_CASE("naive plug-in is consistent at large sample counts") {
  const auto model = sensing::make_ground_truth(20, 5, 2, 47);
  const DenseMatrix estimate =
      solver::naive_plug_in(model, 1000000, sensing::NoiseSpec::none(), 48);
  const DenseMatrix gap = onebit::subtract(estimate, model.w_star);
  CHECK(linalg::spectral_norm(gap, 1e-8, 2000, 0) <= 0.2);
}

TEST_CASE("naive plug-in reduces to the direction estimator for one class") {
  const auto model = sensing::make_ground_truth(50, 1, 1, 53);
  const DenseMatrix estimate =
      solver::naive_plug_in(model, 100000, sensing::NoiseSpec::none(), 54);
  CHECK(estimate.column_norm(0) == doctest::Approx(1.0).epsilon(1e-10));
  const double inner = onebit::dot(estimate.col(0), model.w_star.col(0));
  CHECK(inner >= 0.9);
}

TEST_CASE("naive plug-in is deterministic") {
  const auto model = sensing::make_ground_truth(10, 4, 2, 59);
  const DenseMatrix a =
      solver::naive_plug_in(model, 30000, sensing::NoiseSpec::flip(0.1), 60);
  const DenseMatrix b =
      solver::naive_plug_in(model, 30000, sensing::NoiseSpec::flip(0.1), 60);
  CHECK(same_matrix(a, b));
}

TEST_CASE("solver state stays within the factored budget") {
  const auto model = sensing::make_ground_truth(60, 40, 3, 61);
  auto config = desk_config(60, 40, 3, 1000, 2, 61);
  const auto batch =
      sensing::sample_batch(model, 1000, sensing::NoiseSpec::none(), 62);
  const auto state = solver::init_state(batch, config);
  // Factors: 2 blocks of (d1+d2) x 2k; workspace: one d1 x d2 iterate.
  CHECK(state.u.matrix().size() == (60 + 40) * 2 * 3);
  CHECK(state.v.size() == (60 + 40) * 2 * 3);
  CHECK(state.w.size() == 60 * 40);
}

TEST_CASE("no dilated-size allocation happens during a step") {
  const Index d1 = 300;
  const Index d2 = 200;
  const auto model = sensing::make_ground_truth(d1, d2, 3, 67);
  auto config = desk_config(d1, d2, 3, 500, 1, 67);
  const auto init_batch =
      sensing::sample_batch(model, 500, sensing::NoiseSpec::none(), 68);
  auto state = solver::init_state(init_batch, config);
  const auto step_batch =
      sensing::sample_batch(model, 500, sensing::NoiseSpec::none(), 69);

  onebit::AllocStats::reset();
  state = solver::solver_step(state, step_batch, config);
  const auto largest = onebit::AllocStats::largest_block();
  CHECK(largest < static_cast<std::uint64_t>((d1 + d2)) *
                      static_cast<std::uint64_t>(d1 + d2));
  // The documented workspace is d1 x d2.
  CHECK(largest <= static_cast<std::uint64_t>(d1) * static_cast<std::uint64_t>(d2));
}

TEST_CASE("inverted labels align the subspace but not the signs") {
  // With every label flipped the plug-in expectation is the negated target;
  // the dilated spectrum is sign-symmetric, so the learned subspace still
  // lines up while the recovery error saturates near 2 ||W*||_2.
  const auto model = sensing::make_ground_truth(40, 16, 2, 71);
  auto config = desk_config(40, 16, 2, 20000, 6, 71);
  solver::EvalOptions eval;
  eval.n_test = 0;
  const auto result =
      solver::run(config, model, sensing::NoiseSpec::flip(1.0), eval);
  const double w_star_norm = linalg::jacobi_svd(model.w_star).sigma.front();
  const auto& last = result.history.back();
  CHECK(last.tan_theta <= 0.2);
  CHECK(last.recovery_error >= 1.5 * w_star_norm);
  CHECK(last.recovery_error <= 2.5 * w_star_norm);
}

TEST_CASE("rank-deficient power step reports the iteration") {
  // Rank-1 iterate with a clean batch makes H = 0 and M = W, whose dilation
  // has rank 2 < 2k = 4, so the QR step must flag a dependent column.
  const Index d1 = 5;
  const Index d2 = 2;
  DenseMatrix w(d1, d2);
  onebit::CounterRng rng(3, onebit::Rng::misc, 30, 0);
  for (Index i = 0; i < d1; ++i) w(i, 0) = rng.next_gaussian();
  const double norm = w.column_norm(0);
  for (Index i = 0; i < d1; ++i) {
    w(i, 0) /= norm;
    w(i, 1) = w(i, 0);  // duplicate column, rank 1
  }
  auto config = desk_config(d1, d2, 2, 50, 1, 3);

  sensing::MiniBatch batch(d1, 50, d2);
  for (Index i = 0; i < 50; ++i) {
    auto xi = batch.x.col(i);
    for (Index r = 0; r < d1; ++r) xi[r] = rng.next_gaussian();
    batch.class_index[static_cast<std::size_t>(i)] =
        i % 2 == 0 ? Index{0} : Index{1};
  }
  sensing::fill_clean_labels(batch, w);

  const OrthonormalBasis u = linalg::qr_thin([&]() {
    DenseMatrix block(d1 + d2, 4);
    for (Index i = 0; i < block.size(); ++i) block.data()[i] = rng.next_gaussian();
    return block;
  }()).q;
  solver::FactoredIterate state{u, DenseMatrix(d1 + d2, 4), w, 3, 0};
  try {
    solver::solver_step(state, batch, config);
    FAIL("expected RankDeficiencyError");
  } catch (const onebit::RankDeficiencyError& e) {
    CHECK(e.iteration() == 4);
  }
}
