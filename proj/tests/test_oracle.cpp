#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "core/linalg.hpp"
#include "core/oracle.hpp"
#include "core/rng.hpp"
#include "core/sensing.hpp"
#include "core/solver.hpp"

using onebit::DenseMatrix;
using onebit::Index;
namespace oracle = onebit::oracle;
namespace sensing = onebit::sensing;
namespace linalg = onebit::linalg;

namespace {

constexpr double kLambda = 0.7978845608028654;

std::vector<double> unit_e1(Index d) {
  std::vector<double> w(static_cast<std::size_t>(d), 0.0);
  w[0] = 1.0;
  return w;
}

std::vector<double> random_unit(Index d, std::uint64_t seed) {
  std::vector<double> w(static_cast<std::size_t>(d));
  onebit::CounterRng rng(seed, onebit::Rng::misc, 21, 0);
  double n2 = 0.0;
  for (double& v : w) {
    v = rng.next_gaussian();
    n2 += v * v;
  }
  for (double& v : w) v /= std::sqrt(n2);
  return w;
}

}  // namespace

TEST_CASE("scalar plug-in constant matches E|g|") {
  const auto [estimate, report] = oracle::mc_lemma1_vector({1.0}, 1000000, 3);
  CHECK(std::abs(estimate[0] - kLambda) <= 0.003);
  CHECK(report.pass);
}

TEST_CASE("vector plug-in expectation within the CLT allowance") {
  const auto [estimate, report] =
      oracle::mc_lemma1_vector(unit_e1(20), 1000000, 5);
  CHECK(report.statistic <= 0.015);
  CHECK(report.pass);
}

TEST_CASE("plug-in error statistic is rotation invariant") {
  const Index n = 250000;
  const auto e1 = oracle::mc_lemma1_vector(unit_e1(20), n, 7);
  const auto rotated = oracle::mc_lemma1_vector(random_unit(20, 8), n, 7);
  const double tol = e1.report.bound_or_target;
  CHECK(std::abs(e1.report.statistic - rotated.report.statistic) <= 2.0 * tol);
}

TEST_CASE("matrix plug-in expectation recovers the identity") {
  const auto [estimate, report] =
      oracle::mc_lemma1_matrix(DenseMatrix::identity(2), 1000000, 11);
  DenseMatrix rescaled = estimate;
  rescaled.scale(std::sqrt(2.0) / kLambda);
  const DenseMatrix gap = onebit::subtract(rescaled, DenseMatrix::identity(2));
  CHECK(gap.max_abs() <= 0.01);
  CHECK(report.pass);
}

TEST_CASE("matrix plug-in error shrinks when n quadruples") {
  const auto small = oracle::mc_lemma1_matrix(DenseMatrix::identity(2), 100000, 13);
  const auto large = oracle::mc_lemma1_matrix(DenseMatrix::identity(2), 400000, 13);
  const double ratio = large.report.statistic / small.report.statistic;
  CHECK(ratio <= 1.0);
  CHECK(ratio >= 0.25 * 0.5);
}

TEST_CASE("matrix plug-in treats identical columns alike") {
  DenseMatrix w(3, 2);
  w(0, 0) = 0.6;
  w(1, 0) = 0.8;
  w(0, 1) = 0.6;
  w(1, 1) = 0.8;
  const auto [estimate, report] = oracle::mc_lemma1_matrix(w, 400000, 17);
  for (Index i = 0; i < 3; ++i) {
    CHECK(std::abs(estimate(i, 0) - estimate(i, 1)) <=
          2.0 * report.bound_or_target);
  }
}

TEST_CASE("closed-form second moment vanishes at alpha zero") {
  CHECK(oracle::closed_form_second_moment(0.0, 4).max_abs() == 0.0);
}

TEST_CASE("closed-form second moment at the right angle") {
  const DenseMatrix m =
      oracle::closed_form_second_moment(std::numbers::pi / 2.0, 3);
  CHECK(m(0, 0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m(1, 1) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m(2, 2) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m(0, 1) == doctest::Approx(-4.0 / std::numbers::pi).epsilon(1e-12));
}

TEST_CASE("closed-form trace identity") {
  for (double alpha : {0.1, 0.5, std::numbers::pi / 4.0, 1.3}) {
    for (Index d : {2, 3, 5, 9}) {
      const DenseMatrix m = oracle::closed_form_second_moment(alpha, d);
      double trace = 0.0;
      for (Index i = 0; i < d; ++i) trace += m(i, i);
      const double want = 4.0 * static_cast<double>(d) * alpha / std::numbers::pi;
      CHECK(trace == doctest::Approx(want).epsilon(1e-12));
    }
  }
  // alpha = pi/4, d = 5 pins the trace at exactly 5.
  const DenseMatrix m =
      oracle::closed_form_second_moment(std::numbers::pi / 4.0, 5);
  double trace = 0.0;
  for (Index i = 0; i < 5; ++i) trace += m(i, i);
  CHECK(trace == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("second moment of identical directions is zero") {
  const auto w = random_unit(5, 23);
  const auto [estimate, report] = oracle::mc_second_moment(w, w, 1000, 25);
  CHECK(estimate.max_abs() == 0.0);
  CHECK(report.pass);
}

TEST_CASE("Monte Carlo adjudicates the closed-form second moment") {
  // This check is the arbiter for the closed forms used everywhere else.
  const Index d = 5;
  const double alpha = std::numbers::pi / 4.0;
  std::vector<double> w = unit_e1(d);
  std::vector<double> wp(static_cast<std::size_t>(d), 0.0);
  wp[0] = std::cos(alpha);
  wp[1] = std::sin(alpha);
  const auto [estimate, report] = oracle::mc_second_moment(w, wp, 10000000, 29);
  CHECK(report.statistic <= 0.01);
  CHECK(report.pass);
}

TEST_CASE("second moment works off the canonical frame") {
  // Rotated directions exercise the frame-reconstruction path.
  const Index d = 4;
  auto w = random_unit(d, 31);
  auto other = random_unit(d, 37);
  // Force a positive inner product (the hypothesis of the bound).
  double inner = 0.0;
  for (Index i = 0; i < d; ++i) {
    inner += w[static_cast<std::size_t>(i)] * other[static_cast<std::size_t>(i)];
  }
  if (inner < 0.0) {
    for (double& v : other) v = -v;
  }
  const auto [estimate, report] = oracle::mc_second_moment(w, other, 2000000, 41);
  CHECK(report.pass);
}

TEST_CASE("fitted spectral constant stays bounded on the alpha grid") {
  const double grid[] = {0.1, 0.3, 0.7, 1.2, std::numbers::pi / 2.0};
  for (double alpha : grid) {
    const DenseMatrix m = oracle::closed_form_second_moment(alpha, 5);
    const double norm = linalg::jacobi_svd(m).sigma.front();
    const double gap = 2.0 * std::sin(alpha / 2.0);  // ||w - w'|| at angle alpha
    CHECK(norm / gap <= 4.0);
  }
}

TEST_CASE("rip residual vanishes when both arguments agree") {
  const auto model = sensing::make_ground_truth(10, 4, 2, 43);
  const auto batch =
      sensing::sample_batch(model, 500, sensing::NoiseSpec::none(), 44);
  CHECK(oracle::rip_residual(model.w_star, model.w_star, batch) == 0.0);
}

TEST_CASE("rip residual is symmetric under swapping the arguments") {
  const auto a = sensing::make_ground_truth(10, 4, 2, 47);
  const auto b = sensing::make_ground_truth(10, 4, 2, 48);
  const auto batch =
      sensing::sample_batch(a, 2000, sensing::NoiseSpec::none(), 49);
  const double fwd = oracle::rip_residual(a.w_star, b.w_star, batch);
  const double rev = oracle::rip_residual(b.w_star, a.w_star, batch);
  CHECK(fwd == doctest::Approx(rev).epsilon(1e-10));
}

TEST_CASE("rip residual decays with the batch size") {
  const auto a = sensing::make_ground_truth(50, 20, 3, 53);
  const auto b = sensing::make_ground_truth(50, 20, 3, 54);
  auto median_residual = [&](Index m) {
    std::vector<double> residuals;
    for (std::uint64_t trial = 0; trial < 9; ++trial) {
      const auto batch = sensing::sample_batch(
          a, m, sensing::NoiseSpec::none(), onebit::derive_seed(55, trial));
      residuals.push_back(oracle::rip_residual(a.w_star, b.w_star, batch));
    }
    std::sort(residuals.begin(), residuals.end());
    return residuals[4];
  };
  const double coarse = median_residual(2000);
  const double fine = median_residual(32000);
  CHECK(fine < coarse);
  // 16x more samples should shrink the residual by roughly 4x.
  CHECK(fine <= 0.5 * coarse);
}

TEST_CASE("dilation spectrum pairs for a unit column") {
  DenseMatrix w(2, 1);
  w(0, 0) = 0.6;
  w(1, 0) = 0.8;
  const auto report = oracle::check_dilation_spectrum(w);
  CHECK(report.pass);
}

TEST_CASE("dilation spectrum pairs for a diagonal matrix") {
  DenseMatrix w(2, 2);
  w(0, 0) = 2.0;
  w(1, 1) = 1.0;
  const auto report = oracle::check_dilation_spectrum(w);
  CHECK(report.pass);
  CHECK(report.statistic <= 1e-12);
}

TEST_CASE("dilation spectrum pairs on random matrices") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    DenseMatrix w(10, 6);
    onebit::CounterRng rng(seed, onebit::Rng::misc, 22, 0);
    for (Index i = 0; i < w.size(); ++i) w.data()[i] = rng.next_gaussian();
    CHECK(oracle::check_dilation_spectrum(w).pass);
  }
}

TEST_CASE("normalization loss holds with equality at the target") {
  const auto model = sensing::make_ground_truth(12, 6, 3, 59);
  const auto report =
      oracle::check_normalization_loss(model, model.w_star, 3);
  CHECK(report.pass);
  CHECK(report.statistic <= 1e-10);
}

TEST_CASE("normalization undoes a global rescaling") {
  const auto model = sensing::make_ground_truth(12, 6, 3, 61);
  DenseMatrix doubled = model.w_star;
  doubled.scale(2.0);
  const auto report = oracle::check_normalization_loss(model, doubled, 3);
  CHECK(report.pass);
  CHECK(report.statistic <= 1e-10);  // normalization restores the target
}

TEST_CASE("normalization loss inequality holds across random candidates") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto model = sensing::make_ground_truth(30, 12, 3, 6000 + seed);
    onebit::CounterRng rng(seed, onebit::Rng::misc, 23, 0);
    DenseMatrix p(30, 3);
    DenseMatrix q(12, 3);
    for (Index i = 0; i < p.size(); ++i) p.data()[i] = rng.next_gaussian();
    for (Index i = 0; i < q.size(); ++i) q.data()[i] = rng.next_gaussian();
    const double scale = std::pow(10.0, -2.0 + 3.0 * (static_cast<double>(seed) / 200.0));
    DenseMatrix w_tilde = model.w_star;
    for (Index j = 0; j < 12; ++j) {
      auto wj = w_tilde.col(j);
      for (Index c = 0; c < 3; ++c) {
        const double f = q(j, c) * scale / std::sqrt(30.0);
        auto pc = p.col(c);
        for (Index i = 0; i < 30; ++i) wj[i] += pc[i] * f;
      }
    }
    CHECK(oracle::check_normalization_loss(model, w_tilde, 3).pass);
  }
}

TEST_CASE("wedin check is exact at zero perturbation") {
  const auto model = sensing::make_ground_truth(10, 5, 2, 67);
  const auto report = oracle::check_wedin_init(model.w_star, 0.0, 3, 68);
  CHECK(report.pass);
  CHECK(report.statistic <= 1e-8);
}

TEST_CASE("wedin bound holds for a spread spectrum") {
  // Rank-3 target with singular values (3, 2, 1).
  onebit::CounterRng rng(71, onebit::Rng::misc, 24, 0);
  DenseMatrix a(12, 3);
  DenseMatrix b(7, 3);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = rng.next_gaussian();
  for (Index i = 0; i < b.size(); ++i) b.data()[i] = rng.next_gaussian();
  const auto qa = linalg::qr_thin(a).q;
  const auto qb = linalg::qr_thin(b).q;
  const double spectrum[] = {3.0, 2.0, 1.0};
  DenseMatrix w(12, 7);
  for (Index c = 0; c < 3; ++c) {
    for (Index j = 0; j < 7; ++j) {
      for (Index i = 0; i < 12; ++i) {
        w(i, j) += spectrum[c] * qa.matrix()(i, c) * qb.matrix()(j, c);
      }
    }
  }
  const auto report = oracle::check_wedin_init(w, 0.2, 100, 73);
  CHECK(report.pass);
  CHECK(report.statistic <= 1.0);
}

TEST_CASE("wedin check rejects an oversized perturbation") {
  const auto model = sensing::make_ground_truth(10, 5, 2, 79);
  const double sigma_k = model.sigma.back();
  CHECK_THROWS_AS(
      oracle::check_wedin_init(model.w_star, sigma_k / 3.0, 2, 80),
      onebit::ConfigError);
}

TEST_CASE("Monte-Carlo error scales like the square root of n") {
  // Median over a few seeds keeps the ratio stable.
  auto median_error = [](Index n) {
    std::vector<double> errors;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      errors.push_back(
          oracle::mc_lemma1_vector(unit_e1(10), n, 9000 + seed).report.statistic);
    }
    std::sort(errors.begin(), errors.end());
    return errors[2];
  };
  const double coarse = median_error(40000);
  const double fine = median_error(16 * 40000);
  const double ratio = fine / coarse;
  CHECK(ratio <= 0.5);
  CHECK(ratio >= 0.125);
}

TEST_CASE("oracle reports are deterministic and serializable") {
  const auto a = oracle::mc_lemma1_vector(unit_e1(6), 50000, 83);
  const auto b = oracle::mc_lemma1_vector(unit_e1(6), 50000, 83);
  CHECK(a.report.statistic == b.report.statistic);
  const auto j = a.report.to_json();
  CHECK(j.contains("name"));
  CHECK(j.contains("parameters"));
  CHECK(j.contains("statistic"));
  CHECK(j.contains("bound"));
  CHECK(j.contains("tolerance"));
  CHECK(j.contains("pass"));
  CHECK(j.contains("n_samples"));
  CHECK(j.contains("seed"));
  CHECK(a.report.to_json().dump() == b.report.to_json().dump());
}

TEST_CASE("dilation check refuses production-size inputs") {
  CHECK_THROWS_AS(oracle::check_dilation_spectrum(DenseMatrix(1500, 600)),
                  onebit::ConfigError);
}

TEST_CASE("second moment requires an acute angle") {
  const auto w = random_unit(4, 91);
  std::vector<double> opposite = w;
  for (double& v : opposite) v = -v;
  CHECK_THROWS_AS(oracle::mc_second_moment(w, opposite, 100, 1),
                  onebit::ConfigError);
}

TEST_CASE("lemma oracles insist on unit inputs") {
  CHECK_THROWS_AS(oracle::mc_lemma1_vector({2.0, 0.0}, 10, 1),
                  onebit::ConfigError);
  DenseMatrix w(3, 2);
  w(0, 0) = 2.0;
  w(0, 1) = 1.0;
  CHECK_THROWS_AS(oracle::mc_lemma1_matrix(w, 10, 1), onebit::ConfigError);
}
