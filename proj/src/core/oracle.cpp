#include "core/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "core/error.hpp"
#include "core/linalg.hpp"
#include "core/rng.hpp"
#include "core/solver.hpp"
#include "core/threading.hpp"

namespace onebit::oracle {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLambda = solver::kPlugInLambda;
constexpr Index kDilationCap = 2000;

void require_unit(const std::vector<double>& w, const char* who) {
  double n2 = 0.0;
  for (double v : w) n2 += v * v;
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-10) {
    throw ConfigError("w", std::string(who) + ": vector must be unit norm");
  }
}

DenseMatrix materialize_dilation(const DenseMatrix& w) {
  const Index d1 = w.rows();
  const Index d2 = w.cols();
  if (d1 + d2 > kDilationCap) {
    throw ConfigError("d1+d2",
                      "dilation checks are test-scale only (d1+d2 <= 2000)");
  }
  DenseMatrix d(d1 + d2, d1 + d2);
  for (Index j = 0; j < d2; ++j) {
    for (Index i = 0; i < d1; ++i) {
      d(i, d1 + j) = w(i, j);
      d(d1 + j, i) = w(i, j);
    }
  }
  return d;
}

// Columns of the eigenvector matrix for the `count` largest-magnitude
// eigenvalues.
OrthonormalBasis top_magnitude_eigenspace(const linalg::SymmetricEigen& eig,
                                          Index count) {
  const Index n = eig.vectors.rows();
  std::vector<Index> order(eig.values.size());
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(eig.values[static_cast<std::size_t>(a)]) >
           std::abs(eig.values[static_cast<std::size_t>(b)]);
  });
  DenseMatrix q(n, count);
  for (Index c = 0; c < count; ++c) {
    auto src = eig.vectors.col(order[static_cast<std::size_t>(c)]);
    auto dst = q.col(c);
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return OrthonormalBasis(std::move(q));
}

double spectral_norm_exact(const DenseMatrix& m) {
  return linalg::jacobi_svd(m).sigma.front();
}

}  // namespace

nlohmann::ordered_json OracleReport::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  nlohmann::ordered_json params;
  for (const auto& [key, value] : parameters) params[key] = value;
  j["parameters"] = params;
  j["statistic"] = statistic;
  j[kind == Kind::target ? "target" : "bound"] = bound_or_target;
  j["tolerance"] = tolerance;
  j["pass"] = pass;
  j["n_samples"] = n_samples;
  j["seed"] = seed;
  return j;
}

VectorEstimate mc_lemma1_vector(const std::vector<double>& w, Index n,
                                std::uint64_t seed) {
  require_unit(w, "mc_lemma1_vector");
  const Index d = static_cast<Index>(w.size());
  const Index n_chunks = (n + kChunkSize - 1) / kChunkSize;
  DenseMatrix partials(d, n_chunks);
  parallel_chunks(n, kChunkSize, [&](Index chunk, Index begin, Index end) {
    auto acc = partials.col(chunk);
    std::vector<double> g(static_cast<std::size_t>(d));
    for (Index i = begin; i < end; ++i) {
      CounterRng rng(seed, Rng::mc, 0, static_cast<std::uint64_t>(i));
      double margin = 0.0;
      for (Index r = 0; r < d; ++r) {
        g[static_cast<std::size_t>(r)] = rng.next_gaussian();
        margin += g[static_cast<std::size_t>(r)] * w[static_cast<std::size_t>(r)];
      }
      const double s = sensing::sign_scalar(margin);
      for (Index r = 0; r < d; ++r) acc[r] += s * g[static_cast<std::size_t>(r)];
    }
  });

  VectorEstimate out{std::vector<double>(static_cast<std::size_t>(d), 0.0), {}};
  for (Index c = 0; c < n_chunks; ++c) {
    auto col = partials.col(c);
    for (Index r = 0; r < d; ++r) out.estimate[static_cast<std::size_t>(r)] += col[r];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double err2 = 0.0;
  for (Index r = 0; r < d; ++r) {
    out.estimate[static_cast<std::size_t>(r)] *= inv_n;
    const double diff =
        out.estimate[static_cast<std::size_t>(r)] - kLambda * w[static_cast<std::size_t>(r)];
    err2 += diff * diff;
  }

  OracleReport& rep = out.report;
  rep.name = "lemma1_vector";
  rep.parameters = {{"d", static_cast<double>(d)}};
  rep.statistic = std::sqrt(err2);
  rep.bound_or_target = 3.0 * std::sqrt(static_cast<double>(d) / static_cast<double>(n));
  rep.tolerance = 0.0;
  rep.kind = OracleReport::Kind::bound;
  rep.n_samples = n;
  rep.seed = seed;
  rep.finalize();
  return out;
}

MatrixEstimate mc_lemma1_matrix(const DenseMatrix& w, Index n,
                                std::uint64_t seed) {
  const Index d1 = w.rows();
  const Index d2 = w.cols();
  for (Index j = 0; j < d2; ++j) {
    if (std::abs(w.column_norm(j) - 1.0) > 1e-10) {
      throw ConfigError("W", "mc_lemma1_matrix: columns must be unit norm");
    }
  }
  const double scale = std::sqrt(static_cast<double>(d2));
  const Index n_chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<DenseMatrix> partials;
  partials.reserve(static_cast<std::size_t>(n_chunks));
  for (Index c = 0; c < n_chunks; ++c) partials.emplace_back(d1, d2);

  parallel_chunks(n, kChunkSize, [&](Index chunk, Index begin, Index end) {
    DenseMatrix& acc = partials[static_cast<std::size_t>(chunk)];
    std::vector<double> x(static_cast<std::size_t>(d1));
    for (Index i = begin; i < end; ++i) {
      CounterRng xrng(seed, Rng::mc, 1, static_cast<std::uint64_t>(i));
      for (Index r = 0; r < d1; ++r) x[static_cast<std::size_t>(r)] = xrng.next_gaussian();
      CounterRng crng(seed, Rng::mc, 2, static_cast<std::uint64_t>(i));
      const Index j =
          static_cast<Index>(crng.next_below(static_cast<std::uint64_t>(d2)));
      const double margin =
          scale * dot(std::span<const double>(x), w.col(j));
      const double s = sensing::sign_scalar(margin) * scale;
      auto aj = acc.col(j);
      for (Index r = 0; r < d1; ++r) aj[r] += s * x[static_cast<std::size_t>(r)];
    }
  });

  MatrixEstimate out{DenseMatrix(d1, d2), {}};
  for (Index c = 0; c < n_chunks; ++c) add_scaled(out.estimate, partials[static_cast<std::size_t>(c)], 1.0);
  out.estimate.scale(1.0 / static_cast<double>(n));

  DenseMatrix rescaled = out.estimate;
  rescaled.scale(scale / kLambda);
  const DenseMatrix diff = subtract(rescaled, w);

  OracleReport& rep = out.report;
  rep.name = "lemma1_matrix";
  rep.parameters = {{"d1", static_cast<double>(d1)}, {"d2", static_cast<double>(d2)}};
  rep.statistic = diff.max_abs();
  rep.bound_or_target =
      (3.0 / kLambda) *
      std::sqrt(static_cast<double>(d1 * d2) / static_cast<double>(n));
  rep.tolerance = 0.0;
  rep.kind = OracleReport::Kind::bound;
  rep.n_samples = n;
  rep.seed = seed;
  rep.finalize();
  return out;
}

DenseMatrix closed_form_second_moment(double alpha, Index d) {
  if (!(alpha >= 0.0 && alpha <= kPi / 2.0 + 1e-15)) {
    throw ConfigError("alpha", "closed_form_second_moment: alpha in [0, pi/2]");
  }
  if (d < 2) throw ConfigError("d", "closed_form_second_moment: d >= 2");
  DenseMatrix m(d, d);
  const double base = 4.0 * alpha / kPi;
  m(0, 0) = (4.0 * alpha - 2.0 * std::sin(2.0 * alpha)) / kPi;
  m(1, 1) = (4.0 * alpha + 2.0 * std::sin(2.0 * alpha)) / kPi;
  const double s = std::sin(alpha);
  m(0, 1) = m(1, 0) = -(4.0 / kPi) * s * s;
  for (Index i = 2; i < d; ++i) m(i, i) = base;
  return m;
}

MatrixEstimate mc_second_moment(const std::vector<double>& w,
                                const std::vector<double>& w_prime, Index n,
                                std::uint64_t seed) {
  require_unit(w, "mc_second_moment");
  require_unit(w_prime, "mc_second_moment");
  const Index d = static_cast<Index>(w.size());
  if (w_prime.size() != w.size()) {
    throw DimensionError("mc_second_moment: vectors must share dimension");
  }
  double cosine = 0.0;
  double gap2 = 0.0;
  for (Index r = 0; r < d; ++r) {
    cosine += w[static_cast<std::size_t>(r)] * w_prime[static_cast<std::size_t>(r)];
    const double diff = w[static_cast<std::size_t>(r)] - w_prime[static_cast<std::size_t>(r)];
    gap2 += diff * diff;
  }
  if (cosine < -1e-12) {
    throw ConfigError("w'", "mc_second_moment: needs arccos<w, w'> <= pi/2");
  }
  cosine = std::clamp(cosine, -1.0, 1.0);
  const double alpha = std::acos(cosine);
  const double gap = std::sqrt(gap2);

  MatrixEstimate out{DenseMatrix(d, d), {}};
  OracleReport& rep = out.report;
  rep.name = "lemma2_second_moment";
  rep.kind = OracleReport::Kind::target;
  rep.n_samples = n;
  rep.seed = seed;
  rep.bound_or_target = 0.0;

  if (gap == 0.0) {
    rep.parameters = {{"alpha", 0.0}, {"gap", 0.0}};
    rep.statistic = 0.0;
    rep.tolerance = 0.0;
    rep.pass = true;
    return out;
  }

  const Index n_chunks = (n + kChunkSize - 1) / kChunkSize;
  std::vector<DenseMatrix> partials;
  partials.reserve(static_cast<std::size_t>(n_chunks));
  for (Index c = 0; c < n_chunks; ++c) partials.emplace_back(d, d);

  parallel_chunks(n, kChunkSize, [&](Index chunk, Index begin, Index end) {
    DenseMatrix& acc = partials[static_cast<std::size_t>(chunk)];
    std::vector<double> g(static_cast<std::size_t>(d));
    for (Index i = begin; i < end; ++i) {
      CounterRng rng(seed, Rng::mc, 3, static_cast<std::uint64_t>(i));
      double m1 = 0.0;
      double m2 = 0.0;
      for (Index r = 0; r < d; ++r) {
        const double gr = rng.next_gaussian();
        g[static_cast<std::size_t>(r)] = gr;
        m1 += gr * w[static_cast<std::size_t>(r)];
        m2 += gr * w_prime[static_cast<std::size_t>(r)];
      }
      if (sensing::sign_scalar(m1) == sensing::sign_scalar(m2)) continue;
      // |sign difference|^2 = 4 on the disagreement event.
      for (Index c = 0; c < d; ++c) {
        const double f = 4.0 * g[static_cast<std::size_t>(c)];
        auto col = acc.col(c);
        for (Index r = 0; r < d; ++r) col[r] += f * g[static_cast<std::size_t>(r)];
      }
    }
  });

  for (Index c = 0; c < n_chunks; ++c) add_scaled(out.estimate, partials[static_cast<std::size_t>(c)], 1.0);
  out.estimate.scale(1.0 / static_cast<double>(n));

  // Rotate the closed form out of the canonical frame:
  //   E = c11 w w^T + c12 (w u^T + u w^T) + c22 u u^T + base (I - ww^T - uu^T)
  // with u the unit in-plane direction orthogonal to w.
  std::vector<double> u(static_cast<std::size_t>(d), 0.0);
  const double sin_alpha = std::sin(alpha);
  for (Index r = 0; r < d; ++r) {
    u[static_cast<std::size_t>(r)] =
        (w_prime[static_cast<std::size_t>(r)] - cosine * w[static_cast<std::size_t>(r)]) /
        sin_alpha;
  }
  const DenseMatrix canon = closed_form_second_moment(alpha, d);
  const double c11 = canon(0, 0);
  const double c22 = canon(1, 1);
  const double c12 = canon(0, 1);
  const double base = 4.0 * alpha / kPi;
  DenseMatrix expected(d, d);
  for (Index c = 0; c < d; ++c) {
    for (Index r = 0; r < d; ++r) {
      const double wr = w[static_cast<std::size_t>(r)];
      const double wc = w[static_cast<std::size_t>(c)];
      const double ur = u[static_cast<std::size_t>(r)];
      const double uc = u[static_cast<std::size_t>(c)];
      double v = c11 * wr * wc + c22 * ur * uc + c12 * (wr * uc + ur * wc);
      v += base * ((r == c ? 1.0 : 0.0) - wr * wc - ur * uc);
      expected(r, c) = v;
    }
  }

  const DenseMatrix diff = subtract(out.estimate, expected);
  double trace = 0.0;
  for (Index r = 0; r < d; ++r) trace += out.estimate(r, r);
  const double norm2 = spectral_norm_exact(out.estimate);

  rep.parameters = {
      {"d", static_cast<double>(d)},
      {"alpha", alpha},
      {"gap", gap},
      {"c1_fitted", norm2 / gap},
      {"c2_fitted", trace / (static_cast<double>(d) * gap)},
      {"trace", trace},
      {"trace_expected", base * static_cast<double>(d)},
  };
  rep.statistic = diff.max_abs();
  rep.tolerance = 32.0 / std::sqrt(static_cast<double>(n));
  rep.finalize();
  return out;
}

double rip_residual(const DenseMatrix& w, const DenseMatrix& w_prime,
                    const sensing::MiniBatch& batch) {
  if (w.rows() != w_prime.rows() || w.cols() != w_prime.cols()) {
    throw DimensionError("rip_residual: shapes differ");
  }
  const Index d1 = w.rows();
  const Index d2 = w.cols();
  std::vector<double> sw = sensing::apply_sensing(w, batch);
  std::vector<double> swp = sensing::apply_sensing(w_prime, batch);
  for (Index i = 0; i < batch.m; ++i) {
    sw[static_cast<std::size_t>(i)] =
        sensing::sign_scalar(sw[static_cast<std::size_t>(i)]) -
        sensing::sign_scalar(swp[static_cast<std::size_t>(i)]);
  }
  DenseMatrix est = sensing::apply_adjoint(sw, batch, d1, d2);
  est.scale(std::sqrt(static_cast<double>(d2)) /
            (kLambda * static_cast<double>(batch.m)));
  add_scaled(est, w, -1.0);
  add_scaled(est, w_prime, 1.0);
  if (est.max_abs() == 0.0) return 0.0;
  return linalg::spectral_norm(est, 1e-8, 2000, 0);
}

OracleReport check_dilation_spectrum(const DenseMatrix& w) {
  const DenseMatrix dilation = materialize_dilation(w);
  const linalg::SymmetricEigen eig = linalg::jacobi_eigen(dilation);
  const linalg::Svd svd = linalg::jacobi_svd(w);
  const Index n = dilation.rows();
  const Index p = static_cast<Index>(svd.sigma.size());

  double worst = 0.0;
  for (Index i = 0; i < p; ++i) {
    const double sigma = svd.sigma[static_cast<std::size_t>(i)];
    worst = std::max(worst,
                     std::abs(eig.values[static_cast<std::size_t>(i)] - sigma));
    worst = std::max(
        worst,
        std::abs(eig.values[static_cast<std::size_t>(n - 1 - i)] + sigma));
  }
  for (Index i = p; i < n - p; ++i) {
    worst = std::max(worst, std::abs(eig.values[static_cast<std::size_t>(i)]));
  }
  const double norm_gap =
      std::abs(std::max(std::abs(eig.values.front()), std::abs(eig.values.back())) -
               svd.sigma.front());

  OracleReport rep;
  rep.name = "dilation_spectrum";
  rep.parameters = {{"d1", static_cast<double>(w.rows())},
                    {"d2", static_cast<double>(w.cols())},
                    {"norm_gap", norm_gap}};
  rep.statistic = std::max(worst, norm_gap);
  rep.bound_or_target = 1e-8;
  rep.tolerance = 0.0;
  rep.kind = OracleReport::Kind::bound;
  rep.n_samples = 0;
  rep.seed = 0;
  rep.finalize();
  return rep;
}

OracleReport check_normalization_loss(const sensing::GroundTruthModel& model,
                                      const DenseMatrix& w_tilde, Index k) {
  if (w_tilde.rows() != model.d1() || w_tilde.cols() != model.d2()) {
    throw DimensionError("check_normalization_loss: shape mismatch");
  }
  DenseMatrix normalized = w_tilde;
  DenseMatrix zero(w_tilde.rows(), w_tilde.cols());
  solver::normalize_columns(normalized, zero, 1e-12, nullptr);

  const double lhs = spectral_norm_exact(subtract(model.w_star, normalized));
  const double rhs_norm = spectral_norm_exact(subtract(model.w_star, w_tilde));
  const double rhs = 4.0 * std::sqrt(static_cast<double>(k)) * rhs_norm;

  OracleReport rep;
  rep.name = "normalization_loss";
  rep.parameters = {{"k", static_cast<double>(k)},
                    {"lhs", lhs},
                    {"rhs", rhs}};
  rep.statistic = lhs;
  rep.bound_or_target = rhs;
  rep.tolerance = 1e-9 * std::max(1.0, rhs);
  rep.kind = OracleReport::Kind::bound;
  rep.n_samples = 0;
  rep.seed = 0;
  rep.finalize();
  return rep;
}

OracleReport check_wedin_init(const DenseMatrix& w, double eps, Index trials,
                              std::uint64_t seed) {
  const linalg::Svd svd = linalg::jacobi_svd(w);
  const double sigma1 = svd.sigma.front();
  Index rank = 0;
  for (double s : svd.sigma) {
    if (s > 1e-10 * sigma1) ++rank;
  }
  if (rank < 1) throw ConfigError("W", "check_wedin_init: zero matrix");
  const double sigma_k = svd.sigma[static_cast<std::size_t>(rank - 1)];
  const double sigma_next =
      rank < static_cast<Index>(svd.sigma.size())
          ? svd.sigma[static_cast<std::size_t>(rank)]
          : 0.0;
  const double gap = sigma_k - sigma_next;
  if (eps < 0.0 || eps > gap / 4.0) {
    throw ConfigError("eps", "check_wedin_init: needs eps <= (sigma_2k - sigma_2k+1)/4");
  }

  const DenseMatrix dilation = materialize_dilation(w);
  const Index n = dilation.rows();
  const OrthonormalBasis top =
      top_magnitude_eigenspace(linalg::jacobi_eigen(dilation), 2 * rank);
  const double bound = gap > 0.0 ? 2.0 * eps / gap : 0.0;

  double worst_ratio = 0.0;
  for (Index trial = 0; trial < trials; ++trial) {
    CounterRng rng(seed, Rng::perturb, static_cast<std::uint64_t>(trial), 0);
    DenseMatrix noise(n, n);
    for (Index i = 0; i < n; ++i) {
      noise(i, i) = rng.next_gaussian();
      for (Index j = i + 1; j < n; ++j) {
        const double g = rng.next_gaussian();
        noise(i, j) = g;
        noise(j, i) = g;
      }
    }
    if (eps > 0.0) {
      const double norm = linalg::spectral_norm(
          noise, 1e-12, 20000, derive_seed(seed, static_cast<std::uint64_t>(trial)));
      noise.scale(eps / norm);
    } else {
      noise.scale(0.0);
    }
    DenseMatrix perturbed = dilation;
    add_scaled(perturbed, noise, 1.0);
    const OrthonormalBasis top_perturbed =
        top_magnitude_eigenspace(linalg::jacobi_eigen(perturbed), 2 * rank);
    const double sin_theta =
        linalg::sin_largest_principal_angle(top, top_perturbed);
    const double ratio = bound > 0.0 ? sin_theta / bound : sin_theta;
    worst_ratio = std::max(worst_ratio, ratio);
  }

  OracleReport rep;
  rep.name = "wedin_perturbation";
  rep.parameters = {{"rank", static_cast<double>(rank)},
                    {"eps", eps},
                    {"gap", gap},
                    {"trials", static_cast<double>(trials)},
                    {"worst_ratio", worst_ratio}};
  rep.statistic = worst_ratio;
  rep.bound_or_target = 1.0;
  rep.tolerance = 0.0;
  rep.kind = OracleReport::Kind::bound;
  rep.n_samples = trials;
  rep.seed = seed;
  rep.finalize();
  return rep;
}

}  // namespace onebit::oracle
