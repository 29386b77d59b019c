#include "core/sensing.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"
#include "core/linalg.hpp"
#include "core/rng.hpp"
#include "core/threading.hpp"

namespace onebit::sensing {

NoiseSpec NoiseSpec::gaussian(double xi) {
  if (xi < 0.0) throw ConfigError("xi", "gaussian noise needs xi >= 0");
  NoiseSpec n;
  n.kind = Kind::gaussian;
  n.xi = xi;
  return n;
}

NoiseSpec NoiseSpec::flip(double p) {
  if (p < 0.0 || p > 1.0) throw ConfigError("p", "flip noise needs p in [0, 1]");
  NoiseSpec n;
  n.kind = Kind::flip;
  n.p = p;
  return n;
}

GroundTruthModel make_ground_truth(Index d1, Index d2, Index k,
                                   std::uint64_t seed) {
  if (d1 < 2) throw ConfigError("d1", "make_ground_truth: d1 must be >= 2");
  if (d2 < 1) throw ConfigError("d2", "make_ground_truth: d2 must be >= 1");
  if (k < 1 || k > std::min(d1, d2)) {
    throw ConfigError("k", "make_ground_truth: k must be in [1, min(d1, d2)]");
  }

  CounterRng rng(seed, Rng::ground_truth, 0, 0);
  DenseMatrix u(d1, k);
  DenseMatrix v(d2, k);
  for (Index c = 0; c < k; ++c) {
    for (Index i = 0; i < d1; ++i) u(i, c) = rng.next_gaussian();
  }
  for (Index c = 0; c < k; ++c) {
    for (Index i = 0; i < d2; ++i) v(i, c) = rng.next_gaussian();
  }

  // W* = U B^T with B the rows of V rescaled by the column norms, so the
  // normalized matrix never loses its rank-k factored form.
  DenseMatrix w(d1, d2);
  DenseMatrix b(d2, k);
  for (Index j = 0; j < d2; ++j) {
    auto wj = w.col(j);
    for (Index c = 0; c < k; ++c) {
      const double vjc = v(j, c);
      auto uc = u.col(c);
      for (Index i = 0; i < d1; ++i) wj[i] += uc[i] * vjc;
    }
    const double norm = w.column_norm(j);
    if (norm < 1e-300) {
      throw NumericError(
          "make_ground_truth: zero column " + std::to_string(j) +
          " in the factor product; use a different seed");
    }
    const double inv = 1.0 / norm;
    for (Index i = 0; i < d1; ++i) wj[i] *= inv;
    for (Index c = 0; c < k; ++c) b(j, c) = v(j, c) * inv;
  }

  // Spectrum of W* = (Qu Ru)(Qb Rb)^T through the k x k core Ru Rb^T; exact
  // and cheap at any d1, d2.
  linalg::QrResult qu = linalg::qr_thin(u);
  linalg::QrResult qb = linalg::qr_thin(b);
  DenseMatrix core(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = 0; j < k; ++j) {
      double s = 0.0;
      for (Index c = std::max(i, j); c < k; ++c) {
        s += qu.r(i, c) * qb.r(j, c);
      }
      core(i, j) = s;
    }
  }
  linalg::Svd cs = linalg::jacobi_svd(core);

  GroundTruthModel model{std::move(w), k, matmul(qu.q.matrix(), cs.u),
                         matmul(qb.q.matrix(), cs.v), std::move(cs.sigma)};
  return model;
}

void fill_clean_labels(MiniBatch& batch, const DenseMatrix& w) {
  const double scale = std::sqrt(static_cast<double>(batch.d2));
  for (Index i = 0; i < batch.m; ++i) {
    const Index j = batch.class_index[static_cast<std::size_t>(i)];
    const double margin = scale * dot(batch.x.col(i), w.col(j));
    batch.y[static_cast<std::size_t>(i)] = sign_scalar(margin);
  }
}

void apply_label_noise(MiniBatch& batch, const DenseMatrix& w,
                       const NoiseSpec& noise, std::uint64_t seed) {
  if (noise.kind == NoiseSpec::Kind::none) return;
  const double scale = std::sqrt(static_cast<double>(batch.d2));
  for (Index i = 0; i < batch.m; ++i) {
    if (noise.kind == NoiseSpec::Kind::gaussian) {
      CounterRng rng(seed, Rng::noise_gauss, 0, static_cast<std::uint64_t>(i));
      const Index j = batch.class_index[static_cast<std::size_t>(i)];
      const double margin = scale * dot(batch.x.col(i), w.col(j)) +
                            noise.xi * rng.next_gaussian();
      batch.y[static_cast<std::size_t>(i)] = sign_scalar(margin);
    } else {
      CounterRng rng(seed, Rng::noise_flip, 0, static_cast<std::uint64_t>(i));
      if (rng.next_double() < noise.p) {
        batch.y[static_cast<std::size_t>(i)] =
            -batch.y[static_cast<std::size_t>(i)];
      }
    }
  }
}

void draw_observation(const GroundTruthModel& model, const NoiseSpec& noise,
                      std::uint64_t seed, Index i, std::span<double> x_out,
                      Index* class_out, double* label_out) {
  const Index d1 = model.d1();
  const Index d2 = model.d2();
  CounterRng xrng(seed, Rng::batch_x, 0, static_cast<std::uint64_t>(i));
  for (Index r = 0; r < d1; ++r) {
    x_out[static_cast<std::size_t>(r)] = xrng.next_gaussian();
  }
  CounterRng crng(seed, Rng::batch_class, 0, static_cast<std::uint64_t>(i));
  const Index j =
      static_cast<Index>(crng.next_below(static_cast<std::uint64_t>(d2)));
  *class_out = j;

  const double scale = std::sqrt(static_cast<double>(d2));
  double margin = scale * dot(std::span<const double>(x_out.data(),
                                                      x_out.size()),
                              model.w_star.col(j));
  if (noise.kind == NoiseSpec::Kind::gaussian) {
    CounterRng nrng(seed, Rng::noise_gauss, 0, static_cast<std::uint64_t>(i));
    margin += noise.xi * nrng.next_gaussian();
  }
  double label = sign_scalar(margin);
  if (noise.kind == NoiseSpec::Kind::flip) {
    CounterRng nrng(seed, Rng::noise_flip, 0, static_cast<std::uint64_t>(i));
    if (nrng.next_double() < noise.p) label = -label;
  }
  *label_out = label;
}

MiniBatch sample_batch(const GroundTruthModel& model, Index m,
                       const NoiseSpec& noise, std::uint64_t seed) {
  if (m < 1) throw ConfigError("m", "sample_batch: m must be >= 1");
  MiniBatch batch(model.d1(), m, model.d2());
  parallel_chunks(m, kChunkSize, [&](Index, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      draw_observation(model, noise, seed, i, batch.x.col(i),
                       &batch.class_index[static_cast<std::size_t>(i)],
                       &batch.y[static_cast<std::size_t>(i)]);
    }
  });
  return batch;
}

MiniBatch sample_full_observation(const GroundTruthModel& model, Index n_pairs,
                                  const NoiseSpec& noise, std::uint64_t seed) {
  if (n_pairs < 1) {
    throw ConfigError("n_pairs", "sample_full_observation: n_pairs >= 1");
  }
  const Index d1 = model.d1();
  const Index d2 = model.d2();
  MiniBatch batch(d1, n_pairs, d2);
  const double scale = std::sqrt(static_cast<double>(d2));

  parallel_chunks(n_pairs, kChunkSize, [&](Index, Index begin, Index end) {
    for (Index p = begin; p < end; ++p) {
      const Index block = p / d2;
      const Index j = p % d2;
      CounterRng xrng(seed, Rng::full_x, 0, static_cast<std::uint64_t>(block));
      auto xp = batch.x.col(p);
      for (Index r = 0; r < d1; ++r) xp[r] = xrng.next_gaussian();
      batch.class_index[static_cast<std::size_t>(p)] = j;

      double margin = scale * dot(std::span<const double>(xp),
                                  model.w_star.col(j));
      if (noise.kind == NoiseSpec::Kind::gaussian) {
        CounterRng nrng(seed, Rng::noise_gauss, 1,
                        static_cast<std::uint64_t>(p));
        margin += noise.xi * nrng.next_gaussian();
      }
      double label = sign_scalar(margin);
      if (noise.kind == NoiseSpec::Kind::flip) {
        CounterRng nrng(seed, Rng::noise_flip, 1,
                        static_cast<std::uint64_t>(p));
        if (nrng.next_double() < noise.p) label = -label;
      }
      batch.y[static_cast<std::size_t>(p)] = label;
    }
  });
  return batch;
}

std::vector<double> apply_sensing(const DenseMatrix& w,
                                  const MiniBatch& batch) {
  if (w.rows() != batch.x.rows() || w.cols() != batch.d2) {
    throw DimensionError("apply_sensing: W shape does not match batch");
  }
  const double scale = std::sqrt(static_cast<double>(batch.d2));
  std::vector<double> out(static_cast<std::size_t>(batch.m), 0.0);
  parallel_chunks(batch.m, kChunkSize, [&](Index, Index begin, Index end) {
    for (Index i = begin; i < end; ++i) {
      const Index j = batch.class_index[static_cast<std::size_t>(i)];
      out[static_cast<std::size_t>(i)] =
          scale * dot(batch.x.col(i), w.col(j));
    }
  });
  return out;
}

DenseMatrix apply_adjoint(const std::vector<double>& r, const MiniBatch& batch,
                          Index d1, Index d2) {
  if (static_cast<Index>(r.size()) != batch.m) {
    throw DimensionError("apply_adjoint: residual length != batch size");
  }
  if (d1 != batch.x.rows() || d2 != batch.d2) {
    throw DimensionError("apply_adjoint: output shape does not match batch");
  }
  const double scale = std::sqrt(static_cast<double>(d2));
  DenseMatrix out(d1, d2);

  // Partition by column group, fixed group count, so each output column is
  // owned by one worker and accumulated in sample order.
  const Index groups = std::min<Index>(d2, 8);
  const Index per_group = (d2 + groups - 1) / groups;
  parallel_chunks(groups, 1, [&](Index, Index gbegin, Index gend) {
    for (Index g = gbegin; g < gend; ++g) {
      const Index lo = g * per_group;
      const Index hi = std::min(d2, lo + per_group);
      for (Index i = 0; i < batch.m; ++i) {
        const Index j = batch.class_index[static_cast<std::size_t>(i)];
        if (j < lo || j >= hi) continue;
        const double factor = scale * r[static_cast<std::size_t>(i)];
        if (factor == 0.0) continue;
        auto xi = batch.x.col(i);
        auto oj = out.col(j);
        for (Index row = 0; row < d1; ++row) oj[row] += factor * xi[row];
      }
    }
  });
  return out;
}

}  // namespace onebit::sensing
