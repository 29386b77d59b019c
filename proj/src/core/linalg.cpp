#include "core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace onebit {

OrthonormalBasis::OrthonormalBasis(DenseMatrix q) : q_(std::move(q)) {
  if (q_.rows() < q_.cols()) {
    throw DimensionError("OrthonormalBasis: more columns than rows");
  }
  const Index r = q_.cols();
  for (Index i = 0; i < r; ++i) {
    for (Index j = i; j < r; ++j) {
      const double g = dot(q_.col(i), q_.col(j));
      const double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(g - want) > kOrthoTol) {
        throw NumericError(
            "OrthonormalBasis: columns not orthonormal, deviation " +
            std::to_string(std::abs(g - want)));
      }
    }
  }
}

namespace linalg {

QrResult qr_thin(const DenseMatrix& a) {
  const Index n = a.rows();
  const Index p = a.cols();
  if (n < p) throw DimensionError("qr_thin: requires rows >= cols");
  if (!a.all_finite()) throw NumericError("qr_thin: non-finite input");

  // Householder vectors accumulate in-place below the diagonal of work;
  // diag[] keeps the R diagonal displaced by them.
  DenseMatrix work = a;
  std::vector<double> beta(static_cast<std::size_t>(p), 0.0);
  std::vector<double> diag(static_cast<std::size_t>(p), 0.0);

  for (Index j = 0; j < p; ++j) {
    auto cj = work.col(j);
    double norm2 = 0.0;
    for (Index i = j; i < n; ++i) norm2 += cj[i] * cj[i];
    const double norm = std::sqrt(norm2);
    if (norm == 0.0) {
      diag[static_cast<std::size_t>(j)] = 0.0;
      continue;
    }
    const double alpha = cj[j] >= 0.0 ? -norm : norm;
    const double v0 = cj[j] - alpha;
    double vnorm2 = v0 * v0;
    for (Index i = j + 1; i < n; ++i) vnorm2 += cj[i] * cj[i];
    beta[static_cast<std::size_t>(j)] = vnorm2 > 0.0 ? 2.0 / vnorm2 : 0.0;
    cj[j] = v0;
    diag[static_cast<std::size_t>(j)] = alpha;
    for (Index c = j + 1; c < p; ++c) {
      auto cc = work.col(c);
      double proj = 0.0;
      for (Index i = j; i < n; ++i) proj += cj[i] * cc[i];
      proj *= beta[static_cast<std::size_t>(j)];
      for (Index i = j; i < n; ++i) cc[i] -= proj * cj[i];
    }
  }

  DenseMatrix r(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < j; ++i) r(i, j) = work(i, j);
    r(j, j) = diag[static_cast<std::size_t>(j)];
  }

  // Assemble thin Q by applying the reflectors to the leading columns of I.
  DenseMatrix q(n, p);
  for (Index c = 0; c < p; ++c) q(c, c) = 1.0;
  for (Index j = p - 1; j >= 0; --j) {
    if (beta[static_cast<std::size_t>(j)] == 0.0) continue;
    auto vj = work.col(j);
    for (Index c = 0; c < p; ++c) {
      auto qc = q.col(c);
      double proj = 0.0;
      for (Index i = j; i < n; ++i) proj += vj[i] * qc[i];
      proj *= beta[static_cast<std::size_t>(j)];
      for (Index i = j; i < n; ++i) qc[i] -= proj * vj[i];
    }
  }

  // Sign convention: nonnegative R diagonal.
  for (Index j = 0; j < p; ++j) {
    if (r(j, j) < 0.0) {
      for (Index c = j; c < p; ++c) r(j, c) = -r(j, c);
      auto qj = q.col(j);
      for (Index i = 0; i < n; ++i) qj[i] = -qj[i];
    }
  }

  // Rank check against sigma_1(A) = sigma_1(R).
  const Svd rs = jacobi_svd(r);
  const double sigma1 = rs.sigma.empty() ? 0.0 : rs.sigma.front();
  for (Index j = 0; j < p; ++j) {
    if (std::abs(r(j, j)) < 1e-12 * sigma1 || sigma1 == 0.0) {
      throw RankDeficiencyError(
          j, "qr_thin: numerically dependent column " + std::to_string(j));
    }
  }

  return QrResult{OrthonormalBasis(std::move(q)), std::move(r)};
}

OrthonormalBasis top_subspace(const LinearOp& op, Index n, Index r,
                              Index power_iters, std::uint64_t seed) {
  if (r < 1 || r > n) throw DimensionError("top_subspace: need 1 <= r <= n");
  DenseMatrix block(n, r);
  for (Index c = 0; c < r; ++c) {
    CounterRng rng(seed, Rng::power_init, 0,
                   static_cast<std::uint64_t>(c));
    auto col = block.col(c);
    for (Index i = 0; i < n; ++i) col[i] = rng.next_gaussian();
  }
  QrResult qr = qr_thin(block);
  for (Index it = 0; it < power_iters; ++it) {
    DenseMatrix next(n, r);
    for (Index c = 0; c < r; ++c) {
      op(qr.q.matrix().col(c), next.col(c));
    }
    if (!next.all_finite()) {
      throw NumericError("top_subspace: operator produced non-finite values");
    }
    qr = qr_thin(next);
  }
  return std::move(qr.q);
}

double spectral_norm(const DenseMatrix& m, double rel_tol, Index max_iters,
                     std::uint64_t seed) {
  if (!m.all_finite()) throw NumericError("spectral_norm: non-finite input");
  if (m.max_abs() == 0.0) return 0.0;

  const Index rows = m.rows();
  const Index cols = m.cols();
  CounterRng rng(seed, Rng::spectral, 0, 0);
  std::vector<double> v(static_cast<std::size_t>(cols));
  std::vector<double> w(static_cast<std::size_t>(rows));

  auto randomize = [&]() {
    double norm2 = 0.0;
    for (double& x : v) {
      x = rng.next_gaussian();
      norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
  };
  randomize();

  double best = 0.0;
  Index stable = 0;
  for (Index it = 0; it < max_iters; ++it) {
    // w = M v
    std::fill(w.begin(), w.end(), 0.0);
    for (Index c = 0; c < cols; ++c) {
      const double vc = v[static_cast<std::size_t>(c)];
      if (vc == 0.0) continue;
      auto mc = m.col(c);
      for (Index i = 0; i < rows; ++i) w[static_cast<std::size_t>(i)] += mc[i] * vc;
    }
    double wn2 = 0.0;
    for (double x : w) wn2 += x * x;
    const double estimate = std::sqrt(wn2);
    if (estimate == 0.0) {
      // Start vector landed in the null space; redraw.
      randomize();
      continue;
    }
    // The successive-difference test can trip one step early on a slow
    // spectrum; require it to hold three times in a row.
    if (it > 0 && std::abs(estimate - best) <= rel_tol * estimate) {
      if (++stable >= 3) return estimate;
    } else {
      stable = 0;
    }
    best = estimate;
    // v = M^T w, normalized
    double un2 = 0.0;
    for (Index c = 0; c < cols; ++c) {
      const double uc = dot(m.col(c), std::span<const double>(w));
      v[static_cast<std::size_t>(c)] = uc;
      un2 += uc * uc;
    }
    const double inv = 1.0 / std::sqrt(un2);
    for (double& x : v) x *= inv;
  }
  throw ConvergenceError(best, "spectral_norm: no convergence within " +
                                   std::to_string(max_iters) + " iterations");
}

namespace {

void check_same_shape(const OrthonormalBasis& u1, const OrthonormalBasis& u2) {
  if (u1.rows() != u2.rows() || u1.cols() != u2.cols()) {
    throw DimensionError("principal angle: bases must share dimensions");
  }
}

// Residual of u2 against span(u1): (I - U1 U1^T) U2.
DenseMatrix span_residual(const OrthonormalBasis& u1,
                          const OrthonormalBasis& u2) {
  const DenseMatrix g = matmul_ta(u1.matrix(), u2.matrix());
  DenseMatrix b = u2.matrix();
  for (Index j = 0; j < b.cols(); ++j) {
    auto bj = b.col(j);
    for (Index c = 0; c < u1.cols(); ++c) {
      const double gcj = g(c, j);
      if (gcj == 0.0) continue;
      auto u1c = u1.matrix().col(c);
      for (Index i = 0; i < b.rows(); ++i) bj[i] -= u1c[i] * gcj;
    }
  }
  return b;
}

}  // namespace

double tan_largest_principal_angle(const OrthonormalBasis& u1,
                                   const OrthonormalBasis& u2) {
  check_same_shape(u1, u2);
  const DenseMatrix g = matmul_ta(u1.matrix(), u2.matrix());
  const Svd gs = jacobi_svd(g);
  const double cos_min = gs.sigma.back();
  if (cos_min < 1e-12) return std::numeric_limits<double>::infinity();
  const Svd bs = jacobi_svd(span_residual(u1, u2));
  const double sin_max = std::min(1.0, bs.sigma.front());
  return sin_max / cos_min;
}

double sin_largest_principal_angle(const OrthonormalBasis& u1,
                                   const OrthonormalBasis& u2) {
  check_same_shape(u1, u2);
  const Svd bs = jacobi_svd(span_residual(u1, u2));
  return std::min(1.0, bs.sigma.front());
}

SymmetricEigen jacobi_eigen(const DenseMatrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("jacobi_eigen: square input");
  const Index n = a.rows();
  DenseMatrix m = a;
  // Symmetrize; callers pass symmetric data, this removes roundoff skew.
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const double s = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = s;
      m(j, i) = s;
    }
  }
  DenseMatrix v = DenseMatrix::identity(n);

  const Index max_sweeps = 64;
  for (Index sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    }
    if (std::sqrt(off) <= 1e-14 * std::max(1.0, m.frobenius_norm())) break;
    for (Index p = 0; p < n; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Index i = 0; i < n; ++i) {
          const double mip = m(i, p);
          const double miq = m(i, q);
          m(i, p) = c * mip - s * miq;
          m(i, q) = s * mip + c * miq;
        }
        for (Index i = 0; i < n; ++i) {
          const double mpi = m(p, i);
          const double mqi = m(q, i);
          m(p, i) = c * mpi - s * mqi;
          m(q, i) = s * mpi + c * mqi;
        }
        for (Index i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  SymmetricEigen out{std::vector<double>(static_cast<std::size_t>(n)),
                     DenseMatrix(n, n)};
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(),
            [&](Index x, Index y) { return m(x, x) > m(y, y); });
  for (Index c = 0; c < n; ++c) {
    const Index src = order[static_cast<std::size_t>(c)];
    out.values[static_cast<std::size_t>(c)] = m(src, src);
    auto dst = out.vectors.col(c);
    auto srcc = v.col(src);
    std::copy(srcc.begin(), srcc.end(), dst.begin());
  }
  return out;
}

Svd jacobi_svd(const DenseMatrix& a) {
  // One-sided Jacobi wants rows >= cols; transpose and swap factors if not.
  if (a.rows() < a.cols()) {
    Svd t = jacobi_svd(a.transposed());
    return Svd{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }
  const Index n = a.rows();
  const Index p = a.cols();
  DenseMatrix u = a;
  DenseMatrix v = DenseMatrix::identity(p);

  const Index max_sweeps = 64;
  const double tol = 1e-15;
  for (Index sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (Index i = 0; i < p; ++i) {
      for (Index j = i + 1; j < p; ++j) {
        auto ui = u.col(i);
        auto uj = u.col(j);
        const double aii = dot(ui, ui);
        const double ajj = dot(uj, uj);
        const double aij = dot(ui, uj);
        if (std::abs(aij) <= tol * std::sqrt(aii * ajj) || aij == 0.0) {
          continue;
        }
        rotated = true;
        const double zeta = (ajj - aii) / (2.0 * aij);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(zeta * zeta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = c * t;
        for (Index r = 0; r < n; ++r) {
          const double x = ui[r];
          const double y = uj[r];
          ui[r] = c * x - s * y;
          uj[r] = s * x + c * y;
        }
        for (Index r = 0; r < p; ++r) {
          const double x = v(r, i);
          const double y = v(r, j);
          v(r, i) = c * x - s * y;
          v(r, j) = s * x + c * y;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> sigma(static_cast<std::size_t>(p), 0.0);
  for (Index c = 0; c < p; ++c) {
    sigma[static_cast<std::size_t>(c)] = u.column_norm(c);
  }
  std::vector<Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index x, Index y) {
    return sigma[static_cast<std::size_t>(x)] > sigma[static_cast<std::size_t>(y)];
  });

  Svd out{DenseMatrix(n, p), std::vector<double>(static_cast<std::size_t>(p)),
          DenseMatrix(p, p)};
  for (Index c = 0; c < p; ++c) {
    const Index src = order[static_cast<std::size_t>(c)];
    const double s = sigma[static_cast<std::size_t>(src)];
    out.sigma[static_cast<std::size_t>(c)] = s;
    auto usrc = u.col(src);
    auto udst = out.u.col(c);
    if (s > 0.0) {
      const double inv = 1.0 / s;
      for (Index r = 0; r < n; ++r) udst[r] = usrc[r] * inv;
    }
    auto vdst = out.v.col(c);
    auto vsrc = v.col(src);
    std::copy(vsrc.begin(), vsrc.end(), vdst.begin());
  }
  return out;
}

}  // namespace linalg
}  // namespace onebit
