#include "usdr/spectral.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "usdr/parallel.hpp"
#include "usdr/rng.hpp"

namespace usdr {

Matrix compose_bh(const BeamformerMatrix& B, const SystemMatrix& H,
                  double memory_budget_mb) {
  const Eigen::Index N = B.matrix.rows();
  if (H.cols() != N || B.matrix.cols() != H.rows())
    throw ValidationError("compose_bh: B and H shapes are incompatible");
  const double est_mb =
      static_cast<double>(N) * N * 8.0 / (1024.0 * 1024.0);
  if (est_mb > memory_budget_mb)
    throw ValidationError("compose_bh: dense product needs " +
                          std::to_string(static_cast<long>(est_mb)) +
                          " MB, over budget");

  // Row-major copy of the weighted filter (B^T) so that rows of B^T —
  // i.e. measurement samples — stream contiguously.
  const Eigen::SparseMatrix<double, Eigen::RowMajor> Bt = B.matrix.transpose();

  Matrix BH(N, N);
  parallel_for(0, static_cast<std::size_t>(N), [&](std::size_t m) {
    Vector acc = Vector::Zero(N);
    for (SparseMat::InnerIterator hit(H.matrix, static_cast<Eigen::Index>(m));
         hit; ++hit) {
      const double v = hit.value();
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator
               bit(Bt, hit.row());
           bit; ++bit)
        acc[bit.col()] += v * bit.value();
    }
    BH.col(static_cast<Eigen::Index>(m)) = acc;
  });
  return BH;
}

namespace {

SpectralFactorization exact_svd(const Matrix& BH) {
  const int n = static_cast<int>(BH.rows());
  SpectralFactorization f;
  f.method = FactorizeMethod::Exact;
  f.rank = n;
  f.U.resize(n, n);
  f.S.resize(n);
  f.V.resize(n, n);
  Matrix work = BH; // dgesdd destroys its input
  Matrix vt(n, n);
  const lapack_int info = LAPACKE_dgesdd(
      LAPACK_COL_MAJOR, 'A', n, n, work.data(), n, f.S.data(), f.U.data(), n,
      vt.data(), n);
  if (info != 0)
    throw NumericalError("factorize: dgesdd failed to converge (info=" +
                         std::to_string(info) + ")");
  f.V = vt.transpose();
  return f;
}

SpectralFactorization randomized_svd(const Matrix& BH,
                                     const RandomizedOptions& opts) {
  const int n = static_cast<int>(BH.rows());
  if (opts.target_rank <= 0)
    throw ValidationError("factorize: randomized method needs a target rank");
  const int r = std::min(n, opts.target_rank);
  const int w = std::min(n, r + opts.oversampling);

  Rng rng = make_rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix omega(n, w);
  for (int j = 0; j < w; ++j)
    for (int i = 0; i < n; ++i) omega(i, j) = normal(rng);

  auto orthonormalize = [](const Matrix& m) {
    Eigen::HouseholderQR<Matrix> qr(m);
    return Matrix(qr.householderQ() * Matrix::Identity(m.rows(), m.cols()));
  };

  Matrix Q = orthonormalize(BH * omega);
  for (int p = 0; p < opts.power_iterations; ++p) {
    Q = orthonormalize(BH.transpose() * Q);
    Q = orthonormalize(BH * Q);
  }

  const Matrix small = Q.transpose() * BH; // w x n
  Matrix su(w, w), svt(w, n), work = small;
  Vector ss(w);
  const lapack_int info = LAPACKE_dgesdd(
      LAPACK_COL_MAJOR, 'S', w, n, work.data(), w, ss.data(), su.data(), w,
      svt.data(), w);
  if (info != 0)
    throw NumericalError("factorize: randomized inner SVD failed (info=" +
                         std::to_string(info) + ")");

  SpectralFactorization f;
  f.method = FactorizeMethod::Randomized;
  f.rank = r;
  f.U = Q * su.leftCols(r);
  f.S = ss.head(r);
  f.V = svt.topRows(r).transpose();
  return f;
}

} // namespace

SpectralFactorization factorize(const Matrix& BH, FactorizeMethod method,
                                double tol, const RandomizedOptions& opts) {
  if (BH.rows() != BH.cols())
    throw ValidationError("factorize: operator must be square");
  const int n = static_cast<int>(BH.rows());
  if (method == FactorizeMethod::Exact && n > 16384)
    throw ValidationError(
        "factorize: exact method limited to N <= 16384; use randomized");

  SpectralFactorization f = method == FactorizeMethod::Exact
                                ? exact_svd(BH)
                                : randomized_svd(BH, opts);

  const double denom = BH.norm();
  if (denom == 0.0) {
    f.residual_norm = 0.0;
  } else {
    const Matrix recon = f.U * f.S.asDiagonal() * f.V.transpose();
    f.residual_norm = (BH - recon).norm() / denom;
  }
  if (f.residual_norm > tol)
    throw NumericalError("factorize: residual " +
                         std::to_string(f.residual_norm) +
                         " exceeds tolerance " + std::to_string(tol));
  return f;
}

SpectralFactorization identity_factorization(int n) {
  if (n <= 0) throw ValidationError("identity_factorization: n <= 0");
  SpectralFactorization f;
  f.is_identity = true;
  f.rank = n;
  f.S = Vector::Ones(n);
  f.residual_norm = 0.0;
  return f;
}

SpectralMeasurement to_spectral_projected(const SpectralFactorization& fact,
                                          const Vector& projected,
                                          double sigma_d, double rank_tol) {
  if (projected.size() != fact.n())
    throw ValidationError("to_spectral: projected measurement length mismatch");
  if (sigma_d < 0) throw ValidationError("to_spectral: sigma_d < 0");

  SpectralMeasurement m;
  m.sigma_d = sigma_d;
  const int R = fact.rank;
  const Vector ut_by =
      fact.is_identity ? projected : Vector(fact.U.transpose() * projected);
  m.ybar = Vector::Zero(R);
  m.noise_scale.resize(R);
  m.observed.assign(R, false);
  const double s1 = fact.S.size() > 0 ? fact.S[0] : 0.0;
  const double cutoff = s1 * rank_tol;
  for (int i = 0; i < R; ++i) {
    const double s = fact.S[i];
    if (s > cutoff && s > 0.0) {
      m.observed[i] = true;
      m.ybar[i] = ut_by[i] / s;
      m.noise_scale[i] = sigma_d / s;
    } else {
      m.noise_scale[i] = std::numeric_limits<double>::infinity();
    }
  }
  return m;
}

SpectralMeasurement to_spectral(const SpectralFactorization& fact,
                                const BeamformerMatrix& B,
                                const Vector& channel_data, double sigma_d,
                                double rank_tol) {
  return to_spectral_projected(fact, das(B, channel_data), sigma_d, rank_tol);
}

Vector from_spectral(const SpectralFactorization& fact, const Vector& xbar) {
  if (xbar.size() != fact.rank)
    throw ValidationError("from_spectral: coordinate length mismatch");
  if (fact.is_identity) return xbar;
  return fact.V * xbar;
}

Vector to_spectral_image(const SpectralFactorization& fact, const Vector& x) {
  if (x.size() != fact.n())
    throw ValidationError("to_spectral_image: image length mismatch");
  if (fact.is_identity) return x;
  return fact.V.transpose() * x;
}

double estimate_sigma_d(const SpectralFactorization& fact,
                        const Vector& projected) {
  const Vector ut_by =
      fact.is_identity ? projected : Vector(fact.U.transpose() * projected);
  const int R = fact.rank;
  const int decile = std::max(1, R / 10);
  // S is descending, so the tail holds the weakest directions.
  std::vector<double> vals(decile);
  for (int i = 0; i < decile; ++i) vals[i] = std::abs(ut_by[R - 1 - i]);
  std::nth_element(vals.begin(), vals.begin() + decile / 2, vals.end());
  const double mad = vals[decile / 2];
  return mad * 1.4826; // normal-consistent scale
}

} // namespace usdr
