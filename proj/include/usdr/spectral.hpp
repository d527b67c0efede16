#pragma once

#include <limits>
#include <string>

#include "usdr/beamformer.hpp"

namespace usdr {

enum class FactorizeMethod { Exact, Randomized };

// Singular value decomposition of the projected operator BH = U S V^T.
// Identity factorizations (pure-denoising mode) are tagged so the
// transforms can skip the matrix products.
struct SpectralFactorization {
  Matrix U;               // N x R, orthonormal columns
  Vector S;               // R singular values, descending
  Matrix V;               // N x R, orthonormal columns
  int rank = 0;           // R
  double residual_norm = 0.0; // ||BH - U S V^T||_F / ||BH||_F
  FactorizeMethod method = FactorizeMethod::Exact;
  bool is_identity = false;

  [[nodiscard]] int n() const { return is_identity ? rank : static_cast<int>(U.rows()); }
};

struct RandomizedOptions {
  int target_rank = 0;    // required for the randomized method
  int oversampling = 10;
  int power_iterations = 2;
  std::uint64_t seed = 0;
};

// Dense N x N product B * H, accumulated column-by-column in parallel.
Matrix compose_bh(const BeamformerMatrix& B, const SystemMatrix& H,
                  double memory_budget_mb = 4096.0);

// Exact method: LAPACK divide-and-conquer SVD (N <= 16384).
// Randomized method: subspace iteration with the options above; throws
// NumericalError if the declared tolerance is not met.
SpectralFactorization factorize(const Matrix& BH,
                                FactorizeMethod method = FactorizeMethod::Exact,
                                double tol = 1e-8,
                                const RandomizedOptions& opts = {});

// U = V = I, S = 1 exactly; the pure-denoising degenerate operator.
SpectralFactorization identity_factorization(int n);

// Transformed measurement: ybar_i = (U^T B y)_i / s_i on observed
// coordinates (s_i > rank_tol * s_1). Unobserved coordinates keep
// ybar = 0 and an infinite noise scale.
struct SpectralMeasurement {
  Vector ybar;            // length R
  Vector noise_scale;     // sigma_d / s_i, +inf where unobserved
  std::vector<bool> observed;
  double sigma_d = 0.0;
};

SpectralMeasurement to_spectral(const SpectralFactorization& fact,
                                const BeamformerMatrix& B,
                                const Vector& channel_data, double sigma_d,
                                double rank_tol = 1e-6);

// Same transform for a measurement already projected by B (length N).
SpectralMeasurement to_spectral_projected(const SpectralFactorization& fact,
                                          const Vector& projected,
                                          double sigma_d,
                                          double rank_tol = 1e-6);

// Image from spectral coordinates: V xbar.
Vector from_spectral(const SpectralFactorization& fact, const Vector& xbar);

// V^T x: pixel image into spectral coordinates.
Vector to_spectral_image(const SpectralFactorization& fact, const Vector& x);

// Noise-level estimate for the projected model: scaled median absolute
// deviation of (U^T B y)_i over the lowest-s_i decile, where the
// projected signal is weakest.
double estimate_sigma_d(const SpectralFactorization& fact,
                        const Vector& projected);

} // namespace usdr
