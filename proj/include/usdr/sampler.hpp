#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "usdr/rng.hpp"
#include "usdr/spectral.hpp"

namespace usdr {

// Geometric noise ladder: t_full levels from sigma_max down to sigma_min,
// of which a uniformly strided subsequence of `iterations` levels is kept
// (endpoints always retained).
struct NoiseSchedule {
  int t_full = 1000;
  std::vector<double> sigma; // descending, sigma.front() = sigma_max
};

NoiseSchedule make_schedule(int t_full, int iterations, double sigma_min,
                            double sigma_max);

enum class SamplerMode { Drus, Deno };

struct SamplerConfig {
  double eta = 0.85;
  double eta_b = 1.0;
  double sigma_d = -1.0;         // < 0: estimate from the measurement
  int iterations = 50;           // it
  int t_full = 1000;
  double sigma_min = 1e-4;
  double sigma_max = 1.0;
  std::uint64_t seed = 0;
  SamplerMode mode = SamplerMode::Drus;
  int sample_count = 1;          // M
  double normalization_scale = 0.0; // 0: 99.9th percentile of |B y| -> 1
  double rank_tol = 1e-6;

  void validate() const;
};

// Prediction of the clean image from a noisy one at a known noise level.
// Implementations must be pure and reentrant (or internally serialized).
class Denoiser {
 public:
  virtual ~Denoiser() = default;
  virtual Vector denoise(const Vector& image, double sigma) const = 0;
};

// Per-coordinate update x_{t-1} = A x_t + B ybar + C x_theta + D z with
// the two constraints A + B + C = 1 and (A s_t)^2 + (B s_y)^2 + D^2 =
// s_{t-1}^2 holding exactly in every branch.
struct StepCoefficients {
  double a = 0, b = 0, c = 0, d = 0;
  enum Branch { Unobserved = 0, NoisyMeasurement = 1, AnchorMeasurement = 2 };
  Branch branch = Unobserved;
};

// sigma_y = sigma_d / s_i; s_i <= 0 (or unobserved) selects the prior-only
// branch. Requires sigma_prev < sigma_t.
StepCoefficients step_coefficients(double sigma_t, double sigma_prev,
                                   double s_i, double sigma_d, double eta,
                                   double eta_b);

struct ChainState {
  int t = 0;        // remaining steps; the current level is sigma[it - t]
  Vector xbar;      // spectral coordinates
  Rng rng;
};

// Start of the chain at the top noise level. Observed coordinates with
// sigma_y <= sigma_T are anchored at the measurement; the rest start as
// pure noise.
ChainState init_state(const SpectralFactorization& fact,
                      const SpectralMeasurement& meas,
                      const NoiseSchedule& schedule, Rng rng);

// One reverse step; consumes one schedule level (the final step targets
// noise level zero). Throws NumericalError on non-finite values.
void sample_step(ChainState& state, const SpectralFactorization& fact,
                 const SpectralMeasurement& meas, const Denoiser& denoiser,
                 const NoiseSchedule& schedule, const SamplerConfig& config);

// Full chain on an already-projected measurement (B y, length N);
// returns the reconstructed image. Deterministic for a fixed seed.
Vector run_chain_projected(const SamplerConfig& config,
                           const SpectralFactorization& fact,
                           const Vector& projected, const Denoiser& denoiser,
                           std::uint64_t chain_index = 0);

// Mono-sample reconstruction from raw channel data.
Vector run_chain(const SamplerConfig& config, const SpectralFactorization& fact,
                 const BeamformerMatrix& B, const Vector& channel_data,
                 const Denoiser& denoiser);

// config.sample_count independent chains (parallelized); chain i uses the
// rng stream derived from (config.seed, i).
std::vector<Vector> run_chains_projected(const SamplerConfig& config,
                                         const SpectralFactorization& fact,
                                         const Vector& projected,
                                         const Denoiser& denoiser);

} // namespace usdr
