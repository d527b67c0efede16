#include "usdr/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "usdr/parallel.hpp"

namespace usdr {

NoiseSchedule make_schedule(int t_full, int iterations, double sigma_min,
                            double sigma_max) {
  if (!(sigma_min > 0) || !(sigma_max > sigma_min))
    throw ValidationError("schedule: need 0 < sigma_min < sigma_max");
  if (iterations < 1 || iterations > t_full)
    throw ValidationError("schedule: need 1 <= iterations <= t_full");

  NoiseSchedule s;
  s.t_full = t_full;
  s.sigma.resize(iterations);
  const double log_ratio = std::log(sigma_min / sigma_max);
  for (int k = 0; k < iterations; ++k) {
    // Uniform stride over the full geometric ladder, endpoints kept.
    const long idx =
        iterations == 1
            ? 0
            : std::lround(static_cast<double>(k) * (t_full - 1) / (iterations - 1));
    const double frac = t_full == 1 ? 0.0 : static_cast<double>(idx) / (t_full - 1);
    s.sigma[k] = sigma_max * std::exp(log_ratio * frac);
  }
  return s;
}

void SamplerConfig::validate() const {
  if (eta < 0 || eta > 1) throw ValidationError("sampler: eta must be in [0,1]");
  if (eta_b < 0 || eta_b > 1)
    throw ValidationError("sampler: eta_b must be in [0,1]");
  if (iterations < 1) throw ValidationError("sampler: iterations < 1");
  if (iterations > t_full) throw ValidationError("sampler: iterations > t_full");
  if (!(sigma_min > 0) || !(sigma_max > sigma_min))
    throw ValidationError("sampler: need 0 < sigma_min < sigma_max");
  if (sample_count < 1) throw ValidationError("sampler: sample_count < 1");
  if (normalization_scale < 0)
    throw ValidationError("sampler: normalization_scale < 0");
}

StepCoefficients step_coefficients(double sigma_t, double sigma_prev,
                                   double s_i, double sigma_d, double eta,
                                   double eta_b) {
  if (!(sigma_prev < sigma_t))
    throw ValidationError("step_coefficients: requires sigma_prev < sigma_t");
  StepCoefficients k;
  const bool unobserved = !(s_i > 0);
  const double sigma_y =
      unobserved ? std::numeric_limits<double>::infinity() : sigma_d / s_i;

  if (unobserved) {
    k.branch = StepCoefficients::Unobserved;
    k.a = std::sqrt(1.0 - eta * eta) * sigma_prev / sigma_t;
    k.b = 0.0;
    k.c = 1.0 - k.a;
    k.d = eta * sigma_prev;
  } else if (sigma_prev < sigma_y) {
    k.branch = StepCoefficients::NoisyMeasurement;
    k.a = 0.0;
    k.b = std::sqrt(1.0 - eta * eta) * sigma_prev / sigma_y;
    k.c = 1.0 - k.b;
    k.d = eta * sigma_prev;
  } else {
    k.branch = StepCoefficients::AnchorMeasurement;
    k.a = 0.0;
    k.b = eta_b;
    k.c = 1.0 - eta_b;
    const double rad =
        sigma_prev * sigma_prev - eta_b * eta_b * sigma_y * sigma_y;
    if (rad < 0)
      throw NumericalError("step_coefficients: negative radicand");
    k.d = std::sqrt(rad);
  }
  return k;
}

ChainState init_state(const SpectralFactorization& fact,
                      const SpectralMeasurement& meas,
                      const NoiseSchedule& schedule, Rng rng) {
  const int R = fact.rank;
  if (meas.ybar.size() != R)
    throw ValidationError("init_state: measurement length mismatch");
  ChainState st;
  st.t = static_cast<int>(schedule.sigma.size());
  st.rng = rng;
  st.xbar.resize(R);
  const double sigma_T = schedule.sigma.front();
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < R; ++i) {
    const double z = normal(st.rng);
    const double sy = meas.noise_scale[i];
    if (meas.observed[i] && sy <= sigma_T) {
      st.xbar[i] = meas.ybar[i] + std::sqrt(sigma_T * sigma_T - sy * sy) * z;
    } else {
      st.xbar[i] = sigma_T * z; // demoted to unobserved for initialization
    }
  }
  if (!st.xbar.allFinite())
    throw NumericalError("init_state: non-finite chain state");
  return st;
}

void sample_step(ChainState& state, const SpectralFactorization& fact,
                 const SpectralMeasurement& meas, const Denoiser& denoiser,
                 const NoiseSchedule& schedule, const SamplerConfig& config) {
  const int it = static_cast<int>(schedule.sigma.size());
  if (state.t < 1 || state.t > it)
    throw ValidationError("sample_step: chain already finished");
  const int level = it - state.t;
  const double sigma_t = schedule.sigma[level];
  const double sigma_prev = state.t > 1 ? schedule.sigma[level + 1] : 0.0;

  const Vector image = from_spectral(fact, state.xbar);
  const Vector predicted = denoiser.denoise(image, sigma_t);
  if (predicted.size() != image.size())
    throw NumericalError("sample_step: denoiser returned wrong shape");
  if (!predicted.allFinite())
    throw NumericalError("sample_step: denoiser returned non-finite values at t=" +
                         std::to_string(state.t));
  const Vector xbar_theta = to_spectral_image(fact, predicted);

  std::normal_distribution<double> normal(0.0, 1.0);
  const int R = fact.rank;
  int bad = 0;
  for (int i = 0; i < R; ++i) {
    const double s_i = meas.observed[i] ? fact.S[i] : 0.0;
    const StepCoefficients k = step_coefficients(
        sigma_t, sigma_prev, s_i, meas.sigma_d, config.eta, config.eta_b);
    const double z = normal(state.rng); // one draw per coordinate, every step
    const double next = k.a * state.xbar[i] + k.b * meas.ybar[i] +
                        k.c * xbar_theta[i] + k.d * z;
    if (!std::isfinite(next)) ++bad;
    state.xbar[i] = next;
  }
  if (bad > 0)
    throw NumericalError("sample_step: " + std::to_string(bad) +
                         " non-finite coordinate(s) at t=" +
                         std::to_string(state.t));
  --state.t;
}

namespace {

double normalization_scale_for(const SamplerConfig& config,
                               const Vector& projected) {
  if (config.normalization_scale > 0) return config.normalization_scale;
  // 99.9th percentile of |B y| maps to 1.
  Vector mag = projected.cwiseAbs();
  std::vector<double> v(mag.data(), mag.data() + mag.size());
  const std::size_t idx =
      std::min(v.size() - 1,
               static_cast<std::size_t>(0.999 * static_cast<double>(v.size())));
  std::nth_element(v.begin(), v.begin() + static_cast<long>(idx), v.end());
  const double q = v[idx];
  if (!(q > 0))
    throw NumericalError("sampler: cannot normalize an all-zero measurement");
  return q;
}

} // namespace

Vector run_chain_projected(const SamplerConfig& config,
                           const SpectralFactorization& fact,
                           const Vector& projected, const Denoiser& denoiser,
                           std::uint64_t chain_index) {
  config.validate();
  if (projected.size() != fact.n())
    throw ValidationError("run_chain: projected measurement length mismatch");

  const double scale = normalization_scale_for(config, projected);
  const double sigma_d = config.sigma_d >= 0
                             ? config.sigma_d
                             : estimate_sigma_d(fact, projected);

  const SpectralMeasurement meas = to_spectral_projected(
      fact, Vector(projected / scale), sigma_d / scale, config.rank_tol);
  const NoiseSchedule schedule = make_schedule(
      config.t_full, config.iterations, config.sigma_min, config.sigma_max);

  ChainState st =
      init_state(fact, meas, schedule, make_rng(config.seed, chain_index));
  while (st.t > 0)
    sample_step(st, fact, meas, denoiser, schedule, config);
  return scale * from_spectral(fact, st.xbar);
}

Vector run_chain(const SamplerConfig& config, const SpectralFactorization& fact,
                 const BeamformerMatrix& B, const Vector& channel_data,
                 const Denoiser& denoiser) {
  return run_chain_projected(config, fact, das(B, channel_data), denoiser, 0);
}

std::vector<Vector> run_chains_projected(const SamplerConfig& config,
                                         const SpectralFactorization& fact,
                                         const Vector& projected,
                                         const Denoiser& denoiser) {
  std::vector<Vector> out(config.sample_count);
  parallel_for(0, static_cast<std::size_t>(config.sample_count),
               [&](std::size_t i) {
                 out[i] = run_chain_projected(config, fact, projected, denoiser,
                                              static_cast<std::uint64_t>(i));
               });
  return out;
}

} // namespace usdr
