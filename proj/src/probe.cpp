#include "usdr/probe.hpp"

#include <cmath>
#include <string>

namespace usdr {

ProbeGeometry ProbeGeometry::linear(int element_count, double pitch,
                                    double element_width) {
  ProbeGeometry p;
  p.element_count = element_count;
  p.pitch = pitch;
  p.element_width = element_width;
  p.element_positions.resize(element_count);
  const double half = 0.5 * (element_count - 1) * pitch;
  for (int j = 0; j < element_count; ++j)
    p.element_positions[j] = j * pitch - half;
  p.validate();
  return p;
}

void ProbeGeometry::validate() const {
  if (element_count < 2)
    throw ValidationError("probe: element_count must be >= 2");
  if (pitch <= 0) throw ValidationError("probe: pitch must be > 0");
  if (static_cast<int>(element_positions.size()) != element_count)
    throw ValidationError("probe: element_positions size mismatch");
  for (int j = 0; j + 1 < element_count; ++j) {
    const double gap = element_positions[j + 1] - element_positions[j];
    if (gap <= 0)
      throw ValidationError("probe: positions must be strictly increasing");
    if (std::abs(gap - pitch) > 1e-12)
      throw ValidationError("probe: positions not spaced by pitch");
  }
  const double center =
      0.5 * (element_positions.front() + element_positions.back());
  if (std::abs(center) > 1e-12)
    throw ValidationError("probe: positions not centered at origin");
}

void AcquisitionConfig::validate() const {
  if (sound_speed <= 0) throw ValidationError("acquisition: sound_speed <= 0");
  if (sample_count < 1) throw ValidationError("acquisition: sample_count < 1");
  if (sampling_rate <= 0)
    throw ValidationError("acquisition: sampling_rate <= 0");
  if (noise_std < 0) throw ValidationError("acquisition: noise_std < 0");
}

void ImagingGrid::validate() const {
  if (nx < 1 || nz < 1) throw ValidationError("grid: nx, nz must be >= 1");
  if (x_max <= x_min) throw ValidationError("grid: x_max <= x_min");
  if (z_max <= z_min) throw ValidationError("grid: z_max <= z_min");
  if (z_min <= 0)
    throw ValidationError("grid: z_min must be > 0 (below transducer face)");
}

PulseKernel PulseKernel::gaussian_modulated(double center_frequency,
                                            double bandwidth_ratio,
                                            double sampling_rate) {
  if (center_frequency <= 0)
    throw ValidationError("pulse: center_frequency <= 0");
  if (bandwidth_ratio <= 0 || bandwidth_ratio >= 2)
    throw ValidationError("pulse: bandwidth_ratio out of range");
  if (sampling_rate <= 2 * center_frequency)
    throw ValidationError("pulse: sampling_rate below Nyquist for RF");

  PulseKernel p;
  p.center_frequency = center_frequency;
  p.bandwidth_ratio = bandwidth_ratio;
  p.sampling_rate = sampling_rate;
  // Gaussian spectrum std from the -6 dB (half-amplitude) full width.
  const double sigma_f =
      bandwidth_ratio * center_frequency / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  p.sigma = 1.0 / (2.0 * M_PI * sigma_f);
  p.support_half_width = 4.0 * p.sigma;

  const int half_n = static_cast<int>(
      std::ceil(p.support_half_width * sampling_rate));
  p.samples.resize(2 * half_n + 1);
  for (int i = -half_n; i <= half_n; ++i)
    p.samples[i + half_n] = kernel_waveform(p, i / sampling_rate);
  return p;
}

std::vector<double> PulseKernel::sample_times() const {
  const int n = static_cast<int>(samples.size());
  const int half_n = (n - 1) / 2;
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = (i - half_n) / sampling_rate;
  return t;
}

double kernel_waveform(const PulseKernel& pulse, double t) {
  if (std::abs(t) > pulse.support_half_width) return 0.0;
  const double env = std::exp(-t * t / (2.0 * pulse.sigma * pulse.sigma));
  return env * std::cos(2.0 * M_PI * pulse.center_frequency * t);
}

double time_of_flight(const AcquisitionConfig& config,
                      const ProbeGeometry& probe, double x, double z, int j) {
  if (z <= 0) throw ValidationError("time_of_flight: depth must be > 0");
  if (j < 0 || j >= probe.element_count)
    throw ValidationError("time_of_flight: element index " +
                          std::to_string(j) + " out of range");
  const double alpha = config.steering_angle;
  const double tx = z * std::cos(alpha) + x * std::sin(alpha);
  const double ex = x - probe.element_positions[j];
  const double rx = std::sqrt(ex * ex + z * z);
  return (tx + rx) / config.sound_speed;
}

} // namespace usdr
