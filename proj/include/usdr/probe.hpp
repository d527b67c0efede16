#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "usdr/errors.hpp"

namespace usdr {

// Linear transducer array, elements on the x axis centered at the origin.
struct ProbeGeometry {
  int element_count = 128;        // L
  double pitch = 0.30e-3;         // [m]
  double element_width = 0.27e-3; // [m]
  std::vector<double> element_positions; // [m] lateral, strictly increasing

  static ProbeGeometry linear(int element_count, double pitch,
                              double element_width);
  void validate() const;
};

struct AcquisitionConfig {
  double sound_speed = 1540.0;    // [m/s]
  double sampling_rate = 20.8e6;  // [Hz]
  double start_time = 0.0;        // [s] time of sample k = 0
  int sample_count = 1536;        // K
  double steering_angle = 0.0;    // [rad] plane-wave tilt from array normal
  double noise_std = 0.0;         // additive channel noise, RF units

  void validate() const;
};

// Rectangular pixel grid. Flattening is depth-major: index n = ix*nz + iz,
// i.e. the axial coordinate varies fastest. All modules share this order.
struct ImagingGrid {
  double x_min = -18e-3, x_max = 18e-3; // [m]
  double z_min = 10e-3, z_max = 46e-3;  // [m]
  int nx = 64, nz = 64;

  [[nodiscard]] int size() const { return nx * nz; }
  [[nodiscard]] double dx() const { return nx > 1 ? (x_max - x_min) / (nx - 1) : 0.0; }
  [[nodiscard]] double dz() const { return nz > 1 ? (z_max - z_min) / (nz - 1) : 0.0; }
  [[nodiscard]] double x_at(int ix) const { return x_min + ix * dx(); }
  [[nodiscard]] double z_at(int iz) const { return z_min + iz * dz(); }
  [[nodiscard]] int flat_index(int ix, int iz) const { return ix * nz + iz; }

  void validate() const;
};

// Combined pulse-echo waveform (excitation convolved with the transducer
// impulse response), modeled as a Gaussian-modulated cosine whose -6 dB
// two-sided spectral width equals bandwidth_ratio * center_frequency.
// Truncated at +-4 sigma; unit peak amplitude.
struct PulseKernel {
  double center_frequency = 5.208e6; // [Hz]
  double bandwidth_ratio = 0.67;     // -6 dB fractional bandwidth
  double sigma = 0.0;                // [s] Gaussian envelope std
  double support_half_width = 0.0;   // [s] waveform is zero outside +-this
  std::vector<double> samples;       // kernel sampled at f_s, t = sample_times()
  double sampling_rate = 0.0;        // [Hz] rate used for `samples`

  static PulseKernel gaussian_modulated(double center_frequency,
                                        double bandwidth_ratio,
                                        double sampling_rate);

  // Times for `samples`: symmetric about 0 with spacing 1/sampling_rate.
  [[nodiscard]] std::vector<double> sample_times() const;
};

// Continuous pulse waveform; zero outside the declared support.
double kernel_waveform(const PulseKernel& pulse, double t);

// Plane-wave transmit delay to pixel (x, z) plus the return path to
// element j. The wavefront passes the array center at t = 0.
double time_of_flight(const AcquisitionConfig& config,
                      const ProbeGeometry& probe, double x, double z, int j);

} // namespace usdr
