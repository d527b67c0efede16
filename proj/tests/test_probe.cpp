#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>

#include "doctest.h"
#include "usdr/config.hpp"
#include "usdr/probe.hpp"

using namespace usdr;

namespace {

ProbeGeometry picmus_probe() { return ProbeGeometry::linear(128, 0.30e-3, 0.27e-3); }

AcquisitionConfig default_acq() {
  AcquisitionConfig a;
  return a;
}

} // namespace

TEST_CASE("probe geometry invariants") {
  const auto p = picmus_probe();
  CHECK(p.element_positions.size() == 128);
  // Centered at the origin and spaced by pitch.
  CHECK(p.element_positions.front() == doctest::Approx(-63.5 * 0.30e-3));
  CHECK(p.element_positions.back() == doctest::Approx(63.5 * 0.30e-3));
  CHECK_THROWS_AS(ProbeGeometry::linear(1, 0.3e-3, 0.27e-3), ValidationError);
  CHECK_THROWS_AS(ProbeGeometry::linear(8, 0.0, 0.27e-3), ValidationError);
}

TEST_CASE("time of flight: on-axis round trip is 2z/c") {
  const auto probe = picmus_probe();
  const auto acq = default_acq();
  // Element 64 of a 128-element array sits at +pitch/2.
  const double x = probe.element_positions[64];
  const double z = 20e-3;
  const double tau = time_of_flight(acq, probe, x, z, 64);
  CHECK(tau == doctest::Approx(2.0 * z / acq.sound_speed).epsilon(1e-12));
}

TEST_CASE("time of flight: hand-evaluated value at 20 mm") {
  // c = 1540 m/s, z = 20 mm, zero element offset: 2 * 0.020 / 1540 = 25.974 us.
  const auto probe = ProbeGeometry::linear(3, 0.30e-3, 0.27e-3); // center at 0
  const AcquisitionConfig acq;
  CHECK(time_of_flight(acq, probe, 0.0, 20e-3, 1) ==
        doctest::Approx(25.974e-6).epsilon(1e-4));
}

TEST_CASE("time of flight: mirror symmetry about the pixel") {
  const auto probe = picmus_probe();
  const auto acq = default_acq();
  // Pixel halfway between elements 60 and 67.
  const double x =
      0.5 * (probe.element_positions[60] + probe.element_positions[67]);
  const double t1 = time_of_flight(acq, probe, x, 25e-3, 60);
  const double t2 = time_of_flight(acq, probe, x, 25e-3, 67);
  CHECK(t1 == doctest::Approx(t2).epsilon(1e-14));
}

TEST_CASE("time of flight: monotone in depth, errors on bad input") {
  const auto probe = picmus_probe();
  const auto acq = default_acq();
  double prev = 0;
  for (double z = 5e-3; z < 50e-3; z += 1e-3) {
    const double tau = time_of_flight(acq, probe, 2e-3, z, 10);
    CHECK(tau > prev);
    prev = tau;
  }
  CHECK_THROWS_AS(time_of_flight(acq, probe, 0, -1e-3, 0), ValidationError);
  CHECK_THROWS_AS(time_of_flight(acq, probe, 0, 1e-3, 128), ValidationError);
  CHECK_THROWS_AS(time_of_flight(acq, probe, 0, 1e-3, -1), ValidationError);
}

TEST_CASE("steered transmit delay") {
  const auto probe = picmus_probe();
  AcquisitionConfig acq;
  acq.steering_angle = 0.1;
  const double x = 3e-3, z = 20e-3;
  const double expect =
      (z * std::cos(0.1) + x * std::sin(0.1)) / acq.sound_speed +
      std::hypot(x - probe.element_positions[5], z) / acq.sound_speed;
  CHECK(time_of_flight(acq, probe, x, z, 5) == doctest::Approx(expect));
}

TEST_CASE("pulse kernel: peak, support, evenness, reproducibility") {
  const auto pulse = PulseKernel::gaussian_modulated(5.208e6, 0.67, 20.8e6);
  CHECK(kernel_waveform(pulse, 0.0) == 1.0);
  CHECK(kernel_waveform(pulse, pulse.support_half_width * 1.01) == 0.0);
  CHECK(kernel_waveform(pulse, -pulse.support_half_width * 1.01) == 0.0);
  for (double t = 0; t < pulse.support_half_width; t += 7e-9)
    CHECK(kernel_waveform(pulse, t) == kernel_waveform(pulse, -t));

  const auto again = PulseKernel::gaussian_modulated(5.208e6, 0.67, 20.8e6);
  REQUIRE(again.samples.size() == pulse.samples.size());
  for (std::size_t i = 0; i < pulse.samples.size(); ++i)
    CHECK(again.samples[i] == pulse.samples[i]); // bit-identical
}

TEST_CASE("pulse kernel: band-pass (near-zero mean of samples)") {
  const auto pulse = PulseKernel::gaussian_modulated(5.208e6, 0.67, 20.8e6);
  double sum = 0;
  for (double v : pulse.samples) sum += v;
  CHECK(std::abs(sum / static_cast<double>(pulse.samples.size())) < 1e-3);
}

TEST_CASE("pulse kernel: -6 dB spectral width matches the bandwidth ratio") {
  const double fc = 5.208e6, bwr = 0.67;
  // Sample finely so the DFT resolves the band edges.
  const double fs = 166.4e6;
  const auto pulse = PulseKernel::gaussian_modulated(fc, bwr, fs);
  const auto t = pulse.sample_times();
  const int n = static_cast<int>(pulse.samples.size());

  auto magnitude_at = [&](double f) {
    std::complex<double> acc(0, 0);
    for (int i = 0; i < n; ++i)
      acc += pulse.samples[i] *
             std::exp(std::complex<double>(0, -2.0 * M_PI * f * t[i]));
    return std::abs(acc);
  };
  const double peak = magnitude_at(fc);
  const double target = peak * std::pow(10.0, -6.0 / 20.0);
  // Scan for the -6 dB edges around the carrier.
  double f_lo = fc, f_hi = fc;
  for (double f = fc; f > 0; f -= 1e4) {
    if (magnitude_at(f) < target) {
      f_lo = f;
      break;
    }
  }
  for (double f = fc; f < fs / 2; f += 1e4) {
    if (magnitude_at(f) < target) {
      f_hi = f;
      break;
    }
  }
  const double width = f_hi - f_lo;
  CHECK(width == doctest::Approx(bwr * fc).epsilon(0.05));
}

TEST_CASE("acquisition validation") {
  AcquisitionConfig a;
  a.sample_count = 0;
  CHECK_THROWS_AS(a.validate(), ValidationError);
  a = AcquisitionConfig{};
  a.sound_speed = -1;
  CHECK_THROWS_AS(a.validate(), ValidationError);
}

TEST_CASE("grid flattening is depth-major") {
  ImagingGrid g;
  g.nx = 4;
  g.nz = 8;
  g.validate();
  CHECK(g.flat_index(0, 0) == 0);
  CHECK(g.flat_index(0, 1) == 1); // axial neighbor is adjacent
  CHECK(g.flat_index(1, 0) == 8);
  CHECK(g.size() == 32);
  ImagingGrid bad = g;
  bad.z_min = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
}
