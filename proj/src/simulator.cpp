#include "usdr/simulator.hpp"

#include <algorithm>
#include <cmath>

#include "usdr/parallel.hpp"

namespace usdr {

namespace {

bool region_contains(const PhantomRegion& r, double x, double z) {
  switch (r.shape) {
    case ShapeKind::Disk: {
      const double dx = x - r.cx, dz = z - r.cz;
      return dx * dx + dz * dz <= r.extent_a * r.extent_a;
    }
    case ShapeKind::Rectangle:
      return std::abs(x - r.cx) <= r.extent_a && std::abs(z - r.cz) <= r.extent_b;
    case ShapeKind::Point:
      return false;
  }
  return false;
}

} // namespace

double Phantom::echogenicity_at(double x, double z) const {
  double value = background;
  for (const auto& r : regions)
    if (r.shape != ShapeKind::Point && region_contains(r, x, z))
      value = r.amplitude;
  return value;
}

void Phantom::validate(const ImagingGrid& grid) const {
  if (background < 0)
    throw ValidationError("phantom: negative background echogenicity");
  for (const auto& r : regions) {
    if (r.amplitude < 0)
      throw ValidationError("phantom: negative region amplitude");
    if (r.cx < grid.x_min || r.cx > grid.x_max || r.cz < grid.z_min ||
        r.cz > grid.z_max)
      throw ValidationError("phantom '" + name +
                            "': region center outside the field of view");
  }
}

Phantom phantom_preset(const std::string& name, const ImagingGrid& grid) {
  const double w = grid.x_max - grid.x_min;
  const double d = grid.z_max - grid.z_min;
  const double cx = 0.5 * (grid.x_min + grid.x_max);
  auto fx = [&](double f) { return grid.x_min + f * w; };
  auto fz = [&](double f) { return grid.z_min + f * d; };

  Phantom p;
  p.name = name;
  if (name == "speckle") {
    p.background = 1.0;
  } else if (name == "sr-like") {
    p.background = 0.0;
    // A horizontal row and a vertical column of point targets.
    for (double f : {0.2, 0.35, 0.5, 0.65, 0.8}) {
      p.regions.push_back({ShapeKind::Point, fx(f), fz(0.5), 0, 0, 1.0});
      if (f != 0.5)
        p.regions.push_back({ShapeKind::Point, cx, fz(f), 0, 0, 1.0});
    }
  } else if (name == "sc-like") {
    p.background = 1.0;
    const double r = 0.08 * std::min(w, d);
    for (double fzz : {0.25, 0.5, 0.75})
      for (double fxx : {0.25, 0.5, 0.75})
        p.regions.push_back({ShapeKind::Disk, fx(fxx), fz(fzz), r, 0, 0.0});
  } else if (name == "er-like") {
    p.background = 1.0;
    for (double f : {0.25, 0.4, 0.55, 0.7})
      p.regions.push_back({ShapeKind::Point, fx(f), fz(0.35), 0, 0, 4.0});
    p.regions.push_back(
        {ShapeKind::Disk, cx, fz(0.7), 0.1 * std::min(w, d), 0, 2.0});
  } else if (name == "ec-like") {
    p.background = 1.0;
    const double r = 0.1 * std::min(w, d);
    p.regions.push_back({ShapeKind::Disk, fx(0.3), fz(0.4), r, 0, 0.0});
    p.regions.push_back({ShapeKind::Disk, fx(0.7), fz(0.65), r, 0, 0.0});
  } else {
    std::string known;
    for (const auto& n : phantom_preset_names()) known += " " + n;
    throw ValidationError("unknown phantom preset '" + name +
                          "'; available:" + known);
  }
  p.validate(grid);
  return p;
}

std::vector<std::string> phantom_preset_names() {
  return {"speckle", "sr-like", "sc-like", "er-like", "ec-like"};
}

Vector reflectivity_from_echogenicity(const Vector& echogenicity, Rng& rng) {
  if ((echogenicity.array() < 0).any())
    throw ValidationError("reflectivity: echogenicity must be nonnegative");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector o(echogenicity.size());
  for (Eigen::Index i = 0; i < o.size(); ++i)
    o[i] = echogenicity[i] * normal(rng);
  return o;
}

ScattererField sample_scatterers(const Phantom& phantom, const ImagingGrid& grid,
                                 double density_per_mm2, Rng& rng) {
  if (density_per_mm2 <= 0)
    throw ValidationError("sample_scatterers: density must be > 0");
  phantom.validate(grid);

  ScattererField f;
  f.density_per_mm2 = density_per_mm2;
  const double area_mm2 =
      (grid.x_max - grid.x_min) * (grid.z_max - grid.z_min) * 1e6;
  const auto count = static_cast<std::size_t>(std::llround(density_per_mm2 * area_mm2));

  std::uniform_real_distribution<double> ux(grid.x_min, grid.x_max);
  std::uniform_real_distribution<double> uz(grid.z_min, grid.z_max);
  std::normal_distribution<double> normal(0.0, 1.0);
  f.x.reserve(count);
  f.z.reserve(count);
  f.amplitude.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = ux(rng);
    const double z = uz(rng);
    const double g = normal(rng); // drawn for every site to keep streams aligned
    const double p = phantom.echogenicity_at(x, z);
    if (p <= 0) continue;
    f.x.push_back(x);
    f.z.push_back(z);
    f.amplitude.push_back(p * g);
  }
  for (const auto& r : phantom.regions)
    if (r.shape == ShapeKind::Point) {
      f.x.push_back(r.cx);
      f.z.push_back(r.cz);
      f.amplitude.push_back(r.amplitude);
    }
  return f;
}

Vector synthesize_channel_data(const ScattererField& field,
                               const ProbeGeometry& probe,
                               const AcquisitionConfig& config,
                               const PulseKernel& pulse, Rng& rng,
                               double target_snr_db) {
  probe.validate();
  config.validate();
  const int L = probe.element_count;
  const int K = config.sample_count;
  const double fs = config.sampling_rate;
  const double t0 = config.start_time;
  const double sup = pulse.support_half_width;

  Vector y = Vector::Zero(static_cast<Eigen::Index>(K) * L);
  parallel_for(0, static_cast<std::size_t>(L), [&](std::size_t j) {
    double* chan = y.data() + j * K;
    for (std::size_t s = 0; s < field.size(); ++s) {
      const double tau = time_of_flight(config, probe, field.x[s], field.z[s],
                                        static_cast<int>(j));
      const int k_lo =
          std::max(0, static_cast<int>(std::ceil((tau - sup - t0) * fs)));
      const int k_hi =
          std::min(K - 1, static_cast<int>(std::floor((tau + sup - t0) * fs)));
      for (int k = k_lo; k <= k_hi; ++k)
        chan[k] += field.amplitude[s] * kernel_waveform(pulse, t0 + k / fs - tau);
    }
  });

  double gamma = config.noise_std;
  if (std::isfinite(target_snr_db)) {
    const double signal_rms = std::sqrt(y.squaredNorm() / y.size());
    gamma = signal_rms * std::pow(10.0, -target_snr_db / 20.0);
  }
  if (gamma > 0) {
    // Per-channel noise streams so synthesis stays deterministic under
    // any thread split.
    std::uint64_t base = rng();
    std::vector<Rng> streams;
    streams.reserve(L);
    for (int j = 0; j < L; ++j) streams.push_back(make_rng(base, j));
    parallel_for(0, static_cast<std::size_t>(L), [&](std::size_t j) {
      std::normal_distribution<double> normal(0.0, gamma);
      double* chan = y.data() + j * K;
      for (int k = 0; k < K; ++k) chan[k] += normal(streams[j]);
    });
  }
  return y;
}

Vector rasterize_echogenicity(const Phantom& phantom, const ImagingGrid& grid) {
  Vector p(grid.size());
  for (int ix = 0; ix < grid.nx; ++ix)
    for (int iz = 0; iz < grid.nz; ++iz)
      p[grid.flat_index(ix, iz)] =
          phantom.echogenicity_at(grid.x_at(ix), grid.z_at(iz));
  return p;
}

} // namespace usdr
