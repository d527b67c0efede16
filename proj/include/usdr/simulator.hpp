#pragma once

#include <string>
#include <vector>

#include "usdr/rng.hpp"
#include "usdr/system_matrix.hpp"

namespace usdr {

enum class ShapeKind { Disk, Rectangle, Point };

// One phantom region. Disks use extent_a as radius; rectangles use
// extent_a/extent_b as half-widths in x/z; points ignore extents and
// become single deterministic scatterers of the given amplitude.
struct PhantomRegion {
  ShapeKind shape = ShapeKind::Disk;
  double cx = 0, cz = 0;       // [m]
  double extent_a = 0, extent_b = 0; // [m]
  double amplitude = 0;        // echogenicity, linear scale (0 = anechoic)
};

struct Phantom {
  std::string name;
  std::vector<PhantomRegion> regions;
  double background = 1.0;

  // Echogenicity at a continuous position; the last containing region
  // wins, point regions are skipped (they are delta scatterers).
  [[nodiscard]] double echogenicity_at(double x, double z) const;
  void validate(const ImagingGrid& grid) const;
};

// Built-in phantoms laid out relative to the grid's field of view:
//   sr-like: point-target rows/columns on an anechoic background
//   sc-like: 9 anechoic disks in uniform speckle
//   er-like: point targets plus a hyperechoic disk in speckle
//   ec-like: 2 anechoic disks in speckle
//   speckle: uniform speckle, no inclusions
Phantom phantom_preset(const std::string& name, const ImagingGrid& grid);
std::vector<std::string> phantom_preset_names();

// Continuous off-grid scatterers; the dense random kind carries signed
// amplitudes (echogenicity times a standard normal draw).
struct ScattererField {
  std::vector<double> x, z;   // [m]
  std::vector<double> amplitude;
  double density_per_mm2 = 0; // recorded for speckle-adequacy checks

  [[nodiscard]] std::size_t size() const { return x.size(); }
};

// Multiplicative speckle model: o_n = d_n * p_n, d ~ N(0, 1) i.i.d.
Vector reflectivity_from_echogenicity(const Vector& echogenicity, Rng& rng);

// Uniform random scatterers over the grid FOV at the given density;
// amplitude = local echogenicity * N(0,1). Anechoic regions contribute
// no scatterers; point regions add one deterministic scatterer each.
ScattererField sample_scatterers(const Phantom& phantom, const ImagingGrid& grid,
                                 double density_per_mm2, Rng& rng);

// Direct time-domain synthesis, independent of the system matrix:
// y_j(t_k) = sum_s amp_s h(t_k - tau_j(r_s)) plus white noise. If
// target_snr_db is finite it sets the noise level from the synthesized
// signal power, otherwise config.noise_std is used.
Vector synthesize_channel_data(const ScattererField& field,
                               const ProbeGeometry& probe,
                               const AcquisitionConfig& config,
                               const PulseKernel& pulse, Rng& rng,
                               double target_snr_db =
                                   std::numeric_limits<double>::quiet_NaN());

// Echogenicity map rasterized on the grid (for ground-truth containers).
Vector rasterize_echogenicity(const Phantom& phantom, const ImagingGrid& grid);

} // namespace usdr
