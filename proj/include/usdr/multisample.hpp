#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "usdr/system_matrix.hpp"

namespace usdr {

// M independent reconstructions of the same measurement on one grid.
struct SampleBundle {
  std::vector<Vector> images;
  std::vector<std::uint64_t> seeds; // per-chain stream seeds
  std::string config_hash;

  [[nodiscard]] int count() const { return static_cast<int>(images.size()); }
  void validate() const;
};

struct AggregateResult {
  Vector mean;
  Vector variance;     // unbiased sample variance
  Vector var_display;  // sqrt(variance): amplitude-like for dB rendering
};

// Pixelwise mean and unbiased variance; requires M >= 2 for the variance.
AggregateResult aggregate(const SampleBundle& bundle);

struct BetaFit {
  double beta = 0;
  double intercept = 0;
  double residual_rms = 0; // of log residuals
};

// Least-squares fit of log Var = 2 beta log p + c over pixels whose
// echogenicity is above its 20th percentile (and > 0). Requires M >= 5.
BetaFit beta_model_fit(const SampleBundle& bundle, const Vector& echogenicity);

// Synthetic bundle following o_hat_r = o + p^beta G_r, G_r ~ N(0,1); used
// to validate the fit and the echogenicity recovery (Var)^(1/(2 beta)).
SampleBundle synthetic_beta_bundle(const Vector& reflectivity,
                                   const Vector& echogenicity, double beta,
                                   int samples, std::uint64_t seed);

enum class Colormap { Gray, Jet };

// RGB (n_z x n_x x 3, values in [0,1], row-major by pixel then channel):
// luminance carries the mean image, chrominance the variance image via the
// colormap, composed in CIELAB.
std::vector<double> fuse_display(const Vector& mean_db, const Vector& var_db,
                                 const ImagingGrid& grid,
                                 double dynamic_range_db,
                                 Colormap colormap = Colormap::Jet);

// Colormap lookup, u in [0, 1] -> sRGB.
std::array<double, 3> colormap_rgb(Colormap map, double u);

} // namespace usdr
