#include "usdr/multisample.hpp"

#include <algorithm>
#include <cmath>

#include "usdr/rng.hpp"

namespace usdr {

void SampleBundle::validate() const {
  if (images.empty()) throw ValidationError("bundle: no samples");
  for (const auto& im : images)
    if (im.size() != images.front().size())
      throw ValidationError("bundle: samples on different grids");
}

AggregateResult aggregate(const SampleBundle& bundle) {
  bundle.validate();
  const int m = bundle.count();
  if (m < 2)
    throw ValidationError("aggregate: variance needs at least 2 samples");
  const Eigen::Index n = bundle.images.front().size();

  // Per-pixel sorted reductions so the result is bit-identical under any
  // permutation of the samples (and exactly zero variance for identical
  // samples: the anchored mean reproduces the common value exactly).
  AggregateResult r;
  r.mean.resize(n);
  r.variance.resize(n);
  std::vector<double> vals(m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int s = 0; s < m; ++s) vals[s] = bundle.images[s][i];
    std::sort(vals.begin(), vals.end());
    const double ref = vals.front();
    double acc = 0;
    for (double v : vals) acc += v - ref;
    const double mean = ref + acc / m;
    double ss = 0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    r.mean[i] = mean;
    r.variance[i] = ss / (m - 1);
  }
  r.var_display = r.variance.cwiseSqrt();
  return r;
}

BetaFit beta_model_fit(const SampleBundle& bundle, const Vector& echogenicity) {
  bundle.validate();
  if (bundle.count() < 5)
    throw ValidationError("beta fit: needs at least 5 samples");
  if (echogenicity.size() != bundle.images.front().size())
    throw ValidationError("beta fit: echogenicity size mismatch");

  const AggregateResult agg = aggregate(bundle);

  // Exclude the weakest 20% of echogenicity to stay away from the
  // log-singularity at p = 0.
  std::vector<double> sorted(echogenicity.data(),
                             echogenicity.data() + echogenicity.size());
  std::sort(sorted.begin(), sorted.end());
  const double p20 = sorted[static_cast<std::size_t>(0.2 * (sorted.size() - 1))];

  std::vector<double> lx, ly;
  for (Eigen::Index i = 0; i < echogenicity.size(); ++i) {
    const double p = echogenicity[i];
    const double v = agg.variance[i];
    if (p > p20 && p > 0 && v > 0) {
      lx.push_back(std::log(p));
      ly.push_back(std::log(v));
    }
  }
  if (lx.size() < 16)
    throw ValidationError("beta fit: degenerate support (too few usable pixels)");

  const auto n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxy += (lx[i] - mx) * (ly[i] - my);
    sxx += (lx[i] - mx) * (lx[i] - mx);
  }
  if (!(sxx > 0))
    throw ValidationError("beta fit: degenerate support (constant echogenicity)");

  BetaFit fit;
  const double slope = sxy / sxx;
  fit.beta = 0.5 * slope;
  fit.intercept = my - slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double e = ly[i] - (slope * lx[i] + fit.intercept);
    rss += e * e;
  }
  fit.residual_rms = std::sqrt(rss / n);
  return fit;
}

SampleBundle synthetic_beta_bundle(const Vector& reflectivity,
                                   const Vector& echogenicity, double beta,
                                   int samples, std::uint64_t seed) {
  if (reflectivity.size() != echogenicity.size())
    throw ValidationError("synthetic bundle: size mismatch");
  SampleBundle b;
  const Vector pb = echogenicity.array().pow(beta);
  for (int r = 0; r < samples; ++r) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(r));
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector im(reflectivity.size());
    for (Eigen::Index i = 0; i < im.size(); ++i)
      im[i] = reflectivity[i] + pb[i] * normal(rng);
    b.images.push_back(std::move(im));
    b.seeds.push_back(stream_seed(seed, static_cast<std::uint64_t>(r)));
  }
  return b;
}

// ---------------------------------------------------------------------------
// Display fusion

std::array<double, 3> colormap_rgb(Colormap map, double u) {
  u = std::clamp(u, 0.0, 1.0);
  if (map == Colormap::Gray) return {u, u, u};
  // Piecewise-linear jet.
  auto ramp = [](double v) { return std::clamp(v, 0.0, 1.0); };
  const double r = ramp(1.5 - std::abs(4.0 * u - 3.0));
  const double g = ramp(1.5 - std::abs(4.0 * u - 2.0));
  const double b = ramp(1.5 - std::abs(4.0 * u - 1.0));
  return {r, g, b};
}

namespace {

// sRGB <-> CIELAB (D65) conversions.
double srgb_to_linear(double c) {
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}
double linear_to_srgb(double c) {
  return c <= 0.0031308 ? 12.92 * c : 1.055 * std::pow(c, 1.0 / 2.4) - 0.055;
}

void rgb_to_lab(const std::array<double, 3>& rgb, double& L, double& a,
                double& b) {
  const double rl = srgb_to_linear(rgb[0]);
  const double gl = srgb_to_linear(rgb[1]);
  const double bl = srgb_to_linear(rgb[2]);
  double x = 0.4124 * rl + 0.3576 * gl + 0.1805 * bl;
  double y = 0.2126 * rl + 0.7152 * gl + 0.0722 * bl;
  double z = 0.0193 * rl + 0.1192 * gl + 0.9505 * bl;
  x /= 0.95047;
  z /= 1.08883;
  auto f = [](double t) {
    return t > 0.008856 ? std::cbrt(t) : (7.787 * t + 16.0 / 116.0);
  };
  const double fx = f(x), fy = f(y), fz = f(z);
  L = 116.0 * fy - 16.0;
  a = 500.0 * (fx - fy);
  b = 200.0 * (fy - fz);
}

std::array<double, 3> lab_to_rgb(double L, double a, double b) {
  const double fy = (L + 16.0) / 116.0;
  const double fx = fy + a / 500.0;
  const double fz = fy - b / 200.0;
  auto finv = [](double t) {
    const double t3 = t * t * t;
    return t3 > 0.008856 ? t3 : (t - 16.0 / 116.0) / 7.787;
  };
  const double x = finv(fx) * 0.95047;
  const double y = finv(fy);
  const double z = finv(fz) * 1.08883;
  const double rl = 3.2406 * x - 1.5372 * y - 0.4986 * z;
  const double gl = -0.9689 * x + 1.8758 * y + 0.0415 * z;
  const double bl = 0.0557 * x - 0.2040 * y + 1.0570 * z;
  return {std::clamp(linear_to_srgb(rl), 0.0, 1.0),
          std::clamp(linear_to_srgb(gl), 0.0, 1.0),
          std::clamp(linear_to_srgb(bl), 0.0, 1.0)};
}

} // namespace

std::vector<double> fuse_display(const Vector& mean_db, const Vector& var_db,
                                 const ImagingGrid& grid,
                                 double dynamic_range_db, Colormap colormap) {
  if (mean_db.size() != grid.size() || var_db.size() != grid.size())
    throw ValidationError("fuse: image size mismatch");
  const double dr = dynamic_range_db;
  auto in_range = [dr](const Vector& v) {
    return (v.array() >= -dr - 1e-9).all() && (v.array() <= 1e-9).all();
  };
  if (!in_range(mean_db) || !in_range(var_db))
    throw ValidationError("fuse: images must lie in [-DR, 0] dB");

  std::vector<double> rgb(static_cast<std::size_t>(grid.size()) * 3);
  for (int i = 0; i < grid.size(); ++i) {
    const double lum = (mean_db[i] + dr) / dr;          // [0,1]
    const double chroma_u = (var_db[i] + dr) / dr;      // [0,1]
    const auto base = colormap_rgb(colormap, chroma_u);
    double L, a, b;
    rgb_to_lab(base, L, a, b);
    // Chroma strength follows the variance signal so that a silent
    // variance image degrades to a pure grayscale rendering.
    const auto out = lab_to_rgb(100.0 * lum, chroma_u * a, chroma_u * b);
    rgb[3 * i + 0] = out[0];
    rgb[3 * i + 1] = out[1];
    rgb[3 * i + 2] = out[2];
  }
  return rgb;
}

} // namespace usdr
