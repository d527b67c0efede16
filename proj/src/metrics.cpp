#include "usdr/metrics.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numeric>
#include <sstream>

namespace usdr {

std::size_t RegionMask::count() const {
  return static_cast<std::size_t>(
      std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

void RegionMask::validate(int grid_size) const {
  if (static_cast<int>(mask.size()) != grid_size)
    throw ValidationError("region '" + label + "': mask size mismatch");
  if (count() == 0)
    throw ValidationError("region '" + label + "': empty mask");
}

namespace {

template <typename Pred>
RegionMask make_mask(const ImagingGrid& grid, const std::string& label,
                     RegionRole role, int stride_x, int stride_z, Pred pred) {
  if (stride_x < 1 || stride_z < 1)
    throw ValidationError("region '" + label + "': stride must be >= 1");
  RegionMask m;
  m.label = label;
  m.role = role;
  m.mask.assign(grid.size(), 0);
  for (int ix = 0; ix < grid.nx; ix += stride_x)
    for (int iz = 0; iz < grid.nz; iz += stride_z)
      if (pred(grid.x_at(ix), grid.z_at(iz)))
        m.mask[grid.flat_index(ix, iz)] = 1;
  return m;
}

std::vector<double> masked_values(const Vector& v, const RegionMask& m) {
  m.validate(static_cast<int>(v.size()));
  std::vector<double> out;
  out.reserve(m.count());
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (m.mask[i]) out.push_back(v[i]);
  return out;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double acc = 0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

} // namespace

RegionMask disk_mask(const ImagingGrid& grid, double cx, double cz, double r,
                     const std::string& label, RegionRole role, int stride_x,
                     int stride_z) {
  return make_mask(grid, label, role, stride_x, stride_z,
                   [&](double x, double z) {
                     return (x - cx) * (x - cx) + (z - cz) * (z - cz) <= r * r;
                   });
}

RegionMask annulus_mask(const ImagingGrid& grid, double cx, double cz,
                        double r_in, double r_out, const std::string& label,
                        RegionRole role, int stride_x, int stride_z) {
  return make_mask(grid, label, role, stride_x, stride_z,
                   [&](double x, double z) {
                     const double d2 = (x - cx) * (x - cx) + (z - cz) * (z - cz);
                     return d2 >= r_in * r_in && d2 <= r_out * r_out;
                   });
}

RegionMask rect_mask(const ImagingGrid& grid, double x0, double x1, double z0,
                     double z1, const std::string& label, RegionRole role,
                     int stride_x, int stride_z) {
  return make_mask(grid, label, role, stride_x, stride_z,
                   [&](double x, double z) {
                     return x >= x0 && x <= x1 && z >= z0 && z <= z1;
                   });
}

// ---------------------------------------------------------------------------

namespace {

// FFTW plan creation is not thread safe; execution via the new-array
// interface is.
std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

struct AnalyticPlans {
  fftw_plan fwd = nullptr, bwd = nullptr;
  int n = 0;
  ~AnalyticPlans() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

} // namespace

Vector envelope(const Vector& image, const ImagingGrid& grid) {
  if (image.size() != grid.size())
    throw ValidationError("envelope: image size mismatch");
  if (grid.nz < 4) throw ValidationError("envelope: nz must be >= 4");
  const int n = grid.nz;

  AnalyticPlans plans;
  std::vector<std::complex<double>> buf(n), spec(n);
  {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    plans.fwd = fftw_plan_dft_1d(
        n, reinterpret_cast<fftw_complex*>(buf.data()),
        reinterpret_cast<fftw_complex*>(spec.data()), FFTW_FORWARD,
        FFTW_ESTIMATE);
    plans.bwd = fftw_plan_dft_1d(
        n, reinterpret_cast<fftw_complex*>(spec.data()),
        reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD,
        FFTW_ESTIMATE);
  }

  Vector env(image.size());
  for (int ix = 0; ix < grid.nx; ++ix) {
    for (int iz = 0; iz < n; ++iz)
      buf[iz] = {image[grid.flat_index(ix, iz)], 0.0};
    fftw_execute(plans.fwd);
    // One-sided doubling: keep DC (and Nyquist for even n), double the
    // positive frequencies, zero the negative ones.
    for (int k = 1; k < (n + 1) / 2; ++k) spec[k] *= 2.0;
    for (int k = n / 2 + 1; k < n; ++k) spec[k] = 0.0;
    fftw_execute(plans.bwd);
    for (int iz = 0; iz < n; ++iz)
      env[grid.flat_index(ix, iz)] = std::abs(buf[iz]) / n;
  }
  return env;
}

Vector log_compress(const Vector& env, double dynamic_range_db) {
  if ((env.array() < 0).any())
    throw ValidationError("log_compress: envelope must be nonnegative");
  const double peak = env.maxCoeff();
  if (!(peak > 0)) throw ValidationError("log_compress: all-zero envelope");
  Vector db(env.size());
  for (Eigen::Index i = 0; i < env.size(); ++i) {
    const double v = env[i] > 0
                         ? 20.0 * std::log10(env[i] / peak)
                         : -dynamic_range_db;
    db[i] = std::max(v, -dynamic_range_db);
  }
  return db;
}

double fwhm_mm(const Vector& db_image, const ImagingGrid& grid, int seed_ix,
               int seed_iz, ProfileAxis axis, int search_px) {
  if (db_image.size() != grid.size())
    throw ValidationError("fwhm: image size mismatch");
  if (seed_ix < 0 || seed_ix >= grid.nx || seed_iz < 0 || seed_iz >= grid.nz)
    throw ValidationError("fwhm: seed outside grid");

  // Refine the seed to the local maximum within the search window.
  int px = seed_ix, pz = seed_iz;
  double best = db_image[grid.flat_index(px, pz)];
  for (int ix = std::max(0, seed_ix - search_px);
       ix <= std::min(grid.nx - 1, seed_ix + search_px); ++ix)
    for (int iz = std::max(0, seed_iz - search_px);
         iz <= std::min(grid.nz - 1, seed_iz + search_px); ++iz) {
      const double v = db_image[grid.flat_index(ix, iz)];
      if (v > best) {
        best = v;
        px = ix;
        pz = iz;
      }
    }

  const bool lateral = axis == ProfileAxis::Lateral;
  const int len = lateral ? grid.nx : grid.nz;
  const int peak_pos = lateral ? px : pz;
  auto value_at = [&](int i) {
    return lateral ? db_image[grid.flat_index(i, pz)]
                   : db_image[grid.flat_index(px, i)];
  };
  // Half maximum of the envelope: 20 log10(1/2) below the peak.
  const double level = best - 20.0 * std::log10(2.0);

  auto crossing = [&](int dir) -> double {
    double prev = value_at(peak_pos);
    for (int i = peak_pos + dir; i >= 0 && i < len; i += dir) {
      const double cur = value_at(i);
      if (cur <= level) {
        const double frac = (prev - level) / (prev - cur);
        return (i - dir) + dir * frac;
      }
      prev = cur;
    }
    throw ValidationError("fwhm: half-maximum crossing not found inside window");
  };

  const double right = crossing(+1);
  const double left = crossing(-1);
  const double width_px = right - left;
  return width_px * (lateral ? grid.dx() : grid.dz()) * 1e3;
}

double cnr_db(const Vector& env, const RegionMask& in, const RegionMask& out) {
  const auto vi = masked_values(env, in);
  const auto vo = masked_values(env, out);
  const double mi = mean_of(vi), mo = mean_of(vo);
  const double si = sample_std(vi, mi), so = sample_std(vo, mo);
  const double denom = 0.5 * (si * si + so * so);
  if (!(denom > 0))
    throw ValidationError("cnr: zero variance in both regions");
  const double num = (mi - mo) * (mi - mo);
  if (num == 0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(num / denom);
}

double gcnr(const Vector& env, const RegionMask& in, const RegionMask& out,
            int bins) {
  if (bins < 2) throw ValidationError("gcnr: bins must be >= 2");
  const auto vi = masked_values(env, in);
  const auto vo = masked_values(env, out);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : vi) { lo = std::min(lo, v); hi = std::max(hi, v); }
  for (double v : vo) { lo = std::min(lo, v); hi = std::max(hi, v); }
  if (!(hi > lo)) return 0.0; // all samples identical: full overlap

  std::vector<double> gi(bins, 0.0), go(bins, 0.0);
  auto bin_of = [&](double v) {
    const int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    return std::min(b, bins - 1);
  };
  for (double v : vi) gi[bin_of(v)] += 1.0 / static_cast<double>(vi.size());
  for (double v : vo) go[bin_of(v)] += 1.0 / static_cast<double>(vo.size());
  double overlap = 0;
  for (int b = 0; b < bins; ++b) overlap += std::min(gi[b], go[b]);
  return 1.0 - overlap;
}

double speckle_snr(const Vector& env, const RegionMask& roi) {
  const auto v = masked_values(env, roi);
  if (v.size() < 100)
    throw ValidationError("speckle_snr: ROI must have >= 100 pixels");
  const double m = mean_of(v);
  const double s = sample_std(v, m);
  if (!(s > 0)) throw ValidationError("speckle_snr: constant ROI");
  return m / s;
}

double kolmogorov_sf(double x) {
  if (x <= 0) return 1.0;
  if (x < 1.18) {
    // Complementary (Jacobi theta) expansion, accurate for small x.
    const double t = std::exp(-M_PI * M_PI / (8.0 * x * x));
    const double sum = t + std::pow(t, 9) + std::pow(t, 25) + std::pow(t, 49);
    return 1.0 - std::sqrt(2.0 * M_PI) / x * sum;
  }
  double sum = 0.0;
  for (int k = 1; k <= 32; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_rayleigh_pvalue(const Vector& env, const RegionMask& roi) {
  auto v = masked_values(env, roi);
  if (v.size() < 100)
    throw ValidationError("ks test: ROI must have >= 100 pixels");
  const auto n = static_cast<double>(v.size());
  // Maximum-likelihood Rayleigh scale.
  double ss = 0;
  for (double x : v) ss += x * x;
  const double sigma2 = ss / (2.0 * n);
  if (!(sigma2 > 0)) throw ValidationError("ks test: degenerate ROI");

  std::sort(v.begin(), v.end());
  double d = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double cdf = 1.0 - std::exp(-v[i] * v[i] / (2.0 * sigma2));
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(cdf - lo, hi - cdf));
  }
  return kolmogorov_sf(std::sqrt(n) * d);
}

std::string MetricsReport::to_text() const {
  std::ostringstream out;
  out << "metrics for " << image_id << "\n";
  for (const auto& f : fwhm)
    out << "  fwhm " << f.label << ": axial " << f.axial_mm << " mm, lateral "
        << f.lateral_mm << " mm\n";
  for (const auto& c : contrast)
    out << "  contrast " << c.label << ": CNR " << c.cnr_db << " dB, gCNR "
        << c.gcnr << "\n";
  for (const auto& r : roi)
    out << "  roi " << r.label << ": SNR " << r.snr << ", KS p " << r.ks_pvalue
        << (r.speckle_preserved ? " (> 0.05: speckle preserved)"
                                : " (<= 0.05)")
        << "\n";
  return out.str();
}

std::string MetricsReport::to_tsv() const {
  std::ostringstream out;
  out << "kind\tlabel\tvalue1\tvalue2\tpass_0.05\n";
  for (const auto& f : fwhm)
    out << "fwhm\t" << f.label << "\t" << f.axial_mm << "\t" << f.lateral_mm
        << "\t\n";
  for (const auto& c : contrast)
    out << "contrast\t" << c.label << "\t" << c.cnr_db << "\t" << c.gcnr
        << "\t\n";
  for (const auto& r : roi)
    out << "roi\t" << r.label << "\t" << r.snr << "\t" << r.ks_pvalue << "\t"
        << (r.speckle_preserved ? "yes" : "no") << "\n";
  return out.str();
}

} // namespace usdr
