#pragma once

#include <string>
#include <vector>

#include "usdr/system_matrix.hpp"

namespace usdr {

enum class RegionRole { TargetIn, ReferenceOut, Roi };

struct RegionMask {
  std::vector<std::uint8_t> mask; // grid-flattened, depth-major
  std::string label;
  RegionRole role = RegionRole::Roi;

  [[nodiscard]] std::size_t count() const;
  void validate(int grid_size) const;
};

// Mask helpers; `stride` keeps every stride-th pixel along each axis so
// statistics can be run on approximately decorrelated samples (about one
// pixel per resolution cell).
RegionMask disk_mask(const ImagingGrid& grid, double cx, double cz, double r,
                     const std::string& label, RegionRole role,
                     int stride_x = 1, int stride_z = 1);
RegionMask annulus_mask(const ImagingGrid& grid, double cx, double cz,
                        double r_in, double r_out, const std::string& label,
                        RegionRole role, int stride_x = 1, int stride_z = 1);
RegionMask rect_mask(const ImagingGrid& grid, double x0, double x1, double z0,
                     double z1, const std::string& label, RegionRole role,
                     int stride_x = 1, int stride_z = 1);

// Per-axial-line envelope: magnitude of the analytic signal (one-sided
// spectrum doubling). Requires nz >= 4.
Vector envelope(const Vector& image, const ImagingGrid& grid);

// 20 log10(env / max(env)), clipped below at -dynamic_range_db.
Vector log_compress(const Vector& env, double dynamic_range_db);

enum class ProfileAxis { Axial, Lateral };

// -6 dB full width at half maximum through a local peak near the seed
// pixel, in millimetres; crossings are linearly interpolated. The peak is
// searched within +-search_px of the seed along both axes.
double fwhm_mm(const Vector& db_image, const ImagingGrid& grid, int seed_ix,
               int seed_iz, ProfileAxis axis, int search_px = 6);

// Contrast-to-noise ratio in dB over linear envelope values.
double cnr_db(const Vector& env, const RegionMask& in, const RegionMask& out);

// Generalized CNR: 1 - histogram overlap over a shared range.
double gcnr(const Vector& env, const RegionMask& in, const RegionMask& out,
            int bins = 256);

// Speckle signal-to-noise ratio mu/sigma over the ROI.
double speckle_snr(const Vector& env, const RegionMask& roi);

// Kolmogorov-Smirnov p-value against a Rayleigh fit (maximum-likelihood
// scale); asymptotic Kolmogorov distribution. Requires >= 100 samples.
double ks_rayleigh_pvalue(const Vector& env, const RegionMask& roi);

// Survival function of the Kolmogorov distribution at x = sqrt(n) * D.
double kolmogorov_sf(double x);

struct FwhmResult {
  std::string label;
  double axial_mm = 0;
  double lateral_mm = 0;
};
struct ContrastResult {
  std::string label;
  double cnr_db = 0;
  double gcnr = 0;
};
struct RoiResult {
  std::string label;
  double snr = 0;
  double ks_pvalue = 0;
  bool speckle_preserved = false; // p > 0.05
};

struct MetricsReport {
  std::string image_id;
  std::vector<FwhmResult> fwhm;
  std::vector<ContrastResult> contrast;
  std::vector<RoiResult> roi;

  [[nodiscard]] std::string to_text() const;
  // Machine-readable table: kind, label, value columns, tab-separated.
  [[nodiscard]] std::string to_tsv() const;
};

} // namespace usdr
