#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "usdr/metrics.hpp"

using namespace usdr;

namespace {

ImagingGrid grid_of(int nz, int nx) {
  ImagingGrid g;
  g.nz = nz;
  g.nx = nx;
  g.x_min = 0;
  g.x_max = (nx - 1) * 0.1e-3;
  g.z_min = 1e-3;
  g.z_max = 1e-3 + (nz - 1) * 0.1e-3;
  return g;
}

RegionMask full_mask(const ImagingGrid& g, const std::string& label) {
  RegionMask m;
  m.label = label;
  m.mask.assign(g.size(), 1);
  return m;
}

RegionMask mask_from_values(const std::vector<int>& idx, int n,
                            const std::string& label) {
  RegionMask m;
  m.label = label;
  m.mask.assign(n, 0);
  for (int i : idx) m.mask[i] = 1;
  return m;
}

} // namespace

TEST_CASE("envelope recovers the modulation envelope") {
  const auto g = grid_of(256, 3);
  Vector img(g.size());
  const double f_mod = 0.15; // cycles per sample, well below Nyquist
  for (int ix = 0; ix < g.nx; ++ix)
    for (int iz = 0; iz < g.nz; ++iz) {
      const double u = (iz - 128.0) / 30.0;
      img[g.flat_index(ix, iz)] =
          std::exp(-0.5 * u * u) * std::cos(2 * M_PI * f_mod * iz);
    }
  const Vector env = envelope(img, g);
  CHECK((env.array() >= 0).all());
  for (int iz = 40; iz < 216; ++iz) {
    const double expect = std::exp(-0.5 * std::pow((iz - 128.0) / 30.0, 2));
    if (expect > 0.05)
      CHECK(env[g.flat_index(1, iz)] == doctest::Approx(expect).epsilon(0.02));
  }

  // envelope(-x) = envelope(x)
  const Vector env_neg = envelope(Vector(-img), g);
  CHECK((env - env_neg).cwiseAbs().maxCoeff() < 1e-12);

  ImagingGrid tiny = grid_of(3, 4);
  CHECK_THROWS_AS(envelope(Vector::Zero(12), tiny), ValidationError);
}

TEST_CASE("log compression bounds and clipping") {
  const auto g = grid_of(8, 8);
  Vector env = Vector::Constant(g.size(), 1e-6);
  env[10] = 1.0;
  env[20] = 1.0 / 1000.0;
  const Vector db = log_compress(env, 60.0);
  CHECK(db[10] == 0.0);
  CHECK(db[20] == -60.0); // clipped at the dynamic range
  CHECK(db.maxCoeff() == 0.0);
  CHECK(db.minCoeff() == -60.0);
  CHECK_THROWS_AS(log_compress(Vector::Zero(g.size()), 60.0), ValidationError);
  Vector neg = env;
  neg[3] = -1;
  CHECK_THROWS_AS(log_compress(neg, 60.0), ValidationError);
}

TEST_CASE("fwhm of a gaussian profile") {
  const auto g = grid_of(64, 64);
  const double sigma_px = 4.0;
  Vector env(g.size());
  for (int ix = 0; ix < g.nx; ++ix)
    for (int iz = 0; iz < g.nz; ++iz) {
      const double dx = ix - 32.0, dz = iz - 32.0;
      env[g.flat_index(ix, iz)] =
          1e-5 + std::exp(-(dx * dx + dz * dz) / (2 * sigma_px * sigma_px));
    }
  const Vector db = log_compress(env, 80.0);
  const double expect_mm = 2.0 * std::sqrt(2.0 * std::log(2.0)) * sigma_px * 0.1;
  const double lat = fwhm_mm(db, g, 30, 31, ProfileAxis::Lateral);
  const double ax = fwhm_mm(db, g, 30, 31, ProfileAxis::Axial);
  CHECK(lat == doctest::Approx(expect_mm).epsilon(0.02));
  CHECK(ax == doctest::Approx(expect_mm).epsilon(0.02));

  // Symmetric profile: peak centered between the crossings within a pixel.
  const double level = db.maxCoeff() - 20.0 * std::log10(2.0);
  (void)level;

  // No crossing inside the window: flat image.
  const Vector flat_db = Vector::Zero(g.size());
  CHECK_THROWS_AS(fwhm_mm(flat_db, g, 32, 32, ProfileAxis::Axial),
                  ValidationError);
}

TEST_CASE("cnr formula and scale invariance") {
  const int n = 20000;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nin(0.1, 0.1), nout(1.0, 0.1);
  Vector env(n);
  std::vector<int> in_idx, out_idx;
  for (int i = 0; i < n; ++i) {
    if (i < n / 2) {
      env[i] = nin(rng);
      in_idx.push_back(i);
    } else {
      env[i] = nout(rng);
      out_idx.push_back(i);
    }
  }
  const auto in = mask_from_values(in_idx, n, "in");
  const auto out = mask_from_values(out_idx, n, "out");
  const double cnr = cnr_db(env, in, out);
  // mu_in 0.1, mu_out 1.0, sigma both 0.1: 10 log10(0.81/0.01) = 19.08 dB.
  CHECK(cnr == doctest::Approx(19.08).epsilon(0.02));

  const double cnr_scaled = cnr_db(Vector(13.7 * env), in, out);
  CHECK(cnr_scaled == doctest::Approx(cnr).epsilon(1e-9));

  // Identical regions: no contrast.
  const auto in2 = mask_from_values({0, 1, 2, 3}, n, "a");
  const auto out2 = mask_from_values({0, 1, 2, 3}, n, "b");
  CHECK(cnr_db(env, in2, out2) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("gcnr: overlap extremes, remap robustness, monotone separation") {
  const int n = 20000;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  Vector env(n);
  std::vector<int> a_idx, b_idx;
  for (int i = 0; i < n; ++i) {
    env[i] = uni(rng);
    (i < n / 2 ? a_idx : b_idx).push_back(i);
  }
  const auto a = mask_from_values(a_idx, n, "a");
  const auto b = mask_from_values(b_idx, n, "b");

  // Same distribution: binning noise only (~ bins/(2 n) per-bin noise sum).
  CHECK(gcnr(env, a, b) < 0.15);

  // Identical samples: exactly zero.
  Vector same = env;
  for (int i : b_idx) same[i] = same[i - n / 2];
  CHECK(gcnr(same, a, b) == doctest::Approx(0.0).epsilon(1e-12));

  // Disjoint supports: exactly one.
  Vector split = env;
  for (int i : a_idx) split[i] = uni(rng) * 0.4;
  for (int i : b_idx) split[i] = 0.6 + uni(rng) * 0.4;
  CHECK(gcnr(split, a, b) == 1.0);

  // Monotone remapping moves gCNR by less than 0.02.
  Vector mixed(n);
  std::normal_distribution<double> na(0.4, 0.1), nb(0.7, 0.1);
  for (int i : a_idx) mixed[i] = std::abs(na(rng));
  for (int i : b_idx) mixed[i] = std::abs(nb(rng));
  const double base = gcnr(mixed, a, b);
  const Vector cubed = mixed.array().pow(3.0);
  CHECK(std::abs(gcnr(cubed, a, b) - base) < 0.02);

  CHECK_THROWS_AS(gcnr(env, a, b, 1), ValidationError);
}

TEST_CASE("speckle snr: rayleigh and exponential references") {
  const int n = 10000;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal(0, 1);
  Vector ray(n), expo(n);
  std::exponential_distribution<double> ed(1.0);
  for (int i = 0; i < n; ++i) {
    const double u = normal(rng), v = normal(rng);
    ray[i] = std::hypot(u, v);
    expo[i] = ed(rng);
  }
  const auto roi_full = mask_from_values([&] {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }(), n, "roi");

  // Rayleigh: sqrt(pi/2) / sqrt(2 - pi/2) = 1.913.
  CHECK(speckle_snr(ray, roi_full) == doctest::Approx(1.913).epsilon(0.03));
  CHECK(speckle_snr(expo, roi_full) == doctest::Approx(1.0).epsilon(0.05));

  CHECK_THROWS_AS(speckle_snr(Vector::Ones(n), roi_full), ValidationError);
  const auto small = mask_from_values({1, 2, 3}, n, "small");
  CHECK_THROWS_AS(speckle_snr(ray, small), ValidationError);
}

TEST_CASE("ks rayleigh p-value behaviour") {
  const int n = 2000;
  const auto roi = mask_from_values([&] {
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }(), n, "roi");

  int pass = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0, 2.5);
    Vector ray(n);
    for (int i = 0; i < n; ++i) ray[i] = std::hypot(normal(rng), normal(rng));
    if (ks_rayleigh_pvalue(ray, roi) > 0.05) ++pass;
  }
  CHECK(pass >= 90);

  // Uniform samples are rejected hard.
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uni(0, 1);
  Vector u(5000);
  for (auto& v : u) v = uni(rng);
  const auto roi5k = mask_from_values([&] {
    std::vector<int> idx(5000);
    for (int i = 0; i < 5000; ++i) idx[i] = i;
    return idx;
  }(), 5000, "roi5k");
  CHECK(ks_rayleigh_pvalue(u, roi5k) < 0.01);

  // Scale invariance: the ML fit absorbs any positive scale.
  std::mt19937_64 rng2(8);
  std::normal_distribution<double> normal(0, 1);
  Vector ray(n);
  for (int i = 0; i < n; ++i) ray[i] = std::hypot(normal(rng2), normal(rng2));
  const double p1 = ks_rayleigh_pvalue(ray, roi);
  const double p2 = ks_rayleigh_pvalue(Vector(3.7 * ray), roi);
  CHECK(std::abs(p1 - p2) < 1e-6);
}

TEST_CASE("kolmogorov survival function reference values") {
  // Q(1.3581) = 0.05 and Q(1.2238) = 0.10 (standard KS tables).
  CHECK(kolmogorov_sf(1.3581) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(kolmogorov_sf(1.2238) == doctest::Approx(0.10).epsilon(0.01));
  CHECK(kolmogorov_sf(0.5) == doctest::Approx(0.9639).epsilon(0.01));
  CHECK(kolmogorov_sf(0.0) == 1.0);
  CHECK(kolmogorov_sf(3.0) < 1e-7);
}

TEST_CASE("all metrics are invariant to positive rescaling") {
  const int n = 5000;
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0, 1);
  Vector env(n);
  for (auto& v : env) v = std::abs(normal(rng)) + 0.1;
  std::vector<int> in_idx, out_idx, roi_idx;
  for (int i = 0; i < n; ++i) {
    if (i < 1500) in_idx.push_back(i);
    else if (i < 3000) out_idx.push_back(i);
    roi_idx.push_back(i);
  }
  const auto in = mask_from_values(in_idx, n, "in");
  const auto out = mask_from_values(out_idx, n, "out");
  const auto roi = mask_from_values(roi_idx, n, "roi");
  const Vector scaled = 42.0 * env;
  CHECK(gcnr(scaled, in, out) == doctest::Approx(gcnr(env, in, out)).epsilon(1e-12));
  CHECK(speckle_snr(scaled, roi) ==
        doctest::Approx(speckle_snr(env, roi)).epsilon(1e-12));
  CHECK(std::abs(ks_rayleigh_pvalue(scaled, roi) - ks_rayleigh_pvalue(env, roi)) <
        1e-9);
}

TEST_CASE("report formatting") {
  MetricsReport r;
  r.image_id = "test";
  r.fwhm.push_back({"p0", 0.4, 0.8});
  r.contrast.push_back({"lesion", 12.5, 0.93});
  r.roi.push_back({"bg", 1.91, 0.4, true});
  const std::string text = r.to_text();
  CHECK(text.find("p0") != std::string::npos);
  CHECK(text.find("speckle preserved") != std::string::npos);
  const std::string tsv = r.to_tsv();
  CHECK(tsv.find("pass_0.05") != std::string::npos);
  CHECK(tsv.find("yes") != std::string::npos);
}
