#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "usdr/system_matrix.hpp"

using namespace usdr;
using usdr::test::tiny_config;

namespace {

struct Setup {
  ProbeGeometry probe;
  AcquisitionConfig acq;
  ImagingGrid grid;
  PulseKernel pulse;
  SystemMatrix H;
};

Setup make_setup() {
  const Config cfg = tiny_config();
  Setup s{probe_from_config(cfg), acquisition_from_config(cfg),
          grid_from_config(cfg), pulse_from_config(cfg), {}};
  s.H = build_system_matrix(s.probe, s.acq, s.grid, s.pulse);
  return s;
}

} // namespace

TEST_CASE("single pixel, single element: band centered at the flight time") {
  // One-pixel grid directly above the array center.
  ProbeGeometry probe = ProbeGeometry::linear(3, 0.30e-3, 0.27e-3);
  AcquisitionConfig acq;
  acq.start_time = 0.0;
  acq.sample_count = 800;
  ImagingGrid grid;
  grid.nx = 1;
  grid.nz = 1;
  grid.x_min = 0;
  grid.x_max = 1e-9;
  grid.z_min = 20e-3;
  grid.z_max = 20e-3 + 1e-9;
  const auto pulse = PulseKernel::gaussian_modulated(5.208e6, 0.67, acq.sampling_rate);
  const auto H = build_system_matrix(probe, acq, grid, pulse);

  const double tau = 2.0 * 20e-3 / acq.sound_speed;
  const int center = static_cast<int>(std::lround((tau - acq.start_time) *
                                                  acq.sampling_rate));
  // Element 1 sits at x = 0: rows K..2K-1.
  const int K = acq.sample_count;
  double best = 0;
  int best_row = -1;
  for (SparseMat::InnerIterator it(H.matrix, 0); it; ++it) {
    if (it.row() >= K && it.row() < 2 * K && std::abs(it.value()) > best) {
      best = std::abs(it.value());
      best_row = static_cast<int>(it.row()) - K;
    }
  }
  CHECK(best_row == center);
}

TEST_CASE("band width matches the truncated kernel support") {
  const auto s = make_setup();
  const double sup = s.pulse.support_half_width;
  const int band = 2 * static_cast<int>(std::ceil(sup * s.acq.sampling_rate)) + 1;
  // Count nonzeros of one column belonging to one element.
  const int K = s.acq.sample_count;
  std::vector<int> per_element(s.probe.element_count, 0);
  for (SparseMat::InnerIterator it(s.H.matrix, 70); it; ++it)
    per_element[static_cast<int>(it.row()) / K]++;
  for (int j = 0; j < s.probe.element_count; ++j) {
    CHECK(per_element[j] <= band);
    CHECK(per_element[j] >= band - 2); // clipping at window edges aside
  }
}

TEST_CASE("columns depend only on the pixel position") {
  const Config cfg = tiny_config();
  const auto probe = probe_from_config(cfg);
  const auto acq = acquisition_from_config(cfg);
  const auto pulse = pulse_from_config(cfg);
  ImagingGrid a = grid_from_config(cfg);
  // A deeper grid whose first depth row coincides with `a`'s.
  ImagingGrid b = a;
  b.z_max = a.z_max + (a.z_max - a.z_min);
  b.nz = 2 * a.nz - 1; // same spacing, first nz depths identical
  AcquisitionConfig acq_b = acq;
  acq_b.sample_count = acq.sample_count * 2;

  const auto Ha = build_system_matrix(probe, acq, a, pulse);
  const auto Hb = build_system_matrix(probe, acq_b, b, pulse);
  // Column of pixel (ix=3, iz=2) in both grids, compare entries.
  const int ca = 3 * a.nz + 2;
  const int cb = 3 * b.nz + 2;
  SparseMat::InnerIterator ita(Ha.matrix, ca);
  SparseMat::InnerIterator itb(Hb.matrix, cb);
  const int K = acq.sample_count;
  for (; ita; ++ita, ++itb) {
    REQUIRE(itb);
    const int ja = static_cast<int>(ita.row()) / K;
    const int ka = static_cast<int>(ita.row()) % K;
    const int jb = static_cast<int>(itb.row()) / acq_b.sample_count;
    const int kb = static_cast<int>(itb.row()) % acq_b.sample_count;
    CHECK(ja == jb);
    CHECK(ka == kb);
    CHECK(ita.value() == itb.value());
  }
}

TEST_CASE("forward on impulses: columns, superposition, zero") {
  const auto s = make_setup();
  const int N = s.grid.size();

  Vector zero = Vector::Zero(N);
  CHECK(apply_forward(s.H, zero).norm() == 0.0);

  Vector e0 = Vector::Zero(N), e1 = Vector::Zero(N);
  e0[17] = 1.0;
  e1[90] = 1.0;
  const Vector y0 = apply_forward(s.H, e0);
  const Vector y1 = apply_forward(s.H, e1);
  CHECK((y0 - Vector(s.H.matrix.col(17))).norm() == 0.0);

  const Vector both = apply_forward(s.H, Vector(e0 + e1));
  CHECK((both - y0 - y1).norm() <= 1e-12 * both.norm());
}

TEST_CASE("impulse response reproduces the kernel table bit-exactly") {
  const auto s = make_setup();
  const int n = 40; // pixel index
  const int ix = n / s.grid.nz, iz = n % s.grid.nz;
  const double x = s.grid.x_at(ix), z = s.grid.z_at(iz);
  const int K = s.acq.sample_count;
  Vector e = Vector::Zero(s.grid.size());
  e[n] = 1.0;
  const Vector y = apply_forward(s.H, e);
  for (int j = 0; j < s.probe.element_count; ++j) {
    const double tau = time_of_flight(s.acq, s.probe, x, z, j);
    for (int k = 0; k < K; ++k) {
      const double t = s.acq.start_time + k / s.acq.sampling_rate - tau;
      const double expect = kernel_waveform(s.pulse, t);
      CHECK(y[j * K + k] == expect); // bit-equal
    }
  }
}

TEST_CASE("adjoint identity over 100 random pairs") {
  const auto s = make_setup();
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    Vector o(s.grid.size()), y(s.H.rows());
    for (auto& v : o) v = normal(rng);
    for (auto& v : y) v = normal(rng);
    const Vector Ho = apply_forward(s.H, o);
    const Vector Hty = apply_adjoint(s.H, y);
    const double lhs = Ho.dot(y);
    const double rhs = o.dot(Hty);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * (Ho.norm() * y.norm()));
  }
}

TEST_CASE("Gram diagonal equals cached squared column norms") {
  const auto s = make_setup();
  for (int n = 0; n < s.grid.size(); n += 13) {
    const Vector col = Vector(s.H.matrix.col(n));
    const Vector g = apply_adjoint(s.H, col);
    CHECK(g[n] ==
          doctest::Approx(s.H.column_norms[n] * s.H.column_norms[n]).epsilon(1e-10));
  }
}

TEST_CASE("adjoint of white noise has a band-pass axial spectrum") {
  const auto s = make_setup();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0, 1);
  Vector y(s.H.rows());
  for (auto& v : y) v = normal(rng);
  const Vector img = apply_adjoint(s.H, y);

  // Average axial magnitude spectrum over lateral lines via plain DFT.
  const int nz = s.grid.nz;
  const double dz = s.grid.dz();
  const double f_axial = 2.0 * s.pulse.center_frequency / s.acq.sound_speed;
  auto power_at = [&](double cycles_per_m) {
    double total = 0;
    for (int ix = 0; ix < s.grid.nx; ++ix) {
      std::complex<double> acc(0, 0);
      for (int iz = 0; iz < nz; ++iz)
        acc += img[ix * nz + iz] *
               std::exp(std::complex<double>(0, -2 * M_PI * cycles_per_m * iz * dz));
      total += std::norm(acc);
    }
    return total;
  };
  // The pulse-echo axial frequency (2 fc / c) should dominate low frequency.
  CHECK(power_at(f_axial) > 5.0 * power_at(f_axial / 8));
}

TEST_CASE("build errors") {
  const Config cfg = tiny_config();
  const auto probe = probe_from_config(cfg);
  auto acq = acquisition_from_config(cfg);
  const auto grid = grid_from_config(cfg);
  const auto pulse = pulse_from_config(cfg);

  BuildBudget tiny_budget;
  tiny_budget.memory_mb = 1e-6;
  CHECK_THROWS_AS(build_system_matrix(probe, acq, grid, pulse, tiny_budget),
                  ValidationError);

  acq.start_time = 1.0; // long after any echo returns
  CHECK_THROWS_AS(build_system_matrix(probe, acq, grid, pulse), ValidationError);

  const auto s = make_setup();
  CHECK_THROWS_AS(apply_forward(s.H, Vector::Zero(3)), ValidationError);
  CHECK_THROWS_AS(apply_adjoint(s.H, Vector::Zero(3)), ValidationError);
}

TEST_CASE("rebuild is element-wise identical") {
  const auto a = make_setup();
  const auto b = make_setup();
  REQUIRE(a.H.matrix.nonZeros() == b.H.matrix.nonZeros());
  for (Eigen::Index i = 0; i < a.H.matrix.nonZeros(); ++i) {
    CHECK(a.H.matrix.valuePtr()[i] == b.H.matrix.valuePtr()[i]);
    CHECK(a.H.matrix.innerIndexPtr()[i] == b.H.matrix.innerIndexPtr()[i]);
  }
}
