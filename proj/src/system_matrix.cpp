#include "usdr/system_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "usdr/parallel.hpp"

namespace usdr {

SystemMatrix build_system_matrix(const ProbeGeometry& probe,
                                 const AcquisitionConfig& config,
                                 const ImagingGrid& grid,
                                 const PulseKernel& pulse,
                                 const BuildBudget& budget) {
  probe.validate();
  config.validate();
  grid.validate();

  const int L = probe.element_count;
  const int K = config.sample_count;
  const int N = grid.size();
  const double fs = config.sampling_rate;
  const double t0 = config.start_time;
  const double sup = pulse.support_half_width;

  // Upper bound on nonzeros: one waveform band per (element, pixel).
  const std::size_t band = 2 * static_cast<std::size_t>(std::ceil(sup * fs)) + 1;
  const double est_mb =
      static_cast<double>(band) * L * N * 16.0 / (1024.0 * 1024.0);
  if (est_mb > budget.memory_mb)
    throw ValidationError("system matrix: estimated " +
                          std::to_string(static_cast<long>(est_mb)) +
                          " MB exceeds budget of " +
                          std::to_string(static_cast<long>(budget.memory_mb)) +
                          " MB");

  // Per-column entries, built in parallel. Row index j*K + k is emitted in
  // increasing order within each column.
  std::vector<std::vector<std::pair<int, double>>> cols(N);
  parallel_for(0, static_cast<std::size_t>(N), [&](std::size_t n) {
    const int ix = static_cast<int>(n) / grid.nz;
    const int iz = static_cast<int>(n) % grid.nz;
    const double x = grid.x_at(ix);
    const double z = grid.z_at(iz);
    auto& col = cols[n];
    col.reserve(band * L);
    for (int j = 0; j < L; ++j) {
      const double tau = time_of_flight(config, probe, x, z, j);
      const int k_lo = std::max(
          0, static_cast<int>(std::ceil((tau - sup - t0) * fs)));
      const int k_hi = std::min(
          K - 1, static_cast<int>(std::floor((tau + sup - t0) * fs)));
      for (int k = k_lo; k <= k_hi; ++k) {
        const double v = kernel_waveform(pulse, t0 + k / fs - tau);
        if (v != 0.0) col.emplace_back(j * K + k, v);
      }
    }
  });

  std::size_t nnz = 0;
  for (const auto& c : cols) nnz += c.size();
  if (nnz == 0)
    throw ValidationError(
        "system matrix: no pixel's time of flight intersects the recorded "
        "time window; check start_time and sample_count");

  SystemMatrix H;
  H.channels = L;
  H.samples_per_channel = K;
  H.matrix.resize(static_cast<Eigen::Index>(K) * L, N);
  H.matrix.reserve(static_cast<Eigen::Index>(nnz));
  for (int n = 0; n < N; ++n) {
    H.matrix.startVec(n);
    for (const auto& [row, val] : cols[n]) H.matrix.insertBack(row, n) = val;
  }
  H.matrix.finalize();

  H.column_norms.resize(N);
  for (int n = 0; n < N; ++n) H.column_norms[n] = H.matrix.col(n).norm();
  return H;
}

Vector apply_forward(const SystemMatrix& H, const Vector& image) {
  if (image.size() != H.cols())
    throw ValidationError("apply_forward: image length " +
                          std::to_string(image.size()) + " != " +
                          std::to_string(H.cols()));
  return H.matrix * image;
}

Vector apply_adjoint(const SystemMatrix& H, const Vector& channel_data) {
  if (channel_data.size() != H.rows())
    throw ValidationError("apply_adjoint: data length " +
                          std::to_string(channel_data.size()) + " != " +
                          std::to_string(H.rows()));
  return H.matrix.transpose() * channel_data;
}

} // namespace usdr
