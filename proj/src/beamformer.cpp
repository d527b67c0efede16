#include "usdr/beamformer.hpp"

#include <cmath>
#include <sstream>

namespace usdr {

void ApodizationSpec::validate() const {
  if (f_number < 0) throw ValidationError("apodization: f_number < 0");
  if (taper < 0 || taper > 1)
    throw ValidationError("apodization: taper must be in [0, 1]");
}

WindowKind window_kind_from_string(const std::string& name) {
  if (name == "rectangular" || name == "rect") return WindowKind::Rectangular;
  if (name == "tukey") return WindowKind::Tukey;
  if (name == "hann") return WindowKind::Hann;
  throw ValidationError("apodization: unknown window '" + name + "'");
}

double window_value(const ApodizationSpec& spec, double u) {
  u = std::abs(u);
  if (u > 1.0) return 0.0;
  switch (spec.window) {
    case WindowKind::Rectangular:
      return 1.0;
    case WindowKind::Hann:
      return 0.5 * (1.0 + std::cos(M_PI * u));
    case WindowKind::Tukey: {
      const double flat = 1.0 - spec.taper;
      if (u <= flat) return 1.0;
      return 0.5 * (1.0 + std::cos(M_PI * (u - flat) / spec.taper));
    }
  }
  return 0.0;
}

Matrix apodization_weights(const ProbeGeometry& probe, const ImagingGrid& grid,
                           const ApodizationSpec& spec) {
  spec.validate();
  const int N = grid.size();
  const int L = probe.element_count;
  Matrix w(N, L);
  std::vector<int> empty_pixels;
  for (int n = 0; n < N; ++n) {
    const double x = grid.x_at(n / grid.nz);
    const double z = grid.z_at(n % grid.nz);
    double row_sum = 0.0;
    for (int j = 0; j < L; ++j) {
      double v;
      if (spec.f_number == 0.0) {
        v = window_value(spec, 0.0); // full aperture
      } else {
        const double half_aperture = z / (2.0 * spec.f_number);
        v = window_value(spec,
                         std::abs(x - probe.element_positions[j]) / half_aperture);
      }
      w(n, j) = v;
      row_sum += v;
    }
    if (row_sum == 0.0) empty_pixels.push_back(n);
  }
  if (!empty_pixels.empty()) {
    std::ostringstream msg;
    msg << "apodization: " << empty_pixels.size()
        << " pixel(s) have an empty aperture; first offenders:";
    for (std::size_t i = 0; i < empty_pixels.size() && i < 8; ++i)
      msg << ' ' << empty_pixels[i];
    throw ValidationError(msg.str());
  }
  return w;
}

BeamformerMatrix build_beamformer(const SystemMatrix& H, const Matrix& weights) {
  const int N = static_cast<int>(H.cols());
  const int K = H.samples_per_channel;
  if (weights.rows() != N || weights.cols() != H.channels)
    throw ValidationError("build_beamformer: weight shape mismatch");

  BeamformerMatrix B;
  B.channels = H.channels;
  B.samples_per_channel = K;
  // Row n of B is column n of H scaled per element; a row-major transpose
  // of H shares the sparsity layout directly.
  B.matrix = H.matrix.transpose();
  for (int n = 0; n < N; ++n) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator
             it(B.matrix, n);
         it; ++it) {
      const int j = static_cast<int>(it.col()) / K;
      it.valueRef() *= weights(n, j);
    }
  }
  B.matrix.prune(0.0);
  return B;
}

Vector das(const BeamformerMatrix& B, const Vector& channel_data) {
  if (channel_data.size() != B.matrix.cols())
    throw ValidationError("das: data length mismatch");
  return B.matrix * channel_data;
}

} // namespace usdr
