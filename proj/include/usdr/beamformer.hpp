#pragma once

#include "usdr/system_matrix.hpp"

namespace usdr {

enum class WindowKind { Rectangular, Tukey, Hann };

// Receive apodization: a depth-proportional aperture (f-number law) with
// a window profile across it. f_number == 0 disables the aperture limit
// (all elements active, window value at center).
struct ApodizationSpec {
  WindowKind window = WindowKind::Tukey;
  double taper = 0.25;   // Tukey taper fraction, ignored by other windows
  double f_number = 1.4;

  void validate() const;
};

WindowKind window_kind_from_string(const std::string& name);

// Window profile at normalized offset u in [0, 1] from aperture center.
double window_value(const ApodizationSpec& spec, double u);

// Weighted matched filter: row n is the concatenation over elements of
// a_{j,n} * h_{j,n}^T, i.e. B = (W o H)^T. Row-major storage so rows
// (pixels) are contiguous.
struct BeamformerMatrix {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix; // N x K*L
  int channels = 0;
  int samples_per_channel = 0;
};

// N x L apodization weights; throws listing offending pixels if any pixel
// ends up with an all-zero aperture.
Matrix apodization_weights(const ProbeGeometry& probe, const ImagingGrid& grid,
                           const ApodizationSpec& spec);

BeamformerMatrix build_beamformer(const SystemMatrix& H, const Matrix& weights);

// DAS image: B y
Vector das(const BeamformerMatrix& B, const Vector& channel_data);

} // namespace usdr
