#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "usdr/probe.hpp"

namespace usdr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMat = Eigen::SparseMatrix<double>; // column-major (CSC)

// Sparse forward operator mapping a reflectivity image (N) to stacked
// channel data (K*L, element-major: row j*K + k). Column n holds, per
// element, the pulse waveform delayed by the pixel's time of flight and
// evaluated at the sample times; entries outside the pulse support are
// absent.
struct SystemMatrix {
  SparseMat matrix;          // K*L x N
  Vector column_norms;       // cached ||column n||_2, length N
  int channels = 0;          // L
  int samples_per_channel = 0; // K

  [[nodiscard]] Eigen::Index rows() const { return matrix.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return matrix.cols(); }
};

// Memory ceiling for the sparse build; an estimate above this throws
// before any allocation.
struct BuildBudget {
  double memory_mb = 4096.0;
};

SystemMatrix build_system_matrix(const ProbeGeometry& probe,
                                 const AcquisitionConfig& config,
                                 const ImagingGrid& grid,
                                 const PulseKernel& pulse,
                                 const BuildBudget& budget = {});

// y = H o
Vector apply_forward(const SystemMatrix& H, const Vector& image);

// H^T y (matched filtering without apodization)
Vector apply_adjoint(const SystemMatrix& H, const Vector& channel_data);

} // namespace usdr
