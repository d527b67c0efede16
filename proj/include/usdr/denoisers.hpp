#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "usdr/sampler.hpp"

namespace usdr {

// Exact minimum-mean-square-error denoiser for a Gaussian prior:
// x_theta = Sigma (Sigma + sigma^2 I)^-1 x, applied in the prior's
// eigenbasis. Supports a diagonal prior or a stationary separable
// axial/lateral covariance with Gaussian correlation.
class GaussianDenoiser : public Denoiser {
 public:
  explicit GaussianDenoiser(Vector variances);
  GaussianDenoiser(int nz, int nx, double marginal_variance,
                   double axial_scale_px, double lateral_scale_px);

  Vector denoise(const Vector& image, double sigma) const override;

 private:
  bool diagonal_ = true;
  Vector var_;
  int nz_ = 0, nx_ = 0;
  Matrix qz_, qx_;
  Vector lz_, lx_;
};

// Orthonormal 2-D Haar transform with soft thresholding of the detail
// coefficients at threshold_k * sigma. Grid dimensions must be divisible
// by 2^levels.
class WaveletDenoiser : public Denoiser {
 public:
  WaveletDenoiser(int nz, int nx, int levels, double threshold_k = 3.0);

  Vector denoise(const Vector& image, double sigma) const override;

  // Exposed for tests: round-trip transform without thresholding.
  Matrix forward(const Matrix& image) const;
  Matrix inverse(const Matrix& coeffs) const;

 private:
  int nz_, nx_, levels_;
  double threshold_k_;
};

// Denoiser that passes through unchanged; useful for diagnostics and as
// the degenerate external echo reference.
class IdentityDenoiser : public Denoiser {
 public:
  Vector denoise(const Vector& image, double /*sigma*/) const override {
    return image;
  }
};

// Exchange endpoint for an out-of-process denoiser. Either a TCP address
// ("host:port") or a command line to spawn ("cmd:path arg1 arg2"), talking
// length-prefixed binary frames over the byte stream (see protocol below).
struct ExternalEndpoint {
  std::string host;               // TCP mode when non-empty
  int port = 0;
  std::vector<std::string> command; // child-process mode when non-empty
  int timeout_ms = 30000;

  static ExternalEndpoint parse(const std::string& spec, int timeout_ms = 30000);
};

// Wire protocol, one request in flight per connection:
//   frame    := u32 payload_length (LE) | payload
//   request  := "DNZ1" | u32 n_z | u32 n_x | f64 sigma | n_z*n_x f64 pixels
//   response := "DNZ2" | n_z*n_x f64 pixels
// All integers and doubles little-endian; pixels depth-major.
class ExternalDenoiser : public Denoiser {
 public:
  ExternalDenoiser(const ExternalEndpoint& endpoint, int nz, int nx);
  ~ExternalDenoiser() override;

  ExternalDenoiser(const ExternalDenoiser&) = delete;
  ExternalDenoiser& operator=(const ExternalDenoiser&) = delete;

  Vector denoise(const Vector& image, double sigma) const override;

 private:
  struct Connection;
  mutable std::mutex mutex_; // serializes requests on the shared connection
  std::unique_ptr<Connection> conn_;
  int nz_, nx_;
};

} // namespace usdr
