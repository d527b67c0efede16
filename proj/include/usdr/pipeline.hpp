#pragma once

#include <optional>
#include <string>

#include "usdr/config.hpp"
#include "usdr/container.hpp"
#include "usdr/denoisers.hpp"
#include "usdr/sampler.hpp"
#include "usdr/simulator.hpp"
#include "usdr/spectral.hpp"

namespace usdr {

// Everything derived from one configuration: geometry, pulse, operators.
struct Model {
  ProbeGeometry probe;
  AcquisitionConfig acq;
  ImagingGrid grid;
  PulseKernel pulse;
  ApodizationSpec apod;
  SystemMatrix H;
  BeamformerMatrix B;
};

ApodizationSpec apodization_from_config(const Config& cfg);
SamplerConfig sampler_from_config(const Config& cfg);

// Canonical parameter string for cache keys; hashes of it key the H/B and
// factorization caches.
std::string model_signature(const Config& cfg);

// Builds H and B (reading/writing the cache directory when given).
Model build_model(const Config& cfg, const std::string& cache_dir = "",
                  bool force_rebuild = false);

// BH factorization for the model, honoring sampler mode (deno = identity)
// and the spectral.* config keys; cached on disk when cache_dir is given.
SpectralFactorization factorize_model(const Model& model, const Config& cfg,
                                      const std::string& cache_dir = "",
                                      bool force_rebuild = false);

// True when factorize_model would be served from cache (or needs none).
bool factorization_cached(const Config& cfg, const std::string& cache_dir);

// Denoiser from the denoiser.* config keys (gaussian | wavelet | external |
// identity).
std::unique_ptr<Denoiser> denoiser_from_config(const Config& cfg,
                                               const ImagingGrid& grid);

// Phantom from a preset name or from phantom.* config keys.
Phantom phantom_from_config(const Config& cfg, const ImagingGrid& grid);

// Was the cache hit on the last build_model / factorize_model call?
// (Reported by the CLI; single-threaded use only.)
bool last_build_was_cache_hit();

} // namespace usdr
