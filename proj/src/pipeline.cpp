#include "usdr/pipeline.hpp"

#include <filesystem>
#include <set>
#include <sstream>
#include <string>

namespace usdr {

namespace {

bool g_cache_hit = false;

std::string cache_path(const std::string& cache_dir, const std::string& stem,
                       const std::string& signature) {
  return cache_dir + "/" + stem + "_" + sha256_hex(signature).substr(0, 16) +
         ".usdr";
}

} // namespace

bool last_build_was_cache_hit() { return g_cache_hit; }

ApodizationSpec apodization_from_config(const Config& cfg) {
  ApodizationSpec spec;
  spec.window =
      window_kind_from_string(cfg.get_string("apodization.window", "tukey"));
  spec.taper = cfg.get_double("apodization.taper", 0.25);
  spec.f_number = cfg.get_double("apodization.f_number", 1.4);
  spec.validate();
  return spec;
}

SamplerConfig sampler_from_config(const Config& cfg) {
  SamplerConfig s;
  s.eta = cfg.get_double("sampler.eta", 0.85);
  s.eta_b = cfg.get_double("sampler.eta_b", 1.0);
  const std::string sd = cfg.get_string("sampler.sigma_d", "auto");
  s.sigma_d = sd == "auto" ? -1.0 : cfg.require_double("sampler.sigma_d");
  s.iterations = cfg.get_int("sampler.iterations", 50);
  s.t_full = cfg.get_int("sampler.t_full", 1000);
  s.sigma_min = cfg.get_double("sampler.sigma_min", 1e-4);
  s.sigma_max = cfg.get_double("sampler.sigma_max", 1.0);
  s.seed = static_cast<std::uint64_t>(cfg.get_double("sampler.seed", 0));
  const std::string mode = cfg.get_string("sampler.mode", "drus");
  if (mode == "drus")
    s.mode = SamplerMode::Drus;
  else if (mode == "deno")
    s.mode = SamplerMode::Deno;
  else
    throw ValidationError("sampler: unknown mode '" + mode + "'");
  s.sample_count = cfg.get_int("sampler.samples", 1);
  s.normalization_scale = cfg.get_double("sampler.normalization_scale", 0.0);
  s.rank_tol = cfg.get_double("spectral.rank_tol", 1e-6);
  s.validate();
  return s;
}

std::string model_signature(const Config& cfg) {
  const ProbeGeometry probe = probe_from_config(cfg);
  const AcquisitionConfig acq = acquisition_from_config(cfg);
  const ImagingGrid grid = grid_from_config(cfg);
  const PulseKernel pulse = pulse_from_config(cfg);
  const ApodizationSpec apod = apodization_from_config(cfg);
  std::ostringstream sig;
  sig.precision(17);
  sig << "L=" << probe.element_count << ";pitch=" << probe.pitch
      << ";ew=" << probe.element_width << ";c=" << acq.sound_speed
      << ";fs=" << acq.sampling_rate << ";t0=" << acq.start_time
      << ";K=" << acq.sample_count << ";alpha=" << acq.steering_angle
      << ";x=[" << grid.x_min << "," << grid.x_max << "]x" << grid.nx
      << ";z=[" << grid.z_min << "," << grid.z_max << "]x" << grid.nz
      << ";fc=" << pulse.center_frequency << ";bwr=" << pulse.bandwidth_ratio
      << ";win=" << static_cast<int>(apod.window) << ";taper=" << apod.taper
      << ";fnum=" << apod.f_number;
  return sig.str();
}

Model build_model(const Config& cfg, const std::string& cache_dir,
                  bool force_rebuild) {
  Model m;
  m.probe = probe_from_config(cfg);
  m.acq = acquisition_from_config(cfg);
  m.grid = grid_from_config(cfg);
  m.pulse = pulse_from_config(cfg);
  m.apod = apodization_from_config(cfg);

  const std::string sig = model_signature(cfg);
  const bool use_cache = !cache_dir.empty();
  const std::string h_path = use_cache ? cache_path(cache_dir, "H", sig) : "";
  const std::string b_path = use_cache ? cache_path(cache_dir, "B", sig) : "";

  g_cache_hit = false;
  if (use_cache && !force_rebuild && std::filesystem::exists(h_path) &&
      std::filesystem::exists(b_path)) {
    const Container hc = Container::read_verified(h_path);
    const Container bc = Container::read_verified(b_path);
    m.H.matrix = hc.sparse;
    m.H.channels = m.probe.element_count;
    m.H.samples_per_channel = m.acq.sample_count;
    m.H.column_norms.resize(m.H.cols());
    for (Eigen::Index n = 0; n < m.H.cols(); ++n)
      m.H.column_norms[n] = m.H.matrix.col(n).norm();
    m.B.matrix = bc.sparse.transpose(); // stored column-major as B^T
    m.B.channels = m.probe.element_count;
    m.B.samples_per_channel = m.acq.sample_count;
    g_cache_hit = true;
    return m;
  }

  BuildBudget budget;
  budget.memory_mb = cfg.get_double("matrix.memory_budget_mb", 4096.0);
  m.H = build_system_matrix(m.probe, m.acq, m.grid, m.pulse, budget);
  const Matrix weights = apodization_weights(m.probe, m.grid, m.apod);
  m.B = build_beamformer(m.H, weights);

  if (use_cache) {
    std::filesystem::create_directories(cache_dir);
    Container hc = make_matrix_container(m.H.matrix);
    hc.attrs["model_signature"] = sig;
    hc.attrs["content"] = "system-matrix";
    hc.write(h_path);
    Container bc = make_matrix_container(SparseMat(m.B.matrix.transpose()));
    bc.attrs["model_signature"] = sig;
    bc.attrs["content"] = "beamformer-transpose";
    bc.write(b_path);
  }
  return m;
}

namespace {

std::string fact_signature(const Config& cfg) {
  const std::string method_name = cfg.get_string("spectral.method", "exact");
  const double tol = cfg.get_double(
      "spectral.tol", method_name == "randomized" ? 0.1 : 1e-8);
  return model_signature(cfg) + ";svd=" + method_name +
         ";tol=" + std::to_string(tol) +
         ";rank=" + cfg.get_string("spectral.rank", "0");
}

} // namespace

bool factorization_cached(const Config& cfg, const std::string& cache_dir) {
  if (cfg.get_string("sampler.mode", "drus") == "deno") return true;
  if (cache_dir.empty()) return false;
  return std::filesystem::exists(cache_path(cache_dir, "S", fact_signature(cfg)));
}

SpectralFactorization factorize_model(const Model& model, const Config& cfg,
                                      const std::string& cache_dir,
                                      bool force_rebuild) {
  const std::string mode = cfg.get_string("sampler.mode", "drus");
  if (mode == "deno") return identity_factorization(model.grid.size());

  const std::string method_name = cfg.get_string("spectral.method", "exact");
  const FactorizeMethod method = method_name == "randomized"
                                     ? FactorizeMethod::Randomized
                                     : FactorizeMethod::Exact;
  const double tol = cfg.get_double(
      "spectral.tol", method == FactorizeMethod::Exact ? 1e-8 : 0.1);

  const std::string sig = fact_signature(cfg);
  const bool use_cache = !cache_dir.empty();
  const std::string stem = use_cache ? cache_path(cache_dir, "S", sig) : "";

  g_cache_hit = false;
  if (use_cache && !force_rebuild && std::filesystem::exists(stem)) {
    const Container sc = Container::read_verified(stem);
    SpectralFactorization f;
    const int n = std::stoi(sc.attrs.at("n"));
    const int r = std::stoi(sc.attrs.at("rank"));
    f.rank = r;
    f.method = sc.attrs.at("method") == "randomized" ? FactorizeMethod::Randomized
                                                     : FactorizeMethod::Exact;
    f.residual_norm = std::stod(sc.attrs.at("residual"));
    f.U = Eigen::Map<const Matrix>(sc.payload.data(), n, r);
    f.S = Eigen::Map<const Vector>(sc.payload.data() + static_cast<long>(n) * r, r);
    f.V = Eigen::Map<const Matrix>(
        sc.payload.data() + static_cast<long>(n) * r + r, n, r);
    g_cache_hit = true;
    return f;
  }

  const double budget = cfg.get_double("matrix.memory_budget_mb", 4096.0);
  const Matrix bh = compose_bh(model.B, model.H, budget);
  RandomizedOptions opts;
  opts.target_rank = cfg.get_int("spectral.rank", 0);
  opts.oversampling = cfg.get_int("spectral.oversampling", 10);
  opts.power_iterations = cfg.get_int("spectral.power_iterations", 2);
  const SpectralFactorization f = factorize(bh, method, tol, opts);

  if (use_cache) {
    std::filesystem::create_directories(cache_dir);
    Container sc;
    sc.kind = ContainerKind::Image;
    const auto n = static_cast<std::uint64_t>(f.U.rows());
    const auto r = static_cast<std::uint64_t>(f.rank);
    sc.shape = {n * r + r + n * r};
    sc.payload.resize(sc.shape[0]);
    double* p = sc.payload.data();
    std::copy(f.U.data(), f.U.data() + n * r, p);
    std::copy(f.S.data(), f.S.data() + r, p + n * r);
    std::copy(f.V.data(), f.V.data() + n * r, p + n * r + r);
    sc.attrs["content"] = "svd";
    sc.attrs["n"] = std::to_string(n);
    sc.attrs["rank"] = std::to_string(r);
    sc.attrs["method"] = method_name;
    sc.attrs["residual"] = std::to_string(f.residual_norm);
    sc.attrs["model_signature"] = sig;
    sc.write(stem);
  }
  return f;
}

std::unique_ptr<Denoiser> denoiser_from_config(const Config& cfg,
                                               const ImagingGrid& grid) {
  const std::string kind = cfg.get_string("denoiser.kind", "wavelet");
  if (kind == "identity") return std::make_unique<IdentityDenoiser>();
  if (kind == "wavelet") {
    return std::make_unique<WaveletDenoiser>(
        grid.nz, grid.nx, cfg.get_int("denoiser.levels", 3),
        cfg.get_double("denoiser.threshold_k", 3.0));
  }
  if (kind == "gaussian") {
    if (cfg.has("denoiser.gaussian.variance_per_pixel")) {
      const double v = cfg.require_double("denoiser.gaussian.variance_per_pixel");
      return std::make_unique<GaussianDenoiser>(
          Vector(Vector::Constant(grid.size(), v)));
    }
    return std::make_unique<GaussianDenoiser>(
        grid.nz, grid.nx, cfg.get_double("denoiser.gaussian.variance", 0.25),
        cfg.get_double("denoiser.gaussian.axial_scale_px", 1.0),
        cfg.get_double("denoiser.gaussian.lateral_scale_px", 1.0));
  }
  if (kind == "external") {
    const ExternalEndpoint ep = ExternalEndpoint::parse(
        cfg.require_string("denoiser.endpoint"),
        cfg.get_int("denoiser.timeout_ms", 30000));
    return std::make_unique<ExternalDenoiser>(ep, grid.nz, grid.nx);
  }
  throw ValidationError("denoiser: unknown kind '" + kind + "'");
}

Phantom phantom_from_config(const Config& cfg, const ImagingGrid& grid) {
  if (cfg.has("phantom.preset"))
    return phantom_preset(cfg.require_string("phantom.preset"), grid);

  Phantom p;
  p.name = cfg.get_string("phantom.name", "custom");
  p.background = cfg.get_double("phantom.background", 1.0);
  // Regions are phantom.region.<name>.{shape,cx,cz,r|hx,hz,amplitude}.
  std::set<std::string> names;
  for (const auto& key : cfg.keys_with_prefix("phantom.region")) {
    const auto dot = key.find('.');
    if (dot != std::string::npos) names.insert(key.substr(0, dot));
  }
  for (const auto& name : names) {
    const std::string base = "phantom.region." + name + ".";
    PhantomRegion r;
    const std::string shape = cfg.get_string(base + "shape", "disk");
    r.cx = cfg.require_double(base + "cx");
    r.cz = cfg.require_double(base + "cz");
    r.amplitude = cfg.get_double(base + "amplitude", 0.0);
    if (shape == "disk") {
      r.shape = ShapeKind::Disk;
      r.extent_a = cfg.require_double(base + "r");
    } else if (shape == "rect") {
      r.shape = ShapeKind::Rectangle;
      r.extent_a = cfg.require_double(base + "hx");
      r.extent_b = cfg.require_double(base + "hz");
    } else if (shape == "point") {
      r.shape = ShapeKind::Point;
    } else {
      throw ValidationError("phantom: unknown shape '" + shape + "'");
    }
    p.regions.push_back(r);
  }
  p.validate(grid);
  return p;
}

} // namespace usdr
