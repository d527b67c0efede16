// usdr: plane-wave ultrasound reconstruction pipeline.
//
// Subcommands: build-model, simulate, reconstruct, metrics, render,
// verify, picmus-import. Exit codes: 0 ok, 2 validation error,
// 3 numerical failure, 4 I/O error.

#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "usdr/container.hpp"
#include "usdr/metrics.hpp"
#include "usdr/multisample.hpp"
#include "usdr/parallel.hpp"
#include "usdr/picmus.hpp"
#include "usdr/pipeline.hpp"
#include "usdr/render.hpp"

namespace {

using namespace usdr;

struct GlobalOpts {
  std::string config_path;
  std::string cache_dir = "cache";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
};

Config load_config(const GlobalOpts& g) {
  Config cfg = g.config_path.empty() ? Config() : Config::from_file(g.config_path);
  if (g.seed_given) cfg.set("sampler.seed", std::to_string(g.seed));
  return cfg;
}

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

RunManifest manifest_for(const std::string& command, const Config& cfg) {
  RunManifest m;
  m.command = command;
  m.config = cfg.entries();
  return m;
}

int cmd_build_model(const GlobalOpts& g, bool force) {
  const auto start = std::chrono::steady_clock::now();
  const Config cfg = load_config(g);
  Model model = build_model(cfg, g.cache_dir, force);
  std::cout << (last_build_was_cache_hit() ? "cache hit" : "built") << ": H "
            << model.H.rows() << "x" << model.H.cols() << ", nnz "
            << model.H.matrix.nonZeros() << "\n";
  SpectralFactorization fact = factorize_model(model, cfg, g.cache_dir, force);
  std::cout << (last_build_was_cache_hit() ? "cache hit" : "factorized")
            << ": rank " << fact.rank << ", residual " << fact.residual_norm
            << "\n";
  RunManifest man = manifest_for("build-model", cfg);
  man.wall_time_s = elapsed_s(start);
  man.write(g.cache_dir + "/build-model.manifest.json");
  return 0;
}

int cmd_simulate(const GlobalOpts& g, const std::string& preset,
                 const std::string& out_prefix, double density,
                 double snr_db) {
  const auto start = std::chrono::steady_clock::now();
  Config cfg = load_config(g);
  if (!preset.empty()) cfg.set("phantom.preset", preset);

  const ProbeGeometry probe = probe_from_config(cfg);
  const AcquisitionConfig acq = acquisition_from_config(cfg);
  const ImagingGrid grid = grid_from_config(cfg);
  const PulseKernel pulse = pulse_from_config(cfg);
  const Phantom phantom = phantom_from_config(cfg, grid);
  const auto seed = static_cast<std::uint64_t>(cfg.get_double("sampler.seed", 0));

  Rng rng = make_rng(seed);
  const ScattererField field =
      sample_scatterers(phantom, grid, density, rng);
  const Vector y = synthesize_channel_data(field, probe, acq, pulse, rng,
                                           snr_db);

  RunManifest man = manifest_for("simulate", cfg);
  man.seeds = {seed};

  Container ch = make_channel_container(y, probe.element_count, acq.sample_count);
  ch.attrs["phantom"] = phantom.name;
  ch.attrs["seed"] = std::to_string(seed);
  const std::string ch_path = out_prefix + ".channel.usdr";
  ch.write(ch_path);
  man.output_hashes[ch_path] = ch.content_hash();

  Container gt = make_image_container(rasterize_echogenicity(phantom, grid), grid);
  gt.attrs["content"] = "echogenicity";
  const std::string gt_path = out_prefix + ".echogenicity.usdr";
  gt.write(gt_path);
  man.output_hashes[gt_path] = gt.content_hash();

  Container sc;
  sc.kind = ContainerKind::Image;
  sc.shape = {3, field.size()};
  sc.payload.reserve(3 * field.size());
  sc.payload.insert(sc.payload.end(), field.x.begin(), field.x.end());
  sc.payload.insert(sc.payload.end(), field.z.begin(), field.z.end());
  sc.payload.insert(sc.payload.end(), field.amplitude.begin(),
                    field.amplitude.end());
  sc.attrs["content"] = "scatterers";
  sc.attrs["density_per_mm2"] = std::to_string(field.density_per_mm2);
  const std::string sc_path = out_prefix + ".scatterers.usdr";
  sc.write(sc_path);
  man.output_hashes[sc_path] = sc.content_hash();

  man.wall_time_s = elapsed_s(start);
  man.write(out_prefix + ".manifest.json");
  std::cout << "simulated " << field.size() << " scatterers -> " << ch_path
            << "\n";
  return 0;
}

int cmd_reconstruct(const GlobalOpts& g, const std::string& input,
                    const std::string& mode, const std::string& out_prefix,
                    int iterations, int samples, const std::string& denoiser,
                    bool no_auto_build) {
  const auto start = std::chrono::steady_clock::now();
  Config cfg = load_config(g);
  if (mode == "drus" || mode == "deno")
    cfg.set("sampler.mode", mode);
  else if (mode != "das")
    throw ValidationError("reconstruct: unknown mode '" + mode + "'");
  if (iterations > 0) cfg.set("sampler.iterations", std::to_string(iterations));
  if (samples > 0) cfg.set("sampler.samples", std::to_string(samples));
  if (!denoiser.empty()) cfg.set("denoiser.kind", denoiser);

  const Container ch = Container::read_verified(input);
  if (ch.kind != ContainerKind::Channel)
    throw ValidationError("reconstruct: input is not a channel container");
  const Vector y = container_vector(ch);

  RunManifest man = manifest_for("reconstruct", cfg);
  man.input_hashes[input] = ch.content_hash();

  const Model model = build_model(cfg, g.cache_dir);
  if (y.size() != model.H.rows())
    throw ValidationError(
        "reconstruct: channel container does not match the configured "
        "probe/time geometry");

  const ImagingGrid& grid = model.grid;
  auto write_image = [&](const Vector& img, const std::string& suffix,
                         const std::string& content) {
    Container c = make_image_container(img, grid);
    c.attrs["content"] = content;
    c.attrs["mode"] = mode.empty() ? "drus" : mode;
    const std::string path = out_prefix + suffix;
    c.write(path);
    man.output_hashes[path] = c.content_hash();
  };

  if (mode == "das") {
    if (iterations > 0 || samples > 0 || !denoiser.empty())
      std::cerr << "warning: das mode ignores iterations/samples/denoiser\n";
    write_image(das(model.B, y), ".image.usdr", "rf");
  } else {
    if (no_auto_build && !factorization_cached(cfg, g.cache_dir))
      throw ValidationError(
          "reconstruct: factorization cache missing and --no-auto-build "
          "given; run build-model first");
    const SpectralFactorization fact = factorize_model(model, cfg, g.cache_dir);
    SamplerConfig sc = sampler_from_config(cfg);
    const auto den = denoiser_from_config(cfg, grid);
    const Vector projected = das(model.B, y);

    if (sc.sample_count == 1) {
      write_image(run_chain_projected(sc, fact, projected, *den), ".image.usdr",
                  "rf");
      man.seeds = {sc.seed};
    } else {
      const std::vector<Vector> images =
          run_chains_projected(sc, fact, projected, *den);
      SampleBundle bundle;
      bundle.images = images;
      for (int i = 0; i < sc.sample_count; ++i) {
        bundle.seeds.push_back(stream_seed(sc.seed, i));
        man.seeds.push_back(stream_seed(sc.seed, i));
      }
      Container bc = make_bundle_container(images, grid);
      bc.attrs["content"] = "rf-bundle";
      bc.attrs["seed"] = std::to_string(sc.seed);
      const std::string bpath = out_prefix + ".bundle.usdr";
      bc.write(bpath);
      man.output_hashes[bpath] = bc.content_hash();

      const AggregateResult agg = aggregate(bundle);
      write_image(agg.mean, ".mean.usdr", "rf");
      write_image(agg.variance, ".variance.usdr", "variance");
      write_image(agg.var_display, ".var-amplitude.usdr", "amplitude");
    }
  }

  man.wall_time_s = elapsed_s(start);
  man.write(out_prefix + ".manifest.json");
  std::cout << "reconstruction written to " << out_prefix << ".*\n";
  return 0;
}

// Region definitions: region.<name>.kind = lesion | roi | point, with
// lesion: cx, cz, r (in-disk at 0.8 r, out-annulus 1.2 r .. 1.8 r)
// roi:    rect x0,x1,z0,z1 or disk cx,cz,r; optional stride_x/stride_z
// point:  cx, cz (FWHM seed)
int cmd_metrics(const GlobalOpts& g, const std::string& input,
                const std::string& out_prefix) {
  const auto start = std::chrono::steady_clock::now();
  const Config cfg = load_config(g);
  const Container ic = Container::read_verified(input);
  if (ic.kind != ContainerKind::Image)
    throw ValidationError("metrics: input is not an image container");
  const ImagingGrid grid = grid_from_config(cfg);
  const Vector img = container_vector(ic);
  if (img.size() != grid.size())
    throw ValidationError("metrics: image does not match configured grid");

  const std::string content =
      ic.attrs.count("content") ? ic.attrs.at("content") : "rf";
  const Vector env =
      content == "rf" ? envelope(img, grid) : Vector(img.cwiseAbs());
  const Vector db = log_compress(env, cfg.get_double("render.dynamic_range", 60));

  MetricsReport report;
  report.image_id = input;

  std::set<std::string> names;
  for (const auto& key : cfg.keys_with_prefix("region")) {
    const auto dot = key.find('.');
    if (dot != std::string::npos) names.insert(key.substr(0, dot));
  }
  if (names.empty())
    throw ValidationError("metrics: no region.* definitions in config");

  for (const auto& name : names) {
    const std::string base = "region." + name + ".";
    const std::string kind = cfg.require_string(base + "kind");
    if (kind == "lesion") {
      const double cx = cfg.require_double(base + "cx");
      const double cz = cfg.require_double(base + "cz");
      const double r = cfg.require_double(base + "r");
      const auto in = disk_mask(grid, cx, cz, 0.8 * r, name, RegionRole::TargetIn);
      const auto out = annulus_mask(grid, cx, cz, 1.2 * r, 1.8 * r, name,
                                    RegionRole::ReferenceOut);
      report.contrast.push_back(
          {name, cnr_db(env, in, out), gcnr(env, in, out)});
    } else if (kind == "roi") {
      const int sx = cfg.get_int(base + "stride_x", 1);
      const int sz = cfg.get_int(base + "stride_z", 1);
      RegionMask roi =
          cfg.has(base + "r")
              ? disk_mask(grid, cfg.require_double(base + "cx"),
                          cfg.require_double(base + "cz"),
                          cfg.require_double(base + "r"), name, RegionRole::Roi,
                          sx, sz)
              : rect_mask(grid, cfg.require_double(base + "x0"),
                          cfg.require_double(base + "x1"),
                          cfg.require_double(base + "z0"),
                          cfg.require_double(base + "z1"), name,
                          RegionRole::Roi, sx, sz);
      const double p = ks_rayleigh_pvalue(env, roi);
      report.roi.push_back({name, speckle_snr(env, roi), p, p > 0.05});
    } else if (kind == "point") {
      const double cx = cfg.require_double(base + "cx");
      const double cz = cfg.require_double(base + "cz");
      const int ix = static_cast<int>(std::lround((cx - grid.x_min) / grid.dx()));
      const int iz = static_cast<int>(std::lround((cz - grid.z_min) / grid.dz()));
      report.fwhm.push_back(
          {name, fwhm_mm(db, grid, ix, iz, ProfileAxis::Axial),
           fwhm_mm(db, grid, ix, iz, ProfileAxis::Lateral)});
    } else {
      throw ValidationError("metrics: region '" + name + "' has unknown kind '" +
                            kind + "'");
    }
  }

  std::cout << report.to_text();
  std::ofstream txt(out_prefix + ".metrics.txt");
  txt << report.to_text();
  std::ofstream tsv(out_prefix + ".metrics.tsv");
  tsv << report.to_tsv();

  RunManifest man = manifest_for("metrics", cfg);
  man.input_hashes[input] = ic.content_hash();
  man.wall_time_s = elapsed_s(start);
  man.write(out_prefix + ".metrics.manifest.json");
  return 0;
}

int cmd_render(const GlobalOpts& g, const std::string& input,
               const std::string& out, double dr, const std::string& cmap,
               const std::string& fuse_mean, const std::string& fuse_var) {
  const Config cfg = load_config(g);
  const ImagingGrid grid = grid_from_config(cfg);

  if (!fuse_mean.empty() || !fuse_var.empty()) {
    if (fuse_mean.empty() || fuse_var.empty())
      throw ValidationError("render: --fuse-mean and --fuse-var go together");
    const Container mc = Container::read_verified(fuse_mean);
    const Container vc = Container::read_verified(fuse_var);
    const Vector mean_img = container_vector(mc);
    const Vector var_img = container_vector(vc);
    const Vector mean_db = log_compress(envelope(mean_img, grid), dr);
    const Vector var_db = log_compress(var_img.cwiseAbs().cwiseSqrt(), dr);
    const auto rgb = fuse_display(mean_db, var_db, grid, dr, Colormap::Jet);
    write_png_rgb(out, rgb, grid);
    std::cout << "fused render -> " << out << "\n";
    return 0;
  }

  const Container ic = Container::read_verified(input);
  if (ic.kind != ContainerKind::Image)
    throw ValidationError("render: input is not an image container");
  const Vector img = container_vector(ic);
  if (img.size() != grid.size())
    throw ValidationError("render: image does not match configured grid");
  const std::string content =
      ic.attrs.count("content") ? ic.attrs.at("content") : "rf";
  Vector env;
  if (content == "rf")
    env = envelope(img, grid);
  else if (content == "variance")
    env = img.cwiseAbs().cwiseSqrt();
  else
    env = img.cwiseAbs();
  const Vector db = log_compress(env, dr);
  write_png_colormap(out, db, grid, dr,
                     cmap == "jet" ? Colormap::Jet : Colormap::Gray);
  std::cout << "render -> " << out << "\n";
  return 0;
}

int cmd_verify(const std::vector<std::string>& files) {
  int bad = 0;
  for (const auto& f : files) {
    try {
      Container::read_verified(f);
      std::cout << f << ": ok\n";
    } catch (const std::exception& e) {
      std::cout << f << ": FAILED (" << e.what() << ")\n";
      ++bad;
    }
  }
  if (bad > 0) throw IoError(std::to_string(bad) + " file(s) failed verification");
  return 0;
}

int cmd_picmus(const GlobalOpts& g, const std::string& input,
               const std::string& mapping_path, const std::string& out) {
  const auto start = std::chrono::steady_clock::now();
  const Config mapping = Config::from_file(mapping_path);
  Container c = picmus_import(input, mapping);
  c.write(out);
  RunManifest man = manifest_for("picmus-import", mapping);
  man.output_hashes[out] = c.content_hash();
  man.wall_time_s = elapsed_s(start);
  man.write(out + ".manifest.json");
  std::cout << "imported " << input << " -> " << out << " (" << c.shape[0]
            << " channels x " << c.shape[1] << " samples)\n";
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"plane-wave ultrasound reconstruction toolkit"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "configuration file");
  app.add_option("--cache-dir", g.cache_dir, "operator cache directory");
  auto* seed_opt = app.add_option("--seed", g.seed, "override sampler.seed");
  app.add_option("--threads", g.threads, "worker thread count (0 = auto)");

  auto* build = app.add_subcommand("build-model", "build and cache H, B, SVD");
  bool force = false;
  build->add_flag("--force", force, "rebuild even on cache hit");

  auto* sim = app.add_subcommand("simulate", "synthesize phantom channel data");
  std::string preset, out_prefix = "sim";
  double density = 30.0, snr_db = std::numeric_limits<double>::quiet_NaN();
  sim->add_option("--phantom", preset, "phantom preset name");
  sim->add_option("--out", out_prefix, "output prefix");
  sim->add_option("--density", density, "scatterers per mm^2");
  sim->add_option("--snr-db", snr_db, "target channel SNR in dB");

  auto* rec = app.add_subcommand("reconstruct", "reconstruct an image");
  std::string rec_in, rec_mode = "drus", rec_out = "recon", rec_denoiser;
  int rec_it = 0, rec_m = 0;
  bool no_auto_build = false;
  rec->add_option("--input", rec_in, "channel container")->required();
  rec->add_option("--mode", rec_mode, "drus | deno | das");
  rec->add_option("--out", rec_out, "output prefix");
  rec->add_option("--iterations", rec_it, "sampler iterations");
  rec->add_option("--samples", rec_m, "number of chains (M)");
  rec->add_option("--denoiser", rec_denoiser, "denoiser kind override");
  rec->add_flag("--no-auto-build", no_auto_build,
                "fail instead of building a missing factorization cache");

  auto* met = app.add_subcommand("metrics", "image quality metrics");
  std::string met_in, met_out = "report";
  met->add_option("--input", met_in, "image container")->required();
  met->add_option("--out", met_out, "output prefix");

  auto* ren = app.add_subcommand("render", "write a PNG rendering");
  std::string ren_in, ren_out = "image.png", ren_cmap = "gray";
  std::string fuse_mean, fuse_var;
  double ren_dr = 60.0;
  ren->add_option("--input", ren_in, "image container");
  ren->add_option("--out", ren_out, "output PNG path");
  ren->add_option("--dynamic-range", ren_dr, "dynamic range in dB");
  ren->add_option("--colormap", ren_cmap, "gray | jet");
  ren->add_option("--fuse-mean", fuse_mean, "mean image container");
  ren->add_option("--fuse-var", fuse_var, "variance image container");

  auto* ver = app.add_subcommand("verify", "check container content hashes");
  std::vector<std::string> ver_files;
  ver->add_option("files", ver_files, "containers to verify")->required();

  auto* pic = app.add_subcommand("picmus-import", "convert an HDF5 acquisition");
  std::string pic_in, pic_map, pic_out = "picmus.channel.usdr";
  pic->add_option("--input", pic_in, "HDF5 file")->required();
  pic->add_option("--mapping", pic_map, "dataset mapping config")->required();
  pic->add_option("--out", pic_out, "output channel container");

  CLI11_PARSE(app, argc, argv);
  g.seed_given = seed_opt->count() > 0;
  if (g.threads > 0) usdr::set_thread_count(g.threads);

  try {
    if (build->parsed()) return cmd_build_model(g, force);
    if (sim->parsed()) return cmd_simulate(g, preset, out_prefix, density, snr_db);
    if (rec->parsed())
      return cmd_reconstruct(g, rec_in, rec_mode, rec_out, rec_it, rec_m,
                             rec_denoiser, no_auto_build);
    if (met->parsed()) return cmd_metrics(g, met_in, met_out);
    if (ren->parsed())
      return cmd_render(g, ren_in, ren_out, ren_dr, ren_cmap, fuse_mean,
                        fuse_var);
    if (ver->parsed()) return cmd_verify(ver_files);
    if (pic->parsed()) return cmd_picmus(g, pic_in, pic_map, pic_out);
  } catch (const usdr::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const usdr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const usdr::NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
