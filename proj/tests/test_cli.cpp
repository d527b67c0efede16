#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "usdr/container.hpp"

using namespace usdr;
namespace fs = std::filesystem;

#ifndef USDR_CLI_PATH
#define USDR_CLI_PATH "usdr"
#endif

namespace {

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() /
          ("usdr_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const Workspace& ws) {
  const std::string cmd = std::string(USDR_CLI_PATH) + " " + args + " > " +
                          ws.p("stdout.txt") + " 2> " + ws.p("stderr.txt");
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string file_sha(const std::string& path) {
  const std::string bytes = slurp(path);
  return sha256_hex(bytes);
}

const char* kTinyConfig = R"(
probe.element_count = 16
probe.pitch = 0.30e-3
acquisition.sampling_rate = 20.8e6
acquisition.start_time = 17e-6
acquisition.sample_count = 160
grid.x_min = -1.65e-3
grid.x_max = 1.65e-3
grid.z_min = 13.5e-3
grid.z_max = 16.8e-3
grid.nx = 12
grid.nz = 12
denoiser.kind = wavelet
denoiser.levels = 2
sampler.iterations = 5
region.bg.kind = roi
region.bg.x0 = -1.5e-3
region.bg.x1 = 1.5e-3
region.bg.z0 = 13.6e-3
region.bg.z1 = 16.7e-3
)";

// Same geometry, but with a point-target region for FWHM on an image of
// the sr-like phantom (a speckle image has no peak to measure).
const char* kPointRegion = R"(
region.spot.kind = point
region.spot.cx = 0
region.spot.cz = 15.15e-3
)";

} // namespace

TEST_CASE("cli end-to-end: simulate, reconstruct, metrics, render, verify") {
  Workspace ws;
  std::ofstream(ws.p("cfg")) << kTinyConfig;
  const std::string base = "--config " + ws.p("cfg") + " --cache-dir " +
                           ws.p("cache") + " ";

  // simulate (twice with the same seed: identical outputs)
  REQUIRE(run(base + "--seed 11 simulate --phantom speckle --density 60 --out " +
                  ws.p("a"),
              ws) == 0);
  REQUIRE(run(base + "--seed 11 simulate --phantom speckle --density 60 --out " +
                  ws.p("b"),
              ws) == 0);
  CHECK(file_sha(ws.p("a.channel.usdr")) == file_sha(ws.p("b.channel.usdr")));
  CHECK(fs::exists(ws.p("a.echogenicity.usdr")));
  CHECK(fs::exists(ws.p("a.scatterers.usdr")));
  CHECK(fs::exists(ws.p("a.manifest.json")));

  // das reconstruction
  REQUIRE(run(base + "reconstruct --input " + ws.p("a.channel.usdr") +
                  " --mode das --out " + ws.p("das"),
              ws) == 0);
  const Container das_img = Container::read_verified(ws.p("das.image.usdr"));
  CHECK(das_img.kind == ContainerKind::Image);

  // warning when das gets sampler flags
  REQUIRE(run(base + "reconstruct --input " + ws.p("a.channel.usdr") +
                  " --mode das --iterations 7 --out " + ws.p("das2"),
              ws) == 0);
  CHECK(slurp(ws.p("stderr.txt")).find("ignores") != std::string::npos);

  // --no-auto-build without a cache fails with a validation error
  CHECK(run(base + "reconstruct --input " + ws.p("a.channel.usdr") +
                " --mode drus --no-auto-build --out " + ws.p("x"),
            ws) == 2);

  // drus with a small bundle; determinism across runs
  REQUIRE(run(base + "--seed 5 reconstruct --input " + ws.p("a.channel.usdr") +
                  " --mode drus --samples 3 --out " + ws.p("r1"),
              ws) == 0);
  REQUIRE(run(base + "--seed 5 reconstruct --input " + ws.p("a.channel.usdr") +
                  " --mode drus --samples 3 --out " + ws.p("r2"),
              ws) == 0);
  CHECK(file_sha(ws.p("r1.bundle.usdr")) == file_sha(ws.p("r2.bundle.usdr")));
  CHECK(fs::exists(ws.p("r1.mean.usdr")));
  CHECK(fs::exists(ws.p("r1.variance.usdr")));
  CHECK(fs::exists(ws.p("r1.var-amplitude.usdr")));

  // deno mode runs without a factorization build
  REQUIRE(run(base + "--seed 5 reconstruct --input " + ws.p("a.channel.usdr") +
                  " --mode deno --out " + ws.p("deno"),
              ws) == 0);

  // metrics: speckle ROI on the speckle image
  REQUIRE(run(base + "metrics --input " + ws.p("das.image.usdr") + " --out " +
                  ws.p("rep"),
              ws) == 0);
  const std::string tsv = slurp(ws.p("rep.metrics.tsv"));
  CHECK(tsv.find("pass_0.05") != std::string::npos);
  CHECK(tsv.find("roi\tbg") != std::string::npos);

  // metrics: point FWHM on an sr-like image
  std::ofstream(ws.p("cfg_sr")) << kTinyConfig << kPointRegion;
  const std::string base_sr = "--config " + ws.p("cfg_sr") + " --cache-dir " +
                              ws.p("cache") + " ";
  REQUIRE(run(base_sr + "--seed 3 simulate --phantom sr-like --out " + ws.p("sr"),
              ws) == 0);
  REQUIRE(run(base_sr + "reconstruct --input " + ws.p("sr.channel.usdr") +
                  " --mode das --out " + ws.p("srdas"),
              ws) == 0);
  REQUIRE(run(base_sr + "metrics --input " + ws.p("srdas.image.usdr") +
                  " --out " + ws.p("srrep"),
              ws) == 0);
  CHECK(slurp(ws.p("srrep.metrics.tsv")).find("fwhm\tspot") != std::string::npos);

  // render: grayscale PNG with the grid's dimensions
  REQUIRE(run(base + "render --input " + ws.p("das.image.usdr") + " --out " +
                  ws.p("img.png"),
              ws) == 0);
  const std::string png = slurp(ws.p("img.png"));
  REQUIRE(png.size() > 24);
  CHECK(png.compare(1, 3, "PNG") == 0);
  // IHDR width/height at offsets 16..23 (big-endian).
  auto be32 = [&](std::size_t off) {
    return (static_cast<unsigned>(static_cast<unsigned char>(png[off])) << 24) |
           (static_cast<unsigned>(static_cast<unsigned char>(png[off + 1])) << 16) |
           (static_cast<unsigned>(static_cast<unsigned char>(png[off + 2])) << 8) |
           static_cast<unsigned>(static_cast<unsigned char>(png[off + 3]));
  };
  CHECK(be32(16) == 12); // width = nx
  CHECK(be32(20) == 12); // height = nz

  // fused rendering from mean and variance images
  REQUIRE(run(base + "render --fuse-mean " + ws.p("r1.mean.usdr") +
                  " --fuse-var " + ws.p("r1.variance.usdr") + " --out " +
                  ws.p("fuse.png"),
              ws) == 0);
  CHECK(slurp(ws.p("fuse.png")).compare(1, 3, "PNG") == 0);

  // verify: all outputs pass, a corrupted file fails with exit 4
  REQUIRE(run(base + "verify " + ws.p("a.channel.usdr") + " " +
                  ws.p("das.image.usdr"),
              ws) == 0);
  {
    std::string bytes = slurp(ws.p("a.channel.usdr"));
    bytes[bytes.size() - 3] ^= 0x11;
    std::ofstream(ws.p("corrupt.usdr"), std::ios::binary) << bytes;
  }
  CHECK(run(base + "verify " + ws.p("corrupt.usdr"), ws) == 4);
}

TEST_CASE("cli validation failures exit with code 2") {
  Workspace ws;
  std::ofstream(ws.p("bad.cfg")) << "grid.z_min = -0.01\n";
  CHECK(run("--config " + ws.p("bad.cfg") + " simulate --phantom speckle --out " +
                ws.p("x"),
            ws) == 2);

  std::ofstream(ws.p("cfg")) << kTinyConfig;
  CHECK(run("--config " + ws.p("cfg") + " simulate --phantom unknown --out " +
                ws.p("y"),
            ws) == 2);
  CHECK(slurp(ws.p("stderr.txt")).find("sc-like") != std::string::npos);
}

TEST_CASE("cli io failures exit with code 4") {
  Workspace ws;
  std::ofstream(ws.p("cfg")) << kTinyConfig;
  CHECK(run("--config " + ws.p("cfg") + " reconstruct --input " +
                ws.p("missing.usdr") + " --mode das --out " + ws.p("z"),
            ws) == 4);
}

TEST_CASE("cli build-model reports stats and caches") {
  Workspace ws;
  std::ofstream(ws.p("cfg")) << kTinyConfig;
  const std::string base =
      "--config " + ws.p("cfg") + " --cache-dir " + ws.p("cache") + " ";
  REQUIRE(run(base + "build-model", ws) == 0);
  const std::string out1 = slurp(ws.p("stdout.txt"));
  CHECK(out1.find("built") != std::string::npos);
  CHECK(out1.find("nnz") != std::string::npos);
  CHECK(out1.find("rank") != std::string::npos);

  REQUIRE(run(base + "build-model", ws) == 0);
  const std::string out2 = slurp(ws.p("stdout.txt"));
  CHECK(out2.find("cache hit") != std::string::npos);
}
