#pragma once

#include <map>
#include <string>
#include <vector>

#include "usdr/system_matrix.hpp"

namespace usdr {

// On-disk container, little-endian throughout:
//   magic "USDR" | u32 version | u32 kind
//   dense kinds (channel/image/bundle):
//     u32 ndim | ndim x u64 dims
//     u32 attr_count | attr_count x (u32 klen, key, u32 vlen, value)  (sorted)
//     prod(dims) x f64 payload
//   matrix-cache kind:
//     u64 rows | u64 cols | u64 nnz
//     attribute block as above
//     (cols+1) x u64 column offsets | nnz x u64 row indices | nnz x f64 values
// The "sha256" attribute is the hex digest of the serialization with that
// attribute removed; write() fills it in, verify() recomputes it.
enum class ContainerKind : std::uint32_t {
  Channel = 0,
  Image = 1,
  Bundle = 2,
  MatrixCache = 3,
};

struct Container {
  ContainerKind kind = ContainerKind::Image;
  std::vector<std::uint64_t> shape;
  std::map<std::string, std::string> attrs;
  std::vector<double> payload; // dense kinds
  SparseMat sparse;            // matrix-cache kind

  [[nodiscard]] std::uint64_t element_count() const;
  [[nodiscard]] std::string serialize(bool with_hash = true) const;
  // Hex digest of the canonical serialization (hash attribute excluded).
  [[nodiscard]] std::string content_hash() const;

  void write(const std::string& path) const;
  static Container read(const std::string& path);
  // Recomputes and compares the stored hash; throws IoError on mismatch.
  static Container read_verified(const std::string& path);
};

std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& data);

// Dense helpers.
Container make_image_container(const Vector& image, const ImagingGrid& grid);
Container make_channel_container(const Vector& data, int channels,
                                 int samples_per_channel);
Container make_bundle_container(const std::vector<Vector>& images,
                                const ImagingGrid& grid);
Container make_matrix_container(const SparseMat& m);

Vector container_vector(const Container& c);

// Run manifest (JSON): command, config snapshot, input/output hashes,
// seeds, wall time. Written next to each command's outputs.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> input_hashes;  // path -> sha256
  std::map<std::string, std::string> output_hashes; // path -> sha256
  std::vector<std::uint64_t> seeds;
  double wall_time_s = 0;

  void write(const std::string& path) const;
};

} // namespace usdr
