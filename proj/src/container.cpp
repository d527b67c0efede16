#include "usdr/container.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace usdr {

namespace {

constexpr char kMagic[4] = {'U', 'S', 'D', 'R'};
constexpr std::uint32_t kVersion = 1;
constexpr const char* kHashAttr = "sha256";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

struct Reader {
  const unsigned char* p;
  const unsigned char* end;
  explicit Reader(const std::string& s)
      : p(reinterpret_cast<const unsigned char*>(s.data())), end(p + s.size()) {}
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end - p) < n)
      throw IoError("container: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    p += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    p += 8;
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    return s;
  }
};

void put_attrs(std::string& out, const std::map<std::string, std::string>& attrs,
               bool include_hash) {
  std::uint32_t count = 0;
  for (const auto& [k, _] : attrs)
    if (include_hash || k != kHashAttr) ++count;
  put_u32(out, count);
  for (const auto& [k, v] : attrs) {
    if (!include_hash && k == kHashAttr) continue;
    put_u32(out, static_cast<std::uint32_t>(k.size()));
    out += k;
    put_u32(out, static_cast<std::uint32_t>(v.size()));
    out += v;
  }
}

} // namespace

std::string sha256_hex(const void* data, std::size_t len) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int dlen = 0;
  if (EVP_Digest(data, len, digest, &dlen, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * dlen);
  for (unsigned int i = 0; i < dlen; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_hex(const std::string& data) {
  return sha256_hex(data.data(), data.size());
}

std::uint64_t Container::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

std::string Container::serialize(bool with_hash) const {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(kind));

  if (kind == ContainerKind::MatrixCache) {
    put_u64(out, static_cast<std::uint64_t>(sparse.rows()));
    put_u64(out, static_cast<std::uint64_t>(sparse.cols()));
    put_u64(out, static_cast<std::uint64_t>(sparse.nonZeros()));
    put_attrs(out, attrs, with_hash);
    for (Eigen::Index c = 0; c <= sparse.cols(); ++c)
      put_u64(out, static_cast<std::uint64_t>(sparse.outerIndexPtr()[c]));
    for (Eigen::Index i = 0; i < sparse.nonZeros(); ++i)
      put_u64(out, static_cast<std::uint64_t>(sparse.innerIndexPtr()[i]));
    for (Eigen::Index i = 0; i < sparse.nonZeros(); ++i)
      put_f64(out, sparse.valuePtr()[i]);
    return out;
  }

  put_u32(out, static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) put_u64(out, d);
  put_attrs(out, attrs, with_hash);
  if (payload.size() != element_count())
    throw ValidationError("container: payload length != product(shape)");
  for (double v : payload) put_f64(out, v);
  return out;
}

std::string Container::content_hash() const { return sha256_hex(serialize(false)); }

void Container::write(const std::string& path) const {
  Container c = *this;
  c.attrs[kHashAttr] = content_hash();
  const std::string bytes = c.serialize(true);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("container: cannot open " + path + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("container: write failed for " + path);
}

Container Container::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("container: cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  Reader r(bytes);
  if (r.bytes(4) != std::string(kMagic, 4))
    throw IoError("container: bad magic in " + path);
  if (r.u32() != kVersion) throw IoError("container: unsupported version");

  Container c;
  c.kind = static_cast<ContainerKind>(r.u32());

  if (c.kind == ContainerKind::MatrixCache) {
    const auto rows = static_cast<Eigen::Index>(r.u64());
    const auto cols = static_cast<Eigen::Index>(r.u64());
    const auto nnz = static_cast<Eigen::Index>(r.u64());
    const std::uint32_t na = r.u32();
    for (std::uint32_t i = 0; i < na; ++i) {
      const std::string k = r.bytes(r.u32());
      const std::string v = r.bytes(r.u32());
      c.attrs[k] = v;
    }
    c.shape = {static_cast<std::uint64_t>(rows), static_cast<std::uint64_t>(cols)};
    c.sparse.resize(rows, cols);
    c.sparse.makeCompressed();
    c.sparse.resizeNonZeros(nnz);
    for (Eigen::Index col = 0; col <= cols; ++col)
      c.sparse.outerIndexPtr()[col] = static_cast<int>(r.u64());
    for (Eigen::Index i = 0; i < nnz; ++i)
      c.sparse.innerIndexPtr()[i] = static_cast<int>(r.u64());
    for (Eigen::Index i = 0; i < nnz; ++i) c.sparse.valuePtr()[i] = r.f64();
    return c;
  }

  const std::uint32_t ndim = r.u32();
  c.shape.resize(ndim);
  for (auto& d : c.shape) d = r.u64();
  const std::uint32_t na = r.u32();
  for (std::uint32_t i = 0; i < na; ++i) {
    const std::string k = r.bytes(r.u32());
    const std::string v = r.bytes(r.u32());
    c.attrs[k] = v;
  }
  c.payload.resize(c.element_count());
  for (auto& v : c.payload) v = r.f64();
  return c;
}

Container Container::read_verified(const std::string& path) {
  Container c = read(path);
  const auto it = c.attrs.find(kHashAttr);
  if (it == c.attrs.end())
    throw IoError("container: " + path + " carries no content hash");
  const std::string expect = it->second;
  if (c.content_hash() != expect)
    throw IoError("container: content hash mismatch for " + path);
  return c;
}

Container make_image_container(const Vector& image, const ImagingGrid& grid) {
  if (image.size() != grid.size())
    throw ValidationError("container: image size mismatch");
  Container c;
  c.kind = ContainerKind::Image;
  c.shape = {static_cast<std::uint64_t>(grid.nz),
             static_cast<std::uint64_t>(grid.nx)};
  c.payload.assign(image.data(), image.data() + image.size());
  c.attrs["grid.nz"] = std::to_string(grid.nz);
  c.attrs["grid.nx"] = std::to_string(grid.nx);
  c.attrs["grid.x_min"] = std::to_string(grid.x_min);
  c.attrs["grid.x_max"] = std::to_string(grid.x_max);
  c.attrs["grid.z_min"] = std::to_string(grid.z_min);
  c.attrs["grid.z_max"] = std::to_string(grid.z_max);
  return c;
}

Container make_channel_container(const Vector& data, int channels,
                                 int samples_per_channel) {
  if (data.size() != static_cast<Eigen::Index>(channels) * samples_per_channel)
    throw ValidationError("container: channel data size mismatch");
  Container c;
  c.kind = ContainerKind::Channel;
  c.shape = {static_cast<std::uint64_t>(channels),
             static_cast<std::uint64_t>(samples_per_channel)};
  c.payload.assign(data.data(), data.data() + data.size());
  return c;
}

Container make_bundle_container(const std::vector<Vector>& images,
                                const ImagingGrid& grid) {
  if (images.empty()) throw ValidationError("container: empty bundle");
  Container c;
  c.kind = ContainerKind::Bundle;
  c.shape = {images.size(), static_cast<std::uint64_t>(grid.nz),
             static_cast<std::uint64_t>(grid.nx)};
  c.payload.reserve(images.size() * grid.size());
  for (const auto& im : images) {
    if (im.size() != grid.size())
      throw ValidationError("container: bundle image size mismatch");
    c.payload.insert(c.payload.end(), im.data(), im.data() + im.size());
  }
  return c;
}

Container make_matrix_container(const SparseMat& m) {
  Container c;
  c.kind = ContainerKind::MatrixCache;
  c.sparse = m;
  c.sparse.makeCompressed();
  c.shape = {static_cast<std::uint64_t>(m.rows()),
             static_cast<std::uint64_t>(m.cols())};
  return c;
}

Vector container_vector(const Container& c) {
  Vector v(static_cast<Eigen::Index>(c.payload.size()));
  std::memcpy(v.data(), c.payload.data(), c.payload.size() * sizeof(double));
  return v;
}

void RunManifest::write(const std::string& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config;
  j["input_hashes"] = input_hashes;
  j["output_hashes"] = output_hashes;
  j["seeds"] = seeds;
  j["wall_time_s"] = wall_time_s;
  std::ofstream out(path);
  if (!out) throw IoError("manifest: cannot open " + path);
  out << j.dump(2) << "\n";
}

} // namespace usdr
