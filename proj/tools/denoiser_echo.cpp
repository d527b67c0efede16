// Reference implementation of the external denoiser protocol, speaking
// length-prefixed frames on stdin/stdout. Modes:
//   echo   reply with the request pixels unchanged (identity denoiser)
//   zero   reply with zeros
//   badshape   reply with one pixel short (protocol-violation fixture)
//
// Frame layout (little-endian):
//   u32 payload_length | payload
//   request payload  = "DNZ1" u32 n_z, u32 n_x, f64 sigma, n_z*n_x f64
//   response payload = "DNZ2" followed by n_z*n_x f64 pixels

#include <unistd.h>

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace {

bool read_exact(unsigned char* p, std::size_t n) {
  std::size_t done = 0;
  while (done < n) {
    const ssize_t r = read(STDIN_FILENO, p + done, n - done);
    if (r <= 0) return false;
    done += static_cast<std::size_t>(r);
  }
  return true;
}

void write_exact(const unsigned char* p, std::size_t n) {
  std::size_t done = 0;
  while (done < n) {
    const ssize_t w = write(STDOUT_FILENO, p + done, n - done);
    if (w <= 0) _exit(1);
    done += static_cast<std::size_t>(w);
  }
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u32(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
}

} // namespace

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "echo";

  unsigned char head[4];
  while (read_exact(head, 4)) {
    const std::uint32_t len = get_u32(head);
    std::vector<unsigned char> req(len);
    if (!read_exact(req.data(), len)) return 1;
    if (len < 20 || std::memcmp(req.data(), "DNZ1", 4) != 0) return 1;
    const std::uint32_t nz = get_u32(req.data() + 4);
    const std::uint32_t nx = get_u32(req.data() + 8);
    const std::size_t pixels = static_cast<std::size_t>(nz) * nx;
    if (len != 20 + pixels * 8) return 1;

    std::size_t out_pixels = pixels;
    if (mode == "badshape" && out_pixels > 0) --out_pixels;

    std::vector<unsigned char> resp(4 + 4 + out_pixels * 8);
    put_u32(resp.data(), static_cast<std::uint32_t>(4 + out_pixels * 8));
    std::memcpy(resp.data() + 4, "DNZ2", 4);
    if (mode == "zero") {
      std::memset(resp.data() + 8, 0, out_pixels * 8);
    } else {
      std::memcpy(resp.data() + 8, req.data() + 20, out_pixels * 8);
    }
    write_exact(resp.data(), resp.size());
  }
  return 0;
}
