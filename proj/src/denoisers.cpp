#include "usdr/denoisers.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <sstream>

namespace usdr {

// ---------------------------------------------------------------------------
// Gaussian prior

GaussianDenoiser::GaussianDenoiser(Vector variances)
    : diagonal_(true), var_(std::move(variances)) {
  if ((var_.array() < 0).any())
    throw ValidationError("gaussian denoiser: negative prior variance");
}

namespace {

Matrix stationary_kernel(int n, double scale_px) {
  Matrix k(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double d = i - j;
      k(i, j) = scale_px > 0 ? std::exp(-d * d / (2.0 * scale_px * scale_px))
                             : (i == j ? 1.0 : 0.0);
    }
  return k;
}

void eigen_psd(const Matrix& k, Matrix& q, Vector& l, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(k);
  if (es.info() != Eigen::Success)
    throw NumericalError(std::string("gaussian denoiser: eigensolver failed for ") +
                         what);
  q = es.eigenvectors();
  l = es.eigenvalues();
  const double floor = -1e-10 * std::max(1.0, l.cwiseAbs().maxCoeff());
  if ((l.array() < floor).any())
    throw ValidationError(std::string("gaussian denoiser: covariance not PSD (") +
                          what + ")");
  l = l.cwiseMax(0.0);
}

} // namespace

GaussianDenoiser::GaussianDenoiser(int nz, int nx, double marginal_variance,
                                   double axial_scale_px,
                                   double lateral_scale_px)
    : diagonal_(false), nz_(nz), nx_(nx) {
  if (nz < 1 || nx < 1)
    throw ValidationError("gaussian denoiser: bad grid dims");
  if (marginal_variance < 0)
    throw ValidationError("gaussian denoiser: negative marginal variance");
  eigen_psd(Matrix(marginal_variance * stationary_kernel(nz, axial_scale_px)),
            qz_, lz_, "axial");
  eigen_psd(stationary_kernel(nx, lateral_scale_px), qx_, lx_, "lateral");
}

Vector GaussianDenoiser::denoise(const Vector& image, double sigma) const {
  const double s2 = sigma * sigma;
  if (diagonal_) {
    if (image.size() != var_.size())
      throw ValidationError("gaussian denoiser: image length mismatch");
    return image.array() * (var_.array() / (var_.array() + s2));
  }
  if (image.size() != static_cast<Eigen::Index>(nz_) * nx_)
    throw ValidationError("gaussian denoiser: image length mismatch");
  // Depth-major vector == nz x nx column-major matrix.
  const Eigen::Map<const Matrix> x(image.data(), nz_, nx_);
  Matrix y = qz_.transpose() * x * qx_;
  for (int j = 0; j < nx_; ++j)
    for (int i = 0; i < nz_; ++i) {
      const double l = lz_[i] * lx_[j];
      y(i, j) *= (l + s2) > 0 ? l / (l + s2) : 0.0;
    }
  const Matrix out = qz_ * y * qx_.transpose();
  return Eigen::Map<const Vector>(out.data(), out.size());
}

// ---------------------------------------------------------------------------
// Haar wavelet shrinkage

WaveletDenoiser::WaveletDenoiser(int nz, int nx, int levels, double threshold_k)
    : nz_(nz), nx_(nx), levels_(levels), threshold_k_(threshold_k) {
  if (levels < 1) throw ValidationError("wavelet denoiser: levels < 1");
  const int div = 1 << levels;
  if (nz % div != 0 || nx % div != 0)
    throw ValidationError(
        "wavelet denoiser: grid dims must be divisible by 2^levels");
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

void haar_rows_forward(Matrix& m, int rows, int cols) {
  Vector tmp(rows);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows / 2; ++i) {
      const double a = m(2 * i, j), b = m(2 * i + 1, j);
      tmp[i] = (a + b) * kInvSqrt2;
      tmp[rows / 2 + i] = (a - b) * kInvSqrt2;
    }
    m.col(j).head(rows) = tmp;
  }
}

void haar_rows_inverse(Matrix& m, int rows, int cols) {
  Vector tmp(rows);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows / 2; ++i) {
      const double a = m(i, j), d = m(rows / 2 + i, j);
      tmp[2 * i] = (a + d) * kInvSqrt2;
      tmp[2 * i + 1] = (a - d) * kInvSqrt2;
    }
    m.col(j).head(rows) = tmp;
  }
}

} // namespace

Matrix WaveletDenoiser::forward(const Matrix& image) const {
  Matrix m = image;
  int rows = nz_, cols = nx_;
  for (int l = 0; l < levels_; ++l) {
    haar_rows_forward(m, rows, cols);
    Matrix t = m.topLeftCorner(rows, cols).transpose();
    haar_rows_forward(t, cols, rows);
    m.topLeftCorner(rows, cols) = t.transpose();
    rows /= 2;
    cols /= 2;
  }
  return m;
}

Matrix WaveletDenoiser::inverse(const Matrix& coeffs) const {
  Matrix m = coeffs;
  int rows = nz_ >> levels_, cols = nx_ >> levels_;
  for (int l = 0; l < levels_; ++l) {
    rows *= 2;
    cols *= 2;
    Matrix t = m.topLeftCorner(rows, cols).transpose();
    haar_rows_inverse(t, cols, rows);
    m.topLeftCorner(rows, cols) = t.transpose();
    haar_rows_inverse(m, rows, cols);
  }
  return m;
}

Vector WaveletDenoiser::denoise(const Vector& image, double sigma) const {
  if (image.size() != static_cast<Eigen::Index>(nz_) * nx_)
    throw ValidationError("wavelet denoiser: image length mismatch");
  const Eigen::Map<const Matrix> x(image.data(), nz_, nx_);
  Matrix c = forward(x);
  const double thr = threshold_k_ * sigma;
  const int az = nz_ >> levels_, ax = nx_ >> levels_; // approximation block
  for (int j = 0; j < nx_; ++j)
    for (int i = 0; i < nz_; ++i) {
      if (i < az && j < ax) continue; // keep the coarse approximation
      const double v = c(i, j);
      c(i, j) = std::abs(v) <= thr ? 0.0 : (v > 0 ? v - thr : v + thr);
    }
  const Matrix out = inverse(c);
  return Eigen::Map<const Vector>(out.data(), out.size());
}

// ---------------------------------------------------------------------------
// External denoiser protocol

ExternalEndpoint ExternalEndpoint::parse(const std::string& spec,
                                         int timeout_ms) {
  ExternalEndpoint e;
  e.timeout_ms = timeout_ms;
  if (spec.rfind("cmd:", 0) == 0) {
    std::istringstream in(spec.substr(4));
    std::string word;
    while (in >> word) e.command.push_back(word);
    if (e.command.empty())
      throw ValidationError("external denoiser: empty command");
    return e;
  }
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos)
    throw ValidationError("external denoiser: endpoint must be host:port or cmd:...");
  e.host = spec.substr(0, colon);
  e.port = std::stoi(spec.substr(colon + 1));
  if (e.port <= 0 || e.port > 65535)
    throw ValidationError("external denoiser: bad port");
  return e;
}

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i)
    buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

} // namespace

struct ExternalDenoiser::Connection {
  int read_fd = -1;
  int write_fd = -1;
  pid_t child = -1;
  int timeout_ms = 30000;

  ~Connection() {
    if (write_fd >= 0) close(write_fd);
    if (read_fd >= 0 && read_fd != write_fd) close(read_fd);
    if (child > 0) {
      int status = 0;
      if (waitpid(child, &status, WNOHANG) == 0) {
        kill(child, SIGTERM);
        waitpid(child, &status, 0);
      }
    }
  }

  void write_all(const char* data, std::size_t n) const {
    std::size_t done = 0;
    while (done < n) {
      const ssize_t w = ::write(write_fd, data + done, n - done);
      if (w < 0) {
        if (errno == EINTR) continue;
        throw IoError("external denoiser: write failed");
      }
      done += static_cast<std::size_t>(w);
    }
  }

  void read_all(unsigned char* data, std::size_t n) const {
    std::size_t done = 0;
    while (done < n) {
      pollfd pfd{read_fd, POLLIN, 0};
      const int pr = poll(&pfd, 1, timeout_ms);
      if (pr == 0) throw IoError("external denoiser: timeout waiting for reply");
      if (pr < 0) {
        if (errno == EINTR) continue;
        throw IoError("external denoiser: poll failed");
      }
      const ssize_t r = ::read(read_fd, data + done, n - done);
      if (r < 0) {
        if (errno == EINTR) continue;
        throw IoError("external denoiser: read failed");
      }
      if (r == 0)
        throw IoError("external denoiser: connection closed by peer");
      done += static_cast<std::size_t>(r);
    }
  }
};

ExternalDenoiser::ExternalDenoiser(const ExternalEndpoint& endpoint, int nz,
                                   int nx)
    : conn_(std::make_unique<Connection>()), nz_(nz), nx_(nx) {
  conn_->timeout_ms = endpoint.timeout_ms;
  if (!endpoint.command.empty()) {
    int to_child[2], from_child[2];
    if (pipe(to_child) != 0 || pipe(from_child) != 0)
      throw IoError("external denoiser: pipe failed");
    const pid_t pid = fork();
    if (pid < 0) throw IoError("external denoiser: fork failed");
    if (pid == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      close(to_child[0]);
      close(to_child[1]);
      close(from_child[0]);
      close(from_child[1]);
      std::vector<char*> argv;
      for (const auto& a : endpoint.command)
        argv.push_back(const_cast<char*>(a.c_str()));
      argv.push_back(nullptr);
      execvp(argv[0], argv.data());
      _exit(127);
    }
    close(to_child[0]);
    close(from_child[1]);
    conn_->child = pid;
    conn_->write_fd = to_child[1];
    conn_->read_fd = from_child[0];
    return;
  }

  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) throw IoError("external denoiser: socket failed");
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(endpoint.port));
  if (inet_pton(AF_INET, endpoint.host.c_str(), &addr.sin_addr) != 1) {
    close(fd);
    throw ValidationError("external denoiser: host must be a numeric IPv4 address");
  }
  if (connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    close(fd);
    throw IoError("external denoiser: cannot connect to " + endpoint.host + ":" +
                  std::to_string(endpoint.port));
  }
  conn_->read_fd = fd;
  conn_->write_fd = fd;
}

ExternalDenoiser::~ExternalDenoiser() = default;

Vector ExternalDenoiser::denoise(const Vector& image, double sigma) const {
  if (image.size() != static_cast<Eigen::Index>(nz_) * nx_)
    throw ValidationError("external denoiser: image length mismatch");

  std::string payload;
  payload.reserve(4 + 4 + 4 + 8 + image.size() * 8);
  payload.append("DNZ1");
  put_u32(payload, static_cast<std::uint32_t>(nz_));
  put_u32(payload, static_cast<std::uint32_t>(nx_));
  put_f64(payload, sigma);
  for (Eigen::Index i = 0; i < image.size(); ++i) put_f64(payload, image[i]);

  std::string frame;
  put_u32(frame, static_cast<std::uint32_t>(payload.size()));
  frame += payload;

  std::lock_guard<std::mutex> lock(mutex_);
  conn_->write_all(frame.data(), frame.size());

  unsigned char head[4];
  conn_->read_all(head, 4);
  const std::uint32_t len = get_u32(head);
  const std::size_t expect = 4 + static_cast<std::size_t>(nz_) * nx_ * 8;
  std::vector<unsigned char> reply(len);
  conn_->read_all(reply.data(), len);
  if (len < 4 || std::memcmp(reply.data(), "DNZ2", 4) != 0)
    throw IoError("external denoiser: protocol violation (bad response magic)");
  if (len != expect)
    throw IoError("external denoiser: response shape mismatch (got " +
                  std::to_string((len - 4) / 8) + " pixels, expected " +
                  std::to_string(static_cast<std::size_t>(nz_) * nx_) + ")");

  Vector out(image.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = get_f64(reply.data() + 4 + 8 * i);
  return out;
}

} // namespace usdr
