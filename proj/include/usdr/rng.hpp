#pragma once

#include <cstdint>
#include <random>

namespace usdr {

// splitmix64 step; used to derive independent seeds for parallel streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic per-stream seed from a base seed and a stream index.
// Chains, channels, etc. each get stream_seed(seed, index).
inline std::uint64_t stream_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t s = base ^ (0x517cc1b727220a95ULL * (index + 1));
  std::uint64_t a = splitmix64(s);
  std::uint64_t b = splitmix64(s);
  return a ^ (b << 1);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::uint64_t index = 0) {
  return Rng(stream_seed(base, index));
}

} // namespace usdr
