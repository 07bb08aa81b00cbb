#pragma once

#include <cstdint>
#include <random>

namespace normsim {

// splitmix64 step; used to expand a base seed into independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seeded random source. All randomness in the simulator flows through this
// class so that runs are reproducible bit-for-bit given the same seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Derives a stream seed from (base, a, b). Streams with distinct ids are
  // decorrelated, so consuming one stream never shifts another.
  static std::uint64_t derive(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    std::uint64_t x = base;
    std::uint64_t h = splitmix64(x);
    x ^= a + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= splitmix64(x);
    x ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return splitmix64(x);
  }

  static Rng stream(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return Rng(derive(base, a, b));
  }

  std::uint64_t next() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], inclusive. Lemire reduction; avoids the
  // implementation-defined behavior of std::uniform_int_distribution.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    const auto wide = static_cast<unsigned __int128>(next()) * span;
    return lo + static_cast<std::int64_t>(wide >> 64);
  }

  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(n) - 1));
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace normsim
