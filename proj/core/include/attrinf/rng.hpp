#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace attrinf {

// All randomness in the project flows from one run seed through named
// substreams, so that components can be reordered or parallelized without
// changing each other's draws. A substream is identified by a tag string
// plus up to three integer coordinates; the mix is FNV-1a followed by a
// splitmix64 finalizer.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t base, std::string_view tag,
                                    std::uint64_t a = 0, std::uint64_t b = 0,
                                    std::uint64_t c = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xff;
      h *= 0x100000001b3ULL;
    }
  };
  mix(base);
  for (char ch : tag) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  mix(a);
  mix(b);
  mix(c);
  return splitmix64(h);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::mt19937_64& engine() { return engine_; }

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }

  // Uniform integer in [0, n).
  std::int64_t below(std::int64_t n) {
    return std::uniform_int_distribution<std::int64_t>(0, n - 1)(engine_);
  }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  // Poisson with mean 0 is the point mass at 0.
  std::int64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    return std::poisson_distribution<std::int64_t>(mean)(engine_);
  }

  // Draws an index from an unnormalized non-negative weight vector.
  std::size_t weighted(const std::vector<double>& weights) {
    std::discrete_distribution<std::size_t> d(weights.begin(), weights.end());
    return d(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

inline Rng substream(std::uint64_t base, std::string_view tag,
                     std::uint64_t a = 0, std::uint64_t b = 0,
                     std::uint64_t c = 0) {
  return Rng(substream_seed(base, tag, a, b, c));
}

}  // namespace attrinf
