#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace panelreg {

// Deterministic splitmix64 generator. Output depends only on the seed and the
// draw index, so runs are reproducible across platforms and independent of
// the standard library's distribution implementations. Substreams are derived
// from the root seed plus a tag, which keeps draws in one stage independent
// of how many draws another stage consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform double in [0, 1)
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform double in (0, 1]; safe to feed into log()
  double uniform_open() { return (double(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // unbiased integer in [0, n); Lemire multiply-shift with rejection
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
      if (static_cast<std::uint64_t>(m) >= threshold)
        return static_cast<std::uint64_t>(m >> 64);
    }
  }

  // standard normal via Box-Muller
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  // Cauchy(location, scale) via inverse CDF
  double cauchy(double location, double scale) {
    return location + scale * std::tan(std::numbers::pi * (uniform() - 0.5));
  }

  // index into a cumulative-weight table; cumulative.back() is the total mass
  std::size_t discrete(const std::vector<double>& cumulative) {
    const double u = uniform() * cumulative.back();
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (cumulative[mid] <= u)
        lo = mid + 1;
      else
        hi = mid;
    }
    return lo;
  }

  Rng substream(std::uint64_t tag) const { return Rng(mix(seed_, tag)); }

  static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace panelreg
