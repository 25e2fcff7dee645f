#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace covest {

/// SplitMix64 finalizer; used to derive statistically independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed of the stream owned by trial `index` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

/// Standard complex Gaussian source: real and imaginary parts independent N(0, 1/2).
/// Box-Muller over mt19937_64 bits so streams are identical across standard libraries.
class ComplexGaussian {
 public:
  explicit ComplexGaussian(std::uint64_t seed) : engine_(seed) {}

  std::complex<double> operator()() {
    double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

 private:
  // uniform on (0, 1]
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }

  std::mt19937_64 engine_;
};

}  // namespace covest
