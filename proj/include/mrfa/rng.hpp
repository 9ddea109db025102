#pragma once

#include <complex>
#include <cmath>
#include <cstdint>
#include <utility>

namespace mrfa {

/// Counter-based generator (splitmix64): the state advances by a fixed
/// increment and each output is a bijective mix of the counter, so streams
/// seeded differently never correlate and a stream can be recreated from its
/// seed alone. Gaussian variates are produced by an explicit Box-Muller
/// transform rather than std::normal_distribution, so sequences are identical
/// across standard libraries.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1]; safe as a log argument.
  double uniform_pos() { return double(((*this)() >> 11) + 1) * 0x1.0p-53; }

  /// Two independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double phi = 2.0 * 3.141592653589793238462643383279502884 * u2;
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    auto [a, b] = normal_pair();
    spare_ = b;
    have_spare_ = true;
    return a;
  }

  /// Circularly-symmetric complex normal with E|z|^2 = variance:
  /// real and imaginary parts are independent N(0, variance/2).
  std::complex<double> complex_normal(double variance) {
    auto [a, b] = normal_pair();
    const double s = std::sqrt(variance / 2.0);
    return {s * a, s * b};
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Per-trial seed = hash(master_seed, index). Two mixing rounds keep nearby
/// indices statistically unrelated.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master ^ (index * 0xd1342543de82ef95ull + 0x2545f4914f6cdd1dull);
  z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdull;
  z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ull;
  return z ^ (z >> 33);
}

}  // namespace mrfa
