#include <catch2/catch_amalgamated.hpp>

#include <complex>

#include "mrfa/dft.hpp"
#include "mrfa/rng.hpp"
#include "mrfa/types.hpp"

using namespace mrfa;
using Catch::Approx;

namespace {
CVector random_cvector(long L, std::uint64_t seed) {
  Rng rng(seed);
  CVector v(L);
  for (long l = 0; l < L; ++l) v[l] = rng.complex_normal(1.0);
  return v;
}
}  // namespace

TEST_CASE("rng streams are deterministic and seed-separated", "[rng]") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) REQUIRE(a() == b());
  bool any_diff = false;
  Rng a2(42);
  for (int i = 0; i < 100; ++i) any_diff |= (a2() != c());
  REQUIRE(any_diff);
}

TEST_CASE("uniform stays in range, uniform_pos is positive", "[rng]") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double p = rng.uniform_pos();
    REQUIRE(p > 0.0);
    REQUIRE(p <= 1.0);
  }
}

TEST_CASE("normal and complex_normal have the declared moments", "[rng]") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    sum += x;
    sum2 += x * x;
  }
  REQUIRE(sum / n == Approx(0.0).margin(0.02));
  REQUIRE(sum2 / n == Approx(1.0).margin(0.02));

  double re2 = 0.0, im2 = 0.0, abs2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Complex z = rng.complex_normal(3.0);
    re2 += z.real() * z.real();
    im2 += z.imag() * z.imag();
    abs2 += std::norm(z);
  }
  REQUIRE(re2 / n == Approx(1.5).epsilon(0.03));
  REQUIRE(im2 / n == Approx(1.5).epsilon(0.03));
  REQUIRE(abs2 / n == Approx(3.0).epsilon(0.03));
}

TEST_CASE("derive_seed separates nearby indices", "[rng]") {
  const auto s0 = derive_seed(123, 0);
  const auto s1 = derive_seed(123, 1);
  const auto t0 = derive_seed(124, 0);
  REQUIRE(s0 != s1);
  REQUIRE(s0 != t0);
  REQUIRE(derive_seed(123, 0) == s0);
}

TEST_CASE("dft of a delta is the constant vector", "[dft]") {
  CVector v = CVector::Zero(4);
  v[0] = 1.0;
  const CVector out = dft(v);
  for (long k = 0; k < 4; ++k) REQUIRE(std::abs(out[k] - Complex(0.5, 0.0)) < 1e-14);
}

TEST_CASE("dft of a constant concentrates in bin zero", "[dft]") {
  const Complex c{1.5, -0.25};
  CVector v = CVector::Constant(4, c);
  const CVector out = dft(v);
  REQUIRE(std::abs(out[0] - 2.0 * c) < 1e-14);
  for (long k = 1; k < 4; ++k) REQUIRE(std::abs(out[k]) < 1e-14);
}

TEST_CASE("dft of (1, i) by direct kernel evaluation", "[dft]") {
  CVector v(2);
  v[0] = Complex(1.0, 0.0);
  v[1] = Complex(0.0, 1.0);
  const CVector out = dft(v);
  const double s = 1.0 / std::sqrt(2.0);
  REQUIRE(std::abs(out[0] - s * Complex(1.0, 1.0)) < 1e-14);
  REQUIRE(std::abs(out[1] - s * Complex(1.0, -1.0)) < 1e-14);
}

TEST_CASE("idft inverts dft", "[dft]") {
  const CVector v = random_cvector(16, 5);
  REQUIRE((idft(dft(v)) - v).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("idft of (1, 0) by conjugate kernel", "[dft]") {
  CVector v(2);
  v[0] = 1.0;
  v[1] = 0.0;
  const CVector out = idft(v);
  const double s = 1.0 / std::sqrt(2.0);
  REQUIRE(std::abs(out[0] - s) < 1e-14);
  REQUIRE(std::abs(out[1] - s) < 1e-14);
}

TEST_CASE("idft of zeros is zeros", "[dft]") {
  const CVector out = idft(CVector::Zero(8));
  REQUIRE(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dft is unitary", "[dft]") {
  const CVector v = random_cvector(12, 9);
  REQUIRE(dft(v).norm() == Approx(v.norm()).margin(1e-10));
}
