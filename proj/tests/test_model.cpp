#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mrfa/model.hpp"

using namespace mrfa;
using Catch::Approx;

namespace {
std::vector<double> delta_shift(long L, long s) {
  std::vector<double> d(std::size_t(L), 0.0);
  d[std::size_t(s)] = 1.0;
  return d;
}
}  // namespace

TEST_CASE("cyclic shift by zero is the identity", "[model]") {
  CVector v(4);
  v << 1.0, 2.0, 3.0, 4.0;
  REQUIRE((cyclic_shift(v, 0) - v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cyclic shift of 1,2,3,4 by one", "[model]") {
  CVector v(4);
  v << 1.0, 2.0, 3.0, 4.0;
  const CVector out = cyclic_shift(v, 1);
  CVector expect(4);
  expect << 4.0, 1.0, 2.0, 3.0;
  REQUIRE((out - expect).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cyclic shifts compose additively mod L", "[model]") {
  Rng rng(11);
  CVector v(8);
  for (long l = 0; l < 8; ++l) v[l] = rng.complex_normal(1.0);
  for (long s : {0L, 3L, 7L, -2L, 13L})
    for (long t : {1L, 5L, -9L}) {
      const CVector a = cyclic_shift(cyclic_shift(v, s), t);
      const CVector b = cyclic_shift(v, s + t);
      REQUIRE((a - b).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("shift becomes modulation in the Fourier domain", "[model]") {
  Rng rng(13);
  const long L = 8;
  CVector v(L);
  for (long l = 0; l < L; ++l) v[l] = rng.complex_normal(1.0);
  const CVector vh = dft(v);
  for (long s : {1L, 3L, 6L}) {
    const CVector sh = dft(cyclic_shift(v, s));
    for (long k = 0; k < L; ++k) {
      const Complex mod = std::polar(1.0, -2.0 * M_PI * double(s) * double(k) / double(L));
      REQUIRE(std::abs(sh[k] - mod * vh[k]) < 1e-12);
    }
  }
}

TEST_CASE("unit power spectrum normalization forces equal moduli", "[model]") {
  Rng rng(3);
  const Signal s = generate_signal(16, rng, Normalization::unit_power_spectrum);
  const CVector hat = s.fourier();
  for (long k = 0; k < 16; ++k) REQUIRE(std::abs(hat[k]) == Approx(0.25).margin(1e-12));
  REQUIRE(s.theta.norm() == Approx(1.0).margin(1e-12));
}

TEST_CASE("same seed gives identical signals", "[model]") {
  Rng a(5), b(5);
  const Signal s1 = generate_signal(8, a, Normalization::unit_power_spectrum);
  const Signal s2 = generate_signal(8, b, Normalization::unit_power_spectrum);
  REQUIRE((s1.theta - s2.theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unit norm normalization", "[model]") {
  Rng rng(6);
  const Signal s = generate_signal(4, rng, Normalization::unit_norm);
  REQUIRE(s.theta.norm() == Approx(1.0).margin(1e-12));
}

TEST_CASE("model params validation", "[model]") {
  ModelParams p;
  p.L = 1;
  REQUIRE_THROWS_AS(p.validate(), Error);
  p.L = 4;
  p.lambda = -1.0;
  REQUIRE_THROWS_AS(p.validate(), Error);
  p.lambda = 1.0;
  p.shift_distribution = {0.5, 0.5};  // wrong length
  REQUIRE_THROWS_AS(p.validate(), Error);
  p.shift_distribution = {0.25, 0.25, 0.25, 0.30};  // does not sum to 1
  REQUIRE_THROWS_AS(p.validate(), Error);
  p.shift_distribution = {0.25, 0.25, 0.25, 0.25};
  REQUIRE_NOTHROW(p.validate());
  REQUIRE(p.snr() == Approx(1.0 / (4.0 * p.sigma2)).margin(0.0));
}

TEST_CASE("degenerate factor and shift reproduce the signal exactly", "[model]") {
  Rng rng(8);
  const Signal s = generate_signal(8, rng, Normalization::unit_norm);
  ModelParams p;
  p.L = 8;
  p.lambda = 1.0;
  p.sigma2 = 0.0;
  p.shift_distribution = delta_shift(8, 0);
  const FactorSampler one = FactorSampler::constant(1.0);
  const ObservationBatch batch = generate_observations(s, p, 5, rng, &one);
  for (long i = 0; i < batch.N(); ++i)
    REQUIRE((batch.observations.col(i) - s.theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniform shifts concentrate around N/L", "[model][slow]") {
  Rng rng(21);
  const long L = 16, N = 100000;
  const Signal s = generate_signal(L, rng, Normalization::unit_power_spectrum);
  ModelParams p;
  p.L = L;
  p.lambda = 1.0;
  p.sigma2 = 0.1;
  const ObservationBatch batch = generate_observations(s, p, N, rng);
  std::vector<long> counts(L, 0);
  for (long sft : batch.true_shifts) counts[std::size_t(sft)]++;
  const double mean = double(N) / double(L);
  const double sd = std::sqrt(double(N) * (1.0 / L) * (1.0 - 1.0 / L));
  for (long k = 0; k < L; ++k) REQUIRE(std::abs(double(counts[std::size_t(k)]) - mean) < 5.0 * sd);
}

TEST_CASE("empirical Fourier mean vanishes", "[model][slow]") {
  Rng rng(22);
  const long L = 8, N = 100000;
  const Signal s = generate_signal(L, rng, Normalization::unit_power_spectrum);
  ModelParams p;
  p.L = L;
  p.lambda = 1.0;
  p.sigma2 = 0.5;
  const ObservationBatch batch = generate_observations(s, p, N, rng);
  const CVector mean = batch.fourier.rowwise().mean();
  const double bound = 5.0 * std::sqrt((p.lambda + p.sigma2) / double(N));
  for (long k = 0; k < L; ++k) REQUIRE(std::abs(mean[k]) < bound);
}

TEST_CASE("residual noise variance matches sigma2", "[model][slow]") {
  Rng rng(23);
  const long L = 8, N = 10000;
  const Signal s = generate_signal(L, rng, Normalization::unit_norm);
  ModelParams p;
  p.L = L;
  p.lambda = 2.0;
  p.sigma2 = 0.7;
  const ObservationBatch batch = generate_observations(s, p, N, rng);
  RVector var = RVector::Zero(L);
  for (long i = 0; i < N; ++i) {
    const CVector clean =
        cyclic_shift(batch.true_factors[i] * s.theta, batch.true_shifts[i]);
    var += (batch.observations.col(i) - clean).cwiseAbs2();
  }
  var /= double(N);
  for (long l = 0; l < L; ++l) REQUIRE(var[l] == Approx(p.sigma2).epsilon(0.10));
}

TEST_CASE("batches from the same seed are bit identical", "[model]") {
  const auto make = [] {
    Rng rng(31);
    const Signal s = generate_signal(8, rng, Normalization::unit_power_spectrum);
    ModelParams p;
    p.L = 8;
    p.lambda = 1.0;
    p.sigma2 = 0.3;
    return generate_observations(s, p, 50, rng);
  };
  const ObservationBatch a = make(), b = make();
  REQUIRE((a.observations - b.observations).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE((a.fourier - b.fourier).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(a.true_shifts == b.true_shifts);
}

TEST_CASE("fourier rows are unitary DFTs of the observations", "[model]") {
  Rng rng(33);
  const Signal s = generate_signal(6, rng, Normalization::unit_norm);
  ModelParams p;
  p.L = 6;
  p.lambda = 1.0;
  p.sigma2 = 0.2;
  const ObservationBatch batch = generate_observations(s, p, 20, rng);
  for (long i = 0; i < batch.N(); ++i)
    REQUIRE((batch.fourier.col(i) - dft(batch.observations.col(i))).cwiseAbs().maxCoeff() <
            1e-10);
}
