#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <utility>
#include <vector>

#include "mrfa/dft.hpp"
#include "mrfa/rng.hpp"
#include "mrfa/types.hpp"

namespace mrfa {

// ---------------------------------------------------------------------------
// Generative model: y = R_s{a * theta} + eta, with s a random cyclic shift,
// a a random complex factor with E|a|^2 = lambda, and eta ~ CN(0, sigma^2 I).
// ---------------------------------------------------------------------------

/// Cyclic shift by s: out[l] = v[(l - s) mod L]. Any integer s is accepted.
inline CVector cyclic_shift(const CVector& v, long s) {
  const long L = v.size();
  CVector out(L);
  s = ((s % L) + L) % L;
  for (long l = 0; l < L; ++l) out[l] = v[(l - s + L) % L];
  return out;
}

struct Signal {
  CVector theta;  // unit Euclidean norm
  long L() const { return theta.size(); }
  CVector fourier() const { return dft(theta); }
};

/// Distribution of the random factor a. Defaults to CN(0, lambda); any
/// sampler with E|a|^2 = lambda is allowed, with E|a|^4 supplied for the
/// population-covariance oracle.
struct FactorSampler {
  std::function<Complex(Rng&)> sample;
  double fourth_moment;  // E|a|^4

  static FactorSampler complex_gaussian(double lambda) {
    return {[lambda](Rng& rng) { return rng.complex_normal(lambda); },
            2.0 * lambda * lambda};
  }
  /// a identically equal to c (plain multi-reference alignment).
  static FactorSampler constant(Complex c) {
    const double m2 = std::norm(c);
    return {[c](Rng&) { return c; }, m2 * m2};
  }
};

struct ModelParams {
  double lambda = 1.0;
  double sigma2 = 0.0;
  long L = 0;
  std::vector<double> shift_distribution;  // empty = uniform over Z_L

  double snr() const { return lambda / (double(L) * sigma2); }

  void validate() const {
    if (L < 2) throw Error("ModelParams: L must be >= 2");
    if (lambda < 0.0 || sigma2 < 0.0) throw Error("ModelParams: negative variance");
    if (!shift_distribution.empty()) {
      if (long(shift_distribution.size()) != L)
        throw Error("ModelParams: shift distribution length != L");
      double total = std::accumulate(shift_distribution.begin(),
                                     shift_distribution.end(), 0.0);
      if (std::abs(total - 1.0) > 1e-9)
        throw Error("ModelParams: shift distribution does not sum to 1");
    }
  }
};

/// N observations stored column-wise: column i of `observations` is y_i and
/// column i of `fourier` is its unitary DFT. Ground-truth shifts and factors
/// are retained for diagnostics.
struct ObservationBatch {
  CMatrix observations;  // L x N
  CMatrix fourier;       // L x N
  std::vector<long> true_shifts;
  CVector true_factors;
  ModelParams params;

  long N() const { return observations.cols(); }
  long L() const { return observations.rows(); }
};

enum class Normalization { unit_norm, unit_power_spectrum };

/// Random complex Gaussian signal. Under unit_power_spectrum every Fourier
/// coefficient is forced to modulus 1/sqrt(L) (so the stride products of the
/// clean signal all have equal moduli); a raw draw with an exactly zero
/// Fourier bin is resampled.
inline Signal generate_signal(long L, Rng& rng,
                              Normalization norm = Normalization::unit_norm) {
  if (L < 2) throw Error("generate_signal: L must be >= 2");
  for (;;) {
    CVector theta(L);
    for (long l = 0; l < L; ++l) theta[l] = rng.complex_normal(1.0);
    if (norm == Normalization::unit_norm) {
      theta /= theta.norm();
      return {theta};
    }
    CVector hat = dft(theta);
    if ((hat.array().abs() < 1e-12).any()) continue;  // degenerate draw
    hat = hat.array() / hat.array().abs() / std::sqrt(double(L));
    return {idft(hat)};
  }
}

inline ObservationBatch generate_observations(const Signal& signal,
                                              const ModelParams& params, long N,
                                              Rng& rng,
                                              const FactorSampler* factor = nullptr) {
  params.validate();
  if (N < 1) throw Error("generate_observations: N must be >= 1");
  if (signal.L() != params.L) throw Error("generate_observations: L mismatch");
  const long L = params.L;

  FactorSampler default_factor = FactorSampler::complex_gaussian(params.lambda);
  const FactorSampler& fac = factor ? *factor : default_factor;

  std::vector<double> shift_cdf;
  if (!params.shift_distribution.empty()) {
    shift_cdf.resize(L);
    double acc = 0.0;
    for (long s = 0; s < L; ++s) {
      acc += params.shift_distribution[s];
      shift_cdf[s] = acc;
    }
  }

  ObservationBatch batch;
  batch.observations.resize(L, N);
  batch.fourier.resize(L, N);
  batch.true_shifts.resize(N);
  batch.true_factors.resize(N);
  batch.params = params;

  const double sigma = std::sqrt(params.sigma2);
  for (long i = 0; i < N; ++i) {
    long s;
    if (shift_cdf.empty()) {
      s = std::min<long>(L - 1, long(rng.uniform() * double(L)));
    } else {
      const double u = rng.uniform();
      s = L - 1;
      for (long j = 0; j < L; ++j)
        if (u < shift_cdf[j]) { s = j; break; }
    }
    const Complex a = fac.sample(rng);
    CVector y = cyclic_shift(a * signal.theta, s);
    if (sigma > 0.0)
      for (long l = 0; l < L; ++l) y[l] += rng.complex_normal(params.sigma2);
    batch.observations.col(i) = y;
    batch.fourier.col(i) = dft(y);
    batch.true_shifts[i] = s;
    batch.true_factors[i] = a;
  }
  return batch;
}

}  // namespace mrfa
