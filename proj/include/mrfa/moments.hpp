#pragma once

#include <cmath>
#include <vector>

#include "mrfa/model.hpp"
#include "mrfa/spectral.hpp"
#include "mrfa/types.hpp"

namespace mrfa {

// ---------------------------------------------------------------------------
// Shift-invariant empirical statistics of the observations: mean, power
// spectrum, bispectrum (which vanishes under the random-factor model) and
// trispectrum, whose L x L blocks are exactly the raw stride covariances.
// ---------------------------------------------------------------------------

/// Entrywise mean of y_hat over the batch (estimates M1, which is zero under
/// the model).
inline CVector empirical_mean(const ObservationBatch& batch) {
  return batch.fourier.rowwise().mean();
}

/// p_y[k] = (1/N) sum_i |y_hat_i[k]|^2 (no noise subtraction).
inline RVector power_spectrum_y(const ObservationBatch& batch) {
  return batch.fourier.array().abs2().rowwise().sum() / double(batch.N());
}

/// B[k1,k2] = (1/N) sum_i y_hat[k1] conj(y_hat[k2]) y_hat[(k2-k1) mod L].
/// If standard_error is non-null it receives the per-entry empirical standard
/// error of the mean (std of |deviation| across samples / sqrt(N)).
inline CMatrix bispectrum_estimate(const ObservationBatch& batch,
                                   RMatrix* standard_error = nullptr) {
  const long L = batch.L();
  const long N = batch.N();
  CMatrix B = CMatrix::Zero(L, L);
  RMatrix second = RMatrix::Zero(L, L);
  for (long i = 0; i < N; ++i) {
    const auto y = batch.fourier.col(i);
    for (long k1 = 0; k1 < L; ++k1)
      for (long k2 = 0; k2 < L; ++k2) {
        const Complex v = y[k1] * std::conj(y[k2]) * y[(k2 - k1 + L) % L];
        B(k1, k2) += v;
        if (standard_error) second(k1, k2) += std::norm(v);
      }
  }
  B /= double(N);
  if (standard_error) {
    standard_error->resize(L, L);
    for (long k1 = 0; k1 < L; ++k1)
      for (long k2 = 0; k2 < L; ++k2) {
        const double var = second(k1, k2) / double(N) - std::norm(B(k1, k2));
        (*standard_error)(k1, k2) = std::sqrt(std::max(var, 0.0) / double(N));
      }
  }
  return B;
}

struct TrispectrumEstimate {
  long L = 0;
  long sample_count = 0;
  std::vector<Complex> values;  // [k1 * L^2 + k2 * L + k3]

  Complex at(long k1, long k2, long k3) const {
    return values[std::size_t((k1 * L + k2) * L + k3)];
  }
};

/// T[k1,k2,k3] = (1/N) sum_i y[k1] conj(y[k2]) y[k3] conj(y[(k1-k2+k3) mod L]).
/// L^3 storage; lengths above 64 are rejected unless forced.
inline TrispectrumEstimate trispectrum_estimate(const ObservationBatch& batch,
                                                bool force = false) {
  const long L = batch.L();
  const long N = batch.N();
  if (L > 64 && !force)
    throw Error("trispectrum_estimate: L > 64 needs force (L^3 storage)");

  TrispectrumEstimate t;
  t.L = L;
  t.sample_count = N;
  t.values.assign(std::size_t(L) * L * L, Complex{0.0, 0.0});
  for (long i = 0; i < N; ++i) {
    const auto y = batch.fourier.col(i);
    std::size_t idx = 0;
    for (long k1 = 0; k1 < L; ++k1)
      for (long k2 = 0; k2 < L; ++k2) {
        const Complex pair12 = y[k1] * std::conj(y[k2]);
        for (long k3 = 0; k3 < L; ++k3, ++idx)
          t.values[idx] +=
              pair12 * y[k3] * std::conj(y[(((k1 - k2 + k3) % L) + L) % L]);
      }
  }
  for (auto& v : t.values) v /= double(N);
  return t;
}

/// Raw fourth-moment entry (1/N) sum_i y[k1] conj(y[k2]) y[k3] conj(y[k4]),
/// for spot checks off the trispectrum support.
inline Complex fourth_moment_entry(const ObservationBatch& batch, long k1, long k2,
                                   long k3, long k4, double* standard_error = nullptr) {
  const long N = batch.N();
  Complex mean = 0.0;
  double second = 0.0;
  for (long i = 0; i < N; ++i) {
    const auto y = batch.fourier.col(i);
    const Complex v = y[k1] * std::conj(y[k2]) * y[k3] * std::conj(y[k4]);
    mean += v;
    second += std::norm(v);
  }
  mean /= double(N);
  if (standard_error) {
    const double var = second / double(N) - std::norm(mean);
    *standard_error = std::sqrt(std::max(var, 0.0) / double(N));
  }
  return mean;
}

/// Max entrywise |raw C_z^(m)[k1,k2] - T[k1,k1+m,k2+m]|; both sides are the
/// same sample average, so the deviation is pure rounding.
inline double cz_trispectrum_identity_check(const ObservationBatch& batch, long m) {
  const long L = batch.L();
  if (m < 1 || m > L - 1) throw Error("cz_trispectrum_identity_check: bad m");

  PowerSpectrumEstimate zero_p{RVector::Zero(L), 0.0};
  const StrideCovariance raw = stride_covariance(batch, m, zero_p, 0.0);
  const TrispectrumEstimate t = trispectrum_estimate(batch);

  double max_dev = 0.0;
  for (long k1 = 0; k1 < L; ++k1)
    for (long k2 = 0; k2 < L; ++k2)
      max_dev = std::max(max_dev,
                         std::abs(raw.matrix(k1, k2) -
                                  t.at(k1, (k1 + m) % L, (k2 + m) % L)));
  return max_dev;
}

}  // namespace mrfa
