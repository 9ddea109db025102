#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>
#include <vector>

#include "mrfa/metrics.hpp"
#include "mrfa/model.hpp"
#include "mrfa/recover.hpp"
#include "mrfa/spectral.hpp"
#include "mrfa/types.hpp"

namespace mrfa {

// ---------------------------------------------------------------------------
// Expectation-Maximization baseline. The E-step weighs each observation
// against every cyclic shift under the current rank-one-plus-isotropic
// covariance; the M-step takes the leading eigenpair of the weighted
// back-aligned covariance. Both steps work in the Fourier domain, where a
// shift is a modulation and the per-shift correlations are a DFT.
// ---------------------------------------------------------------------------

struct EMState {
  CVector theta;  // unit norm
  double lambda = 0.0;
  double loglik = 0.0;
  long iteration = 0;
};

/// Shift-posterior exponent convention. `tempered` (the default) divides the
/// quadratic form by 2, the factor a real-Gaussian density would carry;
/// `density` uses the circularly-symmetric complex normal density, for which
/// EM ascent of log_likelihood holds exactly.
enum class EStepExponent { density, tempered };

namespace detail {
/// corr[s] = theta^H R_{-s}{y} for all s at once, as an inverse DFT of
/// conj(theta_hat) .* y_hat (unitary inner products). Peaks at the true
/// shift when y is a shifted copy of theta, matching the m-step's
/// back-alignment convention.
inline CVector shift_correlations(const CVector& theta_hat, const CVector& y_hat) {
  const CVector g = theta_hat.conjugate().cwiseProduct(y_hat);
  return std::sqrt(double(g.size())) * idft(g);
}
}  // namespace detail

/// Posterior shift weights, one column per observation, rows indexed by the
/// shift. The rank-one identity
///   Sigma^{-1} = sigma^{-2} (I - (lambda/(sigma^2+lambda)) theta theta^*)
/// reduces each quadratic form to a single correlation; exponents are
/// normalized in the log domain with a per-column max subtraction.
inline RMatrix e_step(const ObservationBatch& batch, const EMState& state,
                      double sigma2,
                      EStepExponent convention = EStepExponent::tempered) {
  if (sigma2 <= 0.0) throw Error("e_step: undefined for sigma2 = 0");
  const long L = batch.L();
  const long N = batch.N();
  const CVector theta_hat = dft(state.theta);
  const double c = state.lambda / (sigma2 + state.lambda);
  const double scale = convention == EStepExponent::tempered ? 0.5 : 1.0;

  RMatrix weights(L, N);
  for (long j = 0; j < N; ++j) {
    const CVector corr = detail::shift_correlations(theta_hat, batch.fourier.col(j));
    // ||y||^2 is shift-invariant and cancels in the normalization.
    RVector log_w = (scale * c / sigma2) * corr.array().abs2();
    log_w.array() -= log_w.maxCoeff();
    RVector w = log_w.array().exp();
    weights.col(j) = w / w.sum();
  }
  return weights;
}

struct MStepResult {
  CVector theta;
  double lambda = 0.0;
  bool lambda_floored = false;
  bool degenerate_gap = false;
};

/// Leading eigenpair of S = (1/N) sum_j sum_s w[j,s] R_{-s}{y_j} R_{-s}{y_j}^*,
/// computed in the Fourier domain: conjugating by the unitary DFT turns the
/// shift average into a per-observation circulant weighting
/// S_hat[k1,k2] = (1/N) sum_j W_j[(k1-k2) mod L] y_hat[k1] conj(y_hat[k2]),
/// with W_j the inverse-DFT (unnormalized) of the weight column.
inline MStepResult m_step(const ObservationBatch& batch, const RMatrix& weights,
                          double sigma2, double lambda_floor = 1e-12) {
  const long L = batch.L();
  const long N = batch.N();
  CMatrix s_hat = CMatrix::Zero(L, L);
  for (long j = 0; j < N; ++j) {
    const CVector w = weights.col(j).cast<Complex>();
    const CVector band = std::sqrt(double(L)) * idft(w);
    const auto y = batch.fourier.col(j);
    for (long k1 = 0; k1 < L; ++k1)
      for (long k2 = 0; k2 <= k1; ++k2)
        s_hat(k1, k2) += band[(k1 - k2) % L] * y[k1] * std::conj(y[k2]);
  }
  CMatrix S = s_hat.selfadjointView<Eigen::Lower>();
  S /= double(N);

  const Eigenpair eig = leading_eigenpair(S);
  MStepResult out;
  out.theta = idft(eig.vector);
  out.lambda = eig.value - sigma2;
  out.degenerate_gap = eig.degenerate;
  if (out.lambda < lambda_floor) {
    out.lambda = lambda_floor;
    out.lambda_floored = true;
  }
  return out;
}

/// Marginal log-likelihood under a uniform shift prior, using the
/// circularly-symmetric complex normal density and the rank-one determinant
/// identity det Sigma = (lambda + sigma^2) sigma^{2(L-1)}.
inline double log_likelihood(const ObservationBatch& batch, const CVector& theta,
                             double lambda, double sigma2) {
  if (sigma2 <= 0.0) throw Error("log_likelihood: undefined for sigma2 = 0");
  constexpr double pi = 3.141592653589793238462643383279502884;
  const long L = batch.L();
  const long N = batch.N();
  const CVector theta_hat = dft(theta);
  const double c = lambda / (sigma2 + lambda);
  const double log_det = std::log(lambda + sigma2) + double(L - 1) * std::log(sigma2);

  double total = 0.0;
  for (long j = 0; j < N; ++j) {
    const CVector corr = detail::shift_correlations(theta_hat, batch.fourier.col(j));
    const double y2 = batch.fourier.col(j).squaredNorm();
    RVector exponents = (c / sigma2) * corr.array().abs2() - y2 / sigma2;
    const double mx = exponents.maxCoeff();
    total += mx + std::log((exponents.array() - mx).exp().sum()) - std::log(double(L));
  }
  return total - double(N) * (double(L) * std::log(pi) + log_det);
}

struct EMConfig {
  long max_iter = 200;
  double tol = 1e-6;  // aligned change in theta between iterations
  EStepExponent convention = EStepExponent::tempered;
  double lambda_floor = 1e-12;
};

struct EMInit {
  CVector theta;    // empty = random from seed
  double lambda = -1.0;  // < 0 = estimate from the power spectrum
  std::uint64_t seed = 0;

  static EMInit oracle(const CVector& theta, double lambda) {
    return {theta, lambda, 0};
  }
  static EMInit random(std::uint64_t seed) { return {{}, -1.0, seed}; }
};

struct EMRun {
  RecoveryResult result;
  std::vector<double> loglik_trace;        // one entry per iteration
  std::vector<double> theta_change_trace;  // aligned change per iteration
};

inline EMRun run_em(const ObservationBatch& batch, const EMInit& init,
                    double sigma2, const EMConfig& config = {}) {
  if (config.max_iter < 1) throw Error("run_em: max_iter < 1");
  const long L = batch.L();

  EMState state;
  if (init.theta.size() > 0) {
    state.theta = init.theta / init.theta.norm();
  } else {
    Rng rng(init.seed);
    CVector t(L);
    for (long l = 0; l < L; ++l) t[l] = rng.complex_normal(1.0);
    state.theta = t / t.norm();
  }
  state.lambda = init.lambda > 0.0
                     ? init.lambda
                     : std::max(power_spectrum_estimate(batch, sigma2).lambda_tilde,
                                config.lambda_floor);

  EMRun run;
  run.result.algorithm = Algorithm::EM;
  for (long it = 0; it < config.max_iter; ++it) {
    const RMatrix weights = e_step(batch, state, sigma2, config.convention);
    const MStepResult m = m_step(batch, weights, sigma2, config.lambda_floor);
    if (m.lambda_floored && run.result.flags.empty())
      run.result.flags.push_back("lambda-floored");
    const double change = align_error(state.theta, m.theta).error;
    state.theta = m.theta;
    state.lambda = m.lambda;
    state.iteration = it + 1;
    state.loglik = log_likelihood(batch, state.theta, state.lambda, sigma2);
    run.loglik_trace.push_back(state.loglik);
    run.theta_change_trace.push_back(change);
    run.result.iterations = it + 1;
    if (change < config.tol) break;
  }
  run.result.theta_tilde = state.theta;
  run.result.lambda_tilde = state.lambda;
  return run;
}

}  // namespace mrfa
