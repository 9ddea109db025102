#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>
#include <vector>

#include "mrfa/model.hpp"
#include "mrfa/types.hpp"

namespace mrfa {

// ---------------------------------------------------------------------------
// Shift-invariant second- and fourth-order estimators. The stride products
// z^(m)[k] = y_hat[k] * conj(y_hat[k+m]) have, after a diagonal noise-bias
// correction, a sample covariance whose leading eigenvector estimates
// u^(m)[k] = theta_hat[k] * conj(theta_hat[k+m]) up to a constant phase.
// ---------------------------------------------------------------------------

struct PowerSpectrumEstimate {
  RVector p_tilde;      // may contain negative bins at low SNR
  double lambda_tilde;  // sum_k |p_tilde[k]|
};

struct StrideCovariance {
  long m;
  CMatrix matrix;        // bias-corrected, Hermitian
  RVector raw_diagonal;  // pre-correction diagonal
};

struct UEstimate {
  long m;
  CVector u_tilde;  // unit norm, canonical phase
  double top_eigenvalue;
  double spectral_gap;
  bool degenerate_gap = false;
};

struct SignalDiagnostics {
  RVector gamma;  // gamma[m-1] = L * ||u^(m)||^2, m = 1..L-1
  RVector delta;  // delta[m-1] = min_k |u^(m)[k]|
};

struct Eigenpair {
  double value;
  CVector vector;
  double gap;
  bool degenerate = false;
};

/// p_tilde[k] = (1/N) sum_i |y_hat_i[k]|^2 - sigma^2; lambda_tilde = sum |p_tilde|.
/// Negative bins are kept as-is; consumers decide how to treat them.
inline PowerSpectrumEstimate power_spectrum_estimate(const ObservationBatch& batch,
                                                     double sigma2) {
  if (batch.N() < 1) throw Error("power_spectrum_estimate: empty batch");
  RVector p = batch.fourier.array().abs2().rowwise().sum() / double(batch.N());
  p.array() -= sigma2;
  return {p, p.array().abs().sum()};
}

/// z^(m)[k] = y_hat[k] * conj(y_hat[(k+m) mod L]).
inline CVector stride_products(const CVector& y_hat, long m) {
  const long L = y_hat.size();
  if (m < 0 || m > L - 1) throw Error("stride_products: m out of range");
  CVector z(L);
  for (long k = 0; k < L; ++k) z[k] = y_hat[k] * std::conj(y_hat[(k + m) % L]);
  return z;
}

/// Sample covariance of the stride-m products, then the diagonal is reduced
/// by sigma^2 (p_tilde[k] + p_tilde[k+m]) + sigma^4. Accumulation order is
/// the observation index, so results are reproducible.
inline StrideCovariance stride_covariance(const ObservationBatch& batch, long m,
                                          const PowerSpectrumEstimate& p_est,
                                          double sigma2) {
  const long L = batch.L();
  const long N = batch.N();
  if (m < 1 || m > L - 1) throw Error("stride_covariance: m out of range");

  CMatrix acc = CMatrix::Zero(L, L);
  CVector z(L);
  for (long i = 0; i < N; ++i) {
    const auto y = batch.fourier.col(i);
    for (long k = 0; k < L; ++k) z[k] = y[k] * std::conj(y[(k + m) % L]);
    acc.selfadjointView<Eigen::Lower>().rankUpdate(z, 1.0);
  }
  CMatrix C = acc.selfadjointView<Eigen::Lower>();
  C /= double(N);

  StrideCovariance out;
  out.m = m;
  out.raw_diagonal = C.diagonal().real();
  for (long k = 0; k < L; ++k) {
    const double bias =
        sigma2 * (p_est.p_tilde[k] + p_est.p_tilde[(k + m) % L]) + sigma2 * sigma2;
    C(k, k) -= bias;
  }
  out.matrix = std::move(C);
  return out;
}

/// Eigenpair for the algebraically largest eigenvalue of a Hermitian matrix.
/// A near-degenerate top gap (below 1e-10 * ||matrix||) is flagged, not fatal.
inline Eigenpair leading_eigenpair(const CMatrix& matrix) {
  const long L = matrix.rows();
  if (matrix.cols() != L) throw Error("leading_eigenpair: not square");
  const double scale = matrix.cwiseAbs().maxCoeff();
  if ((matrix - matrix.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * std::max(scale, 1.0))
    throw Error("leading_eigenpair: matrix is not Hermitian");

  Eigen::SelfAdjointEigenSolver<CMatrix> solver(matrix);
  if (solver.info() != Eigen::Success)
    throw Error("leading_eigenpair: eigensolver failed");

  Eigenpair out;
  out.value = solver.eigenvalues()[L - 1];  // ascending order
  out.vector = solver.eigenvectors().col(L - 1);
  const double norm = std::max(std::abs(solver.eigenvalues()[L - 1]),
                               std::abs(solver.eigenvalues()[0]));
  out.gap = L > 1 ? solver.eigenvalues()[L - 1] - solver.eigenvalues()[L - 2]
                  : std::abs(out.value);
  out.degenerate = L > 1 && out.gap < 1e-10 * norm;
  return out;
}

namespace detail {
/// j minimizing arg{ u[0] e^{i 2 pi j / L} } with args taken in [0, 2 pi).
inline long j_min_index(const Complex& u0, long L) {
  constexpr double two_pi = 2.0 * 3.141592653589793238462643383279502884;
  long best_j = 0;
  double best = two_pi;
  for (long j = 0; j < L; ++j) {
    double a = std::arg(u0) + two_pi * double(j) / double(L);
    a = std::fmod(a, two_pi);
    if (a < 0.0) a += two_pi;
    if (a < best) {
      best = a;
      best_j = j;
    }
  }
  return best_j;
}
}  // namespace detail

/// Canonical phase for an eigenvector estimate of u^(m): first rotate so the
/// principal args sum to 0 (mod 2 pi), then multiply by the L-th root of
/// unity e^{i 2 pi j_min / L} that makes arg of entry 0, taken in [0, 2 pi),
/// minimal. Entries with modulus below 1e-14 have no usable arg.
inline CVector normalize_u_phases(CVector u) {
  constexpr double two_pi = 2.0 * 3.141592653589793238462643383279502884;
  const long L = u.size();
  if ((u.array().abs() < 1e-14).any())
    throw Error("normalize_u_phases: degenerate-phase (zero entry)");

  double arg_sum = 0.0;
  for (long k = 0; k < L; ++k) arg_sum += std::arg(u[k]);
  u *= std::polar(1.0, -arg_sum / double(L));

  const long j = detail::j_min_index(u[0], L);
  u *= std::polar(1.0, two_pi * double(j) / double(L));
  return u;
}

/// stride_covariance -> leading_eigenpair -> normalize_u_phases.
inline UEstimate estimate_u(const ObservationBatch& batch, long m,
                            const PowerSpectrumEstimate& p_est, double sigma2) {
  const StrideCovariance cov = stride_covariance(batch, m, p_est, sigma2);
  const Eigenpair eig = leading_eigenpair(cov.matrix);
  UEstimate out;
  out.m = m;
  out.u_tilde = normalize_u_phases(eig.vector);
  out.top_eigenvalue = eig.value;
  out.spectral_gap = eig.gap;
  out.degenerate_gap = eig.degenerate;
  return out;
}

/// Exact u^(m)[k] = theta_hat[k] * conj(theta_hat[k+m]) of a clean signal.
inline CVector u_exact(const CVector& theta_hat, long m) {
  return stride_products(theta_hat, m);
}

/// Population covariance of z^(m): fourth_moment * u u^* plus the diagonal
/// noise term sigma^2 (p_x[k] + p_x[k+m]) + sigma^4, with p_x = lambda |theta_hat|^2.
/// fourth_moment is E|a|^4 (2 lambda^2 for a complex Gaussian factor).
inline CMatrix population_covariance(const CVector& theta, double lambda,
                                     double sigma2, long m,
                                     double fourth_moment = -1.0) {
  const long L = theta.size();
  if (m < 1 || m > L - 1) throw Error("population_covariance: m out of range");
  if (fourth_moment < 0.0) fourth_moment = 2.0 * lambda * lambda;

  const CVector theta_hat = dft(theta);
  const CVector u = u_exact(theta_hat, m);
  const RVector p_x = lambda * theta_hat.array().abs2();

  CMatrix C = fourth_moment * (u * u.adjoint());
  for (long k = 0; k < L; ++k)
    C(k, k) += sigma2 * (p_x[k] + p_x[(k + m) % L]) + sigma2 * sigma2;
  return C;
}

/// gamma_m = L ||u^(m)||^2 and delta_m = min_k |u^(m)[k]| for m = 1..L-1.
inline SignalDiagnostics signal_diagnostics(const Signal& signal) {
  const long L = signal.L();
  const CVector theta_hat = signal.fourier();
  SignalDiagnostics d;
  d.gamma.resize(L - 1);
  d.delta.resize(L - 1);
  for (long m = 1; m < L; ++m) {
    const CVector u = u_exact(theta_hat, m);
    d.gamma[m - 1] = double(L) * u.squaredNorm();
    d.delta[m - 1] = u.array().abs().minCoeff();
  }
  return d;
}

}  // namespace mrfa
