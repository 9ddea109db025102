#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mrfa/rng.hpp"
#include "mrfa/spectral.hpp"
#include "mrfa/types.hpp"

namespace mrfa {

// ---------------------------------------------------------------------------
// Signal recovery. Both algorithms estimate magnitudes from the power
// spectrum; they differ in how the Fourier phases are recovered: frequency
// marching telescopes arg u^(1), alternating minimization fits a rank-one
// matrix of phases against all u^(m) bands jointly.
// ---------------------------------------------------------------------------

enum class Algorithm { FM, AM, EM };

inline const char* algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::FM: return "fm";
    case Algorithm::AM: return "am";
    case Algorithm::EM: return "em";
  }
  return "?";
}

struct RecoveryResult {
  CVector theta_tilde;  // time domain, unit norm
  double lambda_tilde = 0.0;
  Algorithm algorithm = Algorithm::FM;
  long iterations = 0;
  std::vector<double> objective_trace;  // AM: objective after each iteration
  std::vector<std::string> flags;
};

struct AMConfig {
  long max_iterations = 100;
  double relative_tolerance = 1e-8;
  std::uint64_t init_seed = 0;
};

/// theta_m[k] = sqrt(|p_tilde[k]| / lambda_tilde); unit norm by construction
/// since lambda_tilde = sum |p_tilde|.
inline RVector magnitude_estimate(const PowerSpectrumEstimate& p_est) {
  if (p_est.lambda_tilde <= 0.0)
    throw Error("magnitude_estimate: all-zero-spectrum");
  return (p_est.p_tilde.array().abs() / p_est.lambda_tilde).sqrt();
}

/// theta_p[0] = 1; theta_p[k+1] = theta_p[k] * exp(-i arg u1[k]).
inline CVector frequency_march(const UEstimate& u_est) {
  const CVector& u = u_est.u_tilde;
  const long L = u.size();
  if ((u.array().abs() < 1e-14).any())
    throw Error("frequency_march: degenerate-phase (zero entry of u^(1))");
  CVector theta_p(L);
  theta_p[0] = 1.0;
  for (long k = 0; k + 1 < L; ++k)
    theta_p[k + 1] = theta_p[k] * std::polar(1.0, -std::arg(u[k]));
  return theta_p;
}

inline RecoveryResult recover_fm(const ObservationBatch& batch, double sigma2) {
  if (batch.N() < 1 || batch.L() < 2) throw Error("recover_fm: invalid batch");
  RecoveryResult result;
  result.algorithm = Algorithm::FM;

  const PowerSpectrumEstimate p_est = power_spectrum_estimate(batch, sigma2);
  result.lambda_tilde = p_est.lambda_tilde;

  const UEstimate u1 = estimate_u(batch, 1, p_est, sigma2);
  if (u1.degenerate_gap) result.flags.push_back("degenerate-gap:m=1");

  const RVector theta_m = magnitude_estimate(p_est);
  const CVector theta_p = frequency_march(u1);
  result.theta_tilde = idft((theta_p.array() * theta_m.array()).matrix());
  return result;
}

/// Circul{alpha}[k1,k2] = alpha[(k2 - k1) mod L].
inline CMatrix circulant(const CVector& alpha) {
  const long L = alpha.size();
  CMatrix C(L, L);
  for (long k1 = 0; k1 < L; ++k1)
    for (long k2 = 0; k2 < L; ++k2) C(k1, k2) = alpha[(k2 - k1 + L) % L];
  return C;
}

/// Phase matrix with ones on the diagonal and the phases of u^(m) on the
/// m-th circulant diagonal, for every m = 1..L-1. Each band carries its own
/// unknown global phase from the eigenvector sign convention, so the matrix
/// is Hermitian only up to those per-band constants; the q-step works on the
/// Hermitian part, and at the optimum the per-band constants are absorbed
/// into alpha, making the fitted product exactly rank one.
inline CMatrix build_cx(const std::vector<UEstimate>& u_family,
                        bool permissive = false,
                        std::vector<std::string>* flags = nullptr) {
  const long L = long(u_family.size()) + 1;
  for (long m = 1; m < L; ++m)
    if (u_family[m - 1].m != m) throw Error("build_cx: family out of order");

  CMatrix cx = CMatrix::Identity(L, L);
  for (long m = 1; m < L; ++m) {
    const CVector& u = u_family[m - 1].u_tilde;
    for (long k = 0; k < L; ++k) {
      const double mag = std::abs(u[k]);
      if (mag < 1e-14) {
        if (!permissive) throw Error("build_cx: degenerate-phase (zero entry)");
        if (flags) flags->push_back("degenerate-phase:m=" + std::to_string(m));
        cx(k, (k + m) % L) = 1.0;
      } else {
        cx(k, (k + m) % L) = u[k] / mag;
      }
    }
  }
  return cx;
}

/// argmin over q of || q q^* - cx .* Circul{conj(alpha)} ||_F: the scaled
/// leading eigenvector sqrt(s1) v1. For the random initial alpha the matrix
/// is Hermitian only up to circulant phases; its Hermitian part gives the
/// same minimizer.
inline CVector am_q_step(const CMatrix& cx, const CVector& alpha,
                         bool* degenerate = nullptr) {
  const long L = cx.rows();
  CMatrix M = cx.cwiseProduct(circulant(alpha.conjugate()));
  M = 0.5 * (M + M.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<CMatrix> solver(M);
  if (solver.info() != Eigen::Success) throw Error("am_q_step: eigensolver failed");
  const auto& evals = solver.eigenvalues();
  double top = evals[L - 1];
  if (degenerate) {
    const double norm = std::max(std::abs(evals[L - 1]), std::abs(evals[0]));
    *degenerate = L > 1 && (evals[L - 1] - evals[L - 2]) < 1e-10 * norm;
  }
  if (top <= 0.0) {
    // Rank-one q q^* is positive semidefinite; nothing to fit.
    return CVector::Zero(L);
  }
  return std::sqrt(top) * solver.eigenvectors().col(L - 1);
}

/// Closed-form circulant phase update:
/// alpha[k] = exp{ i arg sum_l conj(q[l]) q[l+k] cx[l, l+k] }.
inline CVector am_alpha_step(const CMatrix& cx, const CVector& q,
                             std::vector<std::string>* flags = nullptr) {
  const long L = cx.rows();
  CVector alpha(L);
  for (long k = 0; k < L; ++k) {
    Complex acc = 0.0;
    for (long l = 0; l < L; ++l) {
      const long lk = (l + k) % L;
      acc += std::conj(q[l]) * q[lk] * cx(l, lk);
    }
    if (std::abs(acc) < 1e-14) {
      alpha[k] = 1.0;
      if (flags) flags->push_back("alpha-zero-sum:k=" + std::to_string(k));
    } else {
      alpha[k] = acc / std::abs(acc);
    }
  }
  return alpha;
}

inline double am_objective(const CMatrix& cx, const CVector& q, const CVector& alpha) {
  return ((q * q.adjoint()).cwiseProduct(circulant(alpha)) - cx).norm();
}

inline RecoveryResult recover_am(const ObservationBatch& batch, double sigma2,
                                 const AMConfig& config = {}) {
  if (batch.N() < 1 || batch.L() < 2) throw Error("recover_am: invalid batch");
  if (config.max_iterations < 1) throw Error("recover_am: max_iterations < 1");
  const long L = batch.L();

  RecoveryResult result;
  result.algorithm = Algorithm::AM;

  const PowerSpectrumEstimate p_est = power_spectrum_estimate(batch, sigma2);
  result.lambda_tilde = p_est.lambda_tilde;
  const RVector theta_m = magnitude_estimate(p_est);

  std::vector<UEstimate> family;
  family.reserve(L - 1);
  for (long m = 1; m < L; ++m) {
    family.push_back(estimate_u(batch, m, p_est, sigma2));
    if (family.back().degenerate_gap)
      result.flags.push_back("degenerate-gap:m=" + std::to_string(m));
  }
  const CMatrix cx = build_cx(family);

  // Random unit-modulus initialization from the config's own seed, so
  // recovery is reproducible given (batch, config).
  Rng rng(config.init_seed);
  CVector alpha(L);
  for (long k = 0; k < L; ++k)
    alpha[k] = std::polar(1.0, 2.0 * 3.141592653589793238462643383279502884 * rng.uniform());

  CVector q;
  double prev_obj = -1.0;
  for (long t = 0; t < config.max_iterations; ++t) {
    bool degenerate = false;
    q = am_q_step(cx, alpha, &degenerate);
    if (degenerate && result.flags.empty())
      result.flags.push_back("degenerate-gap:q-step");
    if (q.isZero()) {
      result.flags.push_back("q-step-nonpositive-spectrum");
      throw Error("recover_am: degenerate-phase (q-step produced zero)");
    }
    alpha = am_alpha_step(cx, q, &result.flags);
    const double obj = am_objective(cx, q, alpha);
    result.objective_trace.push_back(obj);
    result.iterations = t + 1;
    if (prev_obj >= 0.0 &&
        prev_obj - obj <= config.relative_tolerance * std::max(prev_obj, 1e-30))
      break;
    prev_obj = obj;
  }

  if ((q.array().abs() < 1e-14).any())
    throw Error("recover_am: degenerate-phase (zero entry of q)");
  const CVector theta_p = q.array() / q.array().abs();
  result.theta_tilde = idft((theta_p.array() * theta_m.array()).matrix());
  return result;
}

}  // namespace mrfa
