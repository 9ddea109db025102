#pragma once

#include <cmath>

#include "mrfa/model.hpp"
#include "mrfa/types.hpp"

namespace mrfa {

/// Best shift-and-phase alignment of an estimate against the reference:
/// error = min over s in Z_L, |alpha| = 1 of || theta - alpha R_s{theta_tilde} ||.
struct AlignmentReport {
  double error = 0.0;
  long best_shift = 0;
  Complex best_phase{1.0, 0.0};
};

/// Unit-modulus alpha minimizing ||a - alpha b||: the phase of <b, a>.
/// Returns 1 when the inner product is numerically zero.
inline Complex optimal_phase(const CVector& a, const CVector& b) {
  const Complex ip = b.dot(a);  // conj(b)^T a
  const double mag = std::abs(ip);
  if (mag < 1e-14) return {1.0, 0.0};
  return ip / mag;
}

/// Exhaustive minimization over all L shifts, with the closed-form optimal
/// phase per shift. Ties go to the smallest shift index.
inline AlignmentReport align_error(const CVector& theta, const CVector& theta_tilde) {
  const long L = theta.size();
  if (theta_tilde.size() != L) throw Error("align_error: length mismatch");

  AlignmentReport best;
  bool first = true;
  for (long s = 0; s < L; ++s) {
    const CVector shifted = cyclic_shift(theta_tilde, s);
    const Complex alpha = optimal_phase(theta, shifted);
    const double err = (theta - alpha * shifted).norm();
    if (first || err < best.error) {
      best = {err, s, alpha};
      first = false;
    }
  }
  return best;
}

}  // namespace mrfa
