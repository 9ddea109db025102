#pragma once

#include <unsupported/Eigen/FFT>

#include <cmath>

#include "mrfa/types.hpp"

namespace mrfa {

namespace detail {
inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> fft;  // caches plans per length
  return fft;
}
}  // namespace detail

/// Unitary DFT: out[k] = (1/sqrt(L)) sum_l v[l] e^{-i 2 pi l k / L}.
inline CVector dft(const CVector& v) {
  CVector out(v.size());
  detail::fft_engine().fwd(out, v);
  return out / std::sqrt(double(v.size()));
}

/// Unitary inverse DFT; idft(dft(v)) == v up to rounding.
inline CVector idft(const CVector& v) {
  CVector out(v.size());
  detail::fft_engine().inv(out, v);
  return out * std::sqrt(double(v.size()));
}

}  // namespace mrfa
