// include/chanrank/fft.hpp

// Copyright 2026 The chanrank Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstring>
#include <mutex>
#include <span>
#include <vector>

#include "chanrank/common.hpp"

namespace chanrank {

namespace fft_detail {
// FFTW's planner is not re-entrant; execution of a finished plan is.
inline std::mutex &PlannerMutex() {
  static std::mutex m;
  return m;
}
}  // namespace fft_detail

/// Real-to-complex and complex-to-real transforms of one fixed size, with
/// owned aligned buffers. Unnormalized, as in FFTW.
class RealFft {
 public:
  explicit RealFft(int n) : n_(n) {
    CHANRANK_CHECK(n > 0, Errc::kInvalidArgument, "fft size must be positive");
    real_ = fftw_alloc_real(static_cast<std::size_t>(n));
    spec_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::lock_guard<std::mutex> lock(fft_detail::PlannerMutex());
    forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
  }
  ~RealFft() {
    std::lock_guard<std::mutex> lock(fft_detail::PlannerMutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  RealFft(const RealFft &) = delete;
  RealFft &operator=(const RealFft &) = delete;

  int size() const { return n_; }
  int bins() const { return n_ / 2 + 1; }

  double *time() { return real_; }
  std::complex<double> *freq() {
    return reinterpret_cast<std::complex<double> *>(spec_);
  }

  void Forward() { fftw_execute(forward_); }
  void Inverse() { fftw_execute(inverse_); }

 private:
  int n_;
  double *real_ = nullptr;
  fftw_complex *spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

inline int NextPow2(std::size_t n) {
  int p = 1;
  while (static_cast<std::size_t>(p) < n) p <<= 1;
  return p;
}

/// Full linear convolution, length a.size() + b.size() - 1.
inline std::vector<double> FftConvolve(std::span<const double> a,
                                       std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  const std::size_t out_len = a.size() + b.size() - 1;
  RealFft fft(NextPow2(out_len));
  const int n = fft.size();
  std::vector<std::complex<double>> fa(static_cast<std::size_t>(fft.bins()));

  std::fill(fft.time(), fft.time() + n, 0.0);
  std::copy(a.begin(), a.end(), fft.time());
  fft.Forward();
  std::copy(fft.freq(), fft.freq() + fft.bins(), fa.begin());

  std::fill(fft.time(), fft.time() + n, 0.0);
  std::copy(b.begin(), b.end(), fft.time());
  fft.Forward();
  for (int k = 0; k < fft.bins(); ++k) fft.freq()[k] *= fa[static_cast<std::size_t>(k)];
  fft.Inverse();

  std::vector<double> out(out_len);
  const double scale = 1.0 / n;
  for (std::size_t i = 0; i < out_len; ++i) out[i] = fft.time()[i] * scale;
  return out;
}

/// c[L + max_lag] = sum_t x[t + L] * s[t] for L in [-max_lag, max_lag].
inline std::vector<double> CrossCorrelate(std::span<const double> x,
                                          std::span<const double> s,
                                          int max_lag) {
  std::vector<double> out(static_cast<std::size_t>(2 * max_lag + 1), 0.0);
  if (x.empty() || s.empty()) return out;
  // Correlation as convolution of x with reversed s: conv[t] = sum x[t-k] s'[k]
  // with s'[k] = s[n_s-1-k], so c(L) = conv[L + n_s - 1].
  std::vector<double> rev(s.rbegin(), s.rend());
  std::vector<double> conv = FftConvolve(x, rev);
  const auto ns = static_cast<long>(s.size());
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    long idx = lag + ns - 1;
    if (idx >= 0 && idx < static_cast<long>(conv.size()))
      out[static_cast<std::size_t>(lag + max_lag)] = conv[static_cast<std::size_t>(idx)];
  }
  return out;
}

}  // namespace chanrank
