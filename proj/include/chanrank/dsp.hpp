// include/chanrank/dsp.hpp

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

// Frame-level features: 25 ms Hann frames every 10 ms, 512-point FFT, 40
// triangular area-normalized mel filters over 0-8000 Hz.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "chanrank/common.hpp"
#include "chanrank/fft.hpp"
#include "chanrank/wav.hpp"

namespace chanrank {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }

  void Validate() const {
    CHANRANK_CHECK(sample_rate == kSampleRate, Errc::kInvalidArgument,
                   "sample rate must be ", kSampleRate, " Hz, got ", sample_rate);
    for (double x : samples)
      CHANRANK_CHECK(std::isfinite(x), Errc::kInvalidArgument,
                     "waveform contains non-finite samples");
  }

  static Waveform Load(const std::string &path) {
    DecodedWav d = ReadWav(path);
    Waveform w{std::move(d.samples), d.sample_rate};
    try {
      w.Validate();
    } catch (const Error &e) {
      Fail(e.code(), path, ": ", e.what());
    }
    return w;
  }
};

/// T x 40 log mel energies, 100 frames per second.
struct LogMelFeatures {
  MatD frames;
  int num_frames() const { return static_cast<int>(frames.rows()); }
};

/// T x K cepstral coefficients 1..K (c0 dropped).
struct CepstralFrames {
  MatD frames;
  int num_frames() const { return static_cast<int>(frames.rows()); }
};

/// T x 40 non-negative mel-band energies (pre-log).
struct SubbandEnvelopes {
  MatD env;
  int num_frames() const { return static_cast<int>(env.rows()); }
};

struct FrameOptions {
  int win_length = 400;  // 25 ms
  int hop_length = 160;  // 10 ms
  int fft_size = 512;
  int num_mels = kNumMels;
  double low_hz = 0.0;
  double high_hz = 8000.0;
};

inline int NumFrames(std::size_t num_samples, const FrameOptions &opts = {}) {
  if (num_samples < static_cast<std::size_t>(opts.win_length)) return 0;
  return 1 + static_cast<int>((num_samples - opts.win_length) / opts.hop_length);
}

inline double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// Band edge/center frequencies in Hz: num_mels + 2 points, uniform in mel.
inline std::vector<double> MelPointsHz(const FrameOptions &opts = {}) {
  const double lo = HzToMel(opts.low_hz), hi = HzToMel(opts.high_hz);
  std::vector<double> pts(static_cast<std::size_t>(opts.num_mels + 2));
  for (std::size_t i = 0; i < pts.size(); ++i)
    pts[i] = MelToHz(lo + (hi - lo) * static_cast<double>(i) / (opts.num_mels + 1));
  return pts;
}

/// num_mels x (fft_size/2 + 1) triangular filters, each scaled by
/// 2 / (upper edge - lower edge) so every filter has unit area in Hz.
inline MatD MelFilterbank(const FrameOptions &opts = {}) {
  const int bins = opts.fft_size / 2 + 1;
  const std::vector<double> pts = MelPointsHz(opts);
  MatD fb = MatD::Zero(opts.num_mels, bins);
  for (int m = 0; m < opts.num_mels; ++m) {
    const double lo = pts[m], mid = pts[m + 1], hi = pts[m + 2];
    const double norm = 2.0 / (hi - lo);
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / opts.fft_size;
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      const double w = std::max(0.0, std::min(up, down));
      fb(m, k) = w * norm;
    }
  }
  return fb;
}

// Symmetric Hann window.
inline std::vector<double> HannWindow(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (n - 1));
  return w;
}

/// Orthonormal DCT-II matrix: y = D x, x = D^T y.
inline MatD DctMatrix(int n) {
  MatD d(n, n);
  for (int k = 0; k < n; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    for (int i = 0; i < n; ++i) d(k, i) = s * std::cos(M_PI * k * (2 * i + 1) / (2.0 * n));
  }
  return d;
}

/// T x num_mels mel-band energies of |X|^2.
inline MatD MelEnergies(const Waveform &w, const FrameOptions &opts = {}) {
  w.Validate();
  CHANRANK_CHECK(w.size() >= static_cast<std::size_t>(opts.win_length),
                 Errc::kTooShort, "waveform has ", w.size(),
                 " samples, need at least ", opts.win_length);
  const int num_frames = NumFrames(w.size(), opts);
  const std::vector<double> window = HannWindow(opts.win_length);
  const MatD fb = MelFilterbank(opts);

  RealFft fft(opts.fft_size);
  MatD power(fft.bins(), num_frames);
  for (int t = 0; t < num_frames; ++t) {
    double *buf = fft.time();
    std::fill(buf, buf + opts.fft_size, 0.0);
    const double *src = w.samples.data() + static_cast<std::size_t>(t) * opts.hop_length;
    for (int i = 0; i < opts.win_length; ++i) buf[i] = src[i] * window[static_cast<std::size_t>(i)];
    fft.Forward();
    for (int k = 0; k < fft.bins(); ++k) power(k, t) = std::norm(fft.freq()[k]);
  }
  return (fb * power).transpose();
}

inline LogMelFeatures LogMel(const Waveform &w, const FrameOptions &opts = {}) {
  MatD e = MelEnergies(w, opts);
  return {e.array().max(kLogFloor).log().matrix()};
}

inline SubbandEnvelopes Envelopes(const Waveform &w, const FrameOptions &opts = {}) {
  return {MelEnergies(w, opts)};
}

/// Cepstra of already computed log-mel frames: orthonormal DCT-II per frame,
/// coefficients 1..num_coeffs.
inline CepstralFrames CepstraFromLogMel(const LogMelFeatures &lm, int num_coeffs = 13) {
  const int bands = static_cast<int>(lm.frames.cols());
  CHANRANK_CHECK(num_coeffs >= 1 && num_coeffs < bands, Errc::kInvalidArgument,
                 "cepstral order must be in [1, ", bands - 1, "]");
  const MatD dct = DctMatrix(bands);
  MatD full = lm.frames * dct.transpose();
  return {full.middleCols(1, num_coeffs)};
}

inline CepstralFrames Cepstra(const Waveform &w, int num_coeffs = 13,
                              const FrameOptions &opts = {}) {
  return CepstraFromLogMel(LogMel(w, opts), num_coeffs);
}

}  // namespace chanrank
