// include/chanrank/selectors.hpp

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

// Signal-based channel scorers and oracles. Every scorer returns one score per
// channel, higher meaning better.
//
//   envelope variance   sum_b alpha_b * var_t(env^(1/3) / mean) / max over channels
//   cepstral distance   -mean_t (10/ln10) sqrt(2 sum_k (ref_k - c_k)^2)
//   posterior entropy   -mean_t H(p_t)
//   SDR                 10 log10 |a s|^2 / |x - a s|^2 after lag alignment
//   random, closest     seeded permutation, negative mic-speaker distance

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "chanrank/common.hpp"
#include "chanrank/dsp.hpp"
#include "chanrank/fft.hpp"
#include "chanrank/ltr_losses.hpp"
#include "json.hpp"

namespace chanrank {

// ---------------------------------------------------------------------------
// Signal-to-distortion ratio.

inline constexpr double kSdrCapDb = 60.0;
inline constexpr int kSdrMaxLag = kSampleRate / 10;  // 100 ms

/// Lag L maximizing |sum_t x[t + L] s[t]| over |L| <= max_lag; ties go to
/// the smallest |L|, then to the negative side.
inline int AlignmentLag(std::span<const double> x, std::span<const double> s, int max_lag) {
  const std::vector<double> c = CrossCorrelate(x, s, max_lag);
  int best = 0;
  double best_v = std::abs(c[static_cast<std::size_t>(max_lag)]);
  for (int d = 1; d <= max_lag; ++d)
    for (int lag : {-d, d}) {
      const double v = std::abs(c[static_cast<std::size_t>(lag + max_lag)]);
      if (v > best_v) {
        best_v = v;
        best = lag;
      }
    }
  return best;
}

/// SDR of `estimate` against `reference` in dB, capped to [-60, 60]. The
/// estimate is aligned to the reference by the cross-correlation peak within
/// +-max_lag samples; the overlapping span is then projected onto the
/// reference. An all-zero estimate has no signal at all and returns -inf.
inline double Sdr(const Waveform &estimate, const Waveform &reference,
                  int max_lag = kSdrMaxLag) {
  const auto &x = estimate.samples;
  const auto &s = reference.samples;
  double ss_total = 0;
  for (double v : s) ss_total += v * v;
  CHANRANK_CHECK(ss_total > 0, Errc::kInvalidArgument, "SDR reference is all zeros");
  double xx_total = 0;
  for (double v : x) xx_total += v * v;
  if (xx_total == 0) return -std::numeric_limits<double>::infinity();

  const int lag = AlignmentLag(x, s, max_lag);
  // Overlap: s[t] against x[t + lag].
  const long t0 = std::max<long>(0, -lag);
  const long t1 = std::min<long>(static_cast<long>(s.size()), static_cast<long>(x.size()) - lag);
  double xs = 0, ss = 0, xx = 0;
  for (long t = t0; t < t1; ++t) {
    const double xv = x[static_cast<std::size_t>(t + lag)], sv = s[static_cast<std::size_t>(t)];
    xs += xv * sv;
    ss += sv * sv;
    xx += xv * xv;
  }
  if (ss == 0) return -kSdrCapDb;
  const double alpha = xs / ss;
  const double target = alpha * alpha * ss;
  // |x - a s|^2 = |x|^2 - 2a<x,s> + a^2|s|^2 = |x|^2 - a<x,s>.
  const double residual = std::max(0.0, xx - alpha * xs);
  if (residual <= 1e-15 * xx) return kSdrCapDb;
  if (target == 0) return -kSdrCapDb;
  return std::clamp(10.0 * std::log10(target / residual), -kSdrCapDb, kSdrCapDb);
}

inline ChannelScores SdrScores(const std::vector<Waveform> &channels, const Waveform &reference) {
  ChannelScores out{{}, "sdr"};
  for (const auto &c : channels) {
    double v = Sdr(c, reference);
    out.scores.push_back(std::isfinite(v) ? v : -kSdrCapDb - 1.0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Envelope variance.

struct EvWeights {
  std::vector<double> alpha;

  static EvWeights Uniform(int bands = kNumMels) {
    return {std::vector<double>(static_cast<std::size_t>(bands), 1.0 / bands)};
  }
  static EvWeights FromLogits(const std::vector<double> &theta) {
    return {Softmax(std::span<const double>(theta))};
  }

  void Validate() const {
    CHANRANK_CHECK(!alpha.empty(), Errc::kInvalidArgument, "EV weights are empty");
    double sum = 0;
    for (double a : alpha) {
      CHANRANK_CHECK(std::isfinite(a) && a >= 0, Errc::kInvalidArgument,
                     "EV weights must be finite and non-negative");
      sum += a;
    }
    CHANRANK_CHECK(std::abs(sum - 1.0) < 1e-6, Errc::kInvalidArgument,
                   "EV weights must sum to 1, got ", sum);
  }

  nlohmann::json ToJson() const { return {{"alpha", alpha}}; }
  static EvWeights FromJson(const nlohmann::json &j) {
    for (auto it = j.begin(); it != j.end(); ++it)
      CHANRANK_CHECK(it.key() == "alpha", Errc::kFormat, "unknown EV weights key '", it.key(), "'");
    EvWeights w{j.at("alpha").get<std::vector<double>>()};
    w.Validate();
    return w;
  }
};

/// M x B matrix of normalized envelope variances v_{b,i}: cube-root
/// compression, division by the time mean, variance over time, division by
/// the largest variance of the band across channels (0 for all-zero bands).
inline MatD EvFeatures(const std::vector<SubbandEnvelopes> &envs) {
  CHANRANK_CHECK(!envs.empty(), Errc::kInvalidArgument, "no channels to score");
  const int t = envs[0].num_frames();
  const auto bands = envs[0].env.cols();
  CHANRANK_CHECK(t >= 2, Errc::kTooShort, "envelope variance needs at least 2 frames, got ", t);
  const int m = static_cast<int>(envs.size());
  MatD v(m, bands);
  for (int i = 0; i < m; ++i) {
    const MatD &e = envs[static_cast<std::size_t>(i)].env;
    CHANRANK_CHECK(e.rows() == t && e.cols() == bands, Errc::kShapeMismatch,
                   "channel ", i, " envelopes are ", e.rows(), "x", e.cols(), ", expected ", t,
                   "x", bands);
    for (Eigen::Index b = 0; b < bands; ++b) {
      VecD c = e.col(b).array().max(0.0).pow(1.0 / 3.0);
      const double mean = c.mean();
      if (mean <= 0) {
        v(i, b) = 0;
        continue;
      }
      c /= mean;
      v(i, b) = (c.array() - c.mean()).square().mean();
    }
  }
  for (Eigen::Index b = 0; b < bands; ++b) {
    const double mx = v.col(b).maxCoeff();
    if (mx > 0) v.col(b) /= mx;
    else v.col(b).setZero();
  }
  return v;
}

inline ChannelScores EnvelopeVariance(const std::vector<SubbandEnvelopes> &envs,
                                      const EvWeights &weights) {
  weights.Validate();
  const MatD v = EvFeatures(envs);
  CHANRANK_CHECK(static_cast<Eigen::Index>(weights.alpha.size()) == v.cols(),
                 Errc::kShapeMismatch, "EV weights have ", weights.alpha.size(),
                 " bands, envelopes have ", v.cols());
  const VecD s = v * Eigen::Map<const VecD>(weights.alpha.data(), v.cols());
  return {std::vector<double>(s.data(), s.data() + s.size()), "ev"};
}

struct EvTrainOptions {
  double lr = 1e-2;
  int epochs = 100;
};

/// One training utterance: M x B features from EvFeatures plus the index of
/// the oracle-best channel.
struct EvExample {
  MatD features;
  int best = 0;
};

struct EvTrainResult {
  EvWeights weights;
  std::vector<double> loss_history;  // mean cross-entropy before each step, then final
};

/// Full-batch gradient descent on theta (alpha = softmax(theta), theta = 0 at
/// start) minimizing the mean cross-entropy between softmax(channel scores)
/// and the one-hot oracle-best channel.
inline EvTrainResult TrainEvWeights(const std::vector<EvExample> &data,
                                    const EvTrainOptions &opts = {}) {
  CHANRANK_CHECK(!data.empty(), Errc::kInvalidArgument, "EV training set is empty");
  CHANRANK_CHECK(opts.epochs >= 0 && opts.lr >= 0, Errc::kInvalidArgument,
                 "EV training needs epochs >= 0 and lr >= 0");
  const auto bands = data[0].features.cols();
  for (std::size_t u = 0; u < data.size(); ++u) {
    const auto &d = data[u];
    CHANRANK_CHECK(d.features.rows() >= 2, Errc::kInvalidArgument, "utterance ", u,
                   " has a single channel; EV training needs at least 2");
    CHANRANK_CHECK(d.features.cols() == bands, Errc::kShapeMismatch, "utterance ", u,
                   " has ", d.features.cols(), " bands, expected ", bands);
    CHANRANK_CHECK(d.best >= 0 && d.best < d.features.rows(), Errc::kInvalidArgument,
                   "utterance ", u, " best channel out of range");
  }
  std::vector<double> theta(static_cast<std::size_t>(bands), 0.0);
  EvTrainResult out;

  auto evaluate = [&](const std::vector<double> &alpha, VecD *grad_alpha) {
    Eigen::Map<const VecD> a(alpha.data(), bands);
    double loss = 0;
    if (grad_alpha) grad_alpha->setZero(bands);
    for (const auto &d : data) {
      const VecD s = d.features * a;
      const double mx = s.maxCoeff();
      const VecD e = (s.array() - mx).exp();
      const double z = e.sum();
      loss += -(s(d.best) - mx - std::log(z));
      if (grad_alpha) {
        VecD ds = e / z;
        ds(d.best) -= 1.0;
        *grad_alpha += d.features.transpose() * ds;
      }
    }
    const double inv = 1.0 / static_cast<double>(data.size());
    if (grad_alpha) *grad_alpha *= inv;
    return loss * inv;
  };

  for (int step = 0; step < opts.epochs; ++step) {
    const std::vector<double> alpha = Softmax(std::span<const double>(theta));
    VecD ga;
    out.loss_history.push_back(evaluate(alpha, &ga));
    // d/dtheta_b = alpha_b (g_b - sum_c alpha_c g_c)
    double mean_g = 0;
    for (Eigen::Index b = 0; b < bands; ++b) mean_g += alpha[static_cast<std::size_t>(b)] * ga(b);
    for (Eigen::Index b = 0; b < bands; ++b) {
      const auto k = static_cast<std::size_t>(b);
      theta[k] -= opts.lr * alpha[k] * (ga(b) - mean_g);
    }
  }
  out.weights = EvWeights::FromLogits(theta);
  out.loss_history.push_back(evaluate(out.weights.alpha, nullptr));
  return out;
}

// ---------------------------------------------------------------------------
// Cepstral distance.

/// Informed when `reference` is given, blind (frame-wise mean cepstrum of
/// the channels) otherwise. Channels are truncated to their shortest length;
/// a reference must cover at least that many frames.
inline ChannelScores CepstralDistance(const std::vector<CepstralFrames> &ceps,
                                      const std::optional<CepstralFrames> &reference = {}) {
  CHANRANK_CHECK(!ceps.empty(), Errc::kInvalidArgument, "no channels to score");
  const auto k = ceps[0].frames.cols();
  Eigen::Index t = ceps[0].frames.rows();
  for (const auto &c : ceps) {
    CHANRANK_CHECK(c.frames.cols() == k, Errc::kShapeMismatch,
                   "channels disagree on the cepstral order");
    t = std::min(t, c.frames.rows());
  }
  CHANRANK_CHECK(t >= 1, Errc::kTooShort, "cepstral distance needs at least one frame");
  MatD ref;
  if (reference) {
    CHANRANK_CHECK(reference->frames.cols() == k, Errc::kShapeMismatch,
                   "reference cepstral order ", reference->frames.cols(), " != ", k);
    CHANRANK_CHECK(reference->frames.rows() >= t, Errc::kShapeMismatch, "reference has ",
                   reference->frames.rows(), " frames, channels have ", t);
    ref = reference->frames.topRows(t);
  } else {
    ref = MatD::Zero(t, k);
    for (const auto &c : ceps) ref += c.frames.topRows(t);
    ref /= static_cast<double>(ceps.size());
  }
  const double scale = 10.0 / std::log(10.0);
  ChannelScores out{{}, reference ? "cd-informed" : "cd-blind"};
  for (const auto &c : ceps) {
    const VecD d = (ref - c.frames.topRows(t)).rowwise().squaredNorm();
    out.scores.push_back(-(scale * (2.0 * d.array()).sqrt()).mean());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Posterior entropy.

inline void ValidatePosteriors(const MatD &p) {
  CHANRANK_CHECK(p.rows() >= 1, Errc::kInvalidArgument, "posterior matrix has no frames");
  CHANRANK_CHECK(p.cols() >= 2, Errc::kInvalidArgument, "posteriors need at least 2 classes");
  for (Eigen::Index t = 0; t < p.rows(); ++t) {
    CHANRANK_CHECK(p.row(t).minCoeff() >= 0.0 && p.row(t).allFinite(), Errc::kNotStochastic,
                   "posterior row ", t, " has negative or non-finite entries");
    const double s = p.row(t).sum();
    CHANRANK_CHECK(std::abs(s - 1.0) <= 1e-6, Errc::kNotStochastic, "posterior row ", t,
                   " sums to ", s);
  }
}

/// -(1/T) sum_t H(p_t) in nats, per channel.
inline ChannelScores PosteriorEntropy(const std::vector<MatD> &posteriors) {
  ChannelScores out{{}, "entropy"};
  for (const auto &p : posteriors) {
    ValidatePosteriors(p);
    double h = 0;
    for (Eigen::Index t = 0; t < p.rows(); ++t)
      for (Eigen::Index c = 0; c < p.cols(); ++c)
        if (p(t, c) > 0) h -= p(t, c) * std::log(p(t, c));
    out.scores.push_back(-h / static_cast<double>(p.rows()));
  }
  return out;
}

/// Reads a T x C posterior matrix. Files ending in ".csv" hold one row per
/// line, comma separated; anything else is binary: int32 T, int32 C, then
/// T*C float32 values row-major, all little-endian.
inline MatD ReadPosteriors(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  CHANRANK_CHECK(in.good(), Errc::kIo, "cannot open posterior file '", path, "'");
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  if (csv) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line == "\r") continue;
      std::vector<double> row;
      std::stringstream ss(line);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        try {
          row.push_back(std::stod(cell));
        } catch (const std::exception &) {
          Fail(Errc::kFormat, path, ": bad number '", cell, "' on row ", rows.size());
        }
      }
      CHANRANK_CHECK(rows.empty() || row.size() == rows[0].size(), Errc::kFormat, path,
                     ": ragged row ", rows.size());
      rows.push_back(std::move(row));
    }
    CHANRANK_CHECK(!rows.empty(), Errc::kFormat, path, ": no rows");
    MatD p(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t t = 0; t < rows.size(); ++t)
      for (std::size_t c = 0; c < rows[t].size(); ++c)
        p(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = rows[t][c];
    return p;
  }
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHANRANK_CHECK(bytes.size() >= 8, Errc::kFormat, path, ": truncated header");
  std::int32_t t = 0, c = 0;
  std::memcpy(&t, bytes.data(), 4);
  std::memcpy(&c, bytes.data() + 4, 4);
  CHANRANK_CHECK(t > 0 && c > 0, Errc::kFormat, path, ": bad shape ", t, "x", c);
  const std::size_t n = static_cast<std::size_t>(t) * static_cast<std::size_t>(c);
  CHANRANK_CHECK(bytes.size() == 8 + 4 * n, Errc::kFormat, path, ": expected ", 8 + 4 * n,
                 " bytes, got ", bytes.size());
  MatD p(t, c);
  for (std::size_t i = 0; i < n; ++i) {
    float v;
    std::memcpy(&v, bytes.data() + 8 + 4 * i, 4);
    p(static_cast<Eigen::Index>(i / static_cast<std::size_t>(c)),
      static_cast<Eigen::Index>(i % static_cast<std::size_t>(c))) = v;
  }
  return p;
}

inline void WritePosteriorsBinary(const std::string &path, const MatD &p) {
  std::ofstream out(path, std::ios::binary);
  CHANRANK_CHECK(out.good(), Errc::kIo, "cannot write '", path, "'");
  const auto t = static_cast<std::int32_t>(p.rows()), c = static_cast<std::int32_t>(p.cols());
  out.write(reinterpret_cast<const char *>(&t), 4);
  out.write(reinterpret_cast<const char *>(&c), 4);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
      const auto v = static_cast<float>(p(i, j));
      out.write(reinterpret_cast<const char *>(&v), 4);
    }
}

// ---------------------------------------------------------------------------
// Random and closest-microphone selection.

/// Scores are a seeded random permutation of 0..M-1.
inline ChannelScores RandomSelect(int m, std::uint64_t seed) {
  CHANRANK_CHECK(m >= 1, Errc::kInvalidArgument, "random selection needs M >= 1");
  std::vector<double> s(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) s[static_cast<std::size_t>(i)] = i;
  auto rng = DerivedRng(seed, 0x52414e44);
  Shuffle(s.begin(), s.end(), rng);
  return {s, "random"};
}

/// score_i = -|mic_i - speaker|. Equal distances tie; rankings break ties by
/// the lower channel index.
inline ChannelScores ClosestSelect(const Eigen::Vector3d &speaker,
                                   const std::vector<Eigen::Vector3d> &mics) {
  ChannelScores out{{}, "closest"};
  for (const auto &m : mics) out.scores.push_back(-(m - speaker).norm());
  return out;
}

}  // namespace chanrank
