// tests/dsp_test.cpp

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

#include <gtest/gtest.h>

#include <cmath>

#include "chanrank/dsp.hpp"

namespace chanrank {
namespace {

Waveform Noise(std::size_t n, std::uint64_t seed, double scale = 0.1) {
  auto rng = DerivedRng(seed, 0);
  Waveform w;
  w.samples.resize(n);
  for (auto &x : w.samples) x = scale * StandardNormal(rng);
  return w;
}

TEST(LogMel, TwoSecondsGives198Frames) {
  Waveform w = Noise(32000, 1);
  LogMelFeatures lm = LogMel(w);
  // 1 + floor((32000 - 400) / 160)
  EXPECT_EQ(lm.num_frames(), 198);
  EXPECT_EQ(lm.frames.cols(), 40);
}

TEST(LogMel, SilenceHitsTheFloor) {
  Waveform w;
  w.samples.assign(16000, 0.0);
  LogMelFeatures lm = LogMel(w);
  const double floor = std::log(1e-10);
  for (int t = 0; t < lm.frames.rows(); ++t)
    for (int b = 0; b < 40; ++b) EXPECT_EQ(lm.frames(t, b), floor);
}

TEST(LogMel, SinePeaksInBandCentredNearest1kHz) {
  // Oracle: HTK mel centres computed here, independently of the library.
  auto mel = [](double f) { return 2595.0 * std::log10(1.0 + f / 700.0); };
  auto inv = [](double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); };
  int expected = -1;
  double best = 1e9;
  for (int m = 0; m < 40; ++m) {
    double centre = inv(mel(8000.0) * (m + 1) / 41.0);
    if (std::abs(centre - 1000.0) < best) {
      best = std::abs(centre - 1000.0);
      expected = m;
    }
  }
  Waveform w;
  w.samples.resize(16000);
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] = std::sin(2.0 * M_PI * 1000.0 * static_cast<double>(i) / 16000.0);
  LogMelFeatures lm = LogMel(w);
  for (int t = 0; t < lm.frames.rows(); ++t) {
    Eigen::Index arg;
    lm.frames.row(t).maxCoeff(&arg);
    EXPECT_EQ(arg, expected) << "frame " << t;
  }
}

TEST(LogMel, TooShortInputIsAnError) {
  Waveform w;
  w.samples.assign(399, 0.1);
  try {
    LogMel(w);
    FAIL() << "expected an error";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kTooShort);
  }
  EXPECT_NO_THROW(LogMel(Noise(400, 3)));
}

TEST(LogMel, RejectsNonFiniteAndWrongRate) {
  Waveform w = Noise(800, 4);
  w.samples[10] = std::nan("");
  EXPECT_THROW(LogMel(w), Error);
  Waveform v = Noise(800, 4);
  v.sample_rate = 8000;
  EXPECT_THROW(LogMel(v), Error);
}

TEST(LogMel, FrameCountFormulaProperty) {
  auto rng = DerivedRng(11, 0);
  for (int trial = 0; trial < 200; ++trial) {
    auto n = static_cast<std::size_t>(UniformInt(rng, 400, 20000));
    Waveform w = Noise(n, static_cast<std::uint64_t>(trial));
    LogMelFeatures lm = LogMel(w);
    EXPECT_EQ(lm.num_frames(), 1 + static_cast<int>((n - 400) / 160)) << n;
    EXPECT_GE(lm.frames.minCoeff(), std::log(1e-10));
    EXPECT_TRUE(lm.frames.allFinite());
  }
}

TEST(LogMel, Deterministic) {
  Waveform w = Noise(9000, 5);
  MatD a = LogMel(w).frames, b = LogMel(w).frames;
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * a.size()));
}

TEST(MelFilterbank, EveryBandHasSupportAndUnitArea) {
  MatD fb = MelFilterbank();
  const double df = 16000.0 / 512;
  for (int m = 0; m < 40; ++m) {
    EXPECT_GT(fb.row(m).maxCoeff(), 0.0) << m;
    // Riemann sum of a unit-area triangle; coarse at low bands.
    EXPECT_NEAR(fb.row(m).sum() * df, 1.0, 0.5) << m;
  }
}

TEST(Cepstra, FlatLogMelGivesZeroCoefficients) {
  LogMelFeatures lm{MatD::Constant(5, 40, -3.25)};
  CepstralFrames c = CepstraFromLogMel(lm);
  EXPECT_EQ(c.frames.cols(), 13);
  EXPECT_LT(c.frames.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Cepstra, GainInvariant) {
  Waveform w = Noise(16000, 6);
  CepstralFrames ref = Cepstra(w);
  for (double alpha : {0.5, 2.0, 10.0}) {
    Waveform s = w;
    for (auto &x : s.samples) x *= alpha;
    CepstralFrames c = Cepstra(s);
    EXPECT_LT((c.frames - ref.frames).cwiseAbs().maxCoeff(), 1e-6) << alpha;
  }
}

TEST(Cepstra, OrthonormalDctRoundTrip) {
  auto rng = DerivedRng(7, 0);
  VecD x(40);
  for (int i = 0; i < 40; ++i) x(i) = StandardNormal(rng) * 5.0;
  MatD d = DctMatrix(40);
  VecD back = d.transpose() * (d * x);
  EXPECT_LT((back - x).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Cepstra, OrderValidated) {
  LogMelFeatures lm{MatD::Zero(3, 40)};
  EXPECT_THROW(CepstraFromLogMel(lm, 0), Error);
  EXPECT_THROW(CepstraFromLogMel(lm, 40), Error);
}

TEST(Envelopes, SilenceIsZero) {
  Waveform w;
  w.samples.assign(4000, 0.0);
  EXPECT_EQ(Envelopes(w).env.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Envelopes, ConsistentWithLogMel) {
  Waveform w = Noise(8000, 8);
  w.samples[100] = 0.0;
  MatD env = Envelopes(w).env;
  MatD lm = LogMel(w).frames;
  for (int t = 0; t < env.rows(); ++t)
    for (int b = 0; b < 40; ++b) {
      double floored = std::max(env(t, b), 1e-10);
      EXPECT_NEAR(std::exp(lm(t, b)), floored, 1e-9 * floored);
    }
}

TEST(Envelopes, WhiteNoiseIsPositiveEverywhere) {
  SubbandEnvelopes e = Envelopes(Noise(16000, 9));
  EXPECT_GT(e.env.minCoeff(), 0.0);
}

TEST(Wav, Pcm16AndFloatRoundTrip) {
  Waveform w = Noise(1000, 10, 0.3);
  DecodedWav f = DecodeWav(EncodeWav(w.samples, 16000, WavEncoding::kFloat32));
  ASSERT_EQ(f.samples.size(), w.samples.size());
  EXPECT_EQ(f.sample_rate, 16000);
  for (std::size_t i = 0; i < w.size(); ++i)
    EXPECT_EQ(f.samples[i], static_cast<double>(static_cast<float>(w.samples[i])));
  DecodedWav p = DecodeWav(EncodeWav(w.samples, 16000, WavEncoding::kPcm16));
  for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(p.samples[i], w.samples[i], 1.0 / 32768);
  EXPECT_THROW(DecodeWav("RIFFxxxxWAVE"), Error);
}

}  // namespace
}  // namespace chanrank
