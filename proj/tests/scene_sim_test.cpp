// tests/scene_sim_test.cpp

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

#include "chanrank/eval.hpp"
#include "chanrank/scene_sim.hpp"

namespace chanrank {
namespace {

bool SameScene(const Scene &a, const Scene &b) {
  if (a.room.length != b.room.length || a.room.width != b.room.width ||
      a.room.t60 != b.room.t60 || a.placement.speaker != b.placement.speaker ||
      a.placement.noise != b.placement.noise)
    return false;
  return a.placement.mics == b.placement.mics && a.placement.orientations == b.placement.orientations;
}

TEST(SampleScene, Deterministic) {
  EXPECT_TRUE(SameScene(SampleScene(42), SampleScene(42)));
  EXPECT_FALSE(SameScene(SampleScene(42), SampleScene(43)));
}

TEST(SampleScene, ConstraintsHoldOverManyScenes) {
  SceneConfig cfg;
  double lo = 1e9, hi = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Scene s = SampleScene(seed, cfg);
    const auto &p = s.placement;
    ASSERT_EQ(p.mics.size(), 8u);
    EXPECT_TRUE(PlacementValid(s.room, p, cfg));
    EXPECT_GE(s.room.WallDistance(p.speaker), 0.5);
    for (std::size_t i = 0; i < 8; ++i) {
      EXPECT_TRUE(s.room.Contains(p.mics[i]));
      EXPECT_GE((p.mics[i] - p.speaker).norm(), 0.5);
      EXPECT_NEAR(p.orientations[i].norm(), 1.0, 1e-12);
      for (std::size_t j = 0; j < i; ++j) EXPECT_GE((p.mics[i] - p.mics[j]).norm(), 0.5);
    }
    EXPECT_EQ(s.room.height, 2.7);
    EXPECT_GE(s.room.t60, 0.2);
    EXPECT_LE(s.room.t60, 0.6);
    lo = std::min(lo, s.room.Area());
    hi = std::max(hi, s.room.Area());
  }
  EXPECT_GE(lo, 10.0);
  EXPECT_LE(hi, 60.0);
}

TEST(SampleScene, RetryCapReportsFailure) {
  SceneConfig cfg;
  cfg.min_area = cfg.max_area = 10.0;
  cfg.num_mics = 200;  // cannot fit at 0.5 m spacing
  cfg.max_tries = 50;
  try {
    SampleScene(1, cfg);
    FAIL() << "expected a constraint failure";
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kConstraintFailure);
  }
}

TEST(SceneConfig, JsonRejectsUnknownKeys) {
  SceneConfig c;
  c.max_order = 7;
  nlohmann::json j = c;
  EXPECT_EQ(j.get<SceneConfig>().max_order, 7);
  j["bogus"] = 1;
  EXPECT_THROW(j.get<SceneConfig>(), Error);
}

// ------------------------------------------------------------- RIR

const RoomSpec kRoom{6.0, 5.0, 2.7, 0.4};

TEST(ImageSourceRir, AnechoicDirectPath) {
  Eigen::Vector3d src(1.0, 1.5, 1.2), mic(4.0, 3.0, 1.6), axis(0.3, 0.9, -0.2);
  RirOptions o;
  o.max_order = 0;
  o.absorption = 1.0;
  Rir r = ImageSourceRir(kRoom, src, mic, axis.normalized(), o);
  const double d = (src - mic).norm();
  const long delay = std::lround(d / 343.0 * 16000.0);
  ASSERT_EQ(static_cast<long>(r.taps.size()), delay + 1);
  const double g = 0.5 * (1.0 + axis.normalized().dot((src - mic) / d));
  EXPECT_NEAR(r.taps.back(), g / d, 1e-15);
  for (long i = 0; i < delay; ++i) EXPECT_EQ(r.taps[static_cast<std::size_t>(i)], 0.0);
}

TEST(ImageSourceRir, CardioidNull) {
  Eigen::Vector3d mic(3, 2.5, 1.35), src(4, 2.5, 1.35);
  RirOptions o;
  o.max_order = 0;
  Rir on = ImageSourceRir(kRoom, src, mic, {1, 0, 0}, o);
  Rir off = ImageSourceRir(kRoom, src, mic, {-1, 0, 0}, o);
  EXPECT_NEAR(on.taps.back(), 1.0, 1e-15);
  EXPECT_EQ(off.taps.back(), 0.0);
}

TEST(ImageSourceRir, SchroederT60) {
  Rir r = ImageSourceRir(kRoom, {2, 2, 1.5}, {4, 3, 1.2}, {1, 0, 0});
  const double t60 = EstimateT60(r.taps);
  EXPECT_GT(t60, 0.4 * 0.7);
  EXPECT_LT(t60, 0.4 * 1.3);
}

TEST(ImageSourceRir, FirstTapAtDirectDelay) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Scene s = SampleScene(seed);
    const auto &p = s.placement;
    Rir r = ImageSourceRir(s.room, p.speaker, p.mics[0], p.orientations[0]);
    std::size_t first = 0;
    while (first < r.taps.size() && r.taps[first] == 0.0) ++first;
    const double direct = (p.speaker - p.mics[0]).norm() / 343.0 * 16000.0;
    // A mic facing away from the speaker nulls the direct path; the first
    // arrival can then only come later.
    EXPECT_GE(static_cast<double>(first), direct - 1.0);
    for (double t : r.taps) EXPECT_TRUE(std::isfinite(t));
  }
}

TEST(ImageSourceRir, RejectsOutsidePositions) {
  try {
    ImageSourceRir(kRoom, {7, 1, 1}, {1, 1, 1}, {1, 0, 0});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kOutsideRoom);
  }
  EXPECT_THROW(ImageSourceRir(kRoom, {1, 1, 1}, {1, 1, -0.1}, {1, 0, 0}), Error);
}

// ------------------------------------------------------- Rendering

TEST(RenderScene, AnechoicNoiseFreeIsScaledDelayedClean) {
  SceneConfig cfg;
  cfg.anechoic = true;
  cfg.noise = false;
  Scene scene = SampleScene(3, cfg);
  Waveform clean = SpeechLikeSource(3, 8000);
  SimulatedUtterance u = RenderScene(clean, Waveform{}, scene, cfg, 3);
  ASSERT_EQ(u.channels.size(), 8u);
  EXPECT_FALSE(u.snr_db.has_value());
  for (std::size_t i = 0; i < 8; ++i) {
    const auto &p = scene.placement;
    const double d = (p.speaker - p.mics[i]).norm();
    const long delay = std::lround(d / 343.0 * 16000.0);
    const double g = CardioidGain(p.orientations[i], p.speaker - p.mics[i]) / d;
    ASSERT_EQ(u.channels[i].size(), clean.size());
    for (std::size_t t = 0; t < clean.size(); ++t) {
      const double expect = t >= static_cast<std::size_t>(delay) ? g * clean.samples[t - static_cast<std::size_t>(delay)] : 0.0;
      ASSERT_NEAR(u.channels[i].samples[t], expect, 1e-12);
    }
  }
}

TEST(RenderScene, NoiseHitsTargetSnrAtClosestMic) {
  SceneConfig cfg;
  cfg.max_order = 4;
  Scene scene = SampleScene(5, cfg);
  Waveform clean = SpeechLikeSource(5, 16000);
  Waveform noise = ColoredNoiseSource(5, 16000);
  SimulatedUtterance u = RenderScene(clean, noise, scene, cfg, 5);
  ASSERT_TRUE(u.snr_db.has_value());
  EXPECT_GE(*u.snr_db, 5.0);
  EXPECT_LE(*u.snr_db, 20.0);
  // Recompute the closest-mic SNR from the two rendered components.
  SceneConfig quiet = cfg;
  quiet.noise = false;
  SimulatedUtterance dry = RenderScene(clean, noise, scene, quiet, 5);
  const std::size_t c = ArgMax(ClosestSelect(scene.placement.speaker, scene.placement.mics).scores);
  double es = 0, en = 0;
  for (std::size_t t = 0; t < clean.size(); ++t) {
    const double s = dry.channels[c].samples[t];
    const double n = u.channels[c].samples[t] - s;
    es += s * s;
    en += n * n;
  }
  EXPECT_NEAR(10.0 * std::log10(es / en), *u.snr_db, 1e-6);
}

TEST(RenderScene, Deterministic) {
  SceneConfig cfg;
  cfg.duration_s = 0.5;
  SimulatedUtterance a = SimulateUtterance(11, cfg), b = SimulateUtterance(11, cfg);
  ASSERT_EQ(a.channels.size(), b.channels.size());
  for (std::size_t i = 0; i < a.channels.size(); ++i)
    EXPECT_EQ(a.channels[i].samples, b.channels[i].samples);
  EXPECT_EQ(a.relevance, b.relevance);
  EXPECT_EQ(a.clean_ref.samples, b.clean_ref.samples);
}

TEST(RenderScene, SilentCleanIsAnError) {
  SceneConfig cfg;
  try {
    RenderScene(Waveform{std::vector<double>(1000, 0.0)}, Waveform{}, SampleScene(1), cfg, 1);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::kSilentInput);
  }
}

TEST(RenderScene, EnergyFiniteAndNonzero) {
  SceneConfig cfg;
  cfg.duration_s = 0.5;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SimulatedUtterance u = SimulateUtterance(seed, cfg);
    for (const auto &c : u.channels) {
      double e = 0;
      for (double x : c.samples) e += x * x;
      EXPECT_TRUE(std::isfinite(e));
      EXPECT_GT(e, 0.0);
    }
    for (double w : u.relevance) {
      EXPECT_GT(w, 0.0);
      EXPECT_LT(w, 1.0);
    }
  }
}

// ------------------------------------------------------- Relevance

TEST(ProxyRelevance, ClosedForms) {
  Waveform s = SpeechLikeSource(1, 8000);
  Waveform zero{std::vector<double>(8000, 0.0)};
  auto rng = DerivedRng(2, 0);
  Waveform noise;
  for (int i = 0; i < 8000; ++i) noise.samples.push_back(0.05 * StandardNormal(rng));
  auto w = ProxyRelevance({s, zero, noise}, s);
  EXPECT_NEAR(w[0], 1.0 / (1.0 + std::exp(-6.0)), 1e-12);
  EXPECT_NEAR(w[0], 0.9975, 1e-4);
  EXPECT_EQ(w[1], 0.0);
  EXPECT_LE(w[2], 0.5);
}

TEST(ProxyRelevance, MonotoneInSdr) {
  Waveform s = SpeechLikeSource(3, 8000);
  auto rng = DerivedRng(4, 0);
  std::vector<Waveform> ch;
  for (double level : {0.001, 0.01, 0.03, 0.1}) {
    Waveform x = s;
    for (double &v : x.samples) v += level * StandardNormal(rng);
    ch.push_back(x);
  }
  std::vector<double> sdr;
  auto w = ProxyRelevance(ch, s, &sdr);
  for (std::size_t i = 1; i < ch.size(); ++i) {
    EXPECT_LT(sdr[i], sdr[i - 1]);
    EXPECT_LT(w[i], w[i - 1]);
  }
}

TEST(ProxyRelevance, CloserMicsRankBetterOnAverage) {
  SceneConfig cfg;
  cfg.noise = false;
  cfg.duration_s = 0.5;
  cfg.max_order = 10;
  double acc = 0;
  const int n = 200;
  for (int seed = 0; seed < n; ++seed) {
    SimulatedUtterance u = SimulateUtterance(static_cast<std::uint64_t>(seed), cfg);
    std::vector<double> dist;
    for (const auto &m : u.scene.placement.mics) dist.push_back((m - u.scene.placement.speaker).norm());
    acc += Spearman(dist, u.relevance);
  }
  EXPECT_LT(acc / n, 0.0);
}

TEST(Sources, DeterministicAndSpeechShaped) {
  EXPECT_EQ(SpeechLikeSource(9, 4000).samples, SpeechLikeSource(9, 4000).samples);
  EXPECT_NE(SpeechLikeSource(9, 4000).samples, SpeechLikeSource(10, 4000).samples);
  EXPECT_EQ(ColoredNoiseSource(9, 4000).samples, ColoredNoiseSource(9, 4000).samples);
  // Syllabic modulation: frame energies vary far more than for stationary noise.
  auto spread = [](const Waveform &w) {
    MatD e = Envelopes(w).env;
    VecD frame = e.rowwise().sum();
    return frame.maxCoeff() / std::max(frame.minCoeff(), 1e-12);
  };
  EXPECT_GT(spread(SpeechLikeSource(1, 32000)), 10.0 * spread(ColoredNoiseSource(1, 32000)));
}

}  // namespace
}  // namespace chanrank
