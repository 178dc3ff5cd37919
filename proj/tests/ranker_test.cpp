// tests/ranker_test.cpp

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

#include <algorithm>
#include <numeric>

#include "chanrank/gradcheck.hpp"
#include "chanrank/ranker.hpp"

namespace chanrank {
namespace {

template <typename T>
Mat<T> RandomChunk(std::mt19937_64 &rng, double lo = -3, double hi = 3) {
  Mat<T> m(200, 40);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(UniformDouble(rng, lo, hi));
  return m;
}

std::vector<std::uint8_t> FullMask() { return std::vector<std::uint8_t>(200, 1); }

// Freshly initialized biases are all zero, which parks every PReLU input of a
// padded frame exactly on the kink. Jitter them so finite differences probe a
// differentiable point.
void Jitter(RankerModel<double> &m, std::uint64_t seed) {
  auto rng = DerivedRng(seed, 99);
  for (const auto &t : m.layout.tensors)
    if (t.name.find("bias") != std::string::npos || t.name.find("gain") != std::string::npos)
      for (std::size_t i = 0; i < t.size(); ++i) m.params[t.offset + i] += UniformDouble(rng, -0.1, 0.1);
}

// Step for finite differences through the full network: the error from
// crossing PReLU kinks grows linearly with h.
constexpr double kNetStep = 1e-6;

TEST(RankerConfig, DefaultCensusNear266k) {
  Census c = ParameterCensus(RankerConfig{});
  EXPECT_GE(c.total, 266000 * 0.9);
  EXPECT_LE(c.total, 266000 * 1.1);
  // Documented breakdown: norm 2*40, projection 40*64+64, 15 blocks of
  // (64*128+128) + 1 + 2*128 + (128*3+128) + 1 + 2*128 + (128*64+64),
  // output 64+1.
  const std::size_t block = (64 * 128 + 128) + 1 + 256 + (128 * 3 + 128) + 1 + 256 + (128 * 64 + 64);
  EXPECT_EQ(block, 17602u);
  EXPECT_EQ(c.total, 80 + (40 * 64 + 64) + 15 * block + 65);
  EXPECT_EQ(c.total, 266799u);
  EXPECT_EQ(c.by_layer.at("blocks.conv1.weight"), 15u * 128 * 64);
  EXPECT_EQ(c.by_layer.at("blocks.prelu1.slope"), 15u);
  EXPECT_EQ(BuildRanker<float>(RankerConfig{}, 1).NumParams(), c.total);
}

TEST(RankerConfig, DilationPattern) {
  RankerConfig c;
  EXPECT_EQ(c.Dilations(), (std::vector<int>{1, 2, 4, 8, 16}));
  RankerLayout l(c);
  ASSERT_EQ(l.blocks.size(), 15u);
  for (std::size_t r = 0; r < 15; ++r) EXPECT_EQ(l.blocks[r].dilation, 1 << (r % 5));
}

TEST(RankerConfig, InvalidDimensionsRejected) {
  RankerConfig c;
  c.kernel = 4;
  EXPECT_THROW(BuildRanker<float>(c, 0), Error);
  c = {};
  c.input_proj = 32;
  EXPECT_THROW(BuildRanker<float>(c, 0), Error);
  c = {};
  c.chunk_frames = 0;
  EXPECT_THROW(BuildRanker<float>(c, 0), Error);
}

TEST(RankerConfig, JsonRoundTripAndUnknownKeys) {
  RankerConfig c;
  c.hidden = 32;
  nlohmann::json j = c;
  EXPECT_EQ(j.get<RankerConfig>(), c);
  j["colour"] = 3;
  EXPECT_THROW(j.get<RankerConfig>(), Error);
}

TEST(BuildRanker, DeterministicPerSeed) {
  auto a = BuildRanker<float>(RankerConfig{}, 42);
  auto b = BuildRanker<float>(RankerConfig{}, 42);
  auto c = BuildRanker<float>(RankerConfig{}, 43);
  EXPECT_EQ(a.params, b.params);
  EXPECT_NE(a.params, c.params);
  for (float v : a.params) EXPECT_TRUE(std::isfinite(v));
  const auto &gain = a.Tensor("blocks.3.norm2.gain");
  EXPECT_EQ(a.params[gain.offset], 1.0f);
  EXPECT_EQ(a.params[a.Tensor("blocks.0.prelu1.slope").offset], 0.25f);
  EXPECT_EQ(a.params[a.Tensor("output_proj.bias").offset], 0.0f);
}

TEST(ForwardChunk, ZeroChunkScoresZeroAtInit) {
  auto m = BuildRanker<double>(RankerConfig{}, 3);
  EXPECT_EQ(ForwardChunk(m, Mat<double>(Mat<double>::Zero(200, 40)), FullMask()), 0.0);
}

TEST(ForwardChunk, ScoreIsOutputBiasWhenOutputWeightsAreZero) {
  auto m = BuildRanker<double>(RankerConfig{}, 3);
  const auto &w = m.Tensor("output_proj.weight");
  std::fill_n(m.params.begin() + static_cast<long>(w.offset), w.size(), 0.0);
  m.params[m.Tensor("output_proj.bias").offset] = 0.0;
  auto rng = DerivedRng(1, 0);
  EXPECT_EQ(ForwardChunk(m, RandomChunk<double>(rng), FullMask()), 0.0);
}

TEST(ForwardChunk, FiniteOnWideInputs) {
  auto m = BuildRanker<float>(RankerConfig{}, 5);
  auto rng = DerivedRng(2, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    float s = ForwardChunk(m, RandomChunk<float>(rng, -10, 10), FullMask());
    ASSERT_TRUE(std::isfinite(s)) << trial;
  }
}

TEST(ForwardChunk, DeterministicAndShapeChecked) {
  auto m = BuildRanker<float>(RankerConfig{}, 5);
  auto rng = DerivedRng(3, 0);
  Mat<float> x = RandomChunk<float>(rng);
  EXPECT_EQ(ForwardChunk(m, x, FullMask()), ForwardChunk(m, Mat<float>(x), FullMask()));
  EXPECT_THROW(ForwardChunk(m, Mat<float>(Mat<float>::Zero(199, 40)), FullMask()), Error);
  EXPECT_THROW(ForwardChunk(m, Mat<float>(Mat<float>::Zero(200, 39)), FullMask()), Error);
}

TEST(BackwardChunk, ZeroUpstreamGivesZeroGradients) {
  auto m = BuildRanker<double>(RankerConfig{}, 6);
  auto rng = DerivedRng(4, 0);
  ForwardCache<double> cache;
  ForwardChunk(m, RandomChunk<double>(rng), FullMask(), &cache);
  std::vector<double> grad(m.NumParams(), 0.0);
  BackwardChunk(m, cache, 0.0, grad);
  EXPECT_TRUE(std::all_of(grad.begin(), grad.end(), [](double g) { return g == 0.0; }));
}

// Every tensor gets at least one probe, plus a random subset.
TEST(BackwardChunk, ParameterGradientsMatchFiniteDifferences) {
  auto m = BuildRanker<double>(RankerConfig{}, 7);
  Jitter(m, 7);
  auto rng = DerivedRng(5, 0);
  Mat<double> x = RandomChunk<double>(rng);
  std::vector<std::uint8_t> mask = FullMask();
  std::fill(mask.begin() + 150, mask.end(), 0);

  ForwardCache<double> cache;
  ForwardChunk(m, x, mask, &cache);
  std::vector<double> grad(m.NumParams(), 0.0);
  BackwardChunk(m, cache, 1.0, grad);

  std::vector<std::size_t> probes;
  for (const auto &t : m.layout.tensors)
    probes.push_back(t.offset + static_cast<std::size_t>(UniformInt(rng, 0, static_cast<long>(t.size()) - 1)));
  for (int i = 0; i < 10; ++i)
    probes.push_back(static_cast<std::size_t>(UniformInt(rng, 0, static_cast<long>(m.NumParams()) - 1)));

  double worst = 0;
  for (std::size_t idx : probes) {
    double fd = CentralDifference([&](double v) { m.params[idx] = v; },
                                  [&] { return ForwardChunk(m, x, mask); }, m.params[idx], kNetStep);
    double err = RelativeError(grad[idx], fd);
    worst = std::max(worst, err);
    EXPECT_LT(err, 1e-4) << "param " << idx << " analytic " << grad[idx] << " fd " << fd;
  }
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(BackwardChunk, InputGradientMatchesAndIgnoresPadding) {
  auto m = BuildRanker<double>(RankerConfig{}, 8);
  Jitter(m, 8);
  auto rng = DerivedRng(6, 0);
  Mat<double> x = RandomChunk<double>(rng);
  std::vector<std::uint8_t> mask = FullMask();
  std::fill(mask.begin() + 120, mask.end(), 0);
  ForwardCache<double> cache;
  ForwardChunk(m, x, mask, &cache);
  std::vector<double> grad(m.NumParams(), 0.0);
  Mat<double> dx;
  BackwardChunk(m, cache, 1.0, grad, &dx);
  ASSERT_EQ(dx.rows(), 200);
  ASSERT_EQ(dx.cols(), 40);
  EXPECT_EQ(dx.bottomRows(80).cwiseAbs().maxCoeff(), 0.0);
  for (int trial = 0; trial < 10; ++trial) {
    int t = static_cast<int>(UniformInt(rng, 0, 119));
    int b = static_cast<int>(UniformInt(rng, 0, 39));
    double fd = CentralDifference([&](double v) { x(t, b) = v; },
                                  [&] { return ForwardChunk(m, x, mask); }, x(t, b), kNetStep);
    EXPECT_LT(RelativeError(dx(t, b), fd), 1e-4);
  }
}

TEST(Chunking, Examples) {
  auto train = ChunkSpans(450, ChunkMode::kTrain);
  EXPECT_EQ(train, (std::vector<ChunkSpan>{{0, 200}, {200, 200}, {400, 50}}));
  auto infer = ChunkSpans(450, ChunkMode::kInfer);
  ASSERT_EQ(infer.size(), 6u);
  for (int i = 0; i < 6; ++i) EXPECT_EQ(infer[i], (ChunkSpan{50 * i, 200}));
  for (ChunkMode mode : {ChunkMode::kTrain, ChunkMode::kInfer})
    EXPECT_EQ(ChunkSpans(120, mode), (std::vector<ChunkSpan>{{0, 120}}));
  EXPECT_THROW(ChunkSpans(0, ChunkMode::kTrain), Error);
}

TEST(Chunking, CountFormulaAndCoverageProperty) {
  auto rng = DerivedRng(7, 0);
  for (int trial = 0; trial < 1000; ++trial) {
    int t = static_cast<int>(UniformInt(rng, 1, 5000));
    auto train = ChunkSpans(t, ChunkMode::kTrain);
    EXPECT_EQ(static_cast<int>(train.size()), (t + 199) / 200);
    int covered = 0;
    for (const auto &s : train) covered += s.valid;
    EXPECT_EQ(covered, t);

    auto infer = ChunkSpans(t, ChunkMode::kInfer);
    EXPECT_EQ(static_cast<int>(infer.size()), std::max(1, (std::max(t, 200) - 200) / 50 + 1));
    // A lone chunk of a 201..249 frame utterance sits at the tail.
    if (infer.size() > 1 || t <= 200) {
      EXPECT_EQ(infer.front().start, 0);
    }
    EXPECT_EQ(infer.back().start + infer.back().valid, t);
    std::vector<bool> seen(static_cast<std::size_t>(t), false);
    for (std::size_t i = 0; i < infer.size(); ++i) {
      if (i + 1 < infer.size()) {
        EXPECT_EQ(infer[i].start, 50 * static_cast<int>(i));
      }
      for (int k = 0; k < infer[i].valid; ++k) seen[static_cast<std::size_t>(infer[i].start + k)] = true;
    }
    if (infer.size() > 1 || t <= 200) {
      EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) << t;
    }
  }
}

TEST(Chunking, ExtractPadsAndMasks) {
  LogMelFeatures f{MatD::Constant(120, 40, 2.5)};
  auto batch = ChunkUtterance<float>(f, ChunkMode::kInfer, RankerConfig{}, 3, 5);
  ASSERT_EQ(batch.chunks.size(), 1u);
  EXPECT_EQ(batch.utterance_map[0], std::make_pair(3, 5));
  EXPECT_EQ(std::accumulate(batch.pad_mask[0].begin(), batch.pad_mask[0].end(), 0), 120);
  EXPECT_EQ(batch.chunks[0](119, 7), 2.5f);
  EXPECT_EQ(batch.chunks[0](120, 7), 0.0f);
}

TEST(ScoreUtterance, ChannelContracts) {
  auto m = BuildRanker<float>(RankerConfig{}, 9);
  auto rng = DerivedRng(8, 0);
  std::vector<LogMelFeatures> chans;
  for (int i = 0; i < 3; ++i) {
    MatD f(180, 40);
    for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] = UniformDouble(rng, -5, 2);
    chans.push_back({f});
  }
  // Single chunk: utterance score is the chunk score.
  std::vector<std::uint8_t> mask;
  Mat<float> c0 = ExtractChunk<float>(chans[0].frames, {0, 180}, m.config, &mask);
  ChannelScores s = ScoreUtterance(m, chans);
  EXPECT_EQ(s.scores[0], static_cast<double>(ForwardChunk(m, c0, mask)));

  // Duplicates and permutations.
  std::vector<LogMelFeatures> dup{chans[1], chans[0], chans[1], chans[2]};
  ChannelScores d = ScoreUtterance(m, dup);
  EXPECT_EQ(d.scores[0], d.scores[2]);
  EXPECT_EQ(d.scores[1], s.scores[0]);
  EXPECT_EQ(d.scores[3], s.scores[2]);

  EXPECT_THROW(ScoreUtterance(m, {}), Error);
  EXPECT_THROW(ScoreUtterance(m, {LogMelFeatures{MatD::Zero(10, 20)}}), Error);
}

TEST(ScoreUtterance, LongUtteranceAveragesInferenceChunks) {
  auto m = BuildRanker<float>(RankerConfig{}, 10);
  auto rng = DerivedRng(9, 0);
  MatD f(460, 40);
  for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] = UniformDouble(rng, -5, 2);
  double expected = 0;
  auto spans = ChunkSpans(460, ChunkMode::kInfer);
  for (const auto &s : spans) {
    std::vector<std::uint8_t> mask;
    expected += ForwardChunk(m, ExtractChunk<float>(f, s, m.config, &mask), mask);
  }
  expected /= static_cast<double>(spans.size());
  EXPECT_DOUBLE_EQ(ScoreUtterance(m, {LogMelFeatures{f}}).scores[0], expected);
}

}  // namespace
}  // namespace chanrank
