// chanrank/verify.hpp

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

// Fast self-checks: end-to-end gradients, loss identities, chunk formulas and
// the parameter census. Shared by `chanrank verify` and the acceptance suite.

#pragma once

#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "chanrank/gradcheck.hpp"
#include "chanrank/ltr_losses.hpp"
#include "chanrank/ranker.hpp"
#include "chanrank/trainer.hpp"

namespace chanrank {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct VerifyOptions {
  int probes = 50;           // parameters probed per loss
  double fd_step = 1e-6;     // small: PReLU kinks put an O(h) error on larger steps
  double tol_double = 1e-5;  // relative error, double precision
  double tol_single = 1e-3;  // relative error, single-precision analytic gradient
  // Test hook: added to every analytic gradient before comparison, to prove
  // the check can fail.
  double gradient_fault = 0.0;
  std::uint64_t seed = 2024;
};

namespace verify_detail {

inline std::string Sci(double v) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(2) << v;
  return os.str();
}

inline double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Freshly built models have all biases at zero, which puts every padded
/// frame exactly on a PReLU kink; shift biases and gains off it.
inline void Jitter(RankerModel<double> &m, std::uint64_t seed) {
  auto rng = DerivedRng(seed, 0x4a495454);
  for (const auto &t : m.layout.tensors)
    if (t.name.find("bias") != std::string::npos || t.name.find("gain") != std::string::npos)
      for (std::size_t i = 0; i < t.size(); ++i)
        m.params[t.offset + i] += UniformDouble(rng, -0.1, 0.1);
}

/// One list of four channels, one of which is partly padding.
inline PreparedList RandomList(std::uint64_t seed, const RankerConfig &c) {
  auto rng = DerivedRng(seed, 0x4c495354);
  PreparedList p;
  const double labels[] = {0.8, 0.3, 0.55, 0.1};
  for (int ch = 0; ch < 4; ++ch) {
    MatF x(c.chunk_frames, c.n_mels);
    for (Eigen::Index k = 0; k < x.size(); ++k)
      x.data()[k] = static_cast<float>(UniformDouble(rng, -4.0, 2.0));
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(c.chunk_frames), 1);
    if (ch == 2) std::fill(mask.begin() + c.chunk_frames / 2, mask.end(), 0);
    p.chunks.push_back(x);
    p.masks.push_back(mask);
    p.relevance.push_back(labels[ch]);
  }
  return p;
}

}  // namespace verify_detail

/// Loss-through-network gradient check for one strategy, in double and with a
/// float analytic gradient.
inline std::vector<CheckResult> GradientCheck(Strategy strategy, const VerifyOptions &o = {}) {
  using namespace verify_detail;
  const auto t0 = std::chrono::steady_clock::now();
  const RankerConfig rc;
  RankerModel<double> m = BuildRanker<double>(rc, o.seed);
  Jitter(m, o.seed);
  const PreparedList list = RandomList(o.seed, rc);
  const LossOptions lo;

  std::vector<double> grad(m.NumParams(), 0.0);
  ListLossAndGradient(m, list, strategy, lo, 1.0, grad);
  RankerModel<float> mf = m.Cast<float>();
  std::vector<float> grad_f(m.NumParams(), 0.0f);
  ListLossAndGradient(mf, list, strategy, lo, 1.0f, grad_f);

  auto rng = DerivedRng(o.seed, 0x50524f42);
  std::vector<std::size_t> probes;
  for (int i = 0; i < o.probes; ++i)
    probes.push_back(static_cast<std::size_t>(
        UniformInt(rng, 0, static_cast<std::int64_t>(m.NumParams()) - 1)));

  auto loss = [&] { return ListLoss(m, list, strategy, lo); };
  double worst_d = 0, worst_f = 0;
  for (std::size_t idx : probes) {
    const double fd = CentralDifference([&](double v) { m.params[idx] = v; }, loss,
                                        m.params[idx], o.fd_step);
    worst_d = std::max(worst_d, RelativeError(grad[idx] + o.gradient_fault, fd));
    worst_f = std::max(worst_f, RelativeError(grad_f[idx] + o.gradient_fault, fd));
  }
  const double secs = Seconds(t0);
  std::ostringstream dd, df;
  dd << o.probes << " params, worst relative error " << worst_d << " (tol " << o.tol_double
     << "), " << secs << " s";
  df << o.probes << " params, worst relative error " << worst_f << " (tol " << o.tol_single << ")";
  const std::string base = std::string("gradcheck.") + StrategyName(strategy);
  return {{base + ".double", worst_d < o.tol_double, dd.str()},
          {base + ".single", worst_f < o.tol_single, df.str()}};
}

inline std::vector<CheckResult> LossIdentityChecks(std::uint64_t seed = 7) {
  auto rng = DerivedRng(seed, 0x4c4f5353);
  std::vector<CheckResult> out;

  double shift_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(8), f(8), g(8);
    const double c = UniformDouble(rng, -50, 50);
    for (int i = 0; i < 8; ++i) {
      w[static_cast<std::size_t>(i)] = UniformDouble(rng, 0, 1);
      f[static_cast<std::size_t>(i)] = UniformDouble(rng, -5, 5);
      g[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i)] + c;
    }
    const auto a = ListNetLoss<double>(w, f), b = ListNetLoss<double>(w, g);
    shift_err = std::max(shift_err, std::abs(a.loss - b.loss));
    for (int i = 0; i < 8; ++i)
      shift_err = std::max(shift_err, std::abs(a.grad[static_cast<std::size_t>(i)] -
                                               b.grad[static_cast<std::size_t>(i)]));
  }
  out.push_back({"loss.listnet_shift_invariance", shift_err <= 1e-12,
                 "max deviation " + verify_detail::Sci(shift_err)});

  double comp = 0, swap = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double fi = UniformDouble(rng, -20, 20), fj = UniformDouble(rng, -20, 20);
    comp = std::max(comp, std::abs(RankNetProbability(fi, fj) + RankNetProbability(fj, fi) - 1.0));
    const auto a = RankNetLoss(fi, fj, 1), b = RankNetLoss(fj, fi, 0);
    swap = std::max({swap, std::abs(a.loss - b.loss), std::abs(a.grad_i - b.grad_j),
                     std::abs(a.grad_j - b.grad_i)});
  }
  out.push_back({"loss.ranknet_complement", comp <= 1e-12, "max |P(i>j)+P(j>i)-1| " + verify_detail::Sci(comp)});
  out.push_back({"loss.ranknet_swap_symmetry", swap <= 1e-12, "max deviation " + verify_detail::Sci(swap)});

  bool pairs_ok = true;
  for (int trial = 0; trial < 500 && pairs_ok; ++trial) {
    const int m = static_cast<int>(UniformInt(rng, 1, 12));
    std::vector<double> w(static_cast<std::size_t>(m));
    // Quantized labels so that ties occur.
    for (auto &x : w) x = static_cast<double>(UniformInt(rng, 0, 4)) / 4.0;
    const PairSet ps = BuildPairSet(std::span<const double>(w), 0.0);
    pairs_ok = ps.size() <= static_cast<std::size_t>(m * (m - 1) / 2);
    std::size_t untied = 0;
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) untied += w[static_cast<std::size_t>(i)] != w[static_cast<std::size_t>(j)];
    pairs_ok = pairs_ok && ps.size() == untied;
    for (auto [i, j] : ps)
      pairs_ok = pairs_ok && w[static_cast<std::size_t>(i)] != w[static_cast<std::size_t>(j)];
  }
  pairs_ok = pairs_ok && PairwiseLabel(0.5, 0.5) == 0 && PairwiseLabel(0.6, 0.5) == 1;
  out.push_back({"loss.pair_set_bound_and_ties", pairs_ok,
                 "size <= M(M-1)/2, tied pairs excluded, tie label 0"});

  double xce = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double w = UniformDouble(rng, 0, 1), f = UniformDouble(rng, -30, 30);
    xce = std::max(xce, std::abs(PointwiseXce(w, f).grad - (1.0 / (1.0 + std::exp(-f)) - w)));
  }
  out.push_back({"loss.xce_gradient", xce <= 1e-12, "max |grad - (sigmoid(f) - w)| " + verify_detail::Sci(xce)});
  return out;
}

inline std::vector<CheckResult> ChunkFormulaChecks(int trials = 1000, std::uint64_t seed = 3) {
  const RankerConfig c;
  auto rng = DerivedRng(seed, 0x43484e4b);
  int bad_train = 0, bad_infer = 0, bad_cover = 0;
  for (int i = 0; i < trials; ++i) {
    const int t = static_cast<int>(UniformInt(rng, 1, 5000));
    const auto tr = ChunkSpans(t, ChunkMode::kTrain, c);
    const auto in = ChunkSpans(t, ChunkMode::kInfer, c);
    bad_train += static_cast<int>(tr.size()) != (t + 199) / 200;
    bad_infer += static_cast<int>(in.size()) != std::max(1, (std::max(t, 200) - 200) / 50 + 1);
    bad_cover += in.back().start + in.back().valid != t;
  }
  std::ostringstream d;
  d << trials << " lengths; mismatches train " << bad_train << ", infer " << bad_infer
    << ", tail " << bad_cover;
  return {{"chunking.formulas", bad_train + bad_infer + bad_cover == 0, d.str()}};
}

inline std::vector<CheckResult> CensusChecks() {
  const RankerConfig c;
  const Census cs = ParameterCensus(c);
  const double rel = std::abs(static_cast<double>(cs.total) - 266000.0) / 266000.0;
  std::ostringstream d;
  d << "total " << cs.total << " parameters (" << rel * 100.0 << "% from 266k)";
  const RankerLayout layout(c);
  bool pattern = c.Dilations() == std::vector<int>{1, 2, 4, 8, 16} &&
                 static_cast<int>(layout.blocks.size()) == c.NumResidualBlocks();
  for (std::size_t r = 0; pattern && r < layout.blocks.size(); ++r)
    pattern = layout.blocks[r].dilation == 1 << (r % static_cast<std::size_t>(c.sub_blocks));
  return {{"census.total", rel <= 0.10, d.str()},
          {"census.dilations", pattern, "3 groups of 1,2,4,8,16"}};
}

inline std::vector<CheckResult> RunVerification(const VerifyOptions &o = {}) {
  std::vector<CheckResult> out;
  for (Strategy s : {Strategy::kPointwiseXce, Strategy::kPointwiseMse, Strategy::kRankNet,
                     Strategy::kListNet})
    for (auto &r : GradientCheck(s, o)) out.push_back(std::move(r));
  for (auto &r : LossIdentityChecks()) out.push_back(std::move(r));
  for (auto &r : ChunkFormulaChecks()) out.push_back(std::move(r));
  for (auto &r : CensusChecks()) out.push_back(std::move(r));
  return out;
}

}  // namespace chanrank
