// include/chanrank/ltr_losses.hpp

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

// Learning-to-rank objectives over per-channel scores f and relevance labels
// w. Every loss is a non-negative quantity to be minimized and comes with its
// analytic derivative with respect to the scores.
//
//   point-wise XCE   -[w ln s(f) + (1-w) ln(1-s(f))]        d/df = s(f) - w
//   point-wise MSE   (w - f)^2                              d/df = 2(f - w)
//   RankNet          -[y ln P + (1-y) ln(1-P)],  P = s(f_i - f_j)
//   ListNet          -sum_i softmax(w)_i ln softmax(f)_i    d/df = q - p
//
// Batch versions average over lists (utterances); RankNet additionally
// averages over the pairs of each list.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "chanrank/common.hpp"

namespace chanrank {

enum class Strategy { kPointwiseXce, kPointwiseMse, kRankNet, kListNet };

inline const char *StrategyName(Strategy s) {
  switch (s) {
    case Strategy::kPointwiseXce: return "pointwise_xce";
    case Strategy::kPointwiseMse: return "pointwise_mse";
    case Strategy::kRankNet: return "ranknet";
    case Strategy::kListNet: return "listnet";
  }
  return "?";
}

inline Strategy ParseStrategy(const std::string &s) {
  for (Strategy k : {Strategy::kPointwiseXce, Strategy::kPointwiseMse,
                     Strategy::kRankNet, Strategy::kListNet})
    if (s == StrategyName(k)) return k;
  Fail(Errc::kInvalidArgument, "unknown strategy '", s,
       "' (expected pointwise_xce, pointwise_mse, ranknet or listnet)");
}

/// Whether a strategy needs labels bounded to [0, 1].
inline bool NeedsBoundedRelevance(Strategy s) { return s != Strategy::kRankNet; }

template <typename T>
struct LossGrad {
  T loss;
  T grad;
};

template <typename T>
struct PairLossGrad {
  T loss;
  T grad_i;
  T grad_j;
};

namespace ltr_detail {

// ln(1 + e^x) without overflow.
template <typename T>
T Softplus(T x) {
  return std::max(x, T(0)) + std::log1p(std::exp(-std::abs(x)));
}

template <typename T>
T Sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
T LogSumExp(std::span<const T> x) {
  T m = *std::max_element(x.begin(), x.end());
  T acc = 0;
  for (T v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace ltr_detail

template <typename T>
std::vector<T> Softmax(std::span<const T> x) {
  CHANRANK_CHECK(!x.empty(), Errc::kInvalidArgument, "softmax of empty vector");
  const T lse = ltr_detail::LogSumExp(x);
  std::vector<T> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i] - lse);
  return out;
}

/// Which form of the point-wise cross-entropy to use. kPositiveOnly keeps just
/// the w ln s(f) term; it is degenerate (pushes every score up) and exists
/// for comparison experiments only.
enum class XceForm { kFull, kPositiveOnly };

template <typename T>
LossGrad<T> PointwiseXce(T w, T f, XceForm form = XceForm::kFull) {
  CHANRANK_CHECK(w >= T(0) && w <= T(1), Errc::kInvalidArgument,
                 "point-wise XCE relevance must lie in [0,1], got ", w);
  using namespace ltr_detail;
  const T s = Sigmoid(f);
  if (form == XceForm::kPositiveOnly) return {w * Softplus(-f), w * (s - T(1))};
  return {w * Softplus(-f) + (T(1) - w) * Softplus(f), s - w};
}

template <typename T>
LossGrad<T> PointwiseMse(T w, T f) {
  const T d = f - w;
  return {d * d, T(2) * d};
}

/// 1 if w_i > w_j, 0 otherwise (ties included).
template <typename T>
int PairwiseLabel(T w_i, T w_j) {
  return w_i > w_j ? 1 : 0;
}

using PairSet = std::vector<std::pair<int, int>>;

/// Unordered channel pairs (i < j) whose relevance differs by more than delta.
template <typename T>
PairSet BuildPairSet(std::span<const T> w, T delta) {
  CHANRANK_CHECK(delta >= T(0), Errc::kInvalidArgument, "delta must be >= 0");
  PairSet out;
  const int m = static_cast<int>(w.size());
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (std::abs(w[i] - w[j]) > delta) out.emplace_back(i, j);
  return out;
}

/// Probability that channel i outranks channel j.
template <typename T>
T RankNetProbability(T f_i, T f_j) {
  return ltr_detail::Sigmoid(f_i - f_j);
}

template <typename T>
PairLossGrad<T> RankNetLoss(T f_i, T f_j, int y) {
  CHANRANK_CHECK(y == 0 || y == 1, Errc::kInvalidArgument, "pair label must be 0 or 1");
  using namespace ltr_detail;
  const T d = f_i - f_j;
  const T yt = static_cast<T>(y);
  const T loss = yt * Softplus(-d) + (T(1) - yt) * Softplus(d);
  const T g = Sigmoid(d) - yt;
  return {loss, g, -g};
}

template <typename T>
struct ListLossGrad {
  T loss;
  std::vector<T> grad;
};

template <typename T>
ListLossGrad<T> ListNetLoss(std::span<const T> w, std::span<const T> f) {
  CHANRANK_CHECK(w.size() == f.size(), Errc::kShapeMismatch,
                 "label and score lists differ in length");
  CHANRANK_CHECK(w.size() >= 2, Errc::kInvalidArgument, "ListNet needs M >= 2");
  const std::vector<T> p = Softmax(w);
  const T lse = ltr_detail::LogSumExp(f);
  ListLossGrad<T> out{T(0), std::vector<T>(f.size())};
  for (std::size_t i = 0; i < f.size(); ++i) {
    const T log_q = f[i] - lse;
    out.loss -= p[i] * log_q;
    out.grad[i] = std::exp(log_q) - p[i];
  }
  return out;
}

struct LossOptions {
  double delta = 0.0;  // RankNet pair threshold
  XceForm xce_form = XceForm::kFull;
};

/// Loss over a batch of lists plus d(loss)/d(score) for every entry.
template <typename T>
struct BatchLossGrad {
  T loss = 0;
  std::vector<std::vector<T>> grad;
};

/// relevance[u] and scores[u] are the labels and network outputs of list u.
/// Reduction: mean over lists (lists without any RankNet pair are excluded
/// from the RankNet mean); point-wise sums over the channels of a list.
template <typename T>
BatchLossGrad<T> BatchLoss(Strategy strategy,
                           const std::vector<std::vector<double>> &relevance,
                           const std::vector<std::vector<T>> &scores,
                           const LossOptions &opts = {}) {
  CHANRANK_CHECK(relevance.size() == scores.size(), Errc::kShapeMismatch,
                 "relevance and score tables differ in list count");
  BatchLossGrad<T> out;
  out.grad.resize(scores.size());
  int lists = 0;
  for (std::size_t u = 0; u < scores.size(); ++u) {
    const auto &w = relevance[u];
    const auto &f = scores[u];
    CHANRANK_CHECK(w.size() == f.size(), Errc::kShapeMismatch, "list ", u,
                   " has ", w.size(), " labels but ", f.size(), " scores");
    out.grad[u].assign(f.size(), T(0));
    T list_loss = 0;
    switch (strategy) {
      case Strategy::kPointwiseXce:
      case Strategy::kPointwiseMse:
        for (std::size_t i = 0; i < f.size(); ++i) {
          LossGrad<T> lg = strategy == Strategy::kPointwiseXce
                               ? PointwiseXce(static_cast<T>(w[i]), f[i], opts.xce_form)
                               : PointwiseMse(static_cast<T>(w[i]), f[i]);
          list_loss += lg.loss;
          out.grad[u][i] = lg.grad;
        }
        ++lists;
        break;
      case Strategy::kRankNet: {
        PairSet pairs = BuildPairSet(std::span<const double>(w), opts.delta);
        if (pairs.empty()) continue;
        const T inv = T(1) / static_cast<T>(pairs.size());
        for (auto [i, j] : pairs) {
          PairLossGrad<T> pg = RankNetLoss(f[i], f[j], PairwiseLabel(w[i], w[j]));
          list_loss += pg.loss * inv;
          out.grad[u][i] += pg.grad_i * inv;
          out.grad[u][j] += pg.grad_j * inv;
        }
        ++lists;
        break;
      }
      case Strategy::kListNet: {
        std::vector<T> wt(w.begin(), w.end());
        ListLossGrad<T> lg = ListNetLoss(std::span<const T>(wt), std::span<const T>(f));
        list_loss = lg.loss;
        out.grad[u] = std::move(lg.grad);
        ++lists;
        break;
      }
    }
    out.loss += list_loss;
  }
  if (lists == 0) return out;
  const T inv = T(1) / static_cast<T>(lists);
  out.loss *= inv;
  for (auto &g : out.grad)
    for (auto &x : g) x *= inv;
  return out;
}

/// Lower bound of the batch ListNet loss: mean entropy of softmax(w).
inline double ListNetLowerBound(const std::vector<std::vector<double>> &relevance) {
  if (relevance.empty()) return 0.0;
  double acc = 0;
  for (const auto &w : relevance) {
    std::vector<double> p = Softmax(std::span<const double>(w));
    for (double x : p)
      if (x > 0) acc -= x * std::log(x);
  }
  return acc / static_cast<double>(relevance.size());
}

}  // namespace chanrank
