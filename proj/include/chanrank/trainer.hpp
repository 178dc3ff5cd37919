// chanrank/trainer.hpp

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

// SGD training of the ranker under the point-wise, pair-wise and list-wise
// objectives. Lists are the M time-aligned training chunks of one utterance;
// every chunk carries its utterance's relevance.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "chanrank/common.hpp"
#include "chanrank/dsp.hpp"
#include "chanrank/ltr_losses.hpp"
#include "chanrank/parallel.hpp"
#include "chanrank/ranker.hpp"
#include "json.hpp"

namespace chanrank {

// ---------------------------------------------------------------------------
// Relevance labels.

enum class RelevanceMetric { kWa, kWer, kRaw };

inline const char *RelevanceMetricName(RelevanceMetric m) {
  switch (m) {
    case RelevanceMetric::kWa: return "wa";
    case RelevanceMetric::kWer: return "wer";
    case RelevanceMetric::kRaw: return "raw";
  }
  return "?";
}

inline RelevanceMetric ParseRelevanceMetric(const std::string &s) {
  for (RelevanceMetric m : {RelevanceMetric::kWa, RelevanceMetric::kWer, RelevanceMetric::kRaw})
    if (s == RelevanceMetricName(m)) return m;
  Fail(Errc::kInvalidArgument, "unknown relevance metric '", s, "' (expected wa, wer or raw)");
}

/// wa -> clamp(v, 0, 1); wer -> clamp(1 - v, 0, 1); raw -> v, which must
/// already lie in [0, 1] unless the strategy is RankNet.
inline double NormalizeRelevance(RelevanceMetric metric, double value, Strategy strategy) {
  CHANRANK_CHECK(std::isfinite(value), Errc::kInvalidArgument, "relevance value ", value,
                 " is not finite");
  switch (metric) {
    case RelevanceMetric::kWa: return std::clamp(value, 0.0, 1.0);
    case RelevanceMetric::kWer: return std::clamp(1.0 - value, 0.0, 1.0);
    case RelevanceMetric::kRaw:
      CHANRANK_CHECK(!NeedsBoundedRelevance(strategy) || (value >= 0.0 && value <= 1.0),
                     Errc::kInvalidArgument, "raw relevance ", value, " lies outside [0, 1]; ",
                     "unbounded labels are only accepted by the ranknet strategy");
      return value;
  }
  return value;
}

// ---------------------------------------------------------------------------
// Configuration.

struct SpecAugmentConfig {
  int num_masks = 2;
  int max_width = 8;  // mel bands
  double prob = 0.5;

  void Validate(int n_mels = kNumMels) const {
    CHANRANK_CHECK(num_masks >= 0, Errc::kInvalidArgument, "specaugment.num_masks must be >= 0");
    CHANRANK_CHECK(max_width >= 1 && max_width <= n_mels, Errc::kInvalidArgument,
                   "specaugment.max_width must lie in [1, ", n_mels, "], got ", max_width);
    CHANRANK_CHECK(prob >= 0.0 && prob <= 1.0, Errc::kInvalidArgument,
                   "specaugment.prob must lie in [0, 1]");
  }
};

struct TrainConfig {
  Strategy strategy = Strategy::kListNet;
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  int batch_utterances = 8;
  int epochs = 10;
  double delta = 0.0;  // RankNet pair threshold
  SpecAugmentConfig specaugment;
  std::uint64_t seed = 0;
  int plateau_patience = 0;  // halve lr after this many epochs without improvement; 0 = off

  void Validate() const {
    CHANRANK_CHECK(lr >= 0.0 && std::isfinite(lr), Errc::kInvalidArgument, "lr must be >= 0");
    CHANRANK_CHECK(momentum >= 0.0 && momentum < 1.0, Errc::kInvalidArgument,
                   "momentum must lie in [0, 1)");
    CHANRANK_CHECK(weight_decay >= 0.0, Errc::kInvalidArgument, "weight_decay must be >= 0");
    CHANRANK_CHECK(batch_utterances >= 1, Errc::kInvalidArgument,
                   "batch_utterances must be >= 1");
    CHANRANK_CHECK(epochs >= 0, Errc::kInvalidArgument, "epochs must be >= 0");
    CHANRANK_CHECK(delta >= 0.0, Errc::kInvalidArgument, "delta must be >= 0");
    CHANRANK_CHECK(plateau_patience >= 0, Errc::kInvalidArgument,
                   "plateau_patience must be >= 0");
    specaugment.Validate();
  }
};

inline void to_json(nlohmann::json &j, const SpecAugmentConfig &c) {
  j = {{"num_masks", c.num_masks}, {"max_width", c.max_width}, {"prob", c.prob}};
}

inline void from_json(const nlohmann::json &j, SpecAugmentConfig &c) {
  SpecAugmentConfig d;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto &k = it.key();
    if (k == "num_masks") d.num_masks = it->get<int>();
    else if (k == "max_width") d.max_width = it->get<int>();
    else if (k == "prob") d.prob = it->get<double>();
    else Fail(Errc::kInvalidArgument, "unknown specaugment key '", k, "'");
  }
  d.Validate();
  c = d;
}

inline void to_json(nlohmann::json &j, const TrainConfig &c) {
  j = {{"strategy", StrategyName(c.strategy)},
       {"lr", c.lr},
       {"momentum", c.momentum},
       {"weight_decay", c.weight_decay},
       {"batch_utterances", c.batch_utterances},
       {"epochs", c.epochs},
       {"delta", c.delta},
       {"specaugment", c.specaugment},
       {"seed", c.seed},
       {"plateau_patience", c.plateau_patience}};
}

inline void from_json(const nlohmann::json &j, TrainConfig &c) {
  TrainConfig d;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto &k = it.key();
    if (k == "strategy") d.strategy = ParseStrategy(it->get<std::string>());
    else if (k == "lr") d.lr = it->get<double>();
    else if (k == "momentum") d.momentum = it->get<double>();
    else if (k == "weight_decay") d.weight_decay = it->get<double>();
    else if (k == "batch_utterances") d.batch_utterances = it->get<int>();
    else if (k == "epochs") d.epochs = it->get<int>();
    else if (k == "delta") d.delta = it->get<double>();
    else if (k == "specaugment") d.specaugment = it->get<SpecAugmentConfig>();
    else if (k == "seed") d.seed = it->get<std::uint64_t>();
    else if (k == "plateau_patience") d.plateau_patience = it->get<int>();
    else Fail(Errc::kInvalidArgument, "unknown trainer key '", k, "'");
  }
  d.Validate();
  c = d;
}

// ---------------------------------------------------------------------------
// SpecAugment mel-band masking.

/// With probability prob, sets num_masks random contiguous band ranges of
/// width U[1, max_width] to ln(1e-10) across all frames. `frames` is T x bands.
template <typename Derived>
void SpecAugmentInPlace(Eigen::MatrixBase<Derived> &frames, const SpecAugmentConfig &cfg,
                        std::mt19937_64 &rng) {
  CHANRANK_CHECK(cfg.max_width <= kNumMels, Errc::kInvalidArgument,
                 "specaugment.max_width ", cfg.max_width, " exceeds ", kNumMels, " bands");
  const auto bands = static_cast<int>(frames.cols());
  cfg.Validate(bands);
  if (UniformDouble(rng, 0.0, 1.0) >= cfg.prob) return;
  using Scalar = typename Derived::Scalar;
  const auto floor = static_cast<Scalar>(std::log(kLogFloor));
  for (int m = 0; m < cfg.num_masks; ++m) {
    const auto width = static_cast<int>(UniformInt(rng, 1, cfg.max_width));
    const auto start = static_cast<int>(UniformInt(rng, 0, bands - width));
    frames.middleCols(start, width).setConstant(floor);
  }
}

inline LogMelFeatures SpecAugment(const LogMelFeatures &feats, const SpecAugmentConfig &cfg,
                                  std::mt19937_64 &rng) {
  LogMelFeatures out = feats;
  SpecAugmentInPlace(out.frames, cfg, rng);
  return out;
}

// ---------------------------------------------------------------------------
// Data.

using MatF = Mat<float>;

/// Log-mel features of every channel of one utterance, plus labels.
struct UtteranceFeatures {
  std::string id;
  std::vector<MatF> channels;     // T_i x n_mels each
  std::vector<double> relevance;  // one per channel, already normalized
};

inline UtteranceFeatures ExtractUtteranceFeatures(const std::string &id,
                                                  const std::vector<Waveform> &channels,
                                                  const std::vector<double> &relevance = {}) {
  UtteranceFeatures u;
  u.id = id;
  u.relevance = relevance;
  for (const auto &w : channels) u.channels.push_back(LogMel(w).frames.cast<float>());
  return u;
}

/// One training list: the chunk with index `chunk` of the listed channels.
struct ListSample {
  int utterance = 0;
  int chunk = 0;
  std::vector<int> channels;
};

struct TrainingBatch {
  std::vector<ListSample> lists;
};

namespace trainer_detail {

inline int TrainChunkCount(const MatF &f, const RankerConfig &c) {
  return static_cast<int>(ChunkSpans(static_cast<int>(f.rows()), ChunkMode::kTrain, c).size());
}

inline std::vector<double> ListRelevance(const UtteranceFeatures &u, const ListSample &l) {
  std::vector<double> w;
  for (int ch : l.channels) w.push_back(u.relevance[static_cast<std::size_t>(ch)]);
  return w;
}

}  // namespace trainer_detail

/// Lists of one utterance, one per time-aligned chunk index. Channels too
/// short to have a given chunk sit out that list. Lists that give the
/// strategy nothing to learn from are dropped: fewer than two channels for
/// RankNet and ListNet, no ordered pair for RankNet.
inline std::vector<ListSample> UtteranceLists(const UtteranceFeatures &u, int index,
                                              Strategy strategy, double delta,
                                              const RankerConfig &c,
                                              std::vector<std::string> *warnings = nullptr) {
  CHANRANK_CHECK(u.relevance.size() == u.channels.size(), Errc::kShapeMismatch, "utterance '",
                 u.id, "' has ", u.channels.size(), " channels but ", u.relevance.size(),
                 " relevance labels");
  const bool listwise = strategy == Strategy::kRankNet || strategy == Strategy::kListNet;
  std::vector<ListSample> out;
  if (listwise && u.channels.size() < 2) {
    if (warnings)
      warnings->push_back("utterance '" + u.id + "' has fewer than 2 channels; skipped");
    return out;
  }
  int max_chunks = 0;
  std::vector<int> counts;
  for (const auto &ch : u.channels) {
    counts.push_back(trainer_detail::TrainChunkCount(ch, c));
    max_chunks = std::max(max_chunks, counts.back());
  }
  for (int k = 0; k < max_chunks; ++k) {
    ListSample l{index, k, {}};
    for (std::size_t ch = 0; ch < counts.size(); ++ch)
      if (counts[ch] > k) l.channels.push_back(static_cast<int>(ch));
    if (listwise && l.channels.size() < 2) continue;
    if (strategy == Strategy::kRankNet &&
        BuildPairSet(std::span<const double>(trainer_detail::ListRelevance(u, l)), delta)
            .empty())
      continue;
    out.push_back(std::move(l));
  }
  return out;
}

/// Number of training samples the strategy draws from the lists: chunks for
/// point-wise, lists for ListNet, ordered pairs for RankNet.
inline std::size_t CountSamples(const std::vector<UtteranceFeatures> &data,
                                const std::vector<ListSample> &lists, Strategy strategy,
                                double delta = 0.0) {
  std::size_t n = 0;
  for (const auto &l : lists) {
    switch (strategy) {
      case Strategy::kPointwiseXce:
      case Strategy::kPointwiseMse: n += l.channels.size(); break;
      case Strategy::kListNet: n += 1; break;
      case Strategy::kRankNet:
        n += BuildPairSet(std::span<const double>(trainer_detail::ListRelevance(
                              data[static_cast<std::size_t>(l.utterance)], l)),
                          delta)
                 .size();
        break;
    }
  }
  return n;
}

/// Seeded shuffle of utterances, grouped into batches of batch_utterances.
inline std::vector<TrainingBatch> MakeTrainingBatches(const std::vector<UtteranceFeatures> &data,
                                                      const TrainConfig &cfg,
                                                      const RankerConfig &rc,
                                                      std::mt19937_64 &rng,
                                                      std::vector<std::string> *warnings = nullptr) {
  std::vector<int> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  Shuffle(order.begin(), order.end(), rng);
  std::vector<TrainingBatch> out;
  for (std::size_t s = 0; s < order.size(); s += static_cast<std::size_t>(cfg.batch_utterances)) {
    TrainingBatch b;
    const std::size_t e = std::min(order.size(), s + static_cast<std::size_t>(cfg.batch_utterances));
    for (std::size_t i = s; i < e; ++i) {
      const auto u = static_cast<std::size_t>(order[i]);
      auto lists = UtteranceLists(data[u], order[i], cfg.strategy, cfg.delta, rc, warnings);
      b.lists.insert(b.lists.end(), lists.begin(), lists.end());
    }
    if (!b.lists.empty()) out.push_back(std::move(b));
  }
  return out;
}

/// Chunks of one list, augmented and ready for the network.
struct PreparedList {
  std::vector<MatF> chunks;
  std::vector<std::vector<std::uint8_t>> masks;
  std::vector<double> relevance;
};

inline PreparedList PrepareList(const std::vector<UtteranceFeatures> &data, const ListSample &l,
                                const RankerConfig &rc, const SpecAugmentConfig *augment,
                                std::mt19937_64 *rng) {
  const auto &u = data[static_cast<std::size_t>(l.utterance)];
  PreparedList p;
  p.relevance = trainer_detail::ListRelevance(u, l);
  for (int ch : l.channels) {
    const MatF &f = u.channels[static_cast<std::size_t>(ch)];
    const auto spans = ChunkSpans(static_cast<int>(f.rows()), ChunkMode::kTrain, rc);
    p.masks.emplace_back();
    p.chunks.push_back(
        ExtractChunk<float>(f, spans[static_cast<std::size_t>(l.chunk)], rc, &p.masks.back()));
    if (augment) SpecAugmentInPlace(p.chunks.back(), *augment, *rng);
  }
  return p;
}

/// Loss of one list; adds weight * d(loss)/d(params) into `grad`.
template <typename T>
double ListLossAndGradient(const RankerModel<T> &model, const PreparedList &list,
                           Strategy strategy, const LossOptions &opts, T weight,
                           std::vector<T> &grad) {
  const std::size_t m = list.chunks.size();
  std::vector<ForwardCache<T>> caches(m);
  std::vector<T> scores(m);
  for (std::size_t i = 0; i < m; ++i) {
    Mat<T> chunk = list.chunks[i].template cast<T>();
    scores[i] = ForwardChunk(model, chunk, list.masks[i], &caches[i]);
  }
  BatchLossGrad<T> lg = BatchLoss<T>(strategy, {list.relevance}, {scores}, opts);
  for (std::size_t i = 0; i < m; ++i) {
    const T d = lg.grad[0][i] * weight;
    if (d != T(0)) BackwardChunk(model, caches[i], d, grad);
  }
  return static_cast<double>(lg.loss);
}

/// Loss of one list without gradients.
template <typename T>
double ListLoss(const RankerModel<T> &model, const PreparedList &list, Strategy strategy,
                const LossOptions &opts) {
  std::vector<T> scores;
  for (std::size_t i = 0; i < list.chunks.size(); ++i) {
    Mat<T> chunk = list.chunks[i].template cast<T>();
    scores.push_back(ForwardChunk(model, chunk, list.masks[i]));
  }
  return static_cast<double>(BatchLoss<T>(strategy, {list.relevance}, {scores}, opts).loss);
}

// ---------------------------------------------------------------------------
// Training loop.

struct HistoryEntry {
  int epoch = 0;
  double train_loss = 0;
  double valid_metric = 0;
  double lr = 0;
  double wall_time = 0;  // seconds spent in this epoch
};

inline nlohmann::json HistoryJson(const HistoryEntry &h) {
  return {{"epoch", h.epoch},
          {"train_loss", h.train_loss},
          {"valid_metric", h.valid_metric},
          {"lr", h.lr},
          {"wall_time", h.wall_time}};
}

inline HistoryEntry HistoryFromJson(const nlohmann::json &j) {
  HistoryEntry h;
  h.epoch = j.at("epoch").get<int>();
  h.train_loss = j.at("train_loss").get<double>();
  h.valid_metric = j.at("valid_metric").get<double>();
  h.lr = j.at("lr").get<double>();
  h.wall_time = j.value("wall_time", 0.0);
  return h;
}

/// Everything needed to continue training bit-exactly. Randomness is derived
/// from (seed, epoch), so the epoch counter doubles as the rng state.
struct TrainState {
  TrainConfig config;
  RankerModel<float> model;
  std::vector<float> velocity;
  int epoch = 0;  // completed epochs
  double lr = 0;
  int best_epoch = 0;  // 0 = none yet
  double best_metric = -std::numeric_limits<double>::infinity();
  std::vector<float> best_params;
  int since_best = 0;
  std::vector<HistoryEntry> history;

  RankerModel<float> BestModel() const {
    RankerModel<float> m = model;
    if (best_epoch > 0) m.params = best_params;
    return m;
  }
};

inline TrainState InitTrainState(const TrainConfig &cfg, const RankerConfig &rc) {
  cfg.Validate();
  TrainState s;
  s.config = cfg;
  s.model = BuildRanker<float>(rc, cfg.seed);
  s.velocity.assign(s.model.NumParams(), 0.0f);
  s.lr = cfg.lr;
  return s;
}

/// Mean relevance of the top-scored channel, inference-mode chunking.
template <typename T>
double SelectionMetric(const RankerModel<T> &model, const std::vector<UtteranceFeatures> &data,
                       int threads = 1) {
  CHANRANK_CHECK(!data.empty(), Errc::kInvalidArgument, "empty validation set");
  std::vector<double> picked(data.size());
  ParallelFor(data.size(), threads, [&](std::size_t u) {
    const auto &utt = data[u];
    CHANRANK_CHECK(utt.relevance.size() == utt.channels.size(), Errc::kShapeMismatch,
                   "validation utterance '", utt.id, "' lacks relevance labels");
    std::vector<double> scores;
    for (const auto &ch : utt.channels) scores.push_back(ScoreChannel(model, ch));
    picked[u] = utt.relevance[ArgMax(scores)];
  });
  double acc = 0;
  for (double v : picked) acc += v;
  return acc / static_cast<double>(picked.size());
}

struct TrainOptions {
  int threads = 1;
  std::function<void(const HistoryEntry &)> on_epoch;
  std::function<void(const std::string &)> on_warning;
};

namespace trainer_detail {

inline void CheckLabels(const std::vector<UtteranceFeatures> &data, Strategy strategy,
                        const char *what) {
  for (const auto &u : data) {
    CHANRANK_CHECK(u.relevance.size() == u.channels.size(), Errc::kInvalidArgument, what,
                   " record '", u.id, "' has ", u.relevance.size(), " relevance labels for ",
                   u.channels.size(), " channels");
    for (double w : u.relevance) {
      CHANRANK_CHECK(std::isfinite(w), Errc::kInvalidArgument, what, " record '", u.id,
                     "' has a non-finite relevance");
      CHANRANK_CHECK(!NeedsBoundedRelevance(strategy) || (w >= 0.0 && w <= 1.0),
                     Errc::kInvalidArgument, what, " record '", u.id, "' has relevance ", w,
                     " outside [0, 1], which ", StrategyName(strategy), " cannot use");
    }
  }
}

inline std::uint64_t EpochStream(int epoch) {
  return 0x45504f4300000000ULL + static_cast<std::uint64_t>(epoch);
}

}  // namespace trainer_detail

/// Runs epochs until state.epoch == until_epoch (default: config.epochs).
/// The optimizer is PyTorch-style SGD: v = mu v + (g + wd p); p -= lr v.
inline void TrainEpochs(TrainState &state, const std::vector<UtteranceFeatures> &train,
                        const std::vector<UtteranceFeatures> &valid,
                        const TrainOptions &opts = {}, int until_epoch = -1) {
  const TrainConfig &cfg = state.config;
  cfg.Validate();
  CHANRANK_CHECK(!train.empty(), Errc::kInvalidArgument, "empty training set");
  CHANRANK_CHECK(!valid.empty(), Errc::kInvalidArgument, "empty validation set");
  trainer_detail::CheckLabels(train, cfg.strategy, "training");
  trainer_detail::CheckLabels(valid, cfg.strategy, "validation");
  for (const auto *set : {&train, &valid})
    for (const auto &u : *set)
      for (const auto &ch : u.channels)
        CHANRANK_CHECK(ch.cols() == state.model.config.n_mels, Errc::kConfigMismatch, "record '",
                       u.id, "' has ", ch.cols(), " bands, model expects ",
                       state.model.config.n_mels);
  if (until_epoch < 0) until_epoch = cfg.epochs;
  const RankerConfig &rc = state.model.config;
  const LossOptions loss_opts{cfg.delta, XceForm::kFull};
  const std::size_t np = state.model.NumParams();
  std::vector<float> grad(np);

  while (state.epoch < until_epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const int epoch = state.epoch + 1;
    auto rng = DerivedRng(cfg.seed, trainer_detail::EpochStream(epoch));
    std::vector<std::string> warnings;
    auto batches = MakeTrainingBatches(train, cfg, rc, rng, &warnings);
    if (opts.on_warning && epoch == 1)
      for (const auto &w : warnings) opts.on_warning(w);
    CHANRANK_CHECK(!batches.empty(), Errc::kInvalidArgument,
                   "no usable training lists for strategy ", StrategyName(cfg.strategy));

    double loss_sum = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto &lists = batches[b].lists;
      std::vector<PreparedList> prepared;
      for (const auto &l : lists) prepared.push_back(PrepareList(train, l, rc, &cfg.specaugment, &rng));
      const float weight = 1.0f / static_cast<float>(lists.size());
      std::vector<std::vector<float>> slot_grads(lists.size());
      std::vector<double> slot_loss(lists.size());
      ParallelFor(lists.size(), opts.threads, [&](std::size_t i) {
        slot_grads[i].assign(np, 0.0f);
        slot_loss[i] = ListLossAndGradient(state.model, prepared[i], cfg.strategy, loss_opts,
                                           weight, slot_grads[i]);
      });
      std::fill(grad.begin(), grad.end(), 0.0f);
      double batch_loss = 0;
      for (std::size_t i = 0; i < lists.size(); ++i) {
        batch_loss += slot_loss[i];
        for (std::size_t k = 0; k < np; ++k) grad[k] += slot_grads[i][k];
      }
      batch_loss /= static_cast<double>(lists.size());
      CHANRANK_CHECK(std::isfinite(batch_loss), Errc::kDiverged, "training loss became ",
                     batch_loss, " at epoch ", epoch, ", batch ", b + 1,
                     "; lower the learning rate");

      const auto lr = static_cast<float>(state.lr);
      const auto mu = static_cast<float>(cfg.momentum);
      const auto wd = static_cast<float>(cfg.weight_decay);
      auto &p = state.model.params;
      for (std::size_t k = 0; k < np; ++k) {
        const float g = grad[k] + wd * p[k];
        state.velocity[k] = mu * state.velocity[k] + g;
        p[k] -= lr * state.velocity[k];
      }
      for (std::size_t k = 0; k < np; ++k)
        CHANRANK_CHECK(std::isfinite(p[k]), Errc::kDiverged, "parameter ", k,
                       " became non-finite at epoch ", epoch, ", batch ", b + 1,
                       "; lower the learning rate");
      loss_sum += batch_loss;
    }

    HistoryEntry h;
    h.epoch = epoch;
    h.train_loss = loss_sum / static_cast<double>(batches.size());
    h.valid_metric = SelectionMetric(state.model, valid, opts.threads);
    h.lr = state.lr;
    if (h.valid_metric > state.best_metric) {
      state.best_metric = h.valid_metric;
      state.best_epoch = epoch;
      state.best_params = state.model.params;
      state.since_best = 0;
    } else if (cfg.plateau_patience > 0 && ++state.since_best >= cfg.plateau_patience) {
      state.lr *= 0.5;
      state.since_best = 0;
    }
    state.epoch = epoch;
    h.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state.history.push_back(h);
    if (opts.on_epoch) opts.on_epoch(h);
  }
}

}  // namespace chanrank
