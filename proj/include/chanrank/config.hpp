// chanrank/config.hpp

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

// One declarative run configuration. Every section is optional; missing keys
// take their defaults and unknown keys are rejected.
//
//   {
//     "scene_sim": {...SceneConfig...},
//     "simulate":  {"num_utterances": 100, "seed": 0},
//     "trainer":   {...TrainConfig...},
//     "ranker":    {...RankerConfig...},
//     "eval":      {"k": 3, "wer_view": false},
//     "labels":    {"relevance_metric": "wa"}
//   }

#pragma once

#include <fstream>
#include <string>

#include "chanrank/common.hpp"
#include "chanrank/ranker.hpp"
#include "chanrank/scene_sim.hpp"
#include "chanrank/trainer.hpp"
#include "json.hpp"

namespace chanrank {

struct SimulateConfig {
  int num_utterances = 100;
  std::uint64_t seed = 0;  // utterance i uses seed + i
};

struct EvalConfig {
  int k = 3;
  bool wer_view = false;
};

struct RunConfig {
  SceneConfig scene_sim;
  SimulateConfig simulate;
  TrainConfig trainer;
  RankerConfig ranker;
  EvalConfig eval;
  RelevanceMetric relevance_metric = RelevanceMetric::kWa;

  void Validate() const {
    scene_sim.Validate();
    trainer.Validate();
    ranker.Validate();
    CHANRANK_CHECK(simulate.num_utterances >= 0, Errc::kInvalidArgument,
                   "simulate.num_utterances must be >= 0");
    CHANRANK_CHECK(eval.k >= 1, Errc::kInvalidArgument, "eval.k must be >= 1");
  }
};

inline nlohmann::json RunConfigJson(const RunConfig &c) {
  return {{"scene_sim", c.scene_sim},
          {"simulate", {{"num_utterances", c.simulate.num_utterances}, {"seed", c.simulate.seed}}},
          {"trainer", c.trainer},
          {"ranker", c.ranker},
          {"eval", {{"k", c.eval.k}, {"wer_view", c.eval.wer_view}}},
          {"labels", {{"relevance_metric", RelevanceMetricName(c.relevance_metric)}}}};
}

namespace config_detail {

template <typename F>
void ForEachKey(const nlohmann::json &j, const std::string &section, F &&fn) {
  CHANRANK_CHECK(j.is_object(), Errc::kInvalidArgument, "config section '", section,
                 "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!fn(it.key(), it.value()))
      Fail(Errc::kInvalidArgument, "unknown config key '", section, ".", it.key(), "'");
}

}  // namespace config_detail

inline RunConfig RunConfigFromJson(const nlohmann::json &j) {
  using config_detail::ForEachKey;
  RunConfig c;
  try {
    ForEachKey(j, "<root>", [&](const std::string &k, const nlohmann::json &v) {
      if (k == "scene_sim") c.scene_sim = v.get<SceneConfig>();
      else if (k == "trainer") c.trainer = v.get<TrainConfig>();
      else if (k == "ranker") c.ranker = v.get<RankerConfig>();
      else if (k == "simulate")
        ForEachKey(v, k, [&](const std::string &s, const nlohmann::json &x) {
          if (s == "num_utterances") c.simulate.num_utterances = x.get<int>();
          else if (s == "seed") c.simulate.seed = x.get<std::uint64_t>();
          else return false;
          return true;
        });
      else if (k == "eval")
        ForEachKey(v, k, [&](const std::string &s, const nlohmann::json &x) {
          if (s == "k") c.eval.k = x.get<int>();
          else if (s == "wer_view") c.eval.wer_view = x.get<bool>();
          else return false;
          return true;
        });
      else if (k == "labels")
        ForEachKey(v, k, [&](const std::string &s, const nlohmann::json &x) {
          if (s != "relevance_metric") return false;
          c.relevance_metric = ParseRelevanceMetric(x.get<std::string>());
          return true;
        });
      else return false;
      return true;
    });
  } catch (const nlohmann::json::exception &e) {
    Fail(Errc::kInvalidArgument, "config: ", e.what());
  }
  c.Validate();
  return c;
}

inline RunConfig LoadRunConfig(const std::string &path) {
  std::ifstream f(path);
  CHANRANK_CHECK(f.good(), Errc::kIo, "cannot open config ", path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception &e) {
    Fail(Errc::kInvalidArgument, path, ": invalid JSON: ", e.what());
  }
  try {
    return RunConfigFromJson(j);
  } catch (const Error &e) {
    Fail(e.code(), path, ": ", e.what());
  }
}

inline void WriteResolvedConfig(const std::string &path, const RunConfig &c) {
  std::ofstream f(path, std::ios::binary);
  CHANRANK_CHECK(f.good(), Errc::kIo, "cannot open ", path, " for writing");
  f << RunConfigJson(c).dump(2) << "\n";
  CHANRANK_CHECK(f.good(), Errc::kIo, "failed writing ", path);
}

}  // namespace chanrank
