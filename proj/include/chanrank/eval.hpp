// include/chanrank/eval.hpp

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

// Ranking and selection metrics. Relevance is "higher is better"
// throughout; Best is the mean relevance of the top-ranked channel, Top-k
// the mean relevance of the k top-ranked channels.

#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "chanrank/common.hpp"
#include "json.hpp"

namespace chanrank {

struct RankingResult {
  std::string id;
  std::vector<int> order;  // best first
  std::vector<double> scores;
  std::string method;
};

/// Stable descending sort of the scores; equal scores keep index order.
inline RankingResult RankChannels(const ChannelScores &s, const std::string &id = "") {
  for (double v : s.scores)
    CHANRANK_CHECK(std::isfinite(v), Errc::kInvalidArgument, "non-finite channel score");
  RankingResult r{id, std::vector<int>(s.scores.size()), s.scores, s.method};
  std::iota(r.order.begin(), r.order.end(), 0);
  std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
    return s.scores[static_cast<std::size_t>(a)] > s.scores[static_cast<std::size_t>(b)];
  });
  return r;
}

inline nlohmann::json RankingJson(const RankingResult &r) {
  return {{"id", r.id}, {"method", r.method}, {"order", r.order}, {"scores", r.scores}};
}

inline RankingResult RankingFromJson(const nlohmann::json &j) {
  RankingResult r;
  r.id = j.at("id").get<std::string>();
  r.method = j.at("method").get<std::string>();
  r.order = j.at("order").get<std::vector<int>>();
  r.scores = j.at("scores").get<std::vector<double>>();
  CHANRANK_CHECK(r.order.size() == r.scores.size(), Errc::kFormat, "ranking '", r.id,
                 "' has ", r.order.size(), " indices but ", r.scores.size(), " scores");
  return r;
}

struct SelectionMetrics {
  double best = 0;
  double top_k = 0;
  int k = 0;
};

namespace eval_detail {

inline void CheckCoverage(const std::vector<RankingResult> &rankings,
                          const std::vector<std::vector<double>> &relevance) {
  CHANRANK_CHECK(rankings.size() == relevance.size(), Errc::kShapeMismatch, rankings.size(),
                 " rankings for ", relevance.size(), " utterances");
  for (std::size_t u = 0; u < rankings.size(); ++u)
    CHANRANK_CHECK(rankings[u].order.size() == relevance[u].size(), Errc::kShapeMismatch,
                   "utterance ", u, " ranks ", rankings[u].order.size(), " channels but has ",
                   relevance[u].size(), " labels");
}

}  // namespace eval_detail

/// Ranking by the labels themselves.
inline std::vector<RankingResult> OracleRankings(const std::vector<std::vector<double>> &relevance,
                                                 const std::vector<std::string> &ids = {}) {
  std::vector<RankingResult> out;
  for (std::size_t u = 0; u < relevance.size(); ++u)
    out.push_back(RankChannels({relevance[u], "oracle"}, u < ids.size() ? ids[u] : ""));
  return out;
}

inline SelectionMetrics ComputeSelectionMetrics(const std::vector<RankingResult> &rankings,
                                                const std::vector<std::vector<double>> &relevance,
                                                int k = 3) {
  eval_detail::CheckCoverage(rankings, relevance);
  CHANRANK_CHECK(k >= 1, Errc::kInvalidArgument, "k must be >= 1");
  SelectionMetrics m{0, 0, k};
  if (rankings.empty()) return m;
  for (std::size_t u = 0; u < rankings.size(); ++u) {
    const auto &order = rankings[u].order;
    const auto &w = relevance[u];
    CHANRANK_CHECK(static_cast<std::size_t>(k) <= w.size(), Errc::kInvalidArgument, "k = ", k,
                   " exceeds the ", w.size(), " channels of utterance ", u);
    m.best += w[static_cast<std::size_t>(order[0])];
    double acc = 0;
    for (int i = 0; i < k; ++i) acc += w[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    m.top_k += acc / k;
  }
  m.best /= static_cast<double>(rankings.size());
  m.top_k /= static_cast<double>(rankings.size());
  return m;
}

/// Fraction of utterances whose top-ranked channel has maximal relevance
/// (ties count as correct).
inline double SelectionAccuracy(const std::vector<RankingResult> &rankings,
                                const std::vector<std::vector<double>> &relevance) {
  eval_detail::CheckCoverage(rankings, relevance);
  if (rankings.empty()) return 0.0;
  int hits = 0;
  for (std::size_t u = 0; u < rankings.size(); ++u) {
    const auto &w = relevance[u];
    const double top = *std::max_element(w.begin(), w.end());
    if (w[static_cast<std::size_t>(rankings[u].order[0])] == top) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

/// Sample Pearson correlation. Constant inputs are undefined.
inline double Pearson(const std::vector<double> &x, const std::vector<double> &y) {
  CHANRANK_CHECK(x.size() == y.size(), Errc::kShapeMismatch, "correlation of vectors of length ",
                 x.size(), " and ", y.size());
  CHANRANK_CHECK(x.size() >= 2, Errc::kInvalidArgument, "correlation needs at least 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  CHANRANK_CHECK(sxx > 0 && syy > 0, Errc::kUndefined,
                 "correlation is undefined for a constant vector");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1-based ranks with ties sharing their average rank.
inline std::vector<double> AverageRanks(const std::vector<double> &x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double Spearman(const std::vector<double> &x, const std::vector<double> &y) {
  CHANRANK_CHECK(x.size() == y.size(), Errc::kShapeMismatch, "correlation of vectors of length ",
                 x.size(), " and ", y.size());
  return Pearson(AverageRanks(x), AverageRanks(y));
}

// ---------------------------------------------------------------------------
// Multi-method report.

struct MethodReport {
  std::string method;
  SelectionMetrics metrics;
  double accuracy = 0;
  std::optional<double> pearson, spearman;  // unset when undefined
};

struct EvalReport {
  int k = 3;
  bool wer_view = false;  // also show 1 - relevance
  std::vector<MethodReport> methods;  // oracle first
  std::vector<std::string> ids;
  std::vector<std::vector<double>> relevance;
  std::map<std::string, std::vector<RankingResult>> rankings;

  nlohmann::json ToJson() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto &m : methods) {
      nlohmann::json r{{"method", m.method},
                       {"best", m.metrics.best},
                       {"top_k", m.metrics.top_k},
                       {"accuracy", m.accuracy},
                       {"pearson", m.pearson ? nlohmann::json(*m.pearson) : nlohmann::json()},
                       {"spearman", m.spearman ? nlohmann::json(*m.spearman) : nlohmann::json()}};
      if (wer_view) {
        r["best_wer"] = 1.0 - m.metrics.best;
        r["top_k_wer"] = 1.0 - m.metrics.top_k;
      }
      rows.push_back(r);
    }
    nlohmann::json per_utt = nlohmann::json::array();
    for (std::size_t u = 0; u < ids.size(); ++u) {
      nlohmann::json sel;
      for (const auto &[name, rs] : rankings) sel[name] = rs[u].order[0];
      per_utt.push_back({{"id", ids[u]}, {"relevance", relevance[u]}, {"selected", sel}});
    }
    return {{"k", k}, {"num_utterances", ids.size()}, {"methods", rows}, {"utterances", per_utt}};
  }

  std::string ToTable() const {
    std::ostringstream os;
    auto opt = [](const std::optional<double> &v) {
      std::ostringstream s;
      if (v) s << std::fixed << std::setprecision(4) << *v;
      else s << "n/a";
      return s.str();
    };
    os << std::left << std::setw(28) << "method" << std::right << std::setw(10) << "best"
       << std::setw(10) << ("top" + std::to_string(k));
    if (wer_view) os << std::setw(10) << "best_wer" << std::setw(10) << ("top" + std::to_string(k) + "_wer");
    os << std::setw(10) << "acc" << std::setw(10) << "pearson" << std::setw(10) << "spearman"
       << "\n";
    for (const auto &m : methods) {
      os << std::left << std::setw(28) << m.method << std::right << std::fixed
         << std::setprecision(4) << std::setw(10) << m.metrics.best << std::setw(10)
         << m.metrics.top_k;
      if (wer_view)
        os << std::setw(10) << 1.0 - m.metrics.best << std::setw(10) << 1.0 - m.metrics.top_k;
      os << std::setw(10) << m.accuracy << std::setw(10) << opt(m.pearson) << std::setw(10)
         << opt(m.spearman) << "\n";
    }
    return os.str();
  }

  /// One row per (method, utterance, channel).
  std::string ToCsv() const {
    std::ostringstream os;
    os << "method,id,channel,score,relevance\n";
    os << std::setprecision(17);
    for (const auto &[name, rs] : rankings)
      for (std::size_t u = 0; u < rs.size(); ++u)
        for (std::size_t c = 0; c < rs[u].scores.size(); ++c)
          os << name << "," << ids[u] << "," << c << "," << rs[u].scores[c] << ","
             << relevance[u][c] << "\n";
    return os.str();
  }

  const MethodReport &Method(const std::string &name) const {
    for (const auto &m : methods)
      if (m.method == name) return m;
    Fail(Errc::kInvalidArgument, "no method '", name, "' in the report");
  }
};

/// Builds the report. Every ranking list must cover `ids` in order. The
/// oracle row is always included and must dominate every method's Best.
inline EvalReport Evaluate(const std::vector<std::string> &ids,
                           const std::vector<std::vector<double>> &relevance,
                           const std::map<std::string, std::vector<RankingResult>> &by_method,
                           int k = 3, bool wer_view = false) {
  CHANRANK_CHECK(ids.size() == relevance.size(), Errc::kShapeMismatch,
                 "ids and relevance differ in length");
  EvalReport rep;
  rep.k = k;
  rep.wer_view = wer_view;
  rep.ids = ids;
  rep.relevance = relevance;
  rep.rankings = by_method;
  rep.rankings["oracle"] = OracleRankings(relevance, ids);

  std::vector<double> flat_rel;
  for (const auto &w : relevance) flat_rel.insert(flat_rel.end(), w.begin(), w.end());

  auto score = [&](const std::string &name, const std::vector<RankingResult> &rs) {
    for (std::size_t u = 0; u < rs.size() && u < ids.size(); ++u)
      CHANRANK_CHECK(rs[u].id == ids[u], Errc::kShapeMismatch, "method '", name,
                     "' ranks utterance '", rs[u].id, "' where '", ids[u], "' was expected");
    MethodReport m;
    m.method = name;
    m.metrics = ComputeSelectionMetrics(rs, relevance, k);
    m.accuracy = SelectionAccuracy(rs, relevance);
    std::vector<double> flat;
    for (const auto &r : rs) flat.insert(flat.end(), r.scores.begin(), r.scores.end());
    try {
      m.pearson = Pearson(flat, flat_rel);
      m.spearman = Spearman(flat, flat_rel);
    } catch (const Error &e) {
      if (e.code() != Errc::kUndefined && e.code() != Errc::kInvalidArgument) throw;
    }
    return m;
  };
  for (const auto &[name, rs] : by_method) {
    if (name == "oracle" || rs.size() == ids.size()) continue;
    std::map<std::string, int> have;
    for (const auto &r : rs) have[r.id] = 1;
    std::vector<std::string> missing;
    for (const auto &id : ids)
      if (!have.count(id)) missing.push_back(id);
    std::ostringstream os;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) os << (i ? ", " : "") << missing[i];
    Fail(Errc::kShapeMismatch, "method '", name, "' covers ", rs.size(), " of ", ids.size(),
         " utterances; missing: ", os.str());
  }
  rep.methods.push_back(score("oracle", rep.rankings["oracle"]));
  for (const auto &[name, rs] : by_method) {
    if (name == "oracle") continue;
    rep.methods.push_back(score(name, rs));
    CHANRANK_CHECK(rep.methods.front().metrics.best >= rep.methods.back().metrics.best - 1e-12,
                   Errc::kConstraintFailure, "method '", name, "' beats the oracle Best");
  }
  return rep;
}

}  // namespace chanrank
