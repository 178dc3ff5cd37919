// tools/chanrank.cpp

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

// chanrank: simulate, train, rank, train-ev, evaluate, verify.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chanrank/checkpoint.hpp"
#include "chanrank/config.hpp"
#include "chanrank/dsp.hpp"
#include "chanrank/eval.hpp"
#include "chanrank/manifest.hpp"
#include "chanrank/parallel.hpp"
#include "chanrank/ranker.hpp"
#include "chanrank/scene_sim.hpp"
#include "chanrank/selectors.hpp"
#include "chanrank/trainer.hpp"
#include "chanrank/verify.hpp"
#include "chanrank/wav.hpp"

namespace fs = std::filesystem;
using namespace chanrank;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void Log(const std::string &msg) { std::cerr << msg << std::endl; }

RunConfig LoadConfigOrDefault(const std::string &path) {
  return path.empty() ? RunConfig{} : LoadRunConfig(path);
}

void EnsureDir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  CHANRANK_CHECK(!ec && fs::is_directory(dir), Errc::kIo, "cannot create directory '", dir,
                 "'", ec ? ": " + ec.message() : "");
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary);
  CHANRANK_CHECK(f.good(), Errc::kIo, "cannot open ", path, " for writing");
  f << text;
  CHANRANK_CHECK(f.good(), Errc::kIo, "failed writing ", path);
}

/// Output goes to `path`, or standard output for "" and "-".
class Output {
 public:
  explicit Output(const std::string &path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      CHANRANK_CHECK(file_.good(), Errc::kIo, "cannot open ", path, " for writing");
    }
  }
  std::ostream &stream() { return file_.is_open() ? file_ : std::cout; }
  void Finish() {
    stream().flush();
    CHANRANK_CHECK(stream().good(), Errc::kIo, "failed writing output");
  }

 private:
  std::ofstream file_;
};

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string out_dir, config;
  std::optional<int> num;
  std::optional<std::uint64_t> seed;
  bool no_noise = false;
};

std::string UtteranceId(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sim%08llu", static_cast<unsigned long long>(seed));
  return buf;
}

int CmdSimulate(const SimulateArgs &a, int threads) {
  RunConfig cfg = LoadConfigOrDefault(a.config);
  if (a.num) cfg.simulate.num_utterances = *a.num;
  if (a.seed) cfg.simulate.seed = *a.seed;
  if (a.no_noise) cfg.scene_sim.noise = false;
  cfg.Validate();
  EnsureDir(a.out_dir);
  WriteResolvedConfig((fs::path(a.out_dir) / "config.resolved.json").string(), cfg);

  const auto n = static_cast<std::size_t>(cfg.simulate.num_utterances);
  std::vector<ManifestRecord> records(n);
  ParallelFor(n, threads, [&](std::size_t i) {
    const std::uint64_t seed = cfg.simulate.seed + i;
    const SimulatedUtterance u = SimulateUtterance(seed, cfg.scene_sim);
    ManifestRecord r;
    r.id = UtteranceId(seed);
    const std::string rel_dir = "wav/" + r.id;
    EnsureDir((fs::path(a.out_dir) / rel_dir).string());
    for (std::size_t c = 0; c < u.channels.size(); ++c) {
      const std::string rel = rel_dir + "/ch" + std::to_string(c) + ".wav";
      WriteWav((fs::path(a.out_dir) / rel).string(), u.channels[c].samples, kSampleRate,
               WavEncoding::kFloat32);
      r.channel_paths.push_back(rel);
    }
    r.clean_path = rel_dir + "/clean.wav";
    WriteWav((fs::path(a.out_dir) / *r.clean_path).string(), u.clean_ref.samples, kSampleRate,
             WavEncoding::kFloat32);
    r.relevance = u.relevance;
    r.metadata = {{"seed", seed},
                  {"room", RoomJson(u.scene.room)},
                  {"positions", PositionsJson(u.scene.placement)},
                  {"snr_db", u.snr_db ? nlohmann::json(*u.snr_db) : nlohmann::json()},
                  {"sdr_db", u.sdr_db},
                  {"noise_gain", u.noise_gain}};
    records[i] = std::move(r);
  });
  const std::string manifest = (fs::path(a.out_dir) / "manifest.jsonl").string();
  WriteManifest(manifest, records);
  Log("simulate: wrote " + std::to_string(n) + " utterances to " + manifest);
  return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string train, valid, out_dir, config;
  std::optional<std::string> strategy, relevance_metric;
  std::optional<int> epochs, batch, patience;
  std::optional<double> lr, momentum, weight_decay, delta;
  std::optional<std::uint64_t> seed;
  bool resume = false;
};

std::vector<UtteranceFeatures> LoadLabeledFeatures(const Manifest &m, RelevanceMetric metric,
                                                   Strategy strategy, int threads) {
  for (const auto &r : m.records)
    CHANRANK_CHECK(r.relevance.has_value(), Errc::kInvalidArgument, "manifest record '", r.id,
                   "' has no relevance labels");
  std::vector<UtteranceFeatures> out(m.records.size());
  ParallelFor(m.records.size(), threads, [&](std::size_t i) {
    const auto &r = m.records[i];
    std::vector<double> rel;
    try {
      for (double v : *r.relevance) rel.push_back(NormalizeRelevance(metric, v, strategy));
    } catch (const Error &e) {
      Fail(e.code(), "record '", r.id, "': ", e.what());
    }
    out[i] = ExtractUtteranceFeatures(r.id, m.LoadChannels(r), rel);
  });
  return out;
}

/// Keys that may differ between the saved state and a resumed run.
nlohmann::json ComparableTrainConfig(const TrainConfig &c) {
  nlohmann::json j = c;
  j.erase("epochs");
  return j;
}

int CmdTrain(const TrainArgs &a, int threads) {
  RunConfig cfg = LoadConfigOrDefault(a.config);
  TrainConfig &tc = cfg.trainer;
  if (a.strategy) tc.strategy = ParseStrategy(*a.strategy);
  if (a.relevance_metric) cfg.relevance_metric = ParseRelevanceMetric(*a.relevance_metric);
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.batch) tc.batch_utterances = *a.batch;
  if (a.patience) tc.plateau_patience = *a.patience;
  if (a.lr) tc.lr = *a.lr;
  if (a.momentum) tc.momentum = *a.momentum;
  if (a.weight_decay) tc.weight_decay = *a.weight_decay;
  if (a.delta) tc.delta = *a.delta;
  if (a.seed) tc.seed = *a.seed;
  cfg.Validate();

  EnsureDir(a.out_dir);
  const fs::path out(a.out_dir);
  WriteResolvedConfig((out / "config.resolved.json").string(), cfg);
  const std::string state_path = (out / "state.bin").string();
  const std::string ckpt_path = (out / "checkpoint.bin").string();
  const std::string hist_path = (out / "history.jsonl").string();

  const Manifest train_m = ReadManifest(a.train), valid_m = ReadManifest(a.valid);
  Log("train: extracting features for " + std::to_string(train_m.records.size()) + " + " +
      std::to_string(valid_m.records.size()) + " utterances");
  const auto train = LoadLabeledFeatures(train_m, cfg.relevance_metric, tc.strategy, threads);
  const auto valid = LoadLabeledFeatures(valid_m, cfg.relevance_metric, tc.strategy, threads);

  TrainState state;
  std::vector<std::string> history_lines;
  if (a.resume && fs::exists(state_path)) {
    state = LoadTrainState(state_path);
    CHANRANK_CHECK(ComparableTrainConfig(state.config) == ComparableTrainConfig(tc),
                   Errc::kConfigMismatch, "--resume: trainer config differs from ", state_path);
    CHANRANK_CHECK(nlohmann::json(state.model.config) == nlohmann::json(cfg.ranker),
                   Errc::kConfigMismatch, "--resume: ranker config differs from ", state_path);
    state.config.epochs = tc.epochs;
    // Keep the timing of completed epochs when the old history is intact.
    std::ifstream hf(hist_path);
    for (std::string line; std::getline(hf, line) &&
                           history_lines.size() < static_cast<std::size_t>(state.epoch);)
      history_lines.push_back(line);
    if (history_lines.size() != static_cast<std::size_t>(state.epoch)) {
      history_lines.clear();
      for (const auto &h : state.history) history_lines.push_back(HistoryJson(h).dump());
    }
    Log("train: resuming after epoch " + std::to_string(state.epoch));
  } else {
    state = InitTrainState(tc, cfg.ranker);
  }

  auto save = [&] {
    SaveTrainState(state_path, state);
    SaveCheckpoint(ckpt_path, state.BestModel(),
                   {{"strategy", StrategyName(tc.strategy)},
                    {"best_epoch", state.best_epoch},
                    {"best_valid_metric",
                     state.best_epoch > 0 ? nlohmann::json(state.best_metric) : nlohmann::json()}});
    std::string text;
    for (const auto &l : history_lines) text += l + "\n";
    WriteText(hist_path, text);
  };

  TrainOptions opts;
  opts.threads = threads;
  opts.on_warning = [](const std::string &w) { Log("warning: " + w); };
  opts.on_epoch = [&](const HistoryEntry &h) {
    history_lines.push_back(HistoryJson(h).dump());
    save();
    char buf[200];
    std::snprintf(buf, sizeof buf, "epoch %d/%d loss %.6f valid %.6f lr %.4g (%.1f s)", h.epoch,
                  tc.epochs, h.train_loss, h.valid_metric, h.lr, h.wall_time);
    Log(buf);
  };
  TrainEpochs(state, train, valid, opts);
  save();
  Log("train: best epoch " + std::to_string(state.best_epoch) + ", checkpoint " + ckpt_path);
  return 0;
}

// ---------------------------------------------------------------------------
// rank

struct RankArgs {
  std::string manifest, method, out, label;
};

/// Posteriors of channel c: <dir>/<id>/ch<c>.csv, else <dir>/<id>/ch<c>.bin.
MatD LoadChannelPosteriors(const std::string &dir, const std::string &id, std::size_t c) {
  const fs::path base = fs::path(dir) / id / ("ch" + std::to_string(c));
  for (const char *ext : {".csv", ".bin"}) {
    const fs::path p = base.string() + ext;
    if (fs::exists(p)) return ReadPosteriors(p.string());
  }
  Fail(Errc::kIo, "no posteriors for record '", id, "' channel ", c, " under ", dir);
}

Waveform LoadClean(const Manifest &m, const ManifestRecord &r, const std::string &method) {
  CHANRANK_CHECK(r.clean_path.has_value(), Errc::kInvalidArgument, "record '", r.id,
                 "' has no clean_path, which method ", method, " requires");
  return Waveform::Load(m.Resolve(*r.clean_path));
}

int CmdRank(const RankArgs &a, int threads) {
  const auto colon = a.method.find(':');
  const std::string kind = a.method.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : a.method.substr(colon + 1);
  const std::map<std::string, bool> kinds = {  // value: argument required
      {"ranker", true},    {"ev", false},   {"cd-blind", false}, {"cd-informed", false},
      {"entropy", true},   {"sdr", false},  {"closest", false},  {"random", true}};
  const auto k = kinds.find(kind);
  if (k == kinds.end() || (k->second && arg.empty()) ||
      (!k->second && kind != "ev" && !arg.empty()))
    throw CLI::ValidationError("--method", "unknown or malformed method '" + a.method +
                                               "' (expected ranker:<checkpoint>, ev[:<weights>], "
                                               "cd-blind, cd-informed, entropy:<dir>, sdr, "
                                               "closest or random:<seed>)");
  std::uint64_t random_seed = 0;
  if (kind == "random") {
    try {
      std::size_t used = 0;
      random_seed = std::stoull(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::logic_error &) {
      throw CLI::ValidationError("--method", "random seed '" + arg + "' is not an integer");
    }
  }

  std::optional<RankerModel<float>> model;
  if (kind == "ranker") {
    model = LoadCheckpoint(arg);
    CHANRANK_CHECK(model->config.n_mels == kNumMels, Errc::kConfigMismatch, "checkpoint ", arg,
                   " expects n_mels=", model->config.n_mels, " but features have ", kNumMels,
                   " bands");
  }
  EvWeights ev = EvWeights::Uniform();
  if (kind == "ev" && !arg.empty()) {
    std::ifstream f(arg);
    CHANRANK_CHECK(f.good(), Errc::kIo, "cannot open EV weights ", arg);
    try {
      ev = EvWeights::FromJson(nlohmann::json::parse(f));
    } catch (const nlohmann::json::exception &e) {
      Fail(Errc::kFormat, arg, ": ", e.what());
    }
  }

  const Manifest m = ReadManifest(a.manifest);
  const std::size_t n = m.records.size();
  std::vector<std::optional<RankingResult>> results(n);
  std::vector<std::string> errors(n);
  ParallelFor(n, threads, [&](std::size_t i) {
    const ManifestRecord &r = m.records[i];
    try {
      ChannelScores s;
      if (kind == "random") {
        s = RandomSelect(static_cast<int>(r.channel_paths.size()), random_seed);
      } else if (kind == "closest") {
        const Scene scene = SceneFromMetadata(r);
        CHANRANK_CHECK(scene.placement.mics.size() == r.channel_paths.size(),
                       Errc::kShapeMismatch, "record '", r.id, "' metadata lists ",
                       scene.placement.mics.size(), " mics for ", r.channel_paths.size(),
                       " channels");
        s = ClosestSelect(scene.placement.speaker, scene.placement.mics);
      } else if (kind == "entropy") {
        std::vector<MatD> post;
        for (std::size_t c = 0; c < r.channel_paths.size(); ++c)
          post.push_back(LoadChannelPosteriors(arg, r.id, c));
        s = PosteriorEntropy(post);
      } else {
        const std::vector<Waveform> waves = m.LoadChannels(r);
        if (kind == "ranker") {
          std::vector<LogMelFeatures> feats;
          for (const auto &w : waves) feats.push_back(LogMel(w));
          s = ScoreUtterance(*model, feats);
        } else if (kind == "ev") {
          std::vector<SubbandEnvelopes> envs;
          for (const auto &w : waves) envs.push_back(Envelopes(w));
          s = EnvelopeVariance(envs, ev);
        } else if (kind == "sdr") {
          s = SdrScores(waves, LoadClean(m, r, kind));
        } else {
          std::vector<CepstralFrames> ceps;
          for (const auto &w : waves) ceps.push_back(Cepstra(w));
          std::optional<CepstralFrames> ref;
          if (kind == "cd-informed") ref = Cepstra(LoadClean(m, r, kind));
          s = CepstralDistance(ceps, ref);
        }
      }
      if (!a.label.empty()) s.method = a.label;
      results[i] = RankChannels(s, r.id);
    } catch (const Error &e) {
      errors[i] = e.what();
    }
  });

  Output out(a.out);
  int failures = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (results[i]) {
      out.stream() << RankingJson(*results[i]).dump() << "\n";
    } else {
      ++failures;
      Log("error: record '" + m.records[i].id + "': " + errors[i]);
    }
  }
  out.Finish();
  Log("rank: " + std::to_string(n - failures) + " of " + std::to_string(n) + " records ranked");
  return failures ? kExitRuntime : 0;
}

// ---------------------------------------------------------------------------
// train-ev

struct TrainEvArgs {
  std::string manifest, out;
  double lr = EvTrainOptions{}.lr;
  int epochs = EvTrainOptions{}.epochs;
};

int CmdTrainEv(const TrainEvArgs &a, int threads) {
  const Manifest m = ReadManifest(a.manifest);
  const auto relevance = m.Relevance();
  std::vector<EvExample> data(m.records.size());
  ParallelFor(m.records.size(), threads, [&](std::size_t i) {
    std::vector<SubbandEnvelopes> envs;
    for (const auto &w : m.LoadChannels(m.records[i])) envs.push_back(Envelopes(w));
    data[i] = {EvFeatures(envs), static_cast<int>(ArgMax(relevance[i]))};
  });
  const EvTrainResult r = TrainEvWeights(data, {a.lr, a.epochs});
  WriteText(a.out, r.weights.ToJson().dump(2) + "\n");
  char buf[160];
  std::snprintf(buf, sizeof buf, "train-ev: cross-entropy %.6f -> %.6f, weights in %s",
                r.loss_history.front(), r.loss_history.back(), a.out.c_str());
  Log(buf);
  return 0;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateArgs {
  std::string manifest, config, format = "table", out;
  std::vector<std::string> rankings;
  std::optional<int> k;
  bool wer_view = false;
};

int CmdEvaluate(const EvaluateArgs &a) {
  RunConfig cfg = LoadConfigOrDefault(a.config);
  if (a.k) cfg.eval.k = *a.k;
  if (a.wer_view) cfg.eval.wer_view = true;
  cfg.Validate();

  const Manifest m = ReadManifest(a.manifest);
  const auto ids = m.Ids();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index[ids[i]] = i;

  // Rankings are regrouped per method and put in manifest order.
  std::map<std::string, std::vector<std::optional<RankingResult>>> slots;
  for (const auto &path : a.rankings) {
    std::ifstream f(path);
    CHANRANK_CHECK(f.good(), Errc::kIo, "cannot open rankings ", path);
    int line_no = 0;
    for (std::string line; std::getline(f, line);) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = path + ":" + std::to_string(line_no);
      RankingResult r;
      try {
        r = RankingFromJson(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception &e) {
        Fail(Errc::kFormat, where, ": ", e.what());
      }
      const auto it = index.find(r.id);
      CHANRANK_CHECK(it != index.end(), Errc::kShapeMismatch, where, ": utterance '", r.id,
                     "' is not in the manifest");
      auto &v = slots[r.method];
      v.resize(ids.size());
      CHANRANK_CHECK(!v[it->second], Errc::kFormat, where, ": method '", r.method,
                     "' ranks utterance '", r.id, "' twice");
      v[it->second] = std::move(r);
    }
  }
  std::map<std::string, std::vector<RankingResult>> by_method;
  for (auto &[name, v] : slots) {
    auto &dst = by_method[name];
    for (auto &r : v)
      if (r) dst.push_back(std::move(*r));
  }

  const EvalReport rep = Evaluate(ids, m.Relevance(), by_method, cfg.eval.k, cfg.eval.wer_view);
  Output out(a.out);
  if (a.format == "json") out.stream() << rep.ToJson().dump(2) << "\n";
  else if (a.format == "csv") out.stream() << rep.ToCsv();
  else out.stream() << rep.ToTable();
  out.Finish();
  return 0;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  VerifyOptions opts;
};

int CmdVerify(const VerifyArgs &a) {
  const auto t0 = std::chrono::steady_clock::now();
  const Census census = ParameterCensus(RankerConfig{});
  std::cout << "census: " << census.total << " parameters" << std::endl;
  int failed = 0;
  for (const auto &r : RunVerification(a.opts)) {
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << "  " << r.detail << std::endl;
    failed += !r.pass;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char buf[120];
  std::snprintf(buf, sizeof buf, "verify: %d failure(s) in %.1f s", failed, secs);
  std::cout << buf << std::endl;
  return failed ? kExitRuntime : 0;
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"chanrank: ad-hoc microphone channel ranking"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  std::optional<int> threads_flag;
  app.add_option("--threads", threads_flag,
                 std::string("worker threads (default: $") + kThreadsEnv +
                     " or the hardware concurrency)")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> strategies;
  for (Strategy s : {Strategy::kPointwiseXce, Strategy::kPointwiseMse, Strategy::kRankNet,
                     Strategy::kListNet})
    strategies.push_back(StrategyName(s));

  SimulateArgs sim;
  auto *c_sim = app.add_subcommand("simulate", "render a simulated multi-channel dataset");
  c_sim->add_option("--out", sim.out_dir, "output directory")->required();
  c_sim->add_option("--config", sim.config, "run config JSON")->check(CLI::ExistingFile);
  c_sim->add_option("-n,--num-utterances", sim.num, "number of utterances")
      ->check(CLI::NonNegativeNumber);
  c_sim->add_option("--seed", sim.seed, "seed of the first utterance");
  c_sim->add_flag("--no-noise", sim.no_noise, "disable the point noise source");

  TrainArgs tr;
  auto *c_train = app.add_subcommand("train", "train a neural channel ranker");
  c_train->add_option("--train", tr.train, "training manifest")->required()
      ->check(CLI::ExistingFile);
  c_train->add_option("--valid", tr.valid, "validation manifest")->required()
      ->check(CLI::ExistingFile);
  c_train->add_option("--out", tr.out_dir, "output directory")->required();
  c_train->add_option("--config", tr.config, "run config JSON")->check(CLI::ExistingFile);
  c_train->add_option("--strategy", tr.strategy, "loss")->check(CLI::IsMember(strategies));
  c_train->add_option("--relevance-metric", tr.relevance_metric, "label mapping")
      ->check(CLI::IsMember({"wa", "wer", "raw"}));
  c_train->add_option("--epochs", tr.epochs)->check(CLI::NonNegativeNumber);
  c_train->add_option("--batch", tr.batch, "utterances per batch")->check(CLI::PositiveNumber);
  c_train->add_option("--plateau-patience", tr.patience)->check(CLI::NonNegativeNumber);
  c_train->add_option("--lr", tr.lr)->check(CLI::NonNegativeNumber);
  c_train->add_option("--momentum", tr.momentum);
  c_train->add_option("--weight-decay", tr.weight_decay);
  c_train->add_option("--delta", tr.delta, "RankNet pair margin");
  c_train->add_option("--seed", tr.seed);
  c_train->add_flag("--resume", tr.resume, "continue from <out>/state.bin when present");

  RankArgs rk;
  auto *c_rank = app.add_subcommand("rank", "rank the channels of every manifest record");
  c_rank->add_option("--manifest", rk.manifest)->required()->check(CLI::ExistingFile);
  c_rank->add_option("--method", rk.method,
                     "ranker:<checkpoint>, ev[:<weights>], cd-blind, cd-informed, "
                     "entropy:<dir>, sdr, closest, random:<seed>")
      ->required();
  c_rank->add_option("--out", rk.out, "JSON-lines output (default: stdout)");
  c_rank->add_option("--label", rk.label, "method name written to the output");

  TrainEvArgs tev;
  auto *c_tev = app.add_subcommand("train-ev", "learn envelope-variance band weights");
  c_tev->add_option("--manifest", tev.manifest)->required()->check(CLI::ExistingFile);
  c_tev->add_option("--out", tev.out, "weights JSON")->required();
  c_tev->add_option("--lr", tev.lr)->check(CLI::NonNegativeNumber);
  c_tev->add_option("--epochs", tev.epochs)->check(CLI::NonNegativeNumber);

  EvaluateArgs ev;
  auto *c_eval = app.add_subcommand("evaluate", "compare rankings against relevance labels");
  c_eval->add_option("--manifest", ev.manifest)->required()->check(CLI::ExistingFile);
  c_eval->add_option("rankings", ev.rankings, "ranking JSON-lines files")->required();
  c_eval->add_option("--config", ev.config, "run config JSON")->check(CLI::ExistingFile);
  c_eval->add_option("-k", ev.k, "top-k size")->check(CLI::PositiveNumber);
  c_eval->add_flag("--wer-view", ev.wer_view, "also report 1 - relevance");
  c_eval->add_option("--format", ev.format)->check(CLI::IsMember({"table", "json", "csv"}));
  c_eval->add_option("--out", ev.out, "report file (default: stdout)");

  VerifyArgs ver;
  auto *c_ver = app.add_subcommand("verify", "run the fast verification suite");
  c_ver->add_option("--probes", ver.opts.probes, "parameters probed per loss")
      ->check(CLI::PositiveNumber);
  c_ver->add_option("--inject-gradient-fault", ver.opts.gradient_fault)->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    const int threads = threads_flag ? *threads_flag : DefaultThreadCount();
    if (*c_sim) return CmdSimulate(sim, threads);
    if (*c_train) return CmdTrain(tr, threads);
    if (*c_rank) return CmdRank(rk, threads);
    if (*c_tev) return CmdTrainEv(tev, threads);
    if (*c_eval) return CmdEvaluate(ev);
    if (*c_ver) return CmdVerify(ver);
  } catch (const CLI::ParseError &e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  } catch (const Error &e) {
    Log(std::string("error: ") + e.what());
    return kExitRuntime;
  } catch (const std::exception &e) {
    Log(std::string("error: ") + e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
