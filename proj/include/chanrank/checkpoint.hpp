// chanrank/checkpoint.hpp

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

// Binary containers for models and training state.
//
// Layout (little endian):
//   8 bytes   magic ("CHRNKMDL" model, "CHRNKSTA" training state)
//   u32       format version
//   u64       header length H
//   H bytes   JSON header (keys sorted, compact)
//   ...       float32 arrays described by the header, back to back

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "chanrank/common.hpp"
#include "chanrank/ranker.hpp"
#include "chanrank/trainer.hpp"
#include "json.hpp"

namespace chanrank {

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kModelMagic[9] = "CHRNKMDL";
inline constexpr char kStateMagic[9] = "CHRNKSTA";

static_assert(std::endian::native == std::endian::little, "checkpoints assume little endian");

namespace checkpoint_detail {

inline std::string Container(const char *magic, const nlohmann::json &header,
                             const std::vector<const std::vector<float> *> &arrays) {
  std::string out(magic, 8);
  const std::string h = header.dump();
  const std::uint32_t version = kCheckpointVersion;
  const std::uint64_t len = h.size();
  out.append(reinterpret_cast<const char *>(&version), sizeof version);
  out.append(reinterpret_cast<const char *>(&len), sizeof len);
  out += h;
  for (const auto *a : arrays)
    out.append(reinterpret_cast<const char *>(a->data()), a->size() * sizeof(float));
  return out;
}

struct Parsed {
  nlohmann::json header;
  std::size_t data_offset = 0;
};

inline Parsed Parse(const std::string &bytes, const char *magic, const std::string &what) {
  CHANRANK_CHECK(bytes.size() >= 20 && bytes.compare(0, 8, magic) == 0, Errc::kFormat, what,
                 " does not start with the expected magic");
  std::uint32_t version;
  std::uint64_t len;
  std::memcpy(&version, bytes.data() + 8, sizeof version);
  std::memcpy(&len, bytes.data() + 12, sizeof len);
  CHANRANK_CHECK(version == kCheckpointVersion, Errc::kFormat, what, " has format version ",
                 version, ", expected ", kCheckpointVersion);
  CHANRANK_CHECK(len <= bytes.size() - 20, Errc::kFormat, what, " header is truncated");
  Parsed p;
  try {
    p.header = nlohmann::json::parse(bytes.substr(20, len));
  } catch (const nlohmann::json::exception &e) {
    Fail(Errc::kFormat, what, " header is not valid JSON: ", e.what());
  }
  p.data_offset = 20 + len;
  return p;
}

inline std::vector<float> ReadArray(const std::string &bytes, std::size_t &offset, std::size_t n,
                                    const std::string &what) {
  CHANRANK_CHECK(offset + n * sizeof(float) <= bytes.size(), Errc::kFormat, what,
                 " data is truncated");
  std::vector<float> out(n);
  std::memcpy(out.data(), bytes.data() + offset, n * sizeof(float));
  offset += n * sizeof(float);
  return out;
}

inline void WriteFile(const std::string &path, const std::string &bytes) {
  std::ofstream f(path, std::ios::binary);
  CHANRANK_CHECK(f.good(), Errc::kIo, "cannot open ", path, " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  CHANRANK_CHECK(f.good(), Errc::kIo, "failed writing ", path);
}

inline std::string ReadFile(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  CHANRANK_CHECK(f.good(), Errc::kIo, "cannot open ", path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

inline nlohmann::json TensorTable(const RankerLayout &l) {
  nlohmann::json t = nlohmann::json::array();
  for (const auto &x : l.tensors) t.push_back({{"name", x.name}, {"shape", {x.rows, x.cols}}});
  return t;
}

inline void CheckTensorTable(const nlohmann::json &table, const RankerLayout &l,
                             const std::string &what) {
  CHANRANK_CHECK(table.is_array() && table.size() == l.tensors.size(), Errc::kFormat, what,
                 " lists ", table.size(), " tensors, its config implies ", l.tensors.size());
  for (std::size_t i = 0; i < l.tensors.size(); ++i) {
    const auto &t = l.tensors[i];
    CHANRANK_CHECK(table[i].at("name").get<std::string>() == t.name &&
                       table[i].at("shape") == nlohmann::json({t.rows, t.cols}),
                   Errc::kFormat, what, " tensor ", i, " does not match ", t.name, " [", t.rows,
                   "x", t.cols, "]");
  }
}

}  // namespace checkpoint_detail

/// Serialized model; `extra` lands under "metadata" in the header.
inline std::string EncodeCheckpoint(const RankerModel<float> &m,
                                    const nlohmann::json &extra = nlohmann::json::object()) {
  nlohmann::json h = {{"format_version", kCheckpointVersion},
                      {"kind", "ranker"},
                      {"config", m.config},
                      {"seed", m.seed},
                      {"num_params", m.NumParams()},
                      {"tensors", checkpoint_detail::TensorTable(m.layout)},
                      {"metadata", extra}};
  return checkpoint_detail::Container(kModelMagic, h, {&m.params});
}

inline RankerModel<float> DecodeCheckpoint(const std::string &bytes,
                                           const std::string &what = "checkpoint") {
  using namespace checkpoint_detail;
  Parsed p = Parse(bytes, kModelMagic, what);
  RankerConfig c;
  try {
    c = p.header.at("config").get<RankerConfig>();
  } catch (const nlohmann::json::exception &e) {
    Fail(Errc::kFormat, what, " header: ", e.what());
  }
  RankerModel<float> m(c, p.header.at("seed").get<std::uint64_t>());
  CheckTensorTable(p.header.at("tensors"), m.layout, what);
  std::size_t off = p.data_offset;
  m.params = ReadArray(bytes, off, m.NumParams(), what);
  CHANRANK_CHECK(off == bytes.size(), Errc::kFormat, what, " has ", bytes.size() - off,
                 " trailing bytes");
  for (float v : m.params)
    CHANRANK_CHECK(std::isfinite(v), Errc::kFormat, what, " holds non-finite parameters");
  return m;
}

inline void SaveCheckpoint(const std::string &path, const RankerModel<float> &m,
                           const nlohmann::json &extra = nlohmann::json::object()) {
  checkpoint_detail::WriteFile(path, EncodeCheckpoint(m, extra));
}

inline RankerModel<float> LoadCheckpoint(const std::string &path) {
  return DecodeCheckpoint(checkpoint_detail::ReadFile(path), path);
}

inline std::string EncodeTrainState(const TrainState &s) {
  // Wall time is left out so that identical runs give identical bytes.
  nlohmann::json hist = nlohmann::json::array();
  for (const auto &h : s.history) {
    nlohmann::json e = HistoryJson(h);
    e.erase("wall_time");
    hist.push_back(std::move(e));
  }
  nlohmann::json h = {{"format_version", kCheckpointVersion},
                      {"kind", "train_state"},
                      {"train_config", s.config},
                      {"ranker_config", s.model.config},
                      {"seed", s.model.seed},
                      {"epoch", s.epoch},
                      {"lr", s.lr},
                      {"best_epoch", s.best_epoch},
                      {"since_best", s.since_best},
                      {"history", hist},
                      {"tensors", checkpoint_detail::TensorTable(s.model.layout)}};
  if (s.best_epoch > 0) h["best_metric"] = s.best_metric;
  std::vector<const std::vector<float> *> arrays{&s.model.params, &s.velocity};
  if (s.best_epoch > 0) arrays.push_back(&s.best_params);
  return checkpoint_detail::Container(kStateMagic, h, arrays);
}

inline TrainState DecodeTrainState(const std::string &bytes,
                                   const std::string &what = "training state") {
  using namespace checkpoint_detail;
  Parsed p = Parse(bytes, kStateMagic, what);
  TrainState s;
  try {
    const auto &h = p.header;
    s.config = h.at("train_config").get<TrainConfig>();
    s.model = RankerModel<float>(h.at("ranker_config").get<RankerConfig>(),
                                 h.at("seed").get<std::uint64_t>());
    CheckTensorTable(h.at("tensors"), s.model.layout, what);
    s.epoch = h.at("epoch").get<int>();
    s.lr = h.at("lr").get<double>();
    s.best_epoch = h.at("best_epoch").get<int>();
    s.since_best = h.at("since_best").get<int>();
    if (s.best_epoch > 0) s.best_metric = h.at("best_metric").get<double>();
    for (const auto &e : h.at("history")) s.history.push_back(HistoryFromJson(e));
  } catch (const nlohmann::json::exception &e) {
    Fail(Errc::kFormat, what, " header: ", e.what());
  }
  std::size_t off = p.data_offset;
  const std::size_t n = s.model.NumParams();
  s.model.params = ReadArray(bytes, off, n, what);
  s.velocity = ReadArray(bytes, off, n, what);
  if (s.best_epoch > 0) s.best_params = ReadArray(bytes, off, n, what);
  CHANRANK_CHECK(off == bytes.size(), Errc::kFormat, what, " has trailing bytes");
  return s;
}

inline void SaveTrainState(const std::string &path, const TrainState &s) {
  checkpoint_detail::WriteFile(path, EncodeTrainState(s));
}

inline TrainState LoadTrainState(const std::string &path) {
  return DecodeTrainState(checkpoint_detail::ReadFile(path), path);
}

}  // namespace chanrank
