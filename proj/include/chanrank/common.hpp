// include/chanrank/common.hpp

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

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chanrank {

inline constexpr int kSampleRate = 16000;
inline constexpr int kNumMels = 40;
inline constexpr double kLogFloor = 1e-10;

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;

using MatD = Mat<double>;
using VecD = Vec<double>;

enum class Errc {
  kInvalidArgument,
  kTooShort,
  kShapeMismatch,
  kConstraintFailure,
  kOutsideRoom,
  kSilentInput,
  kNotStochastic,
  kUndefined,
  kConfigMismatch,
  kDiverged,
  kIo,
  kFormat,
};

inline const char *ErrcName(Errc c) {
  switch (c) {
    case Errc::kInvalidArgument: return "invalid-argument";
    case Errc::kTooShort: return "too-short";
    case Errc::kShapeMismatch: return "shape-mismatch";
    case Errc::kConstraintFailure: return "constraint-failure";
    case Errc::kOutsideRoom: return "outside-room";
    case Errc::kSilentInput: return "silent-input";
    case Errc::kNotStochastic: return "not-stochastic";
    case Errc::kUndefined: return "undefined";
    case Errc::kConfigMismatch: return "config-mismatch";
    case Errc::kDiverged: return "diverged";
    case Errc::kIo: return "io";
    case Errc::kFormat: return "format";
  }
  return "unknown";
}

/// Library-wide exception; `code()` tells callers which contract was broken.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string &what)
      : std::runtime_error(std::string(ErrcName(code)) + ": " + what),
        code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

template <typename... Args>
[[noreturn]] void Fail(Errc code, Args &&...args) {
  std::ostringstream os;
  (os << ... << std::forward<Args>(args));
  throw Error(code, os.str());
}

#define CHANRANK_CHECK(cond, code, ...)                   \
  do {                                                    \
    if (!(cond)) ::chanrank::Fail((code), __VA_ARGS__);   \
  } while (0)

/// Scores for M channels, higher is better.
struct ChannelScores {
  std::vector<double> scores;
  std::string method;
};

inline double Logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// Index of the largest element, ties to the lowest index.
inline std::size_t ArgMax(const std::vector<double> &v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Derives an independent, reproducible generator from a base seed and a
/// stream tag.
inline std::mt19937_64 DerivedRng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream & 0xffffffffu),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

// Uniform double in [lo, hi) built from raw engine output, so results do not
// depend on the standard library's distribution implementation.
inline double UniformDouble(std::mt19937_64 &rng, double lo, double hi) {
  double u = static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
  return lo + (hi - lo) * u;
}

// Uniform integer in [lo, hi].
inline std::int64_t UniformInt(std::mt19937_64 &rng, std::int64_t lo,
                               std::int64_t hi) {
  auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % span);
}

inline double StandardNormal(std::mt19937_64 &rng) {
  // Box-Muller; one draw per call keeps the stream easy to reason about.
  double u1 = UniformDouble(rng, 0.0, 1.0);
  double u2 = UniformDouble(rng, 0.0, 1.0);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Fisher-Yates with the portable integer draw above.
template <typename It>
void Shuffle(It first, It last, std::mt19937_64 &rng) {
  auto n = static_cast<std::int64_t>(last - first);
  for (std::int64_t i = n - 1; i > 0; --i) {
    auto j = UniformInt(rng, 0, i);
    std::swap(first[i], first[j]);
  }
}

}  // namespace chanrank
