// chanrank/parallel.hpp

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

// Minimal fork-join helper. Callers write results into per-index slots and
// reduce them in index order, so results never depend on the thread count.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "chanrank/common.hpp"

namespace chanrank {

inline constexpr const char *kThreadsEnv = "CHANRANK_THREADS";

/// Thread count from CHANRANK_THREADS, else the hardware concurrency.
inline int DefaultThreadCount() {
  if (const char *env = std::getenv(kThreadsEnv)) {
    try {
      const int n = std::stoi(env);
      CHANRANK_CHECK(n >= 1, Errc::kInvalidArgument, kThreadsEnv, " must be >= 1");
      return n;
    } catch (const std::logic_error &) {
      Fail(Errc::kInvalidArgument, kThreadsEnv, "='", env, "' is not an integer");
    }
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs fn(i) for i in [0, n). The exception of the lowest failing index is
/// rethrown after all workers finish.
template <typename F>
void ParallelFor(std::size_t n, int threads, F &&fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < count; ++t) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();
  for (auto &e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace chanrank
