// include/chanrank/gradcheck.hpp

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

// Central finite differences, kept apart from every analytic code path.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

namespace chanrank {

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero gradients from
/// turning round-off into huge relative errors.
inline double RelativeError(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// d f / d x at x by (f(x + h) - f(x - h)) / 2h. `set` writes a value into the
/// probed coordinate, `eval` returns the objective.
inline double CentralDifference(const std::function<void(double)> &set,
                                const std::function<double()> &eval, double x,
                                double h = 1e-5) {
  set(x + h);
  const double up = eval();
  set(x - h);
  const double down = eval();
  set(x);
  return (up - down) / (2.0 * h);
}

}  // namespace chanrank
