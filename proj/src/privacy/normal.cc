// Copyright 2026 The DP-FNAS Lab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fnas/privacy/normal.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace fnas {

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double NormalPdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

double NormalQuantile(double p) {
  if (!(p > 0.0)) return -std::numeric_limits<double>::infinity();
  if (!(p < 1.0)) return std::numeric_limits<double>::infinity();
  // Work in the lower tail, where p itself carries full precision.
  if (p > 0.5) return -NormalQuantile(1.0 - p);
  double lo = -40.0, hi = 0.0;
  while (hi - lo > 1e-3) {
    const double mid = 0.5 * (lo + hi);
    if (NormalCdf(mid) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 50; ++i) {
    const double step = (NormalCdf(x) - p) / NormalPdf(x);
    const double next = std::clamp(x - step, lo, hi);
    if (next == x) break;
    x = next;
  }
  return x;
}

}  // namespace fnas
