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

#include "fnas/privacy/tradeoff.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"
#include "fnas/privacy/normal.h"

namespace fnas {
namespace {

template <typename F>
TradeoffFunction Tabulate(std::size_t n, F f) {
  std::vector<double> beta(n);
  for (std::size_t i = 0; i < n; ++i) {
    beta[i] = f(static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return *TradeoffFunction::FromValues(std::move(beta));
}

}  // namespace

absl::StatusOr<TradeoffFunction> TradeoffFunction::FromValues(
    std::vector<double> beta) {
  if (beta.size() < 2) {
    return absl::InvalidArgumentError("a trade-off grid needs >= 2 points");
  }
  return TradeoffFunction(std::move(beta));
}

double TradeoffFunction::Evaluate(double alpha) const {
  const double pos = std::clamp(alpha, 0.0, 1.0) *
                     static_cast<double>(beta_.size() - 1);
  const std::size_t i =
      std::min(static_cast<std::size_t>(pos), beta_.size() - 2);
  const double frac = pos - static_cast<double>(i);
  return beta_[i] + frac * (beta_[i + 1] - beta_[i]);
}

absl::Status TradeoffFunction::Validate(double tol) const {
  for (std::size_t i = 0; i < beta_.size(); ++i) {
    const double b = beta_[i];
    if (!(b >= -tol && b <= 1.0 + tol)) {
      return absl::FailedPreconditionError(
          absl::StrCat("beta out of [0, 1] at alpha=", alpha(i)));
    }
    if (b > 1.0 - alpha(i) + tol) {
      return absl::FailedPreconditionError(
          absl::StrCat("beta above the identity at alpha=", alpha(i)));
    }
    if (i > 0 && b > beta_[i - 1] + tol) {
      return absl::FailedPreconditionError(
          absl::StrCat("beta increases at alpha=", alpha(i)));
    }
    if (i > 0 && i + 1 < beta_.size() &&
        beta_[i - 1] - 2.0 * b + beta_[i + 1] < -tol) {
      return absl::FailedPreconditionError(
          absl::StrCat("beta not convex at alpha=", alpha(i)));
    }
  }
  return absl::OkStatus();
}

double EvalGMu(double mu, double alpha) {
  if (alpha <= 0.0) return 1.0;
  if (alpha >= 1.0) return 0.0;
  // Phi^{-1}(1 - alpha) = -Phi^{-1}(alpha), which avoids cancellation in
  // 1 - alpha for small alpha.
  return NormalCdf(-NormalQuantile(alpha) - mu);
}

double EvalFEpsDelta(double eps, double delta, double alpha) {
  return std::max({0.0, 1.0 - delta - std::exp(eps) * alpha,
                   std::exp(-eps) * (1.0 - delta - alpha)});
}

double GdpDeltaForEpsilon(double mu, double eps) {
  if (mu == 0.0) return 0.0;
  if (std::isinf(mu)) return 1.0;
  return NormalCdf(-eps / mu + mu / 2.0) -
         std::exp(eps) * NormalCdf(-eps / mu - mu / 2.0);
}

TradeoffFunction IdentityTradeoff(std::size_t n) {
  return Tabulate(n, [](double a) { return 1.0 - a; });
}

TradeoffFunction GaussianTradeoff(double mu, std::size_t n) {
  return Tabulate(n, [mu](double a) { return EvalGMu(mu, a); });
}

TradeoffFunction EpsDeltaTradeoff(double eps, double delta, std::size_t n) {
  return Tabulate(n, [=](double a) { return EvalFEpsDelta(eps, delta, a); });
}

TradeoffFunction InverseTradeoff(const TradeoffFunction& f) {
  const std::size_t n = f.size();
  std::vector<double> inv(n);
  std::size_t i = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double target = f.alpha(j);
    // First grid index whose value has dropped to the target; the targets
    // increase with j, so the index never moves forward again.
    while (i > 0 && f.beta(i - 1) <= target) --i;
    while (i < n && f.beta(i) > target) ++i;
    if (i == 0) {
      inv[j] = 0.0;
    } else if (i == n) {
      inv[j] = 1.0;
    } else {
      const double hi = f.beta(i - 1), lo = f.beta(i);
      const double frac = (hi - target) / (hi - lo);
      inv[j] = f.alpha(i - 1) + frac * (f.alpha(i) - f.alpha(i - 1));
    }
  }
  return *TradeoffFunction::FromValues(std::move(inv));
}

std::vector<std::size_t> LowerConvexHull(const std::vector<double>& x,
                                         const std::vector<double>& y) {
  std::vector<std::size_t> hull;
  for (std::size_t k = 0; k < x.size(); ++k) {
    // Pop while the last two hull points and k do not turn left.
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      const double cross =
          (x[b] - x[a]) * (y[k] - y[a]) - (y[b] - y[a]) * (x[k] - x[a]);
      if (cross > 0.0) break;
      hull.pop_back();
    }
    hull.push_back(k);
  }
  return hull;
}

TradeoffFunction DoubleConjugate(const TradeoffFunction& f) {
  const std::size_t n = f.size();
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = f.alpha(i);
  const std::vector<std::size_t> hull = LowerConvexHull(x, f.betas());
  std::vector<double> out(n);
  for (std::size_t h = 0; h + 1 < hull.size(); ++h) {
    const std::size_t a = hull[h], b = hull[h + 1];
    out[a] = f.beta(a);
    for (std::size_t i = a + 1; i < b; ++i) {
      const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
      out[i] = f.beta(a) + t * (f.beta(b) - f.beta(a));
    }
  }
  out[hull.back()] = f.beta(hull.back());
  return *TradeoffFunction::FromValues(std::move(out));
}

absl::StatusOr<TradeoffFunction> SubsampleOperator(const TradeoffFunction& f,
                                                   double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("subsampling probability must lie in [0, 1], got ", p));
  }
  std::vector<double> fp(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    fp[i] = p * f.beta(i) + (1.0 - p) * (1.0 - f.alpha(i));
  }
  TradeoffFunction mixed = *TradeoffFunction::FromValues(std::move(fp));
  TradeoffFunction inverse = InverseTradeoff(mixed);
  std::vector<double> lower(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    lower[i] = std::min(mixed.beta(i), inverse.beta(i));
  }
  return DoubleConjugate(*TradeoffFunction::FromValues(std::move(lower)));
}

}  // namespace fnas
