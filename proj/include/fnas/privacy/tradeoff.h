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

#ifndef FNAS_PRIVACY_TRADEOFF_H_
#define FNAS_PRIVACY_TRADEOFF_H_

#include <cstddef>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace fnas {

inline constexpr std::size_t kDefaultGridSize = 10001;

// Type-II error beta[i] at alpha_i = i / (n - 1).
class TradeoffFunction {
 public:
  // Requires n >= 2 values; does not check the trade-off invariants.
  static absl::StatusOr<TradeoffFunction> FromValues(std::vector<double> beta);

  std::size_t size() const { return beta_.size(); }
  double alpha(std::size_t i) const {
    return static_cast<double>(i) / static_cast<double>(beta_.size() - 1);
  }
  double beta(std::size_t i) const { return beta_[i]; }
  const std::vector<double>& betas() const { return beta_; }

  // Piecewise-linear interpolation between grid points.
  double Evaluate(double alpha) const;

  // Non-increasing, convex (second differences >= -tol), within [0, 1] and
  // below the identity line 1 - alpha, each up to `tol`.
  absl::Status Validate(double tol = 1e-9) const;

 private:
  explicit TradeoffFunction(std::vector<double> beta)
      : beta_(std::move(beta)) {}

  std::vector<double> beta_;
};

// G_mu(alpha) = Phi(Phi^{-1}(1 - alpha) - mu), the trade-off between N(0, 1)
// and N(mu, 1).
double EvalGMu(double mu, double alpha);

// max{0, 1 - delta - e^eps alpha, e^-eps (1 - delta - alpha)}.
double EvalFEpsDelta(double eps, double delta, double alpha);

// delta(eps) of the (eps, delta)-DP curve dual to G_mu.
double GdpDeltaForEpsilon(double mu, double eps);

TradeoffFunction IdentityTradeoff(std::size_t n = kDefaultGridSize);
TradeoffFunction GaussianTradeoff(double mu, std::size_t n = kDefaultGridSize);
TradeoffFunction EpsDeltaTradeoff(double eps, double delta,
                                  std::size_t n = kDefaultGridSize);

// inf{t : f(t) <= alpha} on the grid, by linear re-interpolation of the
// swapped axes. Requires f non-increasing.
TradeoffFunction InverseTradeoff(const TradeoffFunction& f);

// Indices of the vertices of the lower convex hull of (x_i, y_i), x strictly
// increasing. Collinear interior points are not vertices.
std::vector<std::size_t> LowerConvexHull(const std::vector<double>& x,
                                         const std::vector<double>& y);

// Greatest convex minorant of the grid curve, evaluated on the grid.
TradeoffFunction DoubleConjugate(const TradeoffFunction& f);

// min{f_p, f_p^{-1}}** with f_p = p f + (1 - p) Id.
absl::StatusOr<TradeoffFunction> SubsampleOperator(const TradeoffFunction& f,
                                                   double p);

}  // namespace fnas

#endif  // FNAS_PRIVACY_TRADEOFF_H_
