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

#ifndef FNAS_PRIVACY_NORMAL_H_
#define FNAS_PRIVACY_NORMAL_H_

namespace fnas {

// Standard normal CDF, computed from erfc so both tails keep full relative
// accuracy.
double NormalCdf(double x);

double NormalPdf(double x);

// Phi^{-1}(p) for p in [0, 1]; +-infinity at the endpoints. Bisection on
// NormalCdf followed by Newton polishing, accurate to about 1e-14 absolute
// on [-8, 8].
double NormalQuantile(double p);

}  // namespace fnas

#endif  // FNAS_PRIVACY_NORMAL_H_
