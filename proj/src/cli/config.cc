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

#include "fnas/cli/config.h"

#include <charconv>
#include <cmath>
#include <functional>
#include <limits>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "fnas/util/format.h"

namespace fnas {
namespace {

using Setter = std::function<absl::Status(ExperimentConfig&, std::string_view)>;
using Getter = std::function<std::string(const ExperimentConfig&)>;

struct Key {
  const char* name;
  const char* help;
  Setter set;
  Getter get;
};

absl::Status BadValue(std::string_view key, std::string_view value,
                      std::string_view expected) {
  return absl::InvalidArgumentError(
      absl::StrCat("config key '", std::string(key), "': cannot parse '",
                   std::string(value), "' as ", std::string(expected)));
}

template <typename Int>
absl::StatusOr<Int> ParseInt(std::string_view text) {
  Int v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    return absl::InvalidArgumentError("not an integer");
  }
  return v;
}

template <typename Int>
Key Integer(const char* name, const char* help,
            std::function<Int&(ExperimentConfig&)> ref) {
  return Key{name, help,
             [name, ref](ExperimentConfig& c, std::string_view v) -> absl::Status {
               absl::StatusOr<Int> x = ParseInt<Int>(v);
               if (!x.ok()) return BadValue(name, v, "an integer");
               ref(c) = *x;
               return absl::OkStatus();
             },
             [ref](const ExperimentConfig& c) {
               ExperimentConfig copy = c;
               return absl::StrCat(ref(copy));
             }};
}

Key DoubleKey(const char* name, const char* help,
              std::function<double&(ExperimentConfig&)> ref) {
  return Key{name, help,
             [name, ref](ExperimentConfig& c, std::string_view v) -> absl::Status {
               absl::StatusOr<double> x = ParseDouble(v);
               if (!x.ok()) return BadValue(name, v, "a number");
               ref(c) = *x;
               return absl::OkStatus();
             },
             [ref](const ExperimentConfig& c) {
               ExperimentConfig copy = c;
               return FormatDouble(ref(copy));
             }};
}

Key BoolKey(const char* name, const char* help,
            std::function<bool&(ExperimentConfig&)> ref) {
  return Key{name, help,
             [name, ref](ExperimentConfig& c, std::string_view v) -> absl::Status {
               if (v == "true" || v == "1") {
                 ref(c) = true;
               } else if (v == "false" || v == "0") {
                 ref(c) = false;
               } else {
                 return BadValue(name, v, "true/false");
               }
               return absl::OkStatus();
             },
             [ref](const ExperimentConfig& c) -> std::string {
               ExperimentConfig copy = c;
               return ref(copy) ? "true" : "false";
             }};
}

Key StringKey(const char* name, const char* help,
              std::function<std::string&(ExperimentConfig&)> ref) {
  return Key{name, help,
             [ref](ExperimentConfig& c, std::string_view v) -> absl::Status {
               ref(c) = std::string(v);
               return absl::OkStatus();
             },
             [ref](const ExperimentConfig& c) {
               ExperimentConfig copy = c;
               return ref(copy);
             }};
}

const std::vector<Key>& Keys() {
  using C = ExperimentConfig;
  static const std::vector<Key> keys = {
      Integer<std::uint32_t>("parties", "number of parties K",
                             [](C& c) -> auto& { return c.federation.parties; }),
      Integer<std::uint64_t>("iterations", "search iterations T",
                             [](C& c) -> auto& { return c.federation.iterations; }),
      DoubleKey("batch_size", "expected Poisson batch size B per party",
                [](C& c) -> auto& { return c.federation.batch_size; }),
      DoubleKey("subsample_p", "sampling probability; > 0 overrides batch_size",
                [](C& c) -> auto& { return c.federation.subsample_p; }),
      DoubleKey("lr_w", "weight learning rate xi",
                [](C& c) -> auto& { return c.federation.hp.xi; }),
      DoubleKey("lr_a", "architecture learning rate eta",
                [](C& c) -> auto& { return c.federation.hp.eta; }),
      DoubleKey("fd_epsilon_scale", "relative finite-difference step",
                [](C& c) -> auto& { return c.federation.hp.fd_epsilon_scale; }),
      BoolKey("second_order", "look-ahead correction in the A-phase",
              [](C& c) -> auto& { return c.federation.hp.second_order; }),
      DoubleKey("clip_g", "weight clip bound R_G (inf disables)",
                [](C& c) -> auto& { return c.federation.clip.r_g; }),
      DoubleKey("clip_h", "architecture clip bound R_H (inf disables)",
                [](C& c) -> auto& { return c.federation.clip.r_h; }),
      DoubleKey("sigma", "weight noise multiplier",
                [](C& c) -> auto& { return c.federation.noise.sigma; }),
      DoubleKey("tau", "architecture noise multiplier",
                [](C& c) -> auto& { return c.federation.noise.tau; }),
      Integer<int>("topk", "ops kept per edge",
                   [](C& c) -> auto& { return c.federation.top_k; }),
      Integer<std::uint64_t>("seed", "run seed",
                             [](C& c) -> auto& { return c.federation.seed; }),
      Key{"aggregate", "sum or mean",
          [](C& c, std::string_view v) -> absl::Status {
            if (v == "sum") {
              c.federation.aggregation = Aggregation::kSum;
            } else if (v == "mean") {
              c.federation.aggregation = Aggregation::kMean;
            } else {
              return BadValue("aggregate", v, "sum or mean");
            }
            return absl::OkStatus();
          },
          [](const C& c) -> std::string {
            return c.federation.aggregation == Aggregation::kMean ? "mean"
                                                                  : "sum";
          }},
      Integer<int>("cell_nodes", "intermediate nodes of the cell",
                   [](C& c) -> auto& { return c.cell_nodes; }),
      Key{"dataset", "gaussian-mixture, moons, or a gen-data file",
          [](C& c, std::string_view v) -> absl::Status {
            absl::StatusOr<Generator> g = GeneratorFromName(v);
            if (g.ok()) {
              c.data.generator = *g;
              c.dataset_path.clear();
            } else if (v.empty()) {
              return BadValue("dataset", v, "a generator name or a path");
            } else {
              c.dataset_path = std::string(v);
            }
            return absl::OkStatus();
          },
          [](const C& c) -> std::string {
            return c.dataset_path.empty()
                       ? std::string(GeneratorName(c.data.generator))
                       : c.dataset_path;
          }},
      Key{"data.generator", "generator used when dataset is not a file",
          [](C& c, std::string_view v) -> absl::Status {
            absl::StatusOr<Generator> g = GeneratorFromName(v);
            if (!g.ok()) return g.status();
            c.data.generator = *g;
            return absl::OkStatus();
          },
          [](const C& c) -> std::string {
            return std::string(GeneratorName(c.data.generator));
          }},
      Integer<std::size_t>("data.dim", "feature dimension d",
                           [](C& c) -> auto& { return c.data.dim; }),
      Integer<int>("data.classes", "number of classes C",
                   [](C& c) -> auto& { return c.data.classes; }),
      Integer<std::size_t>("data.per_class", "examples per class",
                           [](C& c) -> auto& { return c.data.per_class; }),
      DoubleKey("data.margin", "distance of class means from the origin",
                [](C& c) -> auto& { return c.data.margin; }),
      DoubleKey("data.noise", "feature noise standard deviation",
                [](C& c) -> auto& { return c.data.noise; }),
      DoubleKey("data.train_fraction", "per-class training share",
                [](C& c) -> auto& { return c.data.train_fraction; }),
      DoubleKey("data.val_fraction", "per-class validation share",
                [](C& c) -> auto& { return c.data.val_fraction; }),
      Integer<std::uint64_t>("data.seed", "dataset seed",
                             [](C& c) -> auto& { return c.data.seed; }),
      DoubleKey("label_skew", "Dirichlet label skew across parties (0: IID)",
                [](C& c) -> auto& { return c.label_skew; }),
      Integer<std::size_t>("eval_size", "pooled examples scored per metrics row",
                           [](C& c) -> auto& { return c.eval_size; }),
      Integer<std::size_t>("augment.epochs", "retraining epochs",
                           [](C& c) -> auto& { return c.augment.epochs; }),
      DoubleKey("augment.lr", "retraining learning rate",
                [](C& c) -> auto& { return c.augment.lr; }),
      DoubleKey("augment.momentum", "retraining momentum",
                [](C& c) -> auto& { return c.augment.momentum; }),
      Integer<std::size_t>("augment.batch_size", "retraining minibatch size",
                           [](C& c) -> auto& { return c.augment.batch_size; }),
      StringKey("out_dir", "output directory",
                [](C& c) -> auto& { return c.out_dir; }),
  };
  return keys;
}

}  // namespace

namespace {

// String values must survive a render/parse round trip: one line, no
// surrounding whitespace, no leading '#'.
absl::Status CheckStringValue(std::string_view name, const std::string& v) {
  const bool bad =
      v.find_first_of("\n\r") != std::string::npos ||
      (!v.empty() && (absl::ascii_isspace(static_cast<unsigned char>(v.front())) ||
                      absl::ascii_isspace(static_cast<unsigned char>(v.back()))));
  if (bad) {
    return absl::InvalidArgumentError(absl::StrCat(
        std::string(name), " must be one line without surrounding whitespace"));
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status ExperimentConfig::Validate() const {
  if (absl::Status s = federation.Validate(); !s.ok()) return s;
  if (cell_nodes < 1) return absl::InvalidArgumentError("cell_nodes must be >= 1");
  if (dataset_path.empty()) {
    if (absl::Status s = data.Validate(); !s.ok()) return s;
  }
  if (!(label_skew >= 0.0) || std::isinf(label_skew)) {
    return absl::InvalidArgumentError("label_skew must be finite and >= 0");
  }
  if (eval_size < 1) return absl::InvalidArgumentError("eval_size must be >= 1");
  if (augment.batch_size < 1 || !(augment.lr >= 0.0) ||
      !(augment.momentum >= 0.0 && augment.momentum < 1.0)) {
    return absl::InvalidArgumentError(
        "augment needs batch_size >= 1, lr >= 0 and momentum in [0, 1)");
  }
  if (out_dir.empty()) return absl::InvalidArgumentError("out_dir is empty");
  if (absl::Status s = CheckStringValue("out_dir", out_dir); !s.ok()) return s;
  if (GeneratorFromName(dataset_path).ok()) {
    return absl::InvalidArgumentError("dataset path collides with a generator name");
  }
  return CheckStringValue("dataset", dataset_path);
}

absl::Status SetConfigValue(ExperimentConfig& config, std::string_view key,
                            std::string_view value) {
  for (const Key& k : Keys()) {
    if (key == k.name) return k.set(config, value);
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown config key '", std::string(key), "'"));
}

std::string RenderConfig(const ExperimentConfig& config) {
  std::string out;
  for (const Key& k : Keys()) {
    absl::StrAppend(&out, k.name, " = ", k.get(config), "\n");
  }
  return out;
}

absl::StatusOr<ExperimentConfig> ParseConfig(std::string_view text,
                                             ExperimentConfig base) {
  int line_no = 0;
  for (absl::string_view raw : absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    ++line_no;
    absl::string_view line = absl::StripAsciiWhitespace(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return absl::InvalidArgumentError(
          absl::StrCat("config line ", line_no, ": expected 'key = value'"));
    }
    const absl::string_view key = absl::StripAsciiWhitespace(line.substr(0, eq));
    const absl::string_view value =
        absl::StripAsciiWhitespace(line.substr(eq + 1));
    if (absl::Status s = SetConfigValue(base, std::string_view(key.data(), key.size()),
                                        std::string_view(value.data(), value.size()));
        !s.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("config line ", line_no, ": ", s.message()));
    }
  }
  if (absl::Status s = base.Validate(); !s.ok()) return s;
  return base;
}

std::string ConfigKeysHelp() {
  std::string out;
  for (const Key& k : Keys()) absl::StrAppend(&out, "  ", k.name, ": ", k.help, "\n");
  return out;
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> out;
  for (const Key& k : Keys()) out.push_back(k.name);
  return out;
}

}  // namespace fnas
