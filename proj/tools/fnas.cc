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

// Command-line front end: search, augment, privacy-report, sweep, gen-data.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "fnas/cli/checkpoint.h"
#include "fnas/cli/commands.h"
#include "fnas/cli/config.h"
#include "fnas/privacy/accountant.h"

namespace {

using fnas::ExperimentConfig;

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

// Named flags and the config keys they set.
const std::vector<std::pair<std::string, std::string>>& ConfigFlags() {
  static const std::vector<std::pair<std::string, std::string>> flags = {
      {"--parties", "parties"},
      {"--iterations", "iterations"},
      {"--batch-size", "batch_size"},
      {"--subsample-p", "subsample_p"},
      {"--lr-w", "lr_w"},
      {"--lr-a", "lr_a"},
      {"--fd-epsilon-scale", "fd_epsilon_scale"},
      {"--clip-g", "clip_g"},
      {"--clip-h", "clip_h"},
      {"--sigma", "sigma"},
      {"--tau", "tau"},
      {"--topk", "topk"},
      {"--seed", "seed"},
      {"--dataset", "dataset"},
      {"--out-dir", "out_dir"},
      {"--aggregate", "aggregate"},
  };
  return flags;
}

// Raw flag values; applied after the config file so flags win.
struct ConfigInputs {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value
  std::map<std::string, std::string> flags;
  bool second_order = true;
  CLI::Option* second_order_opt = nullptr;
};

void AddConfigFlags(CLI::App* cmd, ConfigInputs& in) {
  cmd->add_option("--config", in.config_file,
                  "key = value file; see 'fnas keys'");
  cmd->add_option("--set", in.overrides,
                  "key=value override, repeatable, applied after --config");
  for (const auto& [flag, key] : ConfigFlags()) {
    cmd->add_option_function<std::string>(
        flag, [&in, key = key](const std::string& v) { in.flags[key] = v; },
        "config key '" + key + "'");
  }
  in.second_order_opt = cmd->add_flag(
      "--second-order,!--first-order", in.second_order,
      "look-ahead correction in the A-phase (default) or plain gradients");
}

absl::StatusOr<ExperimentConfig> ResolveConfig(const ConfigInputs& in) {
  ExperimentConfig c;
  if (!in.config_file.empty()) {
    absl::StatusOr<std::string> text = fnas::ReadFile(in.config_file);
    if (!text.ok()) return text.status();
    absl::StatusOr<ExperimentConfig> parsed = fnas::ParseConfig(*text, c);
    if (!parsed.ok()) return parsed.status();
    c = *std::move(parsed);
  }
  for (const std::string& kv : in.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      return absl::InvalidArgumentError("--set expects key=value, got " + kv);
    }
    if (absl::Status s =
            fnas::SetConfigValue(c, kv.substr(0, eq), kv.substr(eq + 1));
        !s.ok()) {
      return s;
    }
  }
  for (const auto& [key, value] : in.flags) {
    if (absl::Status s = fnas::SetConfigValue(c, key, value); !s.ok()) return s;
  }
  if (in.second_order_opt != nullptr && in.second_order_opt->count() > 0) {
    c.federation.hp.second_order = in.second_order;
  }
  if (absl::Status s = c.Validate(); !s.ok()) return s;
  return c;
}

int Fail(const absl::Status& s) {
  std::cerr << "fnas: " << s.message() << "\n";
  return kExitError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private federated architecture search lab"};
  app.require_subcommand(1);

  ConfigInputs search_in, augment_in, sweep_in, gen_in;

  CLI::App* search = app.add_subcommand("search", "run the federated search");
  AddConfigFlags(search, search_in);

  CLI::App* augment =
      app.add_subcommand("augment", "retrain a searched architecture and test it");
  AddConfigFlags(augment, augment_in);
  std::string checkpoint;
  augment->add_option("--checkpoint", checkpoint,
                      "checkpoint.bin from search (default: <out-dir>/checkpoint.bin)");

  CLI::App* privacy =
      app.add_subcommand("privacy-report", "GDP levels of the two mechanisms");
  double b = 0, b_val = 0, sigma = 1, tau = 1;
  std::uint64_t n_tr = 0, n_val = 0, t = 0;
  std::string privacy_out;
  privacy->add_option("--B", b, "expected batch size")->required();
  privacy->add_option("--B-val", b_val, "validation batch size (default: B)");
  privacy->add_option("--N-tr", n_tr, "training examples per party")->required();
  privacy->add_option("--N-val", n_val, "validation examples (default: N-tr)");
  privacy->add_option("--T", t, "iterations")->required();
  privacy->add_option("--sigma", sigma, "weight noise multiplier");
  privacy->add_option("--tau", tau, "architecture noise multiplier");
  privacy->add_option("--out", privacy_out, "also write the report here");

  CLI::App* sweep =
      app.add_subcommand("sweep", "search + augment over parties x variance");
  AddConfigFlags(sweep, sweep_in);
  std::vector<std::uint32_t> sweep_parties;
  std::vector<double> sweep_variances;
  std::size_t sweep_seeds = 3;
  sweep->add_option("--sweep-parties", sweep_parties, "party counts")
      ->delimiter(',');
  sweep->add_option("--sweep-variance", sweep_variances,
                    "noise variances; 0 is a noise-free cell")
      ->delimiter(',');
  sweep->add_option("--sweep-seeds", sweep_seeds, "seeds per cell");

  CLI::App* gen = app.add_subcommand("gen-data", "write a synthetic dataset file");
  AddConfigFlags(gen, gen_in);
  std::string gen_out;
  gen->add_option("--out", gen_out, "output file")->required();

  app.add_subcommand("keys", "list config keys")->callback([] {
    std::cout << fnas::ConfigKeysHelp();
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  if (search->parsed()) {
    absl::StatusOr<ExperimentConfig> c = ResolveConfig(search_in);
    if (!c.ok()) return Fail(c.status());
    absl::StatusOr<fnas::SearchRun> r = fnas::CmdSearch(*c, std::cout);
    return r.ok() ? 0 : Fail(r.status());
  }
  if (augment->parsed()) {
    absl::StatusOr<ExperimentConfig> c = ResolveConfig(augment_in);
    if (!c.ok()) return Fail(c.status());
    if (checkpoint.empty()) checkpoint = c->out_dir + "/" + fnas::kCheckpointFile;
    absl::StatusOr<fnas::AugmentResult> r =
        fnas::CmdAugment(*c, checkpoint, std::cout);
    return r.ok() ? 0 : Fail(r.status());
  }
  if (privacy->parsed()) {
    fnas::PrivacyQuery q{.batch_size = b,
                         .batch_size_val = b_val,
                         .n_train = n_tr,
                         .n_val = n_val == 0 ? n_tr : n_val,
                         .iterations = t,
                         .sigma = sigma,
                         .tau = tau};
    if (absl::Status s = q.Validate(); !s.ok()) {
      std::cerr << "fnas privacy-report: " << s.message() << "\n";
      return kExitUsage;
    }
    absl::StatusOr<fnas::PrivacyReport> r =
        fnas::CmdPrivacyReport(q, privacy_out, std::cout);
    return r.ok() ? 0 : Fail(r.status());
  }
  if (sweep->parsed()) {
    absl::StatusOr<ExperimentConfig> c = ResolveConfig(sweep_in);
    if (!c.ok()) return Fail(c.status());
    fnas::SweepSpec spec{sweep_parties, sweep_variances, sweep_seeds};
    absl::StatusOr<fnas::SweepResult> r = fnas::CmdSweep(*c, spec, std::cout);
    if (!r.ok()) {
      std::cerr << "fnas sweep: " << r.status().message() << "\n";
      return r.status().code() == absl::StatusCode::kInvalidArgument
                 ? kExitUsage
                 : kExitError;
    }
    return 0;
  }
  if (gen->parsed()) {
    absl::StatusOr<ExperimentConfig> c = ResolveConfig(gen_in);
    if (!c.ok()) return Fail(c.status());
    absl::Status s = fnas::CmdGenData(*c, gen_out, std::cout);
    return s.ok() ? 0 : Fail(s);
  }
  return 0;
}
