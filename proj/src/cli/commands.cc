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

#include "fnas/cli/commands.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <utility>

#include "absl/strings/str_cat.h"
#include "fnas/autodiff/tape.h"
#include "fnas/cli/checkpoint.h"
#include "fnas/dp/rng.h"
#include "fnas/util/format.h"

namespace fnas {
namespace {

Batch Head(const Batch& b, std::size_t n) {
  if (b.size() <= n) return b;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return b.Subset(idx);
}

absl::Status EnsureDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    return absl::UnavailableError(
        absl::StrCat("cannot create ", dir, ": ", ec.message()));
  }
  return absl::OkStatus();
}

std::string Join(const std::string& dir, const char* file) {
  return (std::filesystem::path(dir) / file).string();
}

absl::StatusOr<double> SupernetError(const Supernet& net, const Batch& b,
                                     const NamedTensors& arch,
                                     const NamedTensors& weights) {
  absl::StatusOr<Tensor> logits = net.Logits(b.features, weights, arch);
  if (!logits.ok()) return logits.status();
  return ClassificationError(*logits, b.labels);
}

}  // namespace

MeanSd Summarize(const std::vector<double>& v) {
  MeanSd out;
  if (v.empty()) return out;
  out.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() < 2) return out;
  double ss = 0.0;
  for (double x : v) ss += (x - out.mean) * (x - out.mean);
  out.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return out;
}

absl::StatusOr<DatasetSplits> LoadDataset(const ExperimentConfig& config) {
  if (config.dataset_path.empty()) return GenerateDataset(config.data);
  absl::StatusOr<std::string> bytes = ReadFile(config.dataset_path);
  if (!bytes.ok()) return bytes.status();
  return DecodeDataset(*bytes);
}

absl::StatusOr<Supernet> BuildSupernet(const ExperimentConfig& config,
                                       const DatasetSplits& data) {
  absl::StatusOr<CellGraph> cell = CellGraph::FullyConnected(config.cell_nodes);
  if (!cell.ok()) return cell.status();
  return Supernet(*std::move(cell), CandidateOpSet::Default(), data.dim(),
                  static_cast<std::size_t>(data.num_classes));
}

absl::StatusOr<SearchRun> SearchOnData(
    const ExperimentConfig& config, const DatasetSplits& data,
    std::function<void(const MetricsRow&)> on_row) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  absl::StatusOr<Supernet> net = BuildSupernet(config, data);
  if (!net.ok()) return net.status();
  absl::StatusOr<std::vector<PartyDataset>> parts =
      PartitionDataset(data, config.federation.parties, config.label_skew,
                       config.federation.seed);
  if (!parts.ok()) return parts.status();
  SupernetObjective objective(*std::move(net));
  SearchOptions options;
  options.on_row = std::move(on_row);
  absl::StatusOr<SearchResult> result =
      RunSearch(objective, config.federation, *std::move(parts),
                Head(data.train, config.eval_size),
                Head(data.val, config.eval_size), options);
  if (!result.ok()) return result.status();
  SearchRun run{*std::move(result), 0.0};
  absl::StatusOr<double> err = SupernetError(
      objective.supernet(), data.val, run.result.arch, run.result.weights);
  if (!err.ok()) return err.status();
  run.final_val_error = *err;
  return run;
}

absl::StatusOr<AugmentResult> AugmentOnData(const ExperimentConfig& config,
                                            const DiscreteArchitecture& arch,
                                            const DatasetSplits& data) {
  absl::StatusOr<CellGraph> cell = CellGraph::FullyConnected(config.cell_nodes);
  if (!cell.ok()) return cell.status();
  absl::StatusOr<MaterializedNetwork> m = Materialize(
      arch, *cell, CandidateOpSet::Default(), data.dim(),
      static_cast<std::size_t>(data.num_classes), config.federation.seed);
  if (!m.ok()) return m.status();
  const ComputationSpec spec = m->network.Spec();
  const std::vector<std::string>& names = m->network.weight_names();
  NamedTensors weights = m->weights;
  NamedTensors velocity = weights.ZerosLike();
  const Batch pooled = Batch::Concat(std::vector<Batch>{data.train, data.val});
  const AugmentConfig& a = config.augment;
  const std::size_t steps_per_epoch =
      (pooled.size() + a.batch_size - 1) / a.batch_size;
  const double total_steps = static_cast<double>(a.epochs * steps_per_epoch);
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < a.epochs; ++epoch) {
    RngStream rng(config.federation.seed, 0, epoch, StreamPhase::kAugment);
    std::vector<std::size_t> order(pooled.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.NextBelow(i)]);
    }
    for (std::size_t start = 0; start < order.size(); start += a.batch_size) {
      const std::size_t end = std::min(order.size(), start + a.batch_size);
      const Batch batch = pooled.Subset(
          std::span<const std::size_t>(order.data() + start, end - start));
      absl::StatusOr<ForwardResult> fwd = Forward(spec, weights, batch);
      if (!fwd.ok()) return fwd.status();
      absl::StatusOr<GradientVector> g = Backward(*fwd, names);
      if (!g.ok()) return g.status();
      // Cosine decay from lr to 0 over the whole run.
      const double lr = 0.5 * a.lr *
                        (1.0 + std::cos(std::numbers::pi *
                                        static_cast<double>(step++) / total_steps));
      velocity.Scale(a.momentum);
      velocity.AddScaled(*g, 1.0);
      weights.AddScaled(velocity, -lr);
    }
    if (!weights.AllFinite()) {
      return absl::InternalError(absl::StrCat(
          "augment training diverged in epoch ", epoch, "; lower augment.lr"));
    }
  }

  AugmentResult out;
  out.parameters = weights.NumElements();
  absl::StatusOr<Tensor> train_logits =
      m->network.Logits(data.train.features, weights);
  if (!train_logits.ok()) return train_logits.status();
  out.train_error = ClassificationError(*train_logits, data.train.labels);
  absl::StatusOr<Tensor> test_logits =
      m->network.Logits(data.test.features, weights);
  if (!test_logits.ok()) return test_logits.status();
  out.test_error = ClassificationError(*test_logits, data.test.labels);
  out.test_loss = CrossEntropy(*test_logits, data.test.labels);
  return out;
}

absl::StatusOr<SearchRun> CmdSearch(const ExperimentConfig& config,
                                    std::ostream& log) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  absl::StatusOr<DatasetSplits> data = LoadDataset(config);
  if (!data.ok()) return data.status();
  if (absl::Status s = EnsureDir(config.out_dir); !s.ok()) return s;

  const std::uint64_t total = config.federation.iterations;
  const std::uint64_t every = std::max<std::uint64_t>(1, total / 10);
  std::string metrics = absl::StrCat(kMetricsHeader, "\n");
  absl::StatusOr<SearchRun> run =
      SearchOnData(config, *data, [&](const MetricsRow& row) {
        absl::StrAppend(&metrics, MetricsRowToCsv(row), "\n");
        if (row.phase == Phase::kArch &&
            (row.iteration % every == 0 || row.iteration == total)) {
          log << "iteration " << row.iteration << "/" << total
              << " val_loss=" << FormatDouble(row.val_loss)
              << " val_error=" << FormatDouble(row.val_error) << "\n";
        }
      });
  if (!run.ok()) return run.status();

  absl::StatusOr<Supernet> net = BuildSupernet(config, *data);
  if (!net.ok()) return net.status();
  const std::string arch_text =
      ArchitectureToText(run->result.discrete, net->cell(), net->ops());
  absl::StatusOr<NamedTensors> params =
      run->result.weights.Merge(run->result.arch);
  if (!params.ok()) return params.status();

  const std::string& dir = config.out_dir;
  for (const auto& [file, contents] :
       std::vector<std::pair<const char*, std::string>>{
           {kMetricsFile, metrics},
           {kArchFile, arch_text},
           {kCheckpointFile, EncodeCheckpoint({*std::move(params), arch_text})},
           {kPrivacyFile, RenderPrivacyReport(run->result.privacy)},
           {kPrivacyCurveFile, RenderPrivacyCurves(run->result.privacy)},
           {kConfigFile, RenderConfig(config)}}) {
    if (absl::Status s = WriteFile(Join(dir, file), contents); !s.ok()) return s;
  }
  log << "final_val_error=" << FormatDouble(run->final_val_error) << "\n"
      << "plateau=" << (run->result.plateau ? "true" : "false");
  if (run->result.plateau) log << " (iteration " << run->result.plateau_iteration << ")";
  log << "\n" << arch_text << "outputs written to " << dir << "\n";
  return run;
}

absl::StatusOr<AugmentResult> CmdAugment(const ExperimentConfig& config,
                                         const std::string& checkpoint_path,
                                         std::ostream& out) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  absl::StatusOr<std::string> bytes = ReadFile(checkpoint_path);
  if (!bytes.ok()) return bytes.status();
  absl::StatusOr<Checkpoint> ckpt = DecodeCheckpoint(*bytes);
  if (!ckpt.ok()) {
    return absl::DataLossError(
        absl::StrCat(checkpoint_path, ": ", ckpt.status().message()));
  }
  absl::StatusOr<DatasetSplits> data = LoadDataset(config);
  if (!data.ok()) return data.status();
  absl::StatusOr<Supernet> net = BuildSupernet(config, *data);
  if (!net.ok()) return net.status();
  absl::StatusOr<DiscreteArchitecture> arch =
      ArchitectureFromText(ckpt->arch_text, net->cell(), net->ops());
  if (!arch.ok()) return arch.status();
  absl::StatusOr<AugmentResult> r = AugmentOnData(config, *arch, *data);
  if (!r.ok()) return r.status();
  const std::string report = absl::StrCat(
      "test_error=", FormatDouble(r->test_error), "\n",
      "test_loss=", FormatDouble(r->test_loss), "\n",
      "train_error=", FormatDouble(r->train_error), "\n",
      "parameters=", r->parameters, "\n");
  out << report;
  if (absl::Status s = EnsureDir(config.out_dir); !s.ok()) return s;
  if (absl::Status s = WriteFile(Join(config.out_dir, kAugmentFile), report);
      !s.ok()) {
    return s;
  }
  return r;
}

absl::StatusOr<PrivacyReport> CmdPrivacyReport(const PrivacyQuery& query,
                                               const std::string& out_path,
                                               std::ostream& out) {
  absl::StatusOr<PartyPrivacy> p = AccountQuery(query);
  if (!p.ok()) return p.status();
  PrivacyReport report;
  report.parties.push_back(*std::move(p));
  const std::string text = RenderPrivacyReport(report);
  out << text;
  if (!out_path.empty()) {
    const std::filesystem::path parent =
        std::filesystem::path(out_path).parent_path();
    if (!parent.empty()) {
      if (absl::Status s = EnsureDir(parent.string()); !s.ok()) return s;
    }
    if (absl::Status s = WriteFile(out_path, text); !s.ok()) return s;
  }
  return report;
}

ExperimentConfig SweepCellConfig(const ExperimentConfig& base,
                                 std::uint32_t parties, double variance,
                                 std::uint64_t seed) {
  ExperimentConfig c = base;
  c.federation.parties = parties;
  c.federation.seed = seed;
  // Clip bounds stay as configured: the learning rates are tuned for
  // clipped gradients, and only the noise varies across cells.
  const double s = std::sqrt(variance);
  c.federation.noise = {s, s};
  return c;
}

absl::StatusOr<SweepResult> CmdSweep(const ExperimentConfig& config,
                                     const SweepSpec& spec, std::ostream& log) {
  if (spec.parties.empty() || spec.variances.empty() || spec.seeds == 0) {
    return absl::InvalidArgumentError(
        "empty sweep grid: give at least one party count, variance and seed");
  }
  for (double v : spec.variances) {
    if (!(v >= 0.0) || std::isinf(v)) {
      return absl::InvalidArgumentError("variances must be finite and >= 0");
    }
  }
  absl::StatusOr<DatasetSplits> data = LoadDataset(config);
  if (!data.ok()) return data.status();
  if (absl::Status s = EnsureDir(config.out_dir); !s.ok()) return s;

  SweepResult result;
  std::string runs_csv =
      "parties,variance,seed,status,val_error,test_error,mu_w,mu_a,seconds\n";
  std::string cells_csv =
      "parties,variance,completed,val_error_mean,val_error_sd,"
      "test_error_mean,test_error_sd,mu_w,mu_a\n";
  for (std::uint32_t k : spec.parties) {
    for (double v : spec.variances) {
      std::vector<double> val, test;
      SweepCell cell{.parties = k, .variance = v};
      for (std::size_t i = 0; i < spec.seeds; ++i) {
        SweepRun run{.parties = k, .variance = v,
                     .seed = config.federation.seed + i};
        const ExperimentConfig c = SweepCellConfig(config, k, v, run.seed);
        const auto start = std::chrono::steady_clock::now();
        absl::StatusOr<SearchRun> s = SearchOnData(c, *data);
        absl::StatusOr<AugmentResult> a =
            s.ok() ? AugmentOnData(c, s->result.discrete, *data)
                   : absl::StatusOr<AugmentResult>(s.status());
        run.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - start)
                          .count();
        if (a.ok()) {
          run.ok = true;
          run.val_error = s->final_val_error;
          run.test_error = a->test_error;
          run.mu_w = s->result.privacy.parties.front().mu_w;
          run.mu_a = s->result.privacy.parties.front().mu_a;
          for (const PartyPrivacy& p : s->result.privacy.parties) {
            run.mu_w = std::max(run.mu_w, p.mu_w);
            run.mu_a = std::max(run.mu_a, p.mu_a);
          }
          val.push_back(run.val_error);
          test.push_back(run.test_error);
          cell.mu_w = run.mu_w;
          cell.mu_a = run.mu_a;
        } else {
          run.error = std::string(a.status().message());
        }
        log << "parties=" << k << " variance=" << FormatDouble(v)
            << " seed=" << run.seed << " "
            << (run.ok ? absl::StrCat("val_error=", FormatDouble(run.val_error),
                                      " test_error=",
                                      FormatDouble(run.test_error))
                       : absl::StrCat("FAILED: ", run.error))
            << " (" << FormatDouble(std::round(run.seconds * 10) / 10) << " s)\n";
        absl::StrAppend(&runs_csv, k, ",", FormatDouble(v), ",", run.seed, ",",
                        run.ok ? "ok" : "error", ",", FormatDouble(run.val_error),
                        ",", FormatDouble(run.test_error), ",",
                        FormatDouble(run.mu_w), ",", FormatDouble(run.mu_a), ",",
                        FormatDouble(run.seconds), "\n");
        result.runs.push_back(std::move(run));
      }
      cell.completed = val.size();
      const MeanSd vs = Summarize(val), ts = Summarize(test);
      cell.val_error_mean = vs.mean;
      cell.val_error_sd = vs.sd;
      cell.test_error_mean = ts.mean;
      cell.test_error_sd = ts.sd;
      absl::StrAppend(&cells_csv, k, ",", FormatDouble(v), ",", cell.completed,
                      ",", FormatDouble(vs.mean), ",", FormatDouble(vs.sd), ",",
                      FormatDouble(ts.mean), ",", FormatDouble(ts.sd), ",",
                      FormatDouble(cell.mu_w), ",", FormatDouble(cell.mu_a),
                      "\n");
      result.cells.push_back(cell);
    }
  }
  if (absl::Status s = WriteFile(Join(config.out_dir, kSweepFile), runs_csv);
      !s.ok()) {
    return s;
  }
  if (absl::Status s =
          WriteFile(Join(config.out_dir, kSweepSummaryFile), cells_csv);
      !s.ok()) {
    return s;
  }
  return result;
}

absl::Status CmdGenData(const ExperimentConfig& config, const std::string& path,
                        std::ostream& out) {
  absl::StatusOr<DatasetSplits> data = GenerateDataset(config.data);
  if (!data.ok()) return data.status();
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    if (absl::Status s = EnsureDir(parent.string()); !s.ok()) return s;
  }
  if (absl::Status s = WriteFile(path, EncodeDataset(*data)); !s.ok()) return s;
  out << "wrote " << path << ": " << data->train.size() << " train, "
      << data->val.size() << " val, " << data->test.size() << " test, d="
      << data->dim() << ", C=" << data->num_classes << "\n";
  return absl::OkStatus();
}

}  // namespace fnas
