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

#include "fnas/cli/dataset.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <utility>

#include "absl/strings/str_cat.h"
#include "fnas/dp/rng.h"
#include "fnas/federation/wire.h"

namespace fnas {
namespace {

constexpr std::string_view kDatasetMagic = "FNDATA1";

// Fisher-Yates with the repo's generator, so the permutation does not depend
// on the standard library's shuffle algorithm.
void Shuffle(std::vector<std::size_t>& v, RngStream& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[rng.NextBelow(i)]);
  }
}

Batch Gather(const std::vector<std::vector<double>>& rows,
             const std::vector<int>& labels, std::vector<std::size_t> idx,
             std::size_t dim, RngStream& rng) {
  Shuffle(idx, rng);
  std::vector<double> flat;
  flat.reserve(idx.size() * dim);
  Batch b;
  for (std::size_t i : idx) {
    flat.insert(flat.end(), rows[i].begin(), rows[i].end());
    b.labels.push_back(labels[i]);
  }
  b.features = Tensor::FromValues({idx.size(), dim}, std::move(flat));
  return b;
}

Tensor LabelsAsTensor(const Batch& b) {
  const std::size_t n = b.labels.size();
  return Tensor::FromValues({n}, std::vector<double>(b.labels.begin(), b.labels.end()));
}

absl::StatusOr<Batch> BatchFrom(const NamedTensors& t, const std::string& split,
                                int classes) {
  const Tensor* x = t.Find(split + "/x");
  const Tensor* y = t.Find(split + "/y");
  if (x == nullptr || y == nullptr || x->rank() != 2 || y->rank() != 1 ||
      x->dim(0) != y->dim(0)) {
    return absl::DataLossError(
        absl::StrCat("dataset file lacks a well-formed '", split, "' split"));
  }
  Batch b;
  b.features = *x;
  for (double v : y->values()) {
    if (v != std::floor(v) || v < 0 || v >= classes) {
      return absl::DataLossError(absl::StrCat("bad label ", v, " in ", split));
    }
    b.labels.push_back(static_cast<int>(v));
  }
  return b;
}

}  // namespace

std::string_view GeneratorName(Generator g) {
  return g == Generator::kMoons ? "moons" : "gaussian-mixture";
}

absl::StatusOr<Generator> GeneratorFromName(std::string_view name) {
  if (name == "gaussian-mixture") return Generator::kGaussianMixture;
  if (name == "moons") return Generator::kMoons;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown generator '", std::string(name),
                   "' (gaussian-mixture, moons)"));
}

absl::Status SyntheticDatasetSpec::Validate() const {
  if (classes < 2) return absl::InvalidArgumentError("need at least 2 classes");
  if (dim < 1) return absl::InvalidArgumentError("dimension must be >= 1");
  if (per_class < static_cast<std::size_t>(classes)) {
    return absl::InvalidArgumentError(absl::StrCat(
        "per-class count ", per_class, " is below the class count ", classes));
  }
  if (generator == Generator::kMoons && (classes != 2 || dim < 2)) {
    return absl::InvalidArgumentError("moons needs 2 classes and dim >= 2");
  }
  if (generator == Generator::kGaussianMixture &&
      static_cast<std::size_t>(classes) > dim) {
    return absl::InvalidArgumentError(
        "gaussian-mixture needs classes <= dim for orthonormal means");
  }
  if (!(margin >= 0.0) || std::isinf(margin) || !(noise >= 0.0) ||
      std::isinf(noise)) {
    return absl::InvalidArgumentError("margin and noise must be finite and >= 0");
  }
  if (!(train_fraction > 0.0) || !(val_fraction > 0.0) ||
      !(train_fraction + val_fraction < 1.0)) {
    return absl::InvalidArgumentError(
        "train and val fractions must be positive and leave room for test");
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(per_class)));
  const auto n_val = static_cast<std::size_t>(
      std::floor(val_fraction * static_cast<double>(per_class)));
  if (n_train == 0 || n_val == 0 || n_train + n_val >= per_class) {
    return absl::InvalidArgumentError(
        "per-class count too small for non-empty train/val/test splits");
  }
  return absl::OkStatus();
}

absl::StatusOr<Tensor> MixtureDirections(const SyntheticDatasetSpec& spec) {
  if (absl::Status s = spec.Validate(); !s.ok()) return s;
  const std::size_t c = static_cast<std::size_t>(spec.classes), d = spec.dim;
  RngStream rng(spec.seed, 0, 0, StreamPhase::kData);
  std::vector<std::vector<double>> basis;
  // Gram-Schmidt on Gaussian draws; redraw the (measure-zero) degenerate case.
  while (basis.size() < c) {
    std::vector<double> v(d);
    for (double& x : v) x = rng.NextGaussian();
    for (const auto& u : basis) {
      double dot = 0.0;
      for (std::size_t j = 0; j < d; ++j) dot += u[j] * v[j];
      for (std::size_t j = 0; j < d; ++j) v[j] -= dot * u[j];
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  std::vector<double> flat;
  for (const auto& u : basis) flat.insert(flat.end(), u.begin(), u.end());
  return Tensor::FromValues({c, d}, std::move(flat));
}

absl::StatusOr<DatasetSplits> GenerateDataset(const SyntheticDatasetSpec& spec) {
  if (absl::Status s = spec.Validate(); !s.ok()) return s;
  const std::size_t c = static_cast<std::size_t>(spec.classes), d = spec.dim;
  Tensor dirs;
  if (spec.generator == Generator::kGaussianMixture) {
    absl::StatusOr<Tensor> t = MixtureDirections(spec);
    if (!t.ok()) return t.status();
    dirs = *std::move(t);
  }
  RngStream rng(spec.seed, 1, 0, StreamPhase::kData);
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      std::vector<double> x(d, 0.0);
      if (spec.generator == Generator::kGaussianMixture) {
        for (std::size_t j = 0; j < d; ++j) x[j] = spec.margin * dirs.at(k, j);
      } else {
        const double theta = std::numbers::pi * rng.NextUniform();
        if (k == 0) {
          x[0] = std::cos(theta);
          x[1] = std::sin(theta);
        } else {
          x[0] = 1.0 - std::cos(theta);
          x[1] = 0.5 - std::sin(theta);
        }
        x[0] *= spec.margin;
        x[1] *= spec.margin;
      }
      for (double& v : x) v += spec.noise * rng.NextGaussian();
      rows.push_back(std::move(x));
      labels.push_back(static_cast<int>(k));
    }
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(spec.train_fraction * static_cast<double>(spec.per_class)));
  const auto n_val = static_cast<std::size_t>(
      std::floor(spec.val_fraction * static_cast<double>(spec.per_class)));
  std::vector<std::size_t> train, val, test;
  RngStream split_rng(spec.seed, 2, 0, StreamPhase::kData);
  for (std::size_t k = 0; k < c; ++k) {
    std::vector<std::size_t> idx(spec.per_class);
    for (std::size_t i = 0; i < spec.per_class; ++i) idx[i] = k * spec.per_class + i;
    Shuffle(idx, split_rng);
    train.insert(train.end(), idx.begin(), idx.begin() + n_train);
    val.insert(val.end(), idx.begin() + n_train, idx.begin() + n_train + n_val);
    test.insert(test.end(), idx.begin() + n_train + n_val, idx.end());
  }
  DatasetSplits out;
  out.num_classes = spec.classes;
  out.train = Gather(rows, labels, std::move(train), d, split_rng);
  out.val = Gather(rows, labels, std::move(val), d, split_rng);
  out.test = Gather(rows, labels, std::move(test), d, split_rng);
  return out;
}

absl::StatusOr<std::vector<PartyDataset>> PartitionDataset(
    const DatasetSplits& data, std::uint32_t parties, double label_skew,
    std::uint64_t seed) {
  if (parties < 1) return absl::InvalidArgumentError("need at least one party");
  if (!(label_skew >= 0.0) || std::isinf(label_skew)) {
    return absl::InvalidArgumentError("label skew must be finite and >= 0");
  }
  std::vector<PartyDataset> out(parties);
  auto split = [&](const Batch& b, std::uint32_t salt)
      -> absl::StatusOr<std::vector<Batch>> {
    RngStream rng(seed, salt, 0, StreamPhase::kPartition);
    std::vector<std::vector<std::size_t>> shards(parties);
    if (label_skew == 0.0) {
      std::vector<std::size_t> perm(b.size());
      for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
      Shuffle(perm, rng);
      const std::size_t base = perm.size() / parties, extra = perm.size() % parties;
      std::size_t pos = 0;
      for (std::uint32_t k = 0; k < parties; ++k) {
        const std::size_t n = base + (k < extra ? 1 : 0);
        shards[k].assign(perm.begin() + pos, perm.begin() + pos + n);
        pos += n;
      }
    } else {
      std::gamma_distribution<double> gamma(label_skew, 1.0);
      for (int c = 0; c < data.num_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < b.size(); ++i) {
          if (b.labels[i] == c) members.push_back(i);
        }
        Shuffle(members, rng);
        std::vector<double> share(parties);
        double total = 0.0;
        for (double& s : share) total += (s = gamma(rng));
        // Cumulative cut points, rounded; the last party takes the rest.
        std::size_t pos = 0;
        double cum = 0.0;
        for (std::uint32_t k = 0; k < parties; ++k) {
          cum += share[k] / total;
          const std::size_t end =
              k + 1 == parties
                  ? members.size()
                  : std::min(members.size(),
                             static_cast<std::size_t>(std::llround(
                                 cum * static_cast<double>(members.size()))));
          shards[k].insert(shards[k].end(), members.begin() + pos,
                           members.begin() + std::max(pos, end));
          pos = std::max(pos, end);
        }
      }
      for (auto& s : shards) std::sort(s.begin(), s.end());
    }
    std::vector<Batch> batches;
    for (std::uint32_t k = 0; k < parties; ++k) {
      if (shards[k].empty()) {
        return absl::InvalidArgumentError(absl::StrCat(
            "party ", k, " received no examples; use fewer parties or less skew"));
      }
      batches.push_back(b.Subset(shards[k]));
    }
    return batches;
  };
  absl::StatusOr<std::vector<Batch>> train = split(data.train, 0);
  if (!train.ok()) return train.status();
  absl::StatusOr<std::vector<Batch>> val = split(data.val, 1);
  if (!val.ok()) return val.status();
  for (std::uint32_t k = 0; k < parties; ++k) {
    out[k].train = std::move((*train)[k]);
    out[k].val = std::move((*val)[k]);
  }
  return out;
}

std::string EncodeDataset(const DatasetSplits& data) {
  NamedTensors t;
  t.Set("train/x", data.train.features);
  t.Set("train/y", LabelsAsTensor(data.train));
  t.Set("val/x", data.val.features);
  t.Set("val/y", LabelsAsTensor(data.val));
  t.Set("test/x", data.test.features);
  t.Set("test/y", LabelsAsTensor(data.test));
  std::string out(kDatasetMagic);
  std::string body;
  PutU32(body, static_cast<std::uint32_t>(data.num_classes));
  body += EncodeTensors(t);
  out += body;
  PutU32(out, Crc32(body));
  return out;
}

absl::StatusOr<DatasetSplits> DecodeDataset(std::string_view in) {
  if (in.substr(0, kDatasetMagic.size()) != kDatasetMagic) {
    return absl::DataLossError("not a dataset file (bad header)");
  }
  in.remove_prefix(kDatasetMagic.size());
  if (in.size() < 4) return absl::DataLossError("truncated dataset file");
  const std::string_view body = in.substr(0, in.size() - 4);
  std::string_view tail = in.substr(in.size() - 4);
  if (*GetU32(tail) != Crc32(body)) {
    return absl::DataLossError("dataset file CRC mismatch");
  }
  std::string_view cursor = body;
  absl::StatusOr<std::uint32_t> classes = GetU32(cursor);
  if (!classes.ok()) return classes.status();
  absl::StatusOr<NamedTensors> t = DecodeTensors(cursor);
  if (!t.ok()) return t.status();
  if (!cursor.empty()) return absl::DataLossError("trailing bytes in dataset");
  DatasetSplits out;
  out.num_classes = static_cast<int>(*classes);
  for (auto [name, dst] : {std::pair<const char*, Batch*>{"train", &out.train},
                           {"val", &out.val},
                           {"test", &out.test}}) {
    absl::StatusOr<Batch> b = BatchFrom(*t, name, out.num_classes);
    if (!b.ok()) return b.status();
    *dst = *std::move(b);
  }
  if (out.val.dim() != out.train.dim() || out.test.dim() != out.train.dim()) {
    return absl::DataLossError("dataset splits disagree on dimension");
  }
  return out;
}

}  // namespace fnas
