// Copyright 2026 The FedMIA Audit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Datasets, client partitions, member/non-member evaluation splits and the
// data-level defenses (mixup, augmentation, sampling).

#ifndef FEDMIA_DATA_HPP_
#define FEDMIA_DATA_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fedmia/error.hpp"
#include "fedmia/model.hpp"
#include "fedmia/numstat.hpp"

namespace fedmia {
namespace data {

using model::LabeledSample;
using numstat::RngStream;

struct Geometry {
  std::size_t rows = 0;
  std::size_t cols = 0;

  bool operator==(const Geometry&) const = default;
};

struct Dataset {
  std::vector<LabeledSample> samples;
  std::size_t num_classes = 0;
  std::optional<Geometry> geometry;

  std::size_t size() const { return samples.size(); }
  std::size_t input_dim() const { return samples.empty() ? 0 : samples.front().features.size(); }

  void Validate() const {
    Require(num_classes >= 1, ErrorCode::kConfig, "dataset needs at least one class");
    const std::size_t dim = input_dim();
    for (std::size_t i = 0; i < samples.size(); ++i) {
      Require(samples[i].label < num_classes, ErrorCode::kShape,
              "sample " + std::to_string(i) + " label out of range");
      Require(samples[i].features.size() == dim, ErrorCode::kShape,
              "sample " + std::to_string(i) + " has a different feature length");
    }
    if (geometry && !samples.empty()) {
      Require(geometry->rows * geometry->cols == dim, ErrorCode::kConfig,
              "geometry rows*cols must equal the feature dimension");
    }
  }

  std::vector<LabeledSample> Gather(std::span<const std::size_t> indices) const {
    std::vector<LabeledSample> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(samples.at(i));
    return out;
  }
};

struct Partition {
  std::vector<std::vector<std::size_t>> client_indices;
  std::vector<std::size_t> holdout_indices;

  std::size_t num_clients() const { return client_indices.size(); }

  // Every index valid and used at most once across clients and holdout.
  void Validate(std::size_t dataset_size) const {
    std::vector<char> seen(dataset_size, 0);
    auto visit = [&](std::size_t idx) {
      Require(idx < dataset_size, ErrorCode::kShape, "partition index out of range");
      Require(!seen[idx], ErrorCode::kContract,
              "partition index " + std::to_string(idx) + " assigned twice");
      seen[idx] = 1;
    };
    for (const auto& client : client_indices) {
      for (std::size_t idx : client) visit(idx);
    }
    for (std::size_t idx : holdout_indices) visit(idx);
  }
};

enum class NonmemberSource { kHoldout, kHoldoutAndOthers };

inline std::string NonmemberSourceName(NonmemberSource s) {
  return s == NonmemberSource::kHoldout ? "holdout" : "holdout+others";
}

inline NonmemberSource ParseNonmemberSource(const std::string& name) {
  if (name == "holdout") return NonmemberSource::kHoldout;
  if (name == "holdout+others") return NonmemberSource::kHoldoutAndOthers;
  throw Error(ErrorCode::kConfig, "unknown nonmember_source '" + name + "'");
}

struct EvalSplit {
  std::vector<std::size_t> member_indices;
  std::vector<std::size_t> nonmember_indices;
};

// Gaussian blobs with unit covariance. Class means sit on a scaled simplex
// (pairwise distance class_sep) when input_dim >= num_classes, otherwise on
// random directions of norm class_sep / sqrt(2).
inline Dataset SynthBlobs(RngStream rng, std::size_t num_classes, std::size_t input_dim,
                          std::size_t per_class, double class_sep) {
  Require(num_classes >= 1 && input_dim >= 1 && per_class >= 1, ErrorCode::kParameter,
          "synth_blobs counts must be positive");
  Require(class_sep >= 0.0, ErrorCode::kParameter, "class_sep must be >= 0");
  const double radius = class_sep / std::numbers::sqrt2;
  std::vector<std::vector<double>> means(num_classes, std::vector<double>(input_dim, 0.0));
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (input_dim >= num_classes) {
      means[c][c] = radius;
    } else {
      auto dir = numstat::SampleGaussian(rng, 0.0, 1.0, input_dim);
      const double n = numstat::Norm(dir);
      for (std::size_t j = 0; j < input_dim; ++j) means[c][j] = radius * dir[j] / n;
    }
  }
  Dataset ds;
  ds.num_classes = num_classes;
  ds.samples.reserve(num_classes * per_class);
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      LabeledSample s;
      s.label = c;
      s.features = numstat::SampleGaussian(rng, 0.0, 1.0, input_dim);
      for (std::size_t j = 0; j < input_dim; ++j) s.features[j] += means[c][j];
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

// Rows are `label,f1,...,fd`, no header. num_classes == 0 infers
// max(label) + 1.
inline Dataset LoadCsv(const std::string& path, std::size_t num_classes = 0,
                       std::optional<Geometry> geometry = std::nullopt) {
  std::ifstream in(path);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot open dataset file '" + path + "'");
  Dataset ds;
  ds.geometry = geometry;
  std::string line;
  std::size_t line_no = 0;
  std::size_t max_label = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      Require(used == cell.size() && !cell.empty() && std::isfinite(value), ErrorCode::kParse,
              path + ":" + std::to_string(line_no) + ": non-numeric field '" + cell + "'");
      fields.push_back(value);
    }
    Require(fields.size() >= 2, ErrorCode::kParse,
            path + ":" + std::to_string(line_no) + ": expected label and at least one feature");
    const double label = fields.front();
    Require(label >= 0.0 && label == std::floor(label), ErrorCode::kParse,
            path + ":" + std::to_string(line_no) + ": label must be a non-negative integer");
    LabeledSample s;
    s.label = static_cast<std::size_t>(label);
    s.features.assign(fields.begin() + 1, fields.end());
    if (!ds.samples.empty()) {
      Require(s.features.size() == ds.input_dim(), ErrorCode::kParse,
              path + ":" + std::to_string(line_no) + ": feature count differs from line 1");
    }
    if (num_classes > 0) {
      Require(s.label < num_classes, ErrorCode::kParse,
              path + ":" + std::to_string(line_no) + ": label out of range");
    }
    max_label = std::max(max_label, s.label);
    ds.samples.push_back(std::move(s));
  }
  Require(!ds.samples.empty(), ErrorCode::kEmptySample, "dataset file '" + path + "' is empty");
  ds.num_classes = num_classes > 0 ? num_classes : max_label + 1;
  ds.Validate();
  return ds;
}

namespace internal {

// All indices, each class shuffled and then interleaved so that any
// contiguous chunk is close to class-balanced.
inline std::vector<std::size_t> StratifiedOrder(RngStream& rng, const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.samples[i].label].push_back(i);
  for (auto& members : by_class) numstat::Shuffle(rng, members);
  std::vector<std::size_t> class_order(ds.num_classes);
  for (std::size_t c = 0; c < ds.num_classes; ++c) class_order[c] = c;
  std::vector<std::size_t> out;
  out.reserve(ds.size());
  for (std::size_t round = 0; out.size() < ds.size(); ++round) {
    numstat::Shuffle(rng, class_order);
    for (std::size_t c : class_order) {
      if (round < by_class[c].size()) out.push_back(by_class[c][round]);
    }
  }
  return out;
}

}  // namespace internal

// Class-stratified uniform assignment of per_client samples to each of K
// clients plus a holdout set.
inline Partition PartitionIid(RngStream rng, const Dataset& ds, std::size_t num_clients,
                              std::size_t per_client, std::size_t holdout) {
  Require(num_clients >= 1 && per_client >= 1, ErrorCode::kParameter,
          "partition needs K >= 1 and per_client >= 1");
  Require(num_clients * per_client + holdout <= ds.size(), ErrorCode::kInsufficientData,
          "dataset has " + std::to_string(ds.size()) + " samples, partition needs " +
              std::to_string(num_clients * per_client + holdout));
  const auto order = internal::StratifiedOrder(rng, ds);
  Partition p;
  p.client_indices.resize(num_clients);
  for (std::size_t k = 0; k < num_clients; ++k) {
    auto first = order.begin() + static_cast<std::ptrdiff_t>(k * per_client);
    p.client_indices[k].assign(first, first + static_cast<std::ptrdiff_t>(per_client));
  }
  auto hold = order.begin() + static_cast<std::ptrdiff_t>(num_clients * per_client);
  p.holdout_indices.assign(hold, hold + static_cast<std::ptrdiff_t>(holdout));
  return p;
}

// Non-IID split: for each class, the class's share of the K * per_client pool
// is divided across clients by Dirichlet(beta * 1_K) proportions. An infinite
// beta is the IID split.
inline Partition PartitionDirichlet(RngStream rng, const Dataset& ds, std::size_t num_clients,
                                    double beta, std::size_t per_client, std::size_t holdout) {
  if (std::isinf(beta) && beta > 0.0) {
    return PartitionIid(rng, ds, num_clients, per_client, holdout);
  }
  Require(beta > 0.0 && std::isfinite(beta), ErrorCode::kParameter,
          "dirichlet beta must be > 0 or infinite");
  Require(num_clients >= 1 && per_client >= 1, ErrorCode::kParameter,
          "partition needs K >= 1 and per_client >= 1");
  Require(num_clients * per_client + holdout <= ds.size(), ErrorCode::kInsufficientData,
          "dataset has " + std::to_string(ds.size()) + " samples, partition needs " +
              std::to_string(num_clients * per_client + holdout));
  const auto order = internal::StratifiedOrder(rng, ds);
  const std::size_t pool = num_clients * per_client;
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < pool; ++i) by_class[ds.samples[order[i]].label].push_back(order[i]);

  Partition p;
  p.client_indices.resize(num_clients);
  for (auto& members : by_class) {
    if (members.empty()) continue;
    const auto share = numstat::SampleDirichlet(rng, beta, num_clients);
    const double n = static_cast<double>(members.size());
    std::vector<std::size_t> counts(num_clients);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t k = 0; k < num_clients; ++k) {
      const double exact = share[k] * n;
      counts[k] = static_cast<std::size_t>(std::floor(exact));
      assigned += counts[k];
      remainders.emplace_back(exact - std::floor(exact), k);
    }
    // Largest fractional share first; index order breaks ties.
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < members.size(); ++r, ++assigned) {
      ++counts[remainders[r % num_clients].second];
    }
    std::size_t cursor = 0;
    for (std::size_t k = 0; k < num_clients; ++k) {
      for (std::size_t j = 0; j < counts[k]; ++j) p.client_indices[k].push_back(members[cursor++]);
    }
  }
  p.holdout_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(pool),
                           order.begin() + static_cast<std::ptrdiff_t>(pool + holdout));
  return p;
}

// Draws without replacement; returns min(count, pool.size()) indices.
inline std::vector<std::size_t> Choose(RngStream& rng, std::vector<std::size_t> pool,
                                       std::size_t count) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.NextBelow(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

struct EvalSplitOptions {
  std::size_t member_count = 200;
  NonmemberSource source = NonmemberSource::kHoldout;
  double holdout_fraction = 0.1;  // mixed mode only
  double others_fraction = 0.1;   // mixed mode only
};

// Members: a random subset of the target client's training set. Non-members:
// an equal-size draw from the holdout (optionally pooled with a fraction of
// every other client's training set).
inline EvalSplit BuildEvalSplit(RngStream rng, const Partition& partition,
                                std::size_t target_client, const EvalSplitOptions& opts) {
  Require(target_client < partition.num_clients(), ErrorCode::kConfig,
          "target_client out of range");
  EvalSplit split;
  split.member_indices = Choose(rng, partition.client_indices[target_client], opts.member_count);
  std::vector<std::size_t> pool;
  if (opts.source == NonmemberSource::kHoldout) {
    pool = partition.holdout_indices;
  } else {
    Require(opts.holdout_fraction > 0.0 && opts.holdout_fraction <= 1.0 &&
                opts.others_fraction >= 0.0 && opts.others_fraction <= 1.0,
            ErrorCode::kConfig, "non-member pool fractions must lie in (0, 1]");
    auto take = [&](const std::vector<std::size_t>& from, double fraction) {
      const auto n = static_cast<std::size_t>(
          std::ceil(fraction * static_cast<double>(from.size()) - 1e-9));
      auto picked = Choose(rng, from, n);
      pool.insert(pool.end(), picked.begin(), picked.end());
    };
    take(partition.holdout_indices, opts.holdout_fraction);
    for (std::size_t k = 0; k < partition.num_clients(); ++k) {
      if (k != target_client) take(partition.client_indices[k], opts.others_fraction);
    }
  }
  split.nonmember_indices = Choose(rng, std::move(pool), split.member_indices.size());
  Require(!split.member_indices.empty() && !split.nonmember_indices.empty(),
          ErrorCode::kInsufficientData, "evaluation split needs members and non-members");
  return split;
}

// ceil(portion * n) distinct indices without replacement.
inline std::vector<std::size_t> Subsample(RngStream& rng, std::vector<std::size_t> indices,
                                          double portion) {
  Require(portion > 0.0 && portion <= 1.0, ErrorCode::kParameter,
          "sampling portion must lie in (0, 1]");
  const auto n = static_cast<std::size_t>(
      std::ceil(portion * static_cast<double>(indices.size()) - 1e-9));
  return Choose(rng, std::move(indices), n);
}

struct MixedSample {
  std::vector<double> features;
  std::size_t label_a = 0;
  std::size_t label_b = 0;
  double lambda = 1.0;
};

inline MixedSample Mix(const LabeledSample& a, const LabeledSample& b, double lambda) {
  Require(a.features.size() == b.features.size(), ErrorCode::kShape, "mixup shape mismatch");
  MixedSample m;
  m.features.resize(a.features.size());
  for (std::size_t j = 0; j < a.features.size(); ++j) {
    m.features[j] = lambda * a.features[j] + (1.0 - lambda) * b.features[j];
  }
  m.label_a = a.label;
  m.label_b = b.label;
  m.lambda = lambda;
  return m;
}

// One lambda ~ Beta(alpha, alpha) per batch; partners from a random
// permutation of the batch.
inline std::vector<MixedSample> Mixup(RngStream& rng, std::span<const LabeledSample> batch,
                                      double alpha) {
  Require(batch.size() >= 2, ErrorCode::kParameter, "mixup needs a batch of at least 2");
  const double lambda = numstat::SampleBeta(rng, alpha);
  std::vector<std::size_t> partner(batch.size());
  for (std::size_t i = 0; i < partner.size(); ++i) partner[i] = i;
  numstat::Shuffle(rng, partner);
  std::vector<MixedSample> out;
  out.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) out.push_back(Mix(batch[i], batch[partner[i]], lambda));
  return out;
}

struct AugmentOps {
  bool flip_h = false;
  bool shift = false;
  double noise_std = 0.0;

  bool any() const { return flip_h || shift || noise_std > 0.0; }
  bool operator==(const AugmentOps&) const = default;
};

inline LabeledSample FlipHorizontal(const LabeledSample& s, const Geometry& g) {
  Require(g.rows * g.cols == s.features.size(), ErrorCode::kShape, "geometry mismatch");
  LabeledSample out = s;
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      out.features[r * g.cols + c] = s.features[r * g.cols + (g.cols - 1 - c)];
    }
  }
  return out;
}

// Translates the grid by (dr, dc) pixels; vacated cells are zero.
inline LabeledSample ShiftGrid(const LabeledSample& s, const Geometry& g, int dr, int dc) {
  Require(g.rows * g.cols == s.features.size(), ErrorCode::kShape, "geometry mismatch");
  LabeledSample out = s;
  std::fill(out.features.begin(), out.features.end(), 0.0);
  const auto rows = static_cast<int>(g.rows);
  const auto cols = static_cast<int>(g.cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int sr = r - dr;
      const int sc = c - dc;
      if (sr < 0 || sr >= rows || sc < 0 || sc >= cols) continue;
      out.features[static_cast<std::size_t>(r * cols + c)] =
          s.features[static_cast<std::size_t>(sr * cols + sc)];
    }
  }
  return out;
}

// Random augmentation: flip with probability 1/2, shift by a uniform offset
// in {-1, 0, 1}^2, then additive Gaussian noise. The label never changes.
inline LabeledSample Augment(RngStream& rng, const LabeledSample& s,
                             const std::optional<Geometry>& geometry, const AugmentOps& ops) {
  Require(ops.noise_std >= 0.0, ErrorCode::kConfig, "augment noise_std must be >= 0");
  if ((ops.flip_h || ops.shift) && !geometry) {
    throw Error(ErrorCode::kConfig, "flip/shift augmentation requires dataset geometry");
  }
  LabeledSample out = s;
  if (ops.flip_h && rng.NextBelow(2) == 1) out = FlipHorizontal(out, *geometry);
  if (ops.shift) {
    const int dr = static_cast<int>(rng.NextBelow(3)) - 1;
    const int dc = static_cast<int>(rng.NextBelow(3)) - 1;
    out = ShiftGrid(out, *geometry, dr, dc);
  }
  if (ops.noise_std > 0.0) {
    const auto noise = numstat::SampleGaussian(rng, 0.0, ops.noise_std, out.features.size());
    numstat::Axpy(1.0, noise, out.features);
  }
  return out;
}

}  // namespace data
}  // namespace fedmia

#endif  // FEDMIA_DATA_HPP_
