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

// FedAvg over K clients and T rounds with client-side defenses, recording
// everything a semi-honest server observes.
//
// A client's upload at round t is the gradient-like update
//   I_k^t = (w^t - w_k^{after}) / lr_t,   lr_t = lr * lr_decay^t,
// so that the server step w^{t+1} = w^t - (lr_t / K) * sum_k I_k^t is plain
// model averaging when no defense is active.

#ifndef FEDMIA_FEDSIM_HPP_
#define FEDMIA_FEDSIM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedmia/data.hpp"
#include "fedmia/error.hpp"
#include "fedmia/model.hpp"
#include "fedmia/numstat.hpp"
#include "fedmia/parallel.hpp"

namespace fedmia {
namespace fedsim {

using model::LabeledSample;
using model::ModelSpec;
using numstat::RngStream;

enum class DefenseKind {
  kNone,
  kPerturb,
  kQuantize,
  kSparsify,
  kMixup,
  kAugment,
  kSample,
  kAugmentAndSample,
};

inline std::string DefenseKindName(DefenseKind kind) {
  switch (kind) {
    case DefenseKind::kNone: return "none";
    case DefenseKind::kPerturb: return "perturb";
    case DefenseKind::kQuantize: return "quantize";
    case DefenseKind::kSparsify: return "sparsify";
    case DefenseKind::kMixup: return "mixup";
    case DefenseKind::kAugment: return "augment";
    case DefenseKind::kSample: return "sample";
    case DefenseKind::kAugmentAndSample: return "augment_and_sample";
  }
  return "none";
}

inline DefenseKind ParseDefenseKind(const std::string& name) {
  for (auto k : {DefenseKind::kNone, DefenseKind::kPerturb, DefenseKind::kQuantize,
                 DefenseKind::kSparsify, DefenseKind::kMixup, DefenseKind::kAugment,
                 DefenseKind::kSample, DefenseKind::kAugmentAndSample}) {
    if (DefenseKindName(k) == name) return k;
  }
  throw Error(ErrorCode::kConfig, "unknown defense kind '" + name + "'");
}

struct DefenseConfig {
  DefenseKind kind = DefenseKind::kNone;
  double clip_norm = 1.0;    // perturb
  double noise_std = 0.0;    // perturb
  int bits = 8;              // quantize
  double rate = 0.0;         // sparsify
  double mixup_alpha = 1.0;  // mixup
  data::AugmentOps augment;  // augment, augment_and_sample
  double portion = 1.0;      // sample, augment_and_sample

  bool IsUpdateLevel() const {
    return kind == DefenseKind::kPerturb || kind == DefenseKind::kQuantize ||
           kind == DefenseKind::kSparsify;
  }
  bool UsesAugment() const {
    return kind == DefenseKind::kAugment || kind == DefenseKind::kAugmentAndSample;
  }
  bool UsesSampling() const {
    return kind == DefenseKind::kSample || kind == DefenseKind::kAugmentAndSample;
  }

  void Validate() const {
    switch (kind) {
      case DefenseKind::kPerturb:
        Require(clip_norm > 0.0 && std::isfinite(clip_norm), ErrorCode::kConfig,
                "perturb.clip_norm must be > 0");
        Require(noise_std >= 0.0 && std::isfinite(noise_std), ErrorCode::kConfig,
                "perturb.noise_std must be >= 0");
        break;
      case DefenseKind::kQuantize:
        Require(bits >= 1 && bits <= 10, ErrorCode::kConfig, "quantize.bits must lie in [1, 10]");
        break;
      case DefenseKind::kSparsify:
        Require(rate >= 0.0 && rate <= 0.99, ErrorCode::kConfig,
                "sparsify.rate must lie in [0, 0.99]");
        break;
      case DefenseKind::kMixup:
        Require(mixup_alpha > 0.0 && std::isfinite(mixup_alpha), ErrorCode::kConfig,
                "mixup.alpha must be > 0");
        break;
      case DefenseKind::kAugment:
      case DefenseKind::kSample:
      case DefenseKind::kAugmentAndSample:
        if (UsesAugment()) {
          Require(augment.noise_std >= 0.0, ErrorCode::kConfig, "augment.noise_std must be >= 0");
        }
        if (UsesSampling()) {
          Require(portion > 0.0 && portion <= 1.0, ErrorCode::kConfig,
                  "sample.portion must lie in (0, 1]");
        }
        break;
      case DefenseKind::kNone:
        break;
    }
  }

  bool operator==(const DefenseConfig&) const = default;
};

struct FedConfig {
  std::size_t num_clients = 10;
  std::size_t rounds = 50;
  int local_epochs = 3;
  double lr = 0.1;
  double lr_decay = 1.0;
  std::size_t batch_size = 32;
  DefenseConfig defense;
  std::uint64_t seed = 0;

  void Validate() const {
    Require(num_clients >= 2, ErrorCode::kConfig, "federation needs at least 2 clients");
    Require(rounds >= 1, ErrorCode::kConfig, "federation.rounds must be >= 1");
    Require(local_epochs >= 1, ErrorCode::kConfig, "federation.local_epochs must be >= 1");
    Require(lr > 0.0 && std::isfinite(lr), ErrorCode::kConfig, "federation.lr must be > 0");
    Require(lr_decay > 0.0 && lr_decay <= 1.0, ErrorCode::kConfig,
            "federation.lr_decay must lie in (0, 1]");
    Require(batch_size >= 1, ErrorCode::kConfig, "federation.batch_size must be >= 1");
    defense.Validate();
  }

  double EffectiveLr(std::size_t round) const {
    return lr * std::pow(lr_decay, static_cast<double>(round));
  }

  bool operator==(const FedConfig&) const = default;
};

// Stream domains under the experiment seed.
inline constexpr std::uint64_t kInitStream = 0x1001;
inline constexpr std::uint64_t kClientStream = 0x1002;
inline constexpr std::uint64_t kDefenseStream = 0x1003;

struct RoundRecord {
  std::size_t round = 0;
  double lr_effective = 0.0;
  ParamVector global_before;         // w^t
  std::vector<ParamVector> updates;  // post-defense I_k^t, client order
  double test_accuracy = 0.0;        // of w^{t+1} on the holdout set
};

// The server's complete observation plus the model after the last round.
struct UpdateTrace {
  ModelSpec spec;
  std::size_t num_clients = 0;
  DefenseConfig defense;
  std::vector<RoundRecord> rounds;
  ParamVector final_model;

  std::size_t num_rounds() const { return rounds.size(); }

  // Global model after `prefix` rounds.
  const ParamVector& GlobalAfter(std::size_t prefix) const {
    return prefix < rounds.size() ? rounds[prefix].global_before : final_model;
  }

  void Validate() const {
    const std::size_t dim = spec.ParamCount();
    Require(!rounds.empty(), ErrorCode::kIntegrity, "trace has no rounds");
    Require(final_model.size() == dim, ErrorCode::kIntegrity, "final model dimension mismatch");
    for (std::size_t t = 0; t < rounds.size(); ++t) {
      const auto& r = rounds[t];
      Require(r.round == t, ErrorCode::kIntegrity, "round index out of sequence");
      Require(r.global_before.size() == dim, ErrorCode::kIntegrity,
              "round " + std::to_string(t) + " global model dimension mismatch");
      Require(r.updates.size() == num_clients, ErrorCode::kIntegrity,
              "round " + std::to_string(t) + " does not hold exactly K updates");
      for (const auto& u : r.updates) {
        Require(u.size() == dim, ErrorCode::kIntegrity,
                "round " + std::to_string(t) + " update dimension mismatch");
      }
    }
  }
};

namespace internal {

inline ParamVector MeanGradMixed(const ModelSpec& spec, std::span<const double> params,
                                 std::span<const data::MixedSample> batch) {
  ParamVector g(params.size(), 0.0);
  const double w = 1.0 / static_cast<double>(batch.size());
  for (const auto& m : batch) {
    model::internal::AccumulateGrad(spec, params, m.features, m.label_a, m.label_b, m.lambda, w,
                                    g);
  }
  return g;
}

}  // namespace internal

// Local training from the global model with the data-level defenses active,
// returning the pre-defense update (w^t - w_after) / lr_t.
inline ParamVector ClientUpdate(const ModelSpec& spec, std::span<const LabeledSample> client_data,
                                const std::optional<data::Geometry>& geometry,
                                std::span<const double> global, const FedConfig& config,
                                std::size_t round, RngStream rng) {
  Require(!client_data.empty(), ErrorCode::kConfig, "client has no training data");
  Require(global.size() == spec.ParamCount(), ErrorCode::kShape, "global model dimension mismatch");
  const DefenseConfig& def = config.defense;
  const double lr = config.EffectiveLr(round);
  ParamVector w(global.begin(), global.end());

  std::vector<std::size_t> all(client_data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<LabeledSample> batch;
  for (int e = 0; e < config.local_epochs; ++e) {
    std::vector<std::size_t> order =
        def.UsesSampling() ? data::Subsample(rng, all, def.portion) : all;
    numstat::Shuffle(rng, order);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const LabeledSample& s = client_data[order[i]];
        batch.push_back(def.UsesAugment() ? data::Augment(rng, s, geometry, def.augment) : s);
      }
      ParamVector g;
      if (def.kind == DefenseKind::kMixup && batch.size() >= 2) {
        const auto mixed = data::Mixup(rng, batch, def.mixup_alpha);
        g = internal::MeanGradMixed(spec, w, mixed);
      } else {
        g = model::GradBatch(spec, w, batch);
      }
      numstat::Axpy(-lr, g, w);
    }
  }
  ParamVector update(global.begin(), global.end());
  numstat::Axpy(-1.0, w, update);
  numstat::Scale(1.0 / lr, update);
  return update;
}

namespace internal {

inline ParamVector Quantize(ParamVector v, int bits) {
  if (v.empty()) return v;
  if (bits == 1) {
    double mean_abs = 0.0;
    for (double x : v) mean_abs += std::abs(x);
    mean_abs /= static_cast<double>(v.size());
    // Summation can drift by an ulp on equal magnitudes; keep them exact.
    const double first = std::abs(v.front());
    if (std::all_of(v.begin(), v.end(), [&](double x) { return std::abs(x) == first; })) {
      mean_abs = first;
    }
    // sign(0) is taken as +1 so that the output is a fixed point.
    for (double& x : v) x = x < 0.0 ? -mean_abs : mean_abs;
    return v;
  }
  double top = 0.0;
  for (double x : v) top = std::max(top, std::abs(x));
  if (top == 0.0) return v;
  const double steps = std::ldexp(1.0, bits) - 1.0;  // levels - 1
  for (double& x : v) {
    const double k = std::round((x / top + 1.0) * steps / 2.0);
    x = top * (2.0 * k / steps - 1.0);
  }
  return v;
}

inline ParamVector Sparsify(ParamVector v, double rate) {
  const auto drop = static_cast<std::size_t>(std::floor(rate * static_cast<double>(v.size()) + 1e-9));
  if (drop == 0) return v;
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::abs(v[a]) < std::abs(v[b]);
  });
  for (std::size_t i = 0; i < drop; ++i) v[order[i]] = 0.0;
  return v;
}

}  // namespace internal

// Update-level defenses applied on the client before upload.
//   perturb:  v * min(1, clip / ||v||) + N(0, noise_std^2 I)
//   quantize: symmetric uniform grid of 2^bits levels on [-max|v|, max|v|];
//             bits = 1 is sign(v) * mean|v|
//   sparsify: zero the floor(rate * d) smallest magnitudes, ties by index
inline ParamVector DefendUpdate(ParamVector update, const DefenseConfig& def, RngStream rng) {
  def.Validate();
  switch (def.kind) {
    case DefenseKind::kNone:
      return update;
    case DefenseKind::kPerturb: {
      const double n = numstat::Norm(update);
      if (n > def.clip_norm) numstat::Scale(def.clip_norm / n, update);
      if (def.noise_std > 0.0) {
        const auto noise = numstat::SampleGaussian(rng, 0.0, def.noise_std, update.size());
        numstat::Axpy(1.0, noise, update);
      }
      return update;
    }
    case DefenseKind::kQuantize:
      return internal::Quantize(std::move(update), def.bits);
    case DefenseKind::kSparsify:
      return internal::Sparsify(std::move(update), def.rate);
    default:
      throw Error(ErrorCode::kConfig,
                  "defense '" + DefenseKindName(def.kind) + "' is not an update-level defense");
  }
}

// w - lr * mean(updates), summed in client-index order.
inline ParamVector Aggregate(std::span<const ParamVector> updates, std::span<const double> global,
                             double lr_effective) {
  Require(!updates.empty(), ErrorCode::kEmptySample, "aggregate of zero updates");
  ParamVector sum(global.size(), 0.0);
  for (const auto& u : updates) numstat::Axpy(1.0, u, sum);
  ParamVector next(global.begin(), global.end());
  numstat::Axpy(-lr_effective / static_cast<double>(updates.size()), sum, next);
  return next;
}

// Full federation. Each client's randomness comes from its own
// (seed, client, round) stream and aggregation order is fixed, so the trace
// does not depend on `jobs`.
inline UpdateTrace RunFederation(const data::Dataset& dataset, const data::Partition& partition,
                                 const ModelSpec& spec, const FedConfig& config,
                                 std::size_t jobs = 1) {
  config.Validate();
  spec.Validate();
  Require(partition.num_clients() == config.num_clients, ErrorCode::kConfig,
          "partition has " + std::to_string(partition.num_clients()) +
              " clients, federation expects " + std::to_string(config.num_clients));
  partition.Validate(dataset.size());
  Require(dataset.input_dim() == spec.input_dim && dataset.num_classes == spec.num_classes,
          ErrorCode::kConfig, "model spec does not match the dataset");

  std::vector<std::vector<LabeledSample>> client_data;
  for (const auto& idx : partition.client_indices) client_data.push_back(dataset.Gather(idx));
  const auto holdout = dataset.Gather(partition.holdout_indices);

  const RngStream root(config.seed, 0);
  UpdateTrace trace;
  trace.spec = spec;
  trace.num_clients = config.num_clients;
  trace.defense = config.defense;
  ParamVector global = model::InitParams(spec, root.Derive({kInitStream}));

  for (std::size_t t = 0; t < config.rounds; ++t) {
    RoundRecord rec;
    rec.round = t;
    rec.lr_effective = config.EffectiveLr(t);
    rec.global_before = global;
    rec.updates.resize(config.num_clients);
    ParallelFor(config.num_clients, jobs, [&](std::size_t k) {
      ParamVector u = ClientUpdate(spec, client_data[k], dataset.geometry, global, config, t,
                                   root.Derive({kClientStream, k, t}));
      if (config.defense.IsUpdateLevel()) {
        u = DefendUpdate(std::move(u), config.defense, root.Derive({kDefenseStream, k, t}));
      }
      rec.updates[k] = std::move(u);
    });
    global = Aggregate(rec.updates, global, rec.lr_effective);
    rec.test_accuracy = holdout.empty() ? 0.0 : model::Accuracy(spec, global, holdout);
    trace.rounds.push_back(std::move(rec));
  }
  trace.final_model = std::move(global);
  return trace;
}

}  // namespace fedsim
}  // namespace fedmia

#endif  // FEDMIA_FEDSIM_HPP_
