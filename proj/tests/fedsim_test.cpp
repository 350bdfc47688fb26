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

#include "fedmia/fedsim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "gtest/gtest.h"

namespace fedmia::fedsim {
namespace {

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kContract;
}

const ModelSpec kLinear{model::ModelKind::kLinearSoftmax, 2, 0, 3, 0.1};

data::Dataset Blobs(std::uint64_t seed, std::size_t per_class, double sep) {
  return data::SynthBlobs(RngStream(seed, 1), 3, 2, per_class, sep);
}

DefenseConfig Defense(DefenseKind kind) {
  DefenseConfig d;
  d.kind = kind;
  return d;
}

TEST(ClientUpdateTest, TinyLearningRateBarelyMoves) {
  const auto ds = Blobs(1, 20, 3.0);
  const auto w = model::InitParams(kLinear, RngStream(1, 2));
  FedConfig cfg;
  cfg.lr = 1e-8;
  const auto u = ClientUpdate(kLinear, ds.samples, std::nullopt, w, cfg, 0, RngStream(1, 3));
  // The update is scaled by 1/lr, so the parameter movement is lr * ||u||.
  EXPECT_LT(cfg.lr * numstat::Norm(u), 1e-3);
}

TEST(ClientUpdateTest, FullBatchSingleEpochIsTheBatchGradient) {
  const auto ds = Blobs(2, 10, 2.0);
  const auto w = model::InitParams(kLinear, RngStream(2, 2));
  FedConfig cfg;
  cfg.local_epochs = 1;
  cfg.batch_size = ds.size();
  cfg.lr = 0.5;
  const auto u = ClientUpdate(kLinear, ds.samples, std::nullopt, w, cfg, 0, RngStream(2, 3));
  const auto g = model::GradBatch(kLinear, w, ds.samples);
  ASSERT_EQ(u.size(), g.size());
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(u[i], g[i], 1e-12);
}

TEST(ClientUpdateTest, DeterministicAndDefenseAware) {
  const auto ds = Blobs(3, 10, 2.0);
  const auto w = model::InitParams(kLinear, RngStream(3, 2));
  for (auto kind : {DefenseKind::kNone, DefenseKind::kMixup, DefenseKind::kSample}) {
    FedConfig cfg;
    cfg.batch_size = 4;
    cfg.defense = Defense(kind);
    cfg.defense.portion = 0.5;
    const auto a = ClientUpdate(kLinear, ds.samples, std::nullopt, w, cfg, 2, RngStream(3, 3));
    const auto b = ClientUpdate(kLinear, ds.samples, std::nullopt, w, cfg, 2, RngStream(3, 3));
    EXPECT_EQ(a, b);
  }
  FedConfig cfg;
  EXPECT_EQ(CodeOf([&] {
              ClientUpdate(kLinear, std::span<const LabeledSample>{}, std::nullopt, w, cfg, 0,
                           RngStream(3, 4));
            }),
            ErrorCode::kConfig);
}

TEST(DefendUpdateTest, Examples) {
  auto perturb = Defense(DefenseKind::kPerturb);
  perturb.clip_norm = 1.0;
  const auto clipped = DefendUpdate({3.0, 4.0}, perturb, RngStream(0, 0));
  EXPECT_NEAR(clipped[0], 0.6, 1e-15);
  EXPECT_NEAR(clipped[1], 0.8, 1e-15);

  auto sparsify = Defense(DefenseKind::kSparsify);
  sparsify.rate = 0.5;
  EXPECT_EQ(DefendUpdate({1.0, -3.0, 2.0, 0.1}, sparsify, RngStream(0, 0)),
            (ParamVector{0.0, -3.0, 2.0, 0.0}));

  auto quantize = Defense(DefenseKind::kQuantize);
  quantize.bits = 1;
  const auto q = DefendUpdate({1.0, -0.5, 0.25}, quantize, RngStream(0, 0));
  const double m = 1.75 / 3.0;
  EXPECT_NEAR(q[0], m, 1e-15);
  EXPECT_NEAR(q[1], -m, 1e-15);
  EXPECT_NEAR(q[2], m, 1e-15);

  EXPECT_EQ(DefendUpdate({1.0, 2.0}, Defense(DefenseKind::kNone), RngStream(0, 0)),
            (ParamVector{1.0, 2.0}));
}

TEST(DefendUpdateTest, Errors) {
  EXPECT_EQ(CodeOf([] { DefendUpdate({1.0}, Defense(DefenseKind::kMixup), RngStream(0, 0)); }),
            ErrorCode::kConfig);
  auto bad = Defense(DefenseKind::kQuantize);
  bad.bits = 11;
  EXPECT_EQ(CodeOf([&] { DefendUpdate({1.0}, bad, RngStream(0, 0)); }), ErrorCode::kConfig);
  bad = Defense(DefenseKind::kPerturb);
  bad.clip_norm = 0.0;
  EXPECT_EQ(CodeOf([&] { DefendUpdate({1.0}, bad, RngStream(0, 0)); }), ErrorCode::kConfig);
}

TEST(DefendUpdateTest, ClippingBound) {
  RngStream rng(4, 1);
  auto perturb = Defense(DefenseKind::kPerturb);
  for (int i = 0; i < 200; ++i) {
    perturb.clip_norm = 0.01 + 3.0 * rng.NextUniform();
    const auto v = numstat::SampleGaussian(rng, 0.0, 2.0 * rng.NextUniform(), 17);
    const auto out = DefendUpdate(v, perturb, RngStream(4, 2));
    EXPECT_LE(numstat::Norm(out), perturb.clip_norm + 1e-12);
    if (numstat::Norm(v) <= perturb.clip_norm) {
      EXPECT_EQ(out, v);
    }
  }
}

TEST(DefendUpdateTest, NoiseHasRequestedScale) {
  auto perturb = Defense(DefenseKind::kPerturb);
  perturb.noise_std = 0.5;
  const auto out = DefendUpdate(ParamVector(20000, 0.0), perturb, RngStream(5, 1));
  EXPECT_NEAR(numstat::Summary(out).variance, 0.25, 0.01);
}

TEST(DefendUpdateTest, QuantizationIsIdempotent) {
  RngStream rng(6, 1);
  auto quantize = Defense(DefenseKind::kQuantize);
  for (int bits = 1; bits <= 10; ++bits) {
    quantize.bits = bits;
    for (int i = 0; i < 20; ++i) {
      auto v = numstat::SampleGaussian(rng, 0.0, 1.0, 31);
      if (i == 0) v[3] = 0.0;
      const auto once = DefendUpdate(v, quantize, RngStream(0, 0));
      const auto twice = DefendUpdate(once, quantize, RngStream(0, 0));
      EXPECT_EQ(once, twice) << "bits=" << bits;
      std::vector<double> levels(once.begin(), once.end());
      std::sort(levels.begin(), levels.end());
      levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
      EXPECT_LE(levels.size(), std::size_t{1} << bits);
    }
  }
}

TEST(DefendUpdateTest, SparsificationKeepsTopEntries) {
  RngStream rng(7, 1);
  auto sparsify = Defense(DefenseKind::kSparsify);
  for (int i = 0; i < 100; ++i) {
    sparsify.rate = 0.99 * rng.NextUniform();
    const auto v = numstat::SampleGaussian(rng, 0.0, 1.0, 23);
    const auto out = DefendUpdate(v, sparsify, RngStream(0, 0));
    const auto drop = static_cast<std::size_t>(std::floor(sparsify.rate * 23.0));
    std::vector<double> mags;
    for (double x : v) mags.push_back(std::abs(x));
    std::sort(mags.begin(), mags.end());
    std::size_t zeros = 0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      if (out[j] == 0.0) {
        ++zeros;
        EXPECT_LE(std::abs(v[j]), drop > 0 ? mags[drop - 1] : -1.0);
      } else {
        EXPECT_EQ(out[j], v[j]);
      }
    }
    EXPECT_EQ(zeros, drop);
    EXPECT_LE(numstat::Norm(out), numstat::Norm(v));
  }
}

TEST(AggregateTest, Examples) {
  const std::vector<ParamVector> updates{{1.0, 3.0}, {3.0, 5.0}};
  EXPECT_EQ(Aggregate(updates, ParamVector{0.0, 0.0}, 1.0), (ParamVector{-2.0, -4.0}));
  const std::vector<ParamVector> zeros{{0.0, 0.0}, {0.0, 0.0}, {0.0, 0.0}};
  EXPECT_EQ(Aggregate(zeros, ParamVector{0.5, -1.0}, 0.3), (ParamVector{0.5, -1.0}));
  const std::vector<ParamVector> same(4, ParamVector{0.25, -0.5});
  const auto w = Aggregate(same, ParamVector{1.0, 1.0}, 0.5);
  EXPECT_NEAR(w[0], 1.0 - 0.5 * 0.25, 1e-15);
  EXPECT_NEAR(w[1], 1.0 + 0.5 * 0.5, 1e-15);
  const std::vector<ParamVector> ragged{{1.0, 2.0}, {1.0}};
  EXPECT_EQ(CodeOf([&] { Aggregate(ragged, ParamVector{0.0, 0.0}, 1.0); }), ErrorCode::kShape);
}

TEST(AggregateTest, Linearity) {
  RngStream rng(8, 1);
  for (int i = 0; i < 50; ++i) {
    std::vector<ParamVector> updates;
    for (int k = 0; k < 5; ++k) updates.push_back(numstat::SampleGaussian(rng, 0.0, 1.0, 9));
    const auto w = numstat::SampleGaussian(rng, 0.0, 1.0, 9);
    const double c = 4.0 * rng.NextUniform() - 2.0;
    auto scaled = updates;
    for (auto& u : scaled) numstat::Scale(c, u);
    const auto base = Aggregate(updates, w, 0.1);
    const auto moved = Aggregate(scaled, w, 0.1);
    for (std::size_t j = 0; j < w.size(); ++j) {
      EXPECT_NEAR(moved[j] - w[j], c * (base[j] - w[j]), 1e-12);
    }
  }
}

struct Fixture {
  data::Dataset ds;
  data::Partition partition;
};

Fixture MakeFixture(std::size_t clients, double sep) {
  auto ds = Blobs(9, 200, sep);
  auto p = data::PartitionIid(RngStream(9, 2), ds, clients, 50, 100);
  return {std::move(ds), std::move(p)};
}

TEST(RunFederationTest, Shape) {
  const auto f = MakeFixture(2, 3.0);
  FedConfig cfg;
  cfg.num_clients = 2;
  cfg.rounds = 1;
  const auto trace = RunFederation(f.ds, f.partition, kLinear, cfg);
  EXPECT_NO_THROW(trace.Validate());
  ASSERT_EQ(trace.num_rounds(), 1u);
  EXPECT_EQ(trace.rounds[0].updates.size(), 2u);
  EXPECT_EQ(trace.final_model,
            Aggregate(trace.rounds[0].updates, trace.rounds[0].global_before, cfg.lr));
}

TEST(RunFederationTest, LearnsSeparableBlobs) {
  // Three features place the three class means on a simplex.
  const auto ds = data::SynthBlobs(RngStream(10, 1), 3, 3, 200, 8.0);
  const auto p = data::PartitionIid(RngStream(10, 2), ds, 4, 50, 100);
  const ModelSpec spec{model::ModelKind::kLinearSoftmax, 3, 0, 3, 0.1};
  FedConfig cfg;
  cfg.num_clients = 4;
  cfg.rounds = 10;
  cfg.seed = 21;
  const auto trace = RunFederation(ds, p, spec, cfg);
  EXPECT_GT(trace.rounds.back().test_accuracy, 0.9);
}

TEST(RunFederationTest, DeterministicAcrossJobCounts) {
  const auto f = MakeFixture(4, 2.0);
  const ModelSpec mlp{model::ModelKind::kMlp, 2, 6, 3, 0.1};
  for (auto kind : {DefenseKind::kNone, DefenseKind::kPerturb, DefenseKind::kMixup}) {
    FedConfig cfg;
    cfg.num_clients = 4;
    cfg.rounds = 3;
    cfg.seed = 5;
    cfg.lr_decay = 0.9;
    cfg.defense = Defense(kind);
    cfg.defense.noise_std = 0.01;
    const auto a = RunFederation(f.ds, f.partition, mlp, cfg, 1);
    const auto b = RunFederation(f.ds, f.partition, mlp, cfg, 4);
    ASSERT_EQ(a.num_rounds(), b.num_rounds());
    for (std::size_t t = 0; t < a.num_rounds(); ++t) {
      EXPECT_EQ(a.rounds[t].global_before, b.rounds[t].global_before);
      EXPECT_EQ(a.rounds[t].updates, b.rounds[t].updates);
      EXPECT_EQ(a.rounds[t].test_accuracy, b.rounds[t].test_accuracy);
      EXPECT_DOUBLE_EQ(a.rounds[t].lr_effective, 0.1 * std::pow(0.9, static_cast<double>(t)));
    }
    EXPECT_EQ(a.final_model, b.final_model);
  }
}

TEST(RunFederationTest, ConfigErrors) {
  const auto f = MakeFixture(2, 3.0);
  FedConfig cfg;
  cfg.num_clients = 3;
  EXPECT_EQ(CodeOf([&] { RunFederation(f.ds, f.partition, kLinear, cfg); }), ErrorCode::kConfig);
  cfg.num_clients = 2;
  cfg.lr_decay = 1.5;
  EXPECT_EQ(CodeOf([&] { RunFederation(f.ds, f.partition, kLinear, cfg); }), ErrorCode::kConfig);
  cfg.lr_decay = 1.0;
  const ModelSpec wrong{model::ModelKind::kLinearSoftmax, 3, 0, 3, 0.1};
  EXPECT_EQ(CodeOf([&] { RunFederation(f.ds, f.partition, wrong, cfg); }), ErrorCode::kConfig);
}

}  // namespace
}  // namespace fedmia::fedsim
