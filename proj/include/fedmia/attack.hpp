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

// Membership inference against a recorded update trace.
//
// FedMIA scores a target sample (x, y) against the target client in three
// steps:
//   1. For every round t and client k, reduce the update I_k^t to a scalar
//      measurement M[t][k] (cosine to the target's gradient, or a loss).
//   2. Per round, fit a Gaussian null N(mu_out, v_out) to the non-target
//      clients' measurements after dropping 3-sigma outliers, which are the
//      clients most likely to have trained on the sample themselves.
//   3. Score the target client's measurement by its one-tailed null
//      probability and average over rounds. Member iff the average > delta.
//
// Six baselines read the same trace; every score is oriented so that a
// higher value means "member".

#ifndef FEDMIA_ATTACK_HPP_
#define FEDMIA_ATTACK_HPP_

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fedmia/error.hpp"
#include "fedmia/fedsim.hpp"
#include "fedmia/model.hpp"
#include "fedmia/numstat.hpp"
#include "fedmia/parallel.hpp"

namespace fedmia {
namespace attack {

using model::LabeledSample;

enum class MeasurementKind { kCosine, kLoss, kGradNorm, kGradDiff };
enum class Orientation { kMemberHigh, kMemberLow };

struct Measurement {
  MeasurementKind kind = MeasurementKind::kCosine;
  Orientation orientation = Orientation::kMemberHigh;

  static Measurement Default(MeasurementKind kind) {
    const bool low = kind == MeasurementKind::kLoss || kind == MeasurementKind::kGradNorm;
    return {kind, low ? Orientation::kMemberLow : Orientation::kMemberHigh};
  }
};

// values[t][k] for round t, client k.
struct MeasurementMatrix {
  std::size_t sample_id = 0;
  std::size_t target_client = 0;
  std::vector<std::vector<double>> values;

  std::size_t rounds() const { return values.size(); }
  std::size_t clients() const { return values.empty() ? 0 : values.front().size(); }
};

struct RoundOutDistribution {
  std::size_t round = 0;
  std::vector<std::size_t> kept;  // U_t, client indices
  double mean = 0.0;
  double variance = 0.0;
};

struct MembershipScore {
  std::vector<double> per_round;
  double aggregate = 0.0;
};

struct MemberSet {
  double threshold = 0.0;
  std::vector<std::size_t> members;  // positions in the target list
};

struct DecisionSets {
  std::vector<MemberSet> per_round;
  MemberSet aggregate;
};

struct AttackOptions {
  // sigma_floor = sigma_floor_scale * (1 + |mu_out|)
  double sigma_floor_scale = 1e-8;
  // Judge each non-target client against the statistics of the others
  // instead of the plain 3-sigma rule over all of them.
  bool leave_one_out_filter = false;

  bool operator==(const AttackOptions&) const = default;
};

namespace internal {

struct Requested {
  bool cosine = false;
  bool grad_diff = false;
  bool client_loss = false;
  bool client_grad_norm = false;
};

struct Matrices {
  std::vector<std::vector<double>> cosine;
  std::vector<std::vector<double>> grad_diff;
  std::vector<std::vector<double>> client_loss;
  std::vector<std::vector<double>> client_grad_norm;
  std::vector<double> global_loss;       // l(w^t), t = 0..T (T = final model)
  std::vector<double> global_grad_norm;  // ||dl(w^t)/dw||, t = 0..T
};

// Client k's local model at round t, reconstructed as w^t - lr_t * I_k^t.
inline ParamVector ClientModel(const fedsim::RoundRecord& r, std::size_t k) {
  ParamVector w = r.global_before;
  numstat::Axpy(-r.lr_effective, r.updates[k], w);
  return w;
}

inline Matrices Compute(const fedsim::UpdateTrace& trace, const LabeledSample& target,
                        const Requested& req) {
  const auto& spec = trace.spec;
  Require(target.features.size() == spec.input_dim && target.label < spec.num_classes,
          ErrorCode::kShape, "target sample does not match the traced model");
  const std::size_t T = trace.num_rounds();
  const std::size_t K = trace.num_clients;
  Matrices m;
  auto sized = [&](bool on, auto& mat) {
    if (on) mat.assign(T, std::vector<double>(K, 0.0));
  };
  sized(req.cosine, m.cosine);
  sized(req.grad_diff, m.grad_diff);
  sized(req.client_loss, m.client_loss);
  sized(req.client_grad_norm, m.client_grad_norm);
  m.global_loss.resize(T + 1);
  m.global_grad_norm.resize(T + 1);
  for (std::size_t t = 0; t <= T; ++t) {
    const ParamVector& w = trace.GlobalAfter(t);
    m.global_loss[t] = model::Loss(spec, w, target);
    const bool need_grad = t < T && (req.cosine || req.grad_diff);
    if (!need_grad) {
      m.global_grad_norm[t] = numstat::Norm(model::GradSample(spec, w, target));
      continue;
    }
    const ParamVector g = model::GradSample(spec, w, target);
    const double gn = numstat::Norm(g);
    m.global_grad_norm[t] = gn;
    if (req.cosine) {
      Require(gn > 0.0, ErrorCode::kZeroGradient,
              "target gradient is zero at round " + std::to_string(t));
    }
    const auto& r = trace.rounds[t];
    for (std::size_t k = 0; k < K; ++k) {
      const double dot = numstat::Dot(r.updates[k], g);
      if (req.grad_diff) m.grad_diff[t][k] = dot;
      if (req.cosine) {
        const double un = numstat::Norm(r.updates[k]);
        // A zero upload carries no direction.
        m.cosine[t][k] = un > 0.0 ? std::clamp(dot / (un * gn), -1.0, 1.0) : 0.0;
      }
    }
  }
  if (req.client_loss || req.client_grad_norm) {
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t k = 0; k < K; ++k) {
        const ParamVector w = ClientModel(trace.rounds[t], k);
        if (req.client_loss) m.client_loss[t][k] = model::Loss(spec, w, target);
        if (req.client_grad_norm) {
          m.client_grad_norm[t][k] = numstat::Norm(model::GradSample(spec, w, target));
        }
      }
    }
  }
  return m;
}

}  // namespace internal

// Step 1 measurement matrix for one target sample.
//   cosine:    <I, g> / (||I|| ||g||), g = dl(w^t, x, y)/dw on the global model
//   grad_diff: <I, g>
//   loss:      l(w^t - lr_t I_k^t, x, y), client k's reconstructed local model
//   grad_norm: ||dl/dw|| on the same reconstructed local model
inline MeasurementMatrix Measure(const fedsim::UpdateTrace& trace, const LabeledSample& target,
                                 MeasurementKind kind, std::size_t sample_id = 0,
                                 std::size_t target_client = 0) {
  internal::Requested req;
  req.cosine = kind == MeasurementKind::kCosine;
  req.grad_diff = kind == MeasurementKind::kGradDiff;
  req.client_loss = kind == MeasurementKind::kLoss;
  req.client_grad_norm = kind == MeasurementKind::kGradNorm;
  auto m = internal::Compute(trace, target, req);
  MeasurementMatrix out;
  out.sample_id = sample_id;
  out.target_client = target_client;
  switch (kind) {
    case MeasurementKind::kCosine: out.values = std::move(m.cosine); break;
    case MeasurementKind::kGradDiff: out.values = std::move(m.grad_diff); break;
    case MeasurementKind::kLoss: out.values = std::move(m.client_loss); break;
    case MeasurementKind::kGradNorm: out.values = std::move(m.client_grad_norm); break;
  }
  return out;
}

// Step 2: the round-t null over non-target clients. mu and sigma come from
// all K - 1 non-target values; a client is dropped when its value lies
// beyond mu + 3 sigma (member_high) or below mu - 3 sigma (member_low); the
// kept set's population mean and variance are returned.
//
// With n non-target values no single value can sit more than (n - 1)/sqrt(n)
// standard deviations from the mean, so for n <= 10 this rule never removes
// anything.
inline RoundOutDistribution EstimateOut(const MeasurementMatrix& m, std::size_t t,
                                        std::size_t target_client, Orientation orientation,
                                        const AttackOptions& opts = {}) {
  Require(t < m.rounds(), ErrorCode::kShape, "round out of range");
  const std::size_t K = m.values[t].size();
  Require(K >= 3, ErrorCode::kInsufficientClients,
          "the out-distribution needs at least 2 non-target clients (K >= 3)");
  Require(target_client < K, ErrorCode::kShape, "target client out of range");
  const auto& row = m.values[t];
  std::vector<std::size_t> others;
  std::vector<double> vals;
  for (std::size_t j = 0; j < K; ++j) {
    if (j == target_client) continue;
    others.push_back(j);
    vals.push_back(row[j]);
  }
  auto outlier = [&](double v, const numstat::SummaryStats& s) {
    const double band = 3.0 * s.stddev();
    return orientation == Orientation::kMemberHigh ? v > s.mean + band : v < s.mean - band;
  };

  RoundOutDistribution out;
  out.round = t;
  if (!opts.leave_one_out_filter) {
    const auto all = numstat::Summary(vals);
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (!outlier(vals[i], all)) out.kept.push_back(others[i]);
    }
  } else {
    std::vector<double> rest;
    for (std::size_t i = 0; i < vals.size(); ++i) {
      rest.clear();
      for (std::size_t j = 0; j < vals.size(); ++j) {
        if (j != i) rest.push_back(vals[j]);
      }
      if (!outlier(vals[i], numstat::Summary(rest))) out.kept.push_back(others[i]);
    }
    if (out.kept.empty()) out.kept = others;
  }
  std::vector<double> kept_vals;
  for (std::size_t j : out.kept) kept_vals.push_back(row[j]);
  const auto s = numstat::Summary(kept_vals);
  out.mean = s.mean;
  out.variance = s.variance;
  return out;
}

// Step 3, one round: the null probability of a measurement no more extreme
// than the target's, in the member direction. The variance is floored at
// sigma_floor^2 so a constant null still yields a score.
inline double ScoreRound(double m_target, const RoundOutDistribution& out, Orientation orientation,
                         const AttackOptions& opts = {}) {
  const double floor = opts.sigma_floor_scale * (1.0 + std::abs(out.mean));
  const double var = std::max(out.variance, floor * floor);
  const double z = (m_target - out.mean) / std::sqrt(var);
  return numstat::GaussianCdf(orientation == Orientation::kMemberHigh ? z : -z, 0.0, 1.0);
}

inline double ScoreTemporal(std::span<const double> per_round) {
  Require(!per_round.empty(), ErrorCode::kEmptySample, "temporal score of zero rounds");
  double s = 0.0;
  for (double v : per_round) s += v;
  return s / static_cast<double>(per_round.size());
}

// Steps 2-3 over the first `rounds` rounds (all rounds when 0).
inline MembershipScore ScoreFedMia(const MeasurementMatrix& m, std::size_t target_client,
                                   Orientation orientation, const AttackOptions& opts = {},
                                   std::size_t rounds = 0) {
  if (rounds == 0) rounds = m.rounds();
  Require(rounds <= m.rounds(), ErrorCode::kShape, "round prefix exceeds the trace");
  MembershipScore s;
  s.per_round.reserve(rounds);
  for (std::size_t t = 0; t < rounds; ++t) {
    const auto out = EstimateOut(m, t, target_client, orientation, opts);
    s.per_round.push_back(ScoreRound(m.values[t][target_client], out, orientation, opts));
  }
  s.aggregate = ScoreTemporal(s.per_round);
  return s;
}

// Member iff score > delta (strict), per round and for the aggregate.
inline DecisionSets Decide(std::span<const MembershipScore> scores, double delta) {
  DecisionSets d;
  const std::size_t T = scores.empty() ? 0 : scores.front().per_round.size();
  d.per_round.assign(T, MemberSet{delta, {}});
  d.aggregate.threshold = delta;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    Require(scores[i].per_round.size() == T, ErrorCode::kShape,
            "all targets must be scored over the same rounds");
    for (std::size_t t = 0; t < T; ++t) {
      if (scores[i].per_round[t] > delta) d.per_round[t].members.push_back(i);
    }
    if (scores[i].aggregate > delta) d.aggregate.members.push_back(i);
  }
  return d;
}

// True iff every aggregate member is a member in at least one round.
inline bool CheckInclusion(const DecisionSets& d) {
  for (const auto& r : d.per_round) {
    Require(r.threshold == d.aggregate.threshold, ErrorCode::kContract,
            "decision sets were built with different thresholds");
  }
  std::vector<char> in_union;
  for (const auto& r : d.per_round) {
    for (std::size_t v : r.members) {
      if (v >= in_union.size()) in_union.resize(v + 1, 0);
      in_union[v] = 1;
    }
  }
  return std::all_of(d.aggregate.members.begin(), d.aggregate.members.end(),
                     [&](std::size_t v) { return v < in_union.size() && in_union[v]; });
}

enum class Method {
  kFedMiaI,
  kFedMiaII,
  kBlackboxLoss,
  kGradCosine,
  kGradNorm,
  kLossSeries,
  kAvgCosine,
  kGradDiff,
};

inline constexpr std::array<Method, 8> kAllMethods = {
    Method::kFedMiaI,    Method::kFedMiaII,   Method::kBlackboxLoss, Method::kGradCosine,
    Method::kGradNorm,   Method::kLossSeries, Method::kAvgCosine,    Method::kGradDiff};

inline std::string MethodName(Method m) {
  switch (m) {
    case Method::kFedMiaI: return "fedmia-i";
    case Method::kFedMiaII: return "fedmia-ii";
    case Method::kBlackboxLoss: return "blackbox-loss";
    case Method::kGradCosine: return "grad-cosine";
    case Method::kGradNorm: return "grad-norm";
    case Method::kLossSeries: return "loss-series";
    case Method::kAvgCosine: return "avg-cosine";
    case Method::kGradDiff: return "grad-diff";
  }
  return "";
}

inline Method ParseMethod(const std::string& name) {
  for (Method m : kAllMethods) {
    if (MethodName(m) == name) return m;
  }
  throw Error(ErrorCode::kConfig, "unknown attack method '" + name + "'");
}

inline bool IsFedMia(Method m) { return m == Method::kFedMiaI || m == Method::kFedMiaII; }

// Everything the attacks need about one target, computed once per trace.
struct TargetEvidence {
  MeasurementMatrix cosine;
  MeasurementMatrix grad_diff;
  MeasurementMatrix client_loss;
  std::vector<double> global_loss;       // t = 0..T
  std::vector<double> global_grad_norm;  // t = 0..T
};

inline TargetEvidence ComputeEvidence(const fedsim::UpdateTrace& trace, const LabeledSample& target,
                                      std::size_t sample_id, std::size_t target_client) {
  Require(target_client < trace.num_clients, ErrorCode::kConfig, "target_client out of range");
  internal::Requested req{true, true, true, false};
  auto m = internal::Compute(trace, target, req);
  TargetEvidence e;
  e.cosine = {sample_id, target_client, std::move(m.cosine)};
  e.grad_diff = {sample_id, target_client, std::move(m.grad_diff)};
  e.client_loss = {sample_id, target_client, std::move(m.client_loss)};
  e.global_loss = std::move(m.global_loss);
  e.global_grad_norm = std::move(m.global_grad_norm);
  return e;
}

inline MembershipScore FedMiaScore(const TargetEvidence& e, Method variant,
                                   const AttackOptions& opts, std::size_t rounds = 0) {
  Require(IsFedMia(variant), ErrorCode::kContract, "not a FedMIA variant");
  if (variant == Method::kFedMiaI) {
    return ScoreFedMia(e.client_loss, e.client_loss.target_client, Orientation::kMemberLow, opts,
                       rounds);
  }
  return ScoreFedMia(e.cosine, e.cosine.target_client, Orientation::kMemberHigh, opts, rounds);
}

// Score of one method using the first `rounds` rounds (all when 0).
//   blackbox-loss: -l(w_final)             grad-cosine: M_cos[last][tar]
//   grad-norm:     -||dl(w_final)/dw||     loss-series: -mean_t l(w^t)
//   avg-cosine:    mean_t M_cos[t][tar]    grad-diff:   mean_t <I_tar^t, g^t>
inline double MethodScore(const TargetEvidence& e, Method method, const AttackOptions& opts,
                          std::size_t rounds = 0) {
  const std::size_t T = e.cosine.rounds();
  if (rounds == 0) rounds = T;
  Require(rounds <= T, ErrorCode::kShape, "round prefix exceeds the trace");
  const std::size_t tar = e.cosine.target_client;
  auto mean_over = [&](auto&& f) {
    double s = 0.0;
    for (std::size_t t = 0; t < rounds; ++t) s += f(t);
    return s / static_cast<double>(rounds);
  };
  switch (method) {
    case Method::kFedMiaI:
    case Method::kFedMiaII:
      return FedMiaScore(e, method, opts, rounds).aggregate;
    case Method::kBlackboxLoss:
      return -e.global_loss[rounds];
    case Method::kGradCosine:
      return e.cosine.values[rounds - 1][tar];
    case Method::kGradNorm:
      return -e.global_grad_norm[rounds];
    case Method::kLossSeries:
      return -mean_over([&](std::size_t t) { return e.global_loss[t]; });
    case Method::kAvgCosine:
      return mean_over([&](std::size_t t) { return e.cosine.values[t][tar]; });
    case Method::kGradDiff:
      return mean_over([&](std::size_t t) { return e.grad_diff.values[t][tar]; });
  }
  return 0.0;
}

// Caches per-target evidence for one trace so that scores, round prefixes and
// decision thresholds can be re-evaluated without touching the model again.
class AttackSession {
 public:
  AttackSession(const fedsim::UpdateTrace& trace, std::span<const LabeledSample> targets,
                std::span<const std::size_t> sample_ids, std::size_t target_client,
                AttackOptions opts = {}, std::size_t jobs = 1)
      : rounds_(trace.num_rounds()), opts_(opts) {
    Require(sample_ids.size() == targets.size(), ErrorCode::kShape, "one id per target required");
    Require(trace.num_clients >= 3, ErrorCode::kInsufficientClients,
            "FedMIA needs at least 3 clients");
    evidence_.resize(targets.size());
    ParallelFor(targets.size(), jobs, [&](std::size_t i) {
      evidence_[i] = ComputeEvidence(trace, targets[i], sample_ids[i], target_client);
    });
    evidence_computations_ = targets.size();
  }

  std::size_t num_targets() const { return evidence_.size(); }
  std::size_t num_rounds() const { return rounds_; }
  std::size_t evidence_computations() const { return evidence_computations_; }
  const TargetEvidence& evidence(std::size_t i) const { return evidence_.at(i); }
  const AttackOptions& options() const { return opts_; }

  std::vector<double> Scores(Method method, std::size_t rounds = 0) const {
    std::vector<double> out;
    out.reserve(evidence_.size());
    for (const auto& e : evidence_) out.push_back(MethodScore(e, method, opts_, rounds));
    return out;
  }

  std::vector<MembershipScore> FedMiaScores(Method variant, std::size_t rounds = 0) const {
    std::vector<MembershipScore> out;
    out.reserve(evidence_.size());
    for (const auto& e : evidence_) out.push_back(FedMiaScore(e, variant, opts_, rounds));
    return out;
  }

 private:
  std::vector<TargetEvidence> evidence_;
  std::size_t rounds_;
  AttackOptions opts_;
  std::size_t evidence_computations_ = 0;
};

struct FedMiaResult {
  std::vector<MembershipScore> scores;
  DecisionSets decisions;
};

// Algorithm-level entry point: score every target and threshold at delta.
inline FedMiaResult FedMia(const fedsim::UpdateTrace& trace, std::span<const LabeledSample> targets,
                           std::size_t target_client, Method variant, double delta,
                           const AttackOptions& opts = {}) {
  Require(IsFedMia(variant), ErrorCode::kConfig, "variant must be fedmia-i or fedmia-ii");
  std::vector<std::size_t> ids(targets.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  AttackSession session(trace, targets, ids, target_client, opts);
  FedMiaResult r;
  r.scores = session.FedMiaScores(variant);
  r.decisions = Decide(r.scores, delta);
  return r;
}

// The six baselines, keyed by method, one score per target.
inline std::vector<std::pair<Method, std::vector<double>>> Baselines(
    const fedsim::UpdateTrace& trace, std::span<const LabeledSample> targets,
    std::size_t target_client) {
  std::vector<std::size_t> ids(targets.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  Require(target_client < trace.num_clients, ErrorCode::kConfig, "target_client out of range");
  std::vector<TargetEvidence> ev;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    ev.push_back(ComputeEvidence(trace, targets[i], i, target_client));
  }
  std::vector<std::pair<Method, std::vector<double>>> out;
  for (Method m : kAllMethods) {
    if (IsFedMia(m)) continue;
    std::vector<double> scores;
    for (const auto& e : ev) scores.push_back(MethodScore(e, m, {}));
    out.emplace_back(m, std::move(scores));
  }
  return out;
}

}  // namespace attack
}  // namespace fedmia

#endif  // FEDMIA_ATTACK_HPP_
