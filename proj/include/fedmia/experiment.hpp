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

// Experiment orchestration: data -> federation -> trace -> attacks -> metrics,
// for every seed and defense sweep point, plus replay of a stored trace.
//
// Report directory layout (all CSVs are byte-deterministic):
//   config.json           normalized config; its FNV-1a hash is the config hash
//   report.json           provenance, job list, timestamps
//   metrics.csv           seed-mean rows per (method, sweep point)
//   metrics_by_seed.csv   the same per seed, with the achieved FPR
//   round_metrics.csv     AUC and TPR@FPR using only the first r rounds
//   decisions.csv         FedMIA member sets per threshold, inclusion check
//   pareto.json           per method: points, front, hypervolume
//   scores/<job>.csv      method,sample_id,is_member_truth,score
//   scores/<job>.json     per-round FedMIA scores
//   traces/<job>/         stored trace (when save_traces is on)

#ifndef FEDMIA_EXPERIMENT_HPP_
#define FEDMIA_EXPERIMENT_HPP_

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedmia/attack.hpp"
#include "fedmia/config.hpp"
#include "fedmia/data.hpp"
#include "fedmia/error.hpp"
#include "fedmia/fedsim.hpp"
#include "fedmia/metrics.hpp"
#include "fedmia/model.hpp"
#include "fedmia/parallel.hpp"
#include "fedmia/serialize.hpp"
#include "fedmia/trace_io.hpp"
#include "fedmia/version.hpp"

namespace fedmia {
namespace harness {

namespace fs = std::filesystem;
using attack::Method;
using config::AttackConfig;
using config::ExperimentConfig;

inline constexpr const char* kOutRootEnv = "FEDMIA_OUT_ROOT";
inline constexpr const char* kReportFormat = "fedmia-report";

// Stream domains for the harness, next to those of the federation.
inline constexpr std::uint64_t kDataStream = 0x2001;
inline constexpr std::uint64_t kPartitionStream = 0x2002;
inline constexpr std::uint64_t kSplitStream = 0x2003;

inline fs::path DefaultOutputRoot() {
  const char* env = std::getenv(kOutRootEnv);
  return env != nullptr && *env != '\0' ? fs::path(env) : fs::path("fedmia-out");
}

// --- attack evaluation -----------------------------------------------------

struct MethodMetrics {
  Method method = Method::kFedMiaII;
  double auc = 0.0;
  double tpr = 0.0;
  double achieved_fpr = 0.0;
};

struct DecisionRow {
  Method variant = Method::kFedMiaII;
  double delta = 0.0;
  std::size_t flagged = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  bool inclusion = true;
};

struct RoundCurvePoint {
  Method method = Method::kFedMiaII;
  std::size_t round = 0;  // number of rounds used, 1..T
  double auc = 0.0;
  double tpr = 0.0;
};

struct AttackEvaluation {
  std::size_t target_client = 0;
  std::size_t rounds = 0;
  std::vector<std::size_t> sample_ids;
  std::vector<bool> is_member;
  std::vector<std::pair<Method, std::vector<double>>> scores;  // config order
  std::vector<std::pair<Method, std::vector<attack::MembershipScore>>> fedmia;
  std::vector<MethodMetrics> metrics;
  std::vector<DecisionRow> decisions;
  std::vector<RoundCurvePoint> round_curves;

  const std::vector<double>& ScoresOf(Method m) const {
    for (const auto& [method, s] : scores) {
      if (method == m) return s;
    }
    throw Error(ErrorCode::kConfig, "method " + attack::MethodName(m) + " was not evaluated");
  }
  const MethodMetrics& MetricsOf(Method m) const {
    for (const auto& x : metrics) {
      if (x.method == m) return x;
    }
    throw Error(ErrorCode::kConfig, "method " + attack::MethodName(m) + " was not evaluated");
  }
};

inline metrics::ScoredCohort Cohort(std::span<const double> scores, const std::vector<bool>& truth) {
  metrics::ScoredCohort c;
  c.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) c.push_back({scores[i], truth[i]});
  return c;
}

// Scores every configured method from the session's cached evidence. Only
// thresholds and metrics are computed here, so calling this again with a
// different delta grid never touches the model.
inline AttackEvaluation EvaluateAttack(const attack::AttackSession& session,
                                       std::span<const std::size_t> sample_ids,
                                       const std::vector<bool>& truth, const AttackConfig& cfg) {
  Require(truth.size() == session.num_targets() && sample_ids.size() == truth.size(),
          ErrorCode::kShape, "one truth label and id per target required");
  AttackEvaluation ev;
  ev.target_client = session.num_targets() > 0 ? session.evidence(0).cosine.target_client : 0;
  ev.rounds = session.num_rounds();
  ev.sample_ids.assign(sample_ids.begin(), sample_ids.end());
  ev.is_member = truth;
  const std::size_t T = session.num_rounds();

  for (Method m : cfg.methods) {
    std::vector<double> s;
    if (attack::IsFedMia(m)) {
      auto per = session.FedMiaScores(m);
      for (const auto& x : per) s.push_back(x.aggregate);
      ev.fedmia.emplace_back(m, std::move(per));
    } else {
      s = session.Scores(m);
    }
    const auto cohort = Cohort(s, truth);
    const auto op = metrics::TprAtFpr(cohort, cfg.fpr_cap);
    ev.metrics.push_back({m, metrics::Auc(cohort), op.tpr, op.fpr});
    ev.scores.emplace_back(m, std::move(s));
  }

  for (const auto& [variant, per] : ev.fedmia) {
    for (double delta : cfg.deltas) {
      const auto d = attack::Decide(per, delta);
      DecisionRow row{variant, delta, d.aggregate.members.size(), 0, 0, attack::CheckInclusion(d)};
      for (std::size_t i : d.aggregate.members) (truth[i] ? row.true_positives : row.false_positives)++;
      ev.decisions.push_back(row);
    }
  }

  if (cfg.round_curves) {
    for (const auto& [m, full] : ev.scores) {
      const std::vector<attack::MembershipScore>* per = nullptr;
      for (const auto& [variant, p] : ev.fedmia) {
        if (variant == m) per = &p;
      }
      for (std::size_t r = 1; r <= T; ++r) {
        std::vector<double> s;
        if (per != nullptr) {
          // Per-round scores do not depend on later rounds, so a prefix
          // score is the mean of the first r of them.
          for (const auto& x : *per) {
            s.push_back(attack::ScoreTemporal(std::span(x.per_round).first(r)));
          }
        } else {
          s = session.Scores(m, r);
        }
        const auto cohort = Cohort(s, truth);
        ev.round_curves.push_back(
            {m, r, metrics::Auc(cohort), metrics::TprAtFpr(cohort, cfg.fpr_cap).tpr});
      }
    }
  }
  return ev;
}

// --- CSV / JSON emitters ------------------------------------------------------

inline std::string ScoresCsv(const AttackEvaluation& ev) {
  std::string out = "method,sample_id,is_member_truth,score\n";
  for (const auto& [m, s] : ev.scores) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out += attack::MethodName(m) + "," + std::to_string(ev.sample_ids[i]) + "," +
             (ev.is_member[i] ? "1" : "0") + "," + FormatDouble(s[i]) + "\n";
    }
  }
  return out;
}

inline Json ScoresSidecar(const AttackEvaluation& ev) {
  Json variants = Json::array();
  for (const auto& [m, per] : ev.fedmia) {
    Json samples = Json::array();
    for (std::size_t i = 0; i < per.size(); ++i) {
      samples.push_back(Json{{"sample_id", ev.sample_ids[i]},
                             {"is_member", static_cast<bool>(ev.is_member[i])},
                             {"per_round", per[i].per_round},
                             {"aggregate", per[i].aggregate}});
    }
    variants.push_back(Json{{"method", attack::MethodName(m)}, {"samples", samples}});
  }
  return Json{{"target_client", ev.target_client}, {"rounds", ev.rounds}, {"fedmia", variants}};
}

// One labelled evaluation: which seed and sweep point produced it.
struct RowLabel {
  std::string seed;  // empty in replay outputs
  std::string defense;
  std::string param;
};

inline std::string Prefix(const RowLabel& l, bool with_seed) {
  return with_seed ? l.seed + "," : "";
}

inline std::string MetricsHeader(bool with_seed) {
  return with_seed ? "seed,method,defense,param,auc,tpr_at_fpr,fpr_cap,achieved_fpr,utility_loss\n"
                   : "method,defense,param,auc,tpr_at_fpr,fpr_cap,utility_loss\n";
}

inline std::string MetricsRows(const AttackEvaluation& ev, const RowLabel& l, double fpr_cap,
                               double utility_loss, bool with_seed) {
  std::string out;
  for (const auto& m : ev.metrics) {
    out += Prefix(l, with_seed) + attack::MethodName(m.method) + "," + l.defense + "," + l.param +
           "," + FormatDouble(m.auc) + "," + FormatDouble(m.tpr) + "," + FormatDouble(fpr_cap) +
           (with_seed ? "," + FormatDouble(m.achieved_fpr) : "") + "," + FormatDouble(utility_loss) +
           "\n";
  }
  return out;
}

inline std::string DecisionsHeader(bool with_seed) {
  return std::string(with_seed ? "seed," : "") +
         "method,defense,param,delta,flagged,true_positives,false_positives,inclusion\n";
}

inline std::string DecisionRows(const AttackEvaluation& ev, const RowLabel& l, bool with_seed) {
  std::string out;
  for (const auto& d : ev.decisions) {
    out += Prefix(l, with_seed) + attack::MethodName(d.variant) + "," + l.defense + "," + l.param +
           "," + FormatDouble(d.delta) + "," + std::to_string(d.flagged) + "," +
           std::to_string(d.true_positives) + "," + std::to_string(d.false_positives) + "," +
           (d.inclusion ? "1" : "0") + "\n";
  }
  return out;
}

inline std::string RoundHeader(bool with_seed) {
  return std::string(with_seed ? "seed," : "") + "method,defense,param,round,auc,tpr_at_fpr\n";
}

inline std::string RoundRows(const AttackEvaluation& ev, const RowLabel& l, bool with_seed) {
  std::string out;
  for (const auto& p : ev.round_curves) {
    out += Prefix(l, with_seed) + attack::MethodName(p.method) + "," + l.defense + "," + l.param +
           "," + std::to_string(p.round) + "," + FormatDouble(p.auc) + "," + FormatDouble(p.tpr) +
           "\n";
  }
  return out;
}

// --- experiment ------------------------------------------------------------

struct RunOptions {
  std::optional<fs::path> out_dir;  // default: DefaultOutputRoot() / config name
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed_override;
  bool write = true;
};

struct JobResult {
  std::uint64_t seed = 0;
  std::size_t point = 0;
  fedsim::DefenseConfig defense;
  RowLabel label;
  double test_accuracy = 0.0;
  std::vector<double> accuracy_by_round;
  AttackEvaluation eval;
  std::string tag;  // s<seed>_p<point>

  double utility_loss() const { return 1.0 - test_accuracy; }
};

struct SummaryRow {
  Method method = Method::kFedMiaII;
  std::size_t point = 0;
  std::string defense;
  std::string param;
  double auc = 0.0;
  double tpr = 0.0;
  double utility_loss = 0.0;
};

struct ParetoSummary {
  Method method = Method::kFedMiaII;
  std::vector<metrics::ParetoPoint> points;  // one per sweep point
  std::vector<metrics::ParetoPoint> front;
  double hypervolume = 0.0;
};

struct ExperimentReport {
  fs::path out_dir;
  std::string config_hash;
  std::vector<JobResult> jobs;  // point-major, seeds in config order
  std::vector<SummaryRow> summary;
  std::vector<ParetoSummary> pareto;
  std::size_t inclusion_checks = 0;
  std::size_t inclusion_violations = 0;

  const SummaryRow& Summary(Method m, std::size_t point = 0) const {
    for (const auto& r : summary) {
      if (r.method == m && r.point == point) return r;
    }
    throw Error(ErrorCode::kConfig, "no summary for " + attack::MethodName(m));
  }
};

struct PreparedSeed {
  data::Dataset dataset;
  data::Partition partition;
  std::vector<std::size_t> sample_ids;
  std::vector<model::LabeledSample> targets;
  std::vector<bool> truth;
};

inline data::Dataset LoadDataset(const config::DatasetConfig& d, numstat::RngStream rng) {
  if (d.kind == config::DatasetConfig::Kind::kCsv) {
    return data::LoadCsv(d.path, d.num_classes, d.geometry);
  }
  auto ds = data::SynthBlobs(rng, d.num_classes, d.input_dim, d.per_class, d.class_sep);
  ds.geometry = d.geometry;
  return ds;
}

inline model::ModelSpec SpecFor(const ExperimentConfig& c, const data::Dataset& ds) {
  model::ModelSpec spec;
  spec.kind = c.model.kind;
  spec.input_dim = ds.input_dim();
  spec.hidden_dim = c.model.kind == model::ModelKind::kMlp ? c.model.hidden_dim : 0;
  spec.num_classes = ds.num_classes;
  spec.init_std = c.model.init_std;
  return spec;
}

inline PreparedSeed PrepareSeed(const ExperimentConfig& c, std::uint64_t seed,
                                const std::optional<data::Dataset>& shared) {
  const numstat::RngStream root(seed, 0);
  PreparedSeed p;
  p.dataset = shared ? *shared : LoadDataset(c.dataset, root.Derive({kDataStream}));
  const auto& pc = c.partition;
  p.partition = pc.dirichlet ? data::PartitionDirichlet(root.Derive({kPartitionStream}), p.dataset,
                                                        pc.num_clients, pc.beta, pc.per_client,
                                                        pc.holdout)
                             : data::PartitionIid(root.Derive({kPartitionStream}), p.dataset,
                                                  pc.num_clients, pc.per_client, pc.holdout);
  data::EvalSplitOptions so;
  so.member_count = c.attack.targets_per_class;
  so.source = pc.nonmember_source;
  so.holdout_fraction = pc.holdout_fraction;
  so.others_fraction = pc.others_fraction;
  const auto split =
      data::BuildEvalSplit(root.Derive({kSplitStream}), p.partition, c.attack.target_client, so);
  for (std::size_t i : split.member_indices) {
    p.sample_ids.push_back(i);
    p.truth.push_back(true);
  }
  for (std::size_t i : split.nonmember_indices) {
    p.sample_ids.push_back(i);
    p.truth.push_back(false);
  }
  p.targets = p.dataset.Gather(p.sample_ids);
  return p;
}

inline std::string ParamLabel(const ExperimentConfig& c, std::size_t point) {
  return c.sweep ? FormatDouble(c.sweep->values[point]) : "";
}

inline std::vector<trace_io::TargetRecord> TargetRecords(const PreparedSeed& p) {
  std::vector<trace_io::TargetRecord> out;
  for (std::size_t i = 0; i < p.targets.size(); ++i) {
    out.push_back({p.sample_ids[i], p.truth[i], p.targets[i]});
  }
  return out;
}

inline std::string Utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace internal {

inline JobResult RunJob(const ExperimentConfig& c, const PreparedSeed& prep, std::uint64_t seed,
                        std::size_t point, const fedsim::DefenseConfig& defense,
                        const std::string& config_hash, const std::optional<fs::path>& out_dir) {
  JobResult job;
  job.seed = seed;
  job.point = point;
  job.defense = defense;
  job.label = {std::to_string(seed), fedsim::DefenseKindName(defense.kind), ParamLabel(c, point)};
  job.tag = "s" + std::to_string(seed) + "_p" + std::to_string(point);

  fedsim::FedConfig fc = c.federation;
  fc.num_clients = c.partition.num_clients;
  fc.seed = seed;
  fc.defense = defense;
  const auto spec = SpecFor(c, prep.dataset);
  const auto trace = fedsim::RunFederation(prep.dataset, prep.partition, spec, fc, 1);
  for (const auto& r : trace.rounds) job.accuracy_by_round.push_back(r.test_accuracy);
  job.test_accuracy = trace.rounds.back().test_accuracy;

  const attack::AttackSession session(trace, prep.targets, prep.sample_ids,
                                      c.attack.target_client, c.attack.options, 1);
  job.eval = EvaluateAttack(session, prep.sample_ids, prep.truth, c.attack);

  if (out_dir) {
    if (c.save_traces) {
      const Json meta{{"seed", seed},
                      {"point", point},
                      {"param", job.label.param},
                      {"target_client", c.attack.target_client},
                      {"config_hash", config_hash}};
      trace_io::WriteTrace(*out_dir / "traces" / job.tag, trace, TargetRecords(prep), meta);
    }
    WriteFile((*out_dir / "scores" / (job.tag + ".csv")).string(), ScoresCsv(job.eval));
    WriteFile((*out_dir / "scores" / (job.tag + ".json")).string(),
              ScoresSidecar(job.eval).dump(1) + "\n");
  }
  return job;
}

inline std::vector<ParetoSummary> Pareto(const ExperimentConfig& c,
                                         const std::vector<SummaryRow>& summary,
                                         std::size_t points) {
  std::vector<ParetoSummary> out;
  for (Method m : c.attack.methods) {
    ParetoSummary p;
    p.method = m;
    for (std::size_t i = 0; i < points; ++i) {
      for (const auto& r : summary) {
        if (r.method == m && r.point == i) p.points.push_back({r.utility_loss, r.tpr});
      }
    }
    p.front = metrics::ParetoFront(p.points);
    p.hypervolume = metrics::Hypervolume(p.points);
    out.push_back(std::move(p));
  }
  return out;
}

inline Json ParetoJson(const ExperimentConfig& c, const std::vector<ParetoSummary>& pareto) {
  auto pts = [](const std::vector<metrics::ParetoPoint>& v) {
    Json a = Json::array();
    for (const auto& p : v) a.push_back(Json::array({p.utility_loss, p.privacy_leakage}));
    return a;
  };
  Json methods = Json::array();
  for (const auto& p : pareto) {
    methods.push_back(Json{{"method", attack::MethodName(p.method)},
                           {"points", pts(p.points)},
                           {"front", pts(p.front)},
                           {"hypervolume", p.hypervolume}});
  }
  Json params = Json::array();
  for (std::size_t i = 0; i < config::DefensePoints(c).size(); ++i) params.push_back(ParamLabel(c, i));
  return Json{{"axes", Json::array({"utility_loss", "privacy_leakage"})},
              {"privacy_leakage", "tpr_at_fpr"},
              {"fpr_cap", c.attack.fpr_cap},
              {"reference", Json::array({1.0, 1.0})},
              {"defense", fedsim::DefenseKindName(c.federation.defense.kind)},
              {"params", params},
              {"methods", methods}};
}

}  // namespace internal

inline std::string ConfigHash(const ExperimentConfig& c) {
  return Hex64(Fnv1a64(config::Serialize(c)));
}

// Runs every (seed, sweep point) job. Jobs may run in parallel; each writes
// only its own files, and the combined CSVs are assembled afterwards in a
// fixed order. On failure, files of finished jobs stay in place.
inline ExperimentReport RunExperiment(ExperimentConfig c, const RunOptions& opts = {}) {
  if (opts.seed_override) c.seeds = {*opts.seed_override};
  const std::string started = Utc();
  const std::string hash = ConfigHash(c);
  std::optional<fs::path> out;
  if (opts.write) {
    out = opts.out_dir ? *opts.out_dir : DefaultOutputRoot() / c.name;
    fs::create_directories(*out / "scores");
    WriteFile((*out / "config.json").string(), config::Serialize(c));
  }

  // CSV data does not depend on the seed, so it is read once.
  std::optional<data::Dataset> shared;
  if (c.dataset.kind == config::DatasetConfig::Kind::kCsv) {
    shared = LoadDataset(c.dataset, numstat::RngStream(0, 0));
  }
  std::vector<PreparedSeed> prepared(c.seeds.size());
  ParallelFor(c.seeds.size(), opts.jobs,
              [&](std::size_t i) { prepared[i] = PrepareSeed(c, c.seeds[i], shared); });

  const auto points = config::DefensePoints(c);
  const std::size_t S = c.seeds.size();
  ExperimentReport report;
  report.config_hash = hash;
  report.jobs.resize(points.size() * S);
  ParallelFor(report.jobs.size(), opts.jobs, [&](std::size_t j) {
    const std::size_t point = j / S;
    const std::size_t si = j % S;
    report.jobs[j] = internal::RunJob(c, prepared[si], c.seeds[si], point, points[point], hash, out);
  });

  for (std::size_t point = 0; point < points.size(); ++point) {
    for (Method m : c.attack.methods) {
      SummaryRow row;
      row.method = m;
      row.point = point;
      row.defense = fedsim::DefenseKindName(points[point].kind);
      row.param = ParamLabel(c, point);
      for (std::size_t si = 0; si < S; ++si) {
        const auto& job = report.jobs[point * S + si];
        const auto& mm = job.eval.MetricsOf(m);
        row.auc += mm.auc;
        row.tpr += mm.tpr;
        row.utility_loss += job.utility_loss();
      }
      row.auc /= static_cast<double>(S);
      row.tpr /= static_cast<double>(S);
      row.utility_loss /= static_cast<double>(S);
      report.summary.push_back(row);
    }
  }
  report.pareto = internal::Pareto(c, report.summary, points.size());
  for (const auto& job : report.jobs) {
    for (const auto& d : job.eval.decisions) {
      ++report.inclusion_checks;
      report.inclusion_violations += d.inclusion ? 0 : 1;
    }
  }
  if (!out) return report;
  report.out_dir = *out;

  std::string metrics = MetricsHeader(false);
  for (const auto& r : report.summary) {
    metrics += attack::MethodName(r.method) + "," + r.defense + "," + r.param + "," +
               FormatDouble(r.auc) + "," + FormatDouble(r.tpr) + "," +
               FormatDouble(c.attack.fpr_cap) + "," + FormatDouble(r.utility_loss) + "\n";
  }
  std::string by_seed = MetricsHeader(true);
  std::string decisions = DecisionsHeader(true);
  std::string rounds = RoundHeader(true);
  Json jobs = Json::array();
  for (const auto& job : report.jobs) {
    by_seed += MetricsRows(job.eval, job.label, c.attack.fpr_cap, job.utility_loss(), true);
    decisions += DecisionRows(job.eval, job.label, true);
    rounds += RoundRows(job.eval, job.label, true);
    jobs.push_back(Json{{"tag", job.tag},
                        {"seed", job.seed},
                        {"point", job.point},
                        {"defense", fedmia::ToJson(job.defense)},
                        {"param", job.label.param},
                        {"test_accuracy", job.test_accuracy},
                        {"scores", "scores/" + job.tag + ".csv"},
                        {"trace", c.save_traces ? Json("traces/" + job.tag) : Json(nullptr)}});
  }
  WriteFile((*out / "metrics.csv").string(), metrics);
  WriteFile((*out / "metrics_by_seed.csv").string(), by_seed);
  WriteFile((*out / "decisions.csv").string(), decisions);
  WriteFile((*out / "round_metrics.csv").string(), rounds);
  WriteFile((*out / "pareto.json").string(), internal::ParetoJson(c, report.pareto).dump(2) + "\n");

  const Json rep{{"format", kReportFormat},
                 {"version", 1},
                 {"name", c.name},
                 {"config_hash", hash},
                 {"code_version", kVersion},
                 {"started_at", started},
                 {"finished_at", Utc()},
                 {"seeds", c.seeds},
                 {"fpr_cap", c.attack.fpr_cap},
                 {"inclusion", Json{{"checks", report.inclusion_checks},
                                   {"violations", report.inclusion_violations}}},
                 {"jobs", jobs}};
  WriteFile((*out / "report.json").string(), rep.dump(2) + "\n");
  return report;
}

// --- replay ----------------------------------------------------------------

struct ReplayResult {
  AttackEvaluation eval;
  RowLabel label;
  double test_accuracy = 0.0;
  std::size_t evidence_computations = 0;
};

// Re-runs the attacks on a stored trace without retraining. The trace must
// carry its target list (targets.csv).
inline ReplayResult ReplayAttack(const fs::path& trace_dir, const AttackConfig& cfg,
                                 const std::optional<fs::path>& out_dir, std::size_t jobs = 1) {
  const auto loaded = trace_io::ReadTrace(trace_dir);
  Require(!loaded.targets.empty(), ErrorCode::kIntegrity,
          (trace_dir / "targets.csv").string() + " is missing; replay needs the target list");
  Require(cfg.target_client < loaded.trace.num_clients, ErrorCode::kConfig,
          "attack.target_client out of range for this trace");
  std::vector<model::LabeledSample> targets;
  std::vector<std::size_t> ids;
  std::vector<bool> truth;
  for (const auto& t : loaded.targets) {
    targets.push_back(t.sample);
    ids.push_back(t.sample_id);
    truth.push_back(t.is_member);
  }
  const attack::AttackSession session(loaded.trace, targets, ids, cfg.target_client, cfg.options,
                                      jobs);
  ReplayResult r;
  r.eval = EvaluateAttack(session, ids, truth, cfg);
  r.evidence_computations = session.evidence_computations();
  r.label = {"", fedsim::DefenseKindName(loaded.trace.defense.kind),
             loaded.metadata.is_object() && loaded.metadata.contains("param") &&
                     loaded.metadata["param"].is_string()
                 ? loaded.metadata["param"].get<std::string>()
                 : ""};
  r.test_accuracy = loaded.trace.rounds.back().test_accuracy;
  if (out_dir) {
    fs::create_directories(*out_dir);
    WriteFile((*out_dir / "scores.csv").string(), ScoresCsv(r.eval));
    WriteFile((*out_dir / "scores.json").string(), ScoresSidecar(r.eval).dump(1) + "\n");
    WriteFile((*out_dir / "metrics.csv").string(),
              MetricsHeader(false) +
                  MetricsRows(r.eval, r.label, cfg.fpr_cap, 1.0 - r.test_accuracy, false));
    WriteFile((*out_dir / "decisions.csv").string(),
              DecisionsHeader(false) + DecisionRows(r.eval, r.label, false));
    WriteFile((*out_dir / "round_metrics.csv").string(),
              RoundHeader(false) + RoundRows(r.eval, r.label, false));
  }
  return r;
}

}  // namespace harness
}  // namespace fedmia

#endif  // FEDMIA_EXPERIMENT_HPP_
