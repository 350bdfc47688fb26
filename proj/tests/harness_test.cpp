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

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedmia/config.hpp"
#include "fedmia/experiment.hpp"
#include "fedmia/report.hpp"
#include "gtest/gtest.h"

namespace fedmia::harness {
namespace {

using config::ExperimentConfig;

const fs::path kConfigs = FEDMIA_CONFIGS_DIR;
const fs::path kGolden = FEDMIA_GOLDEN_DIR;
const std::string kCli = FEDMIA_CLI_PATH;

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kContract;
}

fs::path FreshDir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fedmia_harness_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string Slurp(const fs::path& p) { return ReadFile(p.string()); }

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> Split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

ExperimentConfig Smoke() { return config::LoadConfig(kConfigs / "smoke.json"); }

ExperimentConfig SmallSweep() {
  auto c = Smoke();
  c.name = "sweep";
  c.federation.defense.kind = fedsim::DefenseKind::kPerturb;
  c.federation.defense.clip_norm = 1.0;
  c.sweep = config::SweepConfig{"noise_std", {0.0, 0.1, 10.0}};
  c.seeds = {3, 4};
  c.attack.methods = {attack::Method::kFedMiaII, attack::Method::kBlackboxLoss};
  return c;
}

ExperimentReport RunTo(const ExperimentConfig& c, const fs::path& dir, std::size_t jobs = 1) {
  RunOptions o;
  o.out_dir = dir;
  o.jobs = jobs;
  return RunExperiment(c, o);
}

int RunCli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + kCli + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Files whose bytes must not depend on timing or thread count.
std::vector<fs::path> DeterministicFiles(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().filename() != "report.json") {
      out.push_back(fs::relative(e.path(), dir));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void ExpectSameTree(const fs::path& a, const fs::path& b) {
  const auto fa = DeterministicFiles(a);
  ASSERT_EQ(fa, DeterministicFiles(b));
  for (const auto& f : fa) EXPECT_EQ(Slurp(a / f), Slurp(b / f)) << f;
}

void CheckGolden(const std::string& name, const std::string& actual) {
  const auto path = kGolden / name;
  const char* update = std::getenv("FEDMIA_UPDATE_GOLDEN");
  if (update != nullptr && std::string(update) == "1") {
    fs::create_directories(path.parent_path());
    WriteFile(path.string(), actual);
    return;
  }
  ASSERT_TRUE(fs::exists(path)) << path << " missing; regenerate with FEDMIA_UPDATE_GOLDEN=1";
  EXPECT_EQ(Slurp(path), actual) << "golden mismatch: " << name;
}

// --- config ----------------------------------------------------------------

TEST(ConfigTest, SampleConfigsRoundTrip) {
  for (const auto& e : fs::directory_iterator(kConfigs)) {
    SCOPED_TRACE(e.path().string());
    if (e.path().filename() == "attack_only.json") {
      const auto a = config::LoadAttackConfig(e.path());
      const auto again = config::internal::AttackFromJson(config::ToJson(a));
      EXPECT_EQ(a, again);
      continue;
    }
    const auto c = config::LoadConfig(e.path());
    const auto text = config::Serialize(c);
    const auto back = config::ParseConfig(text, "roundtrip");
    EXPECT_EQ(back, c);
    EXPECT_EQ(config::Serialize(back), text);
  }
}

TEST(ConfigTest, DefaultsAreFilledIn) {
  const auto c = config::ParseConfig(R"({"schema_version": 1, "dataset": {"kind": "synthetic"}})", "t");
  EXPECT_EQ(c.partition.num_clients, 10u);
  EXPECT_EQ(c.federation.num_clients, 10u);
  EXPECT_EQ(c.federation.rounds, 50u);
  EXPECT_EQ(c.attack.methods.size(), attack::kAllMethods.size());
  EXPECT_EQ(c.attack.fpr_cap, 0.01);
  EXPECT_EQ(c.seeds, std::vector<std::uint64_t>{0});
  EXPECT_FALSE(c.sweep.has_value());
  EXPECT_TRUE(std::isinf(c.partition.beta));
}

TEST(ConfigTest, ErrorsNameTheOffendingField) {
  auto err = [](const std::string& text) {
    try {
      config::ParseConfig(text, "cfg.json");
    } catch (const Error& e) {
      return std::make_pair(e.code(), std::string(e.what()));
    }
    return std::make_pair(ErrorCode::kContract, std::string("no error"));
  };
  const std::string head = R"({"schema_version": 1, "dataset": {"kind": "synthetic"})";
  auto [c1, m1] = err(head + R"(, "federation": {"rounds": 5, "epochs": 3}})");
  EXPECT_EQ(c1, ErrorCode::kConfig);
  EXPECT_NE(m1.find("federation.epochs"), std::string::npos) << m1;

  auto [c2, m2] = err(R"({"schema_version": 2, "dataset": {"kind": "synthetic"}})");
  EXPECT_EQ(c2, ErrorCode::kConfig);
  EXPECT_NE(m2.find("schema_version"), std::string::npos) << m2;

  auto [c3, m3] = err(head + R"(, "sweep": {"param": "rate", "values": [0.1]}})");
  EXPECT_EQ(c3, ErrorCode::kConfig);
  EXPECT_NE(m3.find("sweep.param"), std::string::npos) << m3;

  EXPECT_EQ(err(head + R"(, "attack": {"target_client": 10}})").first, ErrorCode::kConfig);
  EXPECT_EQ(err(head + R"(, "partition": {"num_clients": 2}})").first, ErrorCode::kConfig);
  EXPECT_EQ(err(head + R"(, "model": {"kind": "linear_softmax", "hidden_dim": 4}})").first,
            ErrorCode::kConfig);
  EXPECT_EQ(err(head + R"(, "attack": {"methods": ["fedmia-iii"]}})").first, ErrorCode::kConfig);
  EXPECT_EQ(err(head + R"(, "federation": {"defense": {"kind": "quantize", "bits": 0}}})").first,
            ErrorCode::kConfig);
  EXPECT_EQ(err(head + R"(, "seeds": []})").first, ErrorCode::kConfig);
  EXPECT_EQ(err(R"({"schema_version": 1, "dataset": )").first, ErrorCode::kParse);
  EXPECT_EQ(err(R"({"schema_version": 1})").first, ErrorCode::kConfig);
}

TEST(ConfigTest, SweepPointsOverrideOneParameter) {
  const auto c = SmallSweep();
  const auto points = config::DefensePoints(c);
  ASSERT_EQ(points.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(points[i].kind, fedsim::DefenseKind::kPerturb);
    EXPECT_EQ(points[i].clip_norm, 1.0);
    EXPECT_EQ(points[i].noise_std, c.sweep->values[i]);
  }
  EXPECT_EQ(config::DefensePoints(Smoke()).size(), 1u);
}

// --- runner ----------------------------------------------------------------

TEST(RunnerTest, MinimalConfigWritesOneRowPerMethod) {
  const auto dir = FreshDir("minimal");
  const auto c = Smoke();
  const auto rep = RunTo(c, dir);
  for (const char* f : {"config.json", "report.json", "metrics.csv", "metrics_by_seed.csv",
                        "round_metrics.csv", "decisions.csv", "pareto.json", "scores/s0_p0.csv",
                        "scores/s0_p0.json", "traces/s0_p0/trace_meta.json",
                        "traces/s0_p0/targets.csv"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  const auto metrics = Lines(Slurp(dir / "metrics.csv"));
  ASSERT_EQ(metrics.size(), 1 + attack::kAllMethods.size());
  EXPECT_EQ(metrics[0], "method,defense,param,auc,tpr_at_fpr,fpr_cap,utility_loss");
  for (std::size_t i = 1; i < metrics.size(); ++i) {
    const auto cells = Split(metrics[i]);
    ASSERT_EQ(cells.size(), 7u);
    EXPECT_EQ(cells[0], attack::MethodName(attack::kAllMethods[i - 1]));
    EXPECT_EQ(cells[1], "none");
    EXPECT_EQ(cells[2], "");
    const double auc = std::stod(cells[3]);
    EXPECT_GE(auc, 0.0);
    EXPECT_LE(auc, 1.0);
  }
  // 20 members + 20 non-members, one row per method.
  EXPECT_EQ(Lines(Slurp(dir / "scores/s0_p0.csv")).size(), 1 + 40 * attack::kAllMethods.size());
  EXPECT_EQ(rep.config_hash, Hex64(Fnv1a64(Slurp(dir / "config.json"))));
  const Json r = Json::parse(Slurp(dir / "report.json"));
  EXPECT_EQ(r["config_hash"], rep.config_hash);
  EXPECT_EQ(r["code_version"], kVersion);
  EXPECT_EQ(r["jobs"].size(), 1u);
  EXPECT_EQ(rep.inclusion_violations, 0u);
}

TEST(RunnerTest, ScoresAndMetricsAgree) {
  const auto dir = FreshDir("agree");
  const auto rep = RunTo(Smoke(), dir);
  const auto& ev = rep.jobs.at(0).eval;
  for (const auto& [m, s] : ev.scores) {
    const auto cohort = Cohort(s, ev.is_member);
    EXPECT_EQ(ev.MetricsOf(m).auc, metrics::Auc(cohort));
    const auto& summary = rep.Summary(m);
    EXPECT_EQ(summary.auc, ev.MetricsOf(m).auc);
    EXPECT_EQ(summary.utility_loss, 1.0 - rep.jobs[0].test_accuracy);
  }
  std::size_t members = 0;
  for (bool b : ev.is_member) members += b ? 1 : 0;
  EXPECT_EQ(members, 20u);
  EXPECT_EQ(ev.is_member.size(), 40u);
}

TEST(RunnerTest, IdenticalAcrossRunsAndJobCounts) {
  const auto c = SmallSweep();
  const auto a = FreshDir("det_a");
  const auto b = FreshDir("det_b");
  const auto d = FreshDir("det_c");
  RunTo(c, a, 1);
  RunTo(c, b, 1);
  RunTo(c, d, 3);
  ExpectSameTree(a, b);
  ExpectSameTree(a, d);
}

TEST(RunnerTest, SeedOverrideRunsOneSeed) {
  const auto dir = FreshDir("override");
  RunOptions o;
  o.out_dir = dir;
  o.seed_override = 9;
  const auto rep = RunExperiment(SmallSweep(), o);
  ASSERT_EQ(rep.jobs.size(), 3u);
  for (const auto& j : rep.jobs) EXPECT_EQ(j.seed, 9u);
  EXPECT_EQ(config::LoadConfig(dir / "config.json").seeds, std::vector<std::uint64_t>{9});
}

TEST(RunnerTest, SweepProducesParetoPerMethod) {
  const auto dir = FreshDir("sweep");
  const auto c = SmallSweep();
  const auto rep = RunTo(c, dir);
  EXPECT_EQ(rep.jobs.size(), 6u);
  EXPECT_EQ(Lines(Slurp(dir / "metrics.csv")).size(), 1u + 3 * 2);
  EXPECT_EQ(Lines(Slurp(dir / "metrics_by_seed.csv")).size(), 1u + 3 * 2 * 2);
  const Json p = Json::parse(Slurp(dir / "pareto.json"));
  ASSERT_EQ(p["methods"].size(), 2u);
  EXPECT_EQ(p["params"], Json::array({"0", "0.1", "10"}));
  for (const auto& m : p["methods"]) {
    EXPECT_EQ(m["points"].size(), 3u);
    EXPECT_TRUE(m["hypervolume"].is_number());
    EXPECT_GE(m["front"].size(), 1u);
    EXPECT_LE(m["front"].size(), 3u);
  }
  ASSERT_EQ(rep.pareto.size(), 2u);
  EXPECT_EQ(rep.pareto[0].hypervolume, metrics::Hypervolume(rep.pareto[0].points));
  // Stronger noise hurts utility on this problem.
  EXPECT_GT(rep.Summary(attack::Method::kFedMiaII, 2).utility_loss,
            rep.Summary(attack::Method::kFedMiaII, 0).utility_loss);
}

TEST(RunnerTest, DecisionsAreConsistent) {
  const auto dir = FreshDir("decisions");
  auto c = Smoke();
  c.attack.deltas = {-0.5, 0.5, 0.9, 1.5};
  const auto rep = RunTo(c, dir);
  const auto lines = Lines(Slurp(dir / "decisions.csv"));
  ASSERT_EQ(lines.size(), 1u + 2 * 4);
  EXPECT_EQ(lines[0], "seed,method,defense,param,delta,flagged,true_positives,false_positives,inclusion");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto cells = Split(lines[i]);
    EXPECT_EQ(std::stoul(cells[5]), std::stoul(cells[6]) + std::stoul(cells[7]));
    EXPECT_EQ(cells[8], "1");
    if (cells[4] == "-0.5") {
      EXPECT_EQ(cells[5], "40");
    }
    if (cells[4] == "1.5") {
      EXPECT_EQ(cells[5], "0");
    }
  }
}

TEST(RunnerTest, RoundCurveEndsAtFullMetrics) {
  const auto dir = FreshDir("rounds");
  const auto c = Smoke();
  const auto rep = RunTo(c, dir);
  const auto& ev = rep.jobs[0].eval;
  ASSERT_EQ(ev.round_curves.size(), c.federation.rounds * c.attack.methods.size());
  for (const auto& p : ev.round_curves) {
    if (p.round == c.federation.rounds) {
      EXPECT_EQ(p.auc, ev.MetricsOf(p.method).auc);
      EXPECT_EQ(p.tpr, ev.MetricsOf(p.method).tpr);
    }
  }
  EXPECT_EQ(Lines(Slurp(dir / "round_metrics.csv")).size(), 1 + ev.round_curves.size());
}

TEST(RunnerTest, InsufficientDataIsARuntimeError) {
  auto c = Smoke();
  c.partition.per_client = 1000;
  RunOptions o;
  o.write = false;
  EXPECT_EQ(CodeOf([&] { RunExperiment(c, o); }), ErrorCode::kInsufficientData);
}

TEST(RunnerTest, CsvDatasetLoadsRelativeToConfig) {
  const auto dir = FreshDir("csv");
  fs::create_directories(dir);
  std::string csv;
  const auto ds = data::SynthBlobs(numstat::RngStream(1, 1), 3, 4, 40, 3.0);
  for (const auto& s : ds.samples) {
    csv += std::to_string(s.label);
    for (double x : s.features) csv += "," + FormatDouble(x);
    csv += "\n";
  }
  WriteFile((dir / "blobs.csv").string(), csv);
  WriteFile((dir / "cfg.json").string(), R"({
    "schema_version": 1, "name": "csv",
    "dataset": {"kind": "csv", "path": "blobs.csv", "num_classes": 3},
    "partition": {"num_clients": 3, "per_client": 20, "holdout": 40},
    "federation": {"rounds": 2, "local_epochs": 1},
    "attack": {"targets_per_class": 10, "methods": ["fedmia-ii"]}, "save_traces": false})");
  const auto c = config::LoadConfig(dir / "cfg.json");
  EXPECT_EQ(fs::path(c.dataset.path), (dir / "blobs.csv").lexically_normal());
  const auto rep = RunTo(c, dir / "out");
  EXPECT_EQ(rep.jobs[0].eval.sample_ids.size(), 20u);
  EXPECT_FALSE(fs::exists(dir / "out" / "traces"));
}

// --- replay and caching ----------------------------------------------------

TEST(ReplayTest, ReproducesStoredScoresBitForBit) {
  const auto dir = FreshDir("replay");
  const auto c = Smoke();
  RunTo(c, dir);
  const auto rr = ReplayAttack(dir / "traces/s0_p0", c.attack, dir / "replayed");
  EXPECT_EQ(Slurp(dir / "replayed/scores.csv"), Slurp(dir / "scores/s0_p0.csv"));
  EXPECT_EQ(Slurp(dir / "replayed/scores.json"), Slurp(dir / "scores/s0_p0.json"));
  EXPECT_EQ(rr.evidence_computations, 40u);
  // Without the seed column the replay metrics equal the run's seed-mean rows.
  EXPECT_EQ(Slurp(dir / "replayed/metrics.csv"), Slurp(dir / "metrics.csv"));
}

TEST(ReplayTest, TruncatedTraceIsAnIntegrityError) {
  const auto dir = FreshDir("replay_trunc");
  const auto c = Smoke();
  RunTo(c, dir);
  fs::resize_file(dir / "traces/s0_p0/round_0001.bin", 64);
  try {
    ReplayAttack(dir / "traces/s0_p0", c.attack, std::nullopt);
    ADD_FAILURE() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIntegrity);
    EXPECT_NE(std::string(e.what()).find("round_0001.bin"), std::string::npos) << e.what();
  }
  fs::remove(dir / "traces/s0_p0/targets.csv");
  EXPECT_EQ(CodeOf([&] { ReplayAttack(dir / "traces/s0_p0", c.attack, std::nullopt); }),
            ErrorCode::kIntegrity);
}

TEST(ReplayTest, ThresholdSweepsReuseCachedEvidence) {
  const auto dir = FreshDir("cache");
  const auto c = Smoke();
  RunTo(c, dir);
  const auto loaded = trace_io::ReadTrace(dir / "traces/s0_p0");
  std::vector<model::LabeledSample> targets;
  std::vector<std::size_t> ids;
  std::vector<bool> truth;
  for (const auto& t : loaded.targets) {
    targets.push_back(t.sample);
    ids.push_back(t.sample_id);
    truth.push_back(t.is_member);
  }
  const attack::AttackSession session(loaded.trace, targets, ids, 0);
  EXPECT_EQ(session.evidence_computations(), targets.size());
  auto cfg = c.attack;
  const auto first = EvaluateAttack(session, ids, truth, cfg);
  cfg.deltas = {0.1, 0.2, 0.3, 0.99};
  cfg.fpr_cap = 0.1;
  const auto second = EvaluateAttack(session, ids, truth, cfg);
  EXPECT_EQ(session.evidence_computations(), targets.size());
  EXPECT_EQ(first.scores, second.scores);
  EXPECT_EQ(second.decisions.size(), 2u * 4);

  // Prefix curves from per-round scores equal a fresh truncated evaluation.
  for (const auto& [m, per] : first.fedmia) {
    for (std::size_t r = 1; r <= session.num_rounds(); ++r) {
      const auto direct = session.FedMiaScores(m, r);
      for (std::size_t i = 0; i < per.size(); ++i) {
        EXPECT_DOUBLE_EQ(attack::ScoreTemporal(std::span(per[i].per_round).first(r)),
                         direct[i].aggregate);
      }
    }
  }
}

// --- report verification and plots ------------------------------------------

TEST(ReportTest, VerifiesUntouchedReport) {
  const auto dir = FreshDir("verify");
  const auto c = SmallSweep();
  RunTo(c, dir);
  const auto v = VerifyReport(dir);
  EXPECT_EQ(v.jobs.size(), 6u);
  EXPECT_EQ(v.traces_checked, 6u);
  EXPECT_EQ(v.config, c);
}

TEST(ReportTest, TamperingIsAnIntegrityError) {
  const auto base = FreshDir("tamper_base");
  RunTo(Smoke(), base);
  auto tampered = [&](const std::string& name, auto&& edit) {
    const auto dir = FreshDir("tamper_" + name);
    fs::copy(base, dir, fs::copy_options::recursive);
    edit(dir);
    return CodeOf([&] { VerifyReport(dir); });
  };
  auto replace = [](const fs::path& f, const std::string& from, const std::string& to) {
    auto text = Slurp(f);
    const auto pos = text.find(from);
    ASSERT_NE(pos, std::string::npos);
    text.replace(pos, from.size(), to);
    WriteFile(f.string(), text);
  };
  EXPECT_EQ(tampered("metrics", [&](const fs::path& d) { replace(d / "metrics.csv", "none,", "none,0"); }),
            ErrorCode::kIntegrity);
  EXPECT_EQ(tampered("scores", [&](const fs::path& d) { replace(d / "scores/s0_p0.csv", ",1,", ",0,"); }),
            ErrorCode::kIntegrity);
  EXPECT_EQ(tampered("config", [&](const fs::path& d) { replace(d / "config.json", "\"rounds\": 3", "\"rounds\": 4"); }),
            ErrorCode::kIntegrity);
  EXPECT_EQ(tampered("missing", [](const fs::path& d) { fs::remove(d / "scores/s0_p0.csv"); }),
            ErrorCode::kIntegrity);
  EXPECT_EQ(tampered("trace", [](const fs::path& d) { fs::resize_file(d / "traces/s0_p0/final_model.bin", 8); }),
            ErrorCode::kIntegrity);
  EXPECT_EQ(CodeOf([] { VerifyReport(FreshDir("nothing_here")); }), ErrorCode::kIntegrity);
}

TEST(PlotsTest, TablesHaveExpectedShape) {
  const auto dir = FreshDir("plots");
  const auto c = SmallSweep();
  RunTo(c, dir);
  const auto files = EmitPlots(dir);
  EXPECT_EQ(files.size(), 4u);

  const auto curve = Lines(Slurp(dir / "plots/round_curve.csv"));
  EXPECT_EQ(curve.size(), 1 + c.federation.rounds * 2 * 3);

  const auto hist = Lines(Slurp(dir / "plots/score_histogram.csv"));
  EXPECT_EQ(hist.size(), 1u + 20 * 2 * 3);
  std::size_t pooled = 0;
  for (std::size_t i = 1; i < hist.size(); ++i) {
    const auto cells = Split(hist[i]);
    if (cells[0] == "fedmia-ii" && cells[1] == "0") pooled += std::stoul(cells[4]) + std::stoul(cells[5]);
  }
  EXPECT_EQ(pooled, 40u * 2);

  const auto pareto = Lines(Slurp(dir / "plots/pareto.csv"));
  ASSERT_EQ(pareto.size(), 1u + 2 * 3);
  for (std::size_t i = 2; i < pareto.size(); ++i) {
    const auto prev = Split(pareto[i - 1]);
    const auto cur = Split(pareto[i]);
    if (prev[0] == cur[0]) {
      EXPECT_LE(std::stod(prev[2]), std::stod(cur[2]));
    }
  }
  std::size_t on_front = 0;
  for (std::size_t i = 1; i < pareto.size(); ++i) on_front += Split(pareto[i])[4] == "1" ? 1 : 0;
  EXPECT_GE(on_front, 2u);

  const auto roc = Lines(Slurp(dir / "plots/roc.csv"));
  EXPECT_EQ(roc[1].substr(roc[1].size() - 4), ",0,0");
}

// --- CLI -------------------------------------------------------------------

TEST(CliTest, ExitCodes) {
  const auto root = FreshDir("cli");
  fs::create_directories(root);
  const std::string env = "FEDMIA_OUT_ROOT='" + root.string() + "'";
  const std::string smoke = "'" + (kConfigs / "smoke.json").string() + "'";

  EXPECT_EQ(RunCli("run " + smoke, env), 0);
  EXPECT_TRUE(fs::exists(root / "smoke" / "metrics.csv"));
  EXPECT_EQ(RunCli("report '" + (root / "smoke").string() + "'"), 0);
  EXPECT_EQ(RunCli("plots '" + (root / "smoke").string() + "'"), 0);
  EXPECT_TRUE(fs::exists(root / "smoke" / "plots" / "pareto.csv"));
  EXPECT_EQ(RunCli("replay '" + (root / "smoke/traces/s0_p0").string() + "' '" +
                       (kConfigs / "attack_only.json").string() + "' --out '" +
                       (root / "rep").string() + "'"),
            0);
  EXPECT_EQ(RunCli("run " + smoke + " --seed-override 5 --jobs 2 --out '" + (root / "o5").string() + "'"), 0);
  EXPECT_EQ(config::LoadConfig(root / "o5" / "config.json").seeds, std::vector<std::uint64_t>{5});

  EXPECT_EQ(RunCli(""), 2);
  EXPECT_EQ(RunCli("frobnicate"), 2);
  EXPECT_EQ(RunCli("run"), 2);
  EXPECT_EQ(RunCli("run '" + (root / "absent.json").string() + "'"), 2);
  WriteFile((root / "bad.json").string(), R"({"schema_version": 1, "dataset": {"kind": "synthetic"}, "typo": 1})");
  EXPECT_EQ(RunCli("run '" + (root / "bad.json").string() + "'", env), 2);
  EXPECT_EQ(RunCli("run " + smoke + " --jobs 0", env), 2);

  fs::resize_file(root / "smoke/traces/s0_p0/round_0002.bin", 10);
  EXPECT_EQ(RunCli("report '" + (root / "smoke").string() + "'"), 3);
  EXPECT_EQ(RunCli("replay '" + (root / "smoke/traces/s0_p0").string() + "' '" +
                   (kConfigs / "attack_only.json").string() + "'", env),
            3);

  WriteFile((root / "huge.json").string(),
            R"({"schema_version": 1, "name": "huge", "dataset": {"kind": "synthetic", "per_class": 5}})");
  EXPECT_EQ(RunCli("run '" + (root / "huge.json").string() + "'", env), 4);
}

// --- golden files ----------------------------------------------------------

TEST(GoldenTest, SmokeReport) {
  const auto dir = FreshDir("golden");
  RunTo(Smoke(), dir);
  EmitPlots(dir);
  for (const char* f : {"config.json", "metrics.csv", "metrics_by_seed.csv", "decisions.csv",
                        "round_metrics.csv", "pareto.json", "scores/s0_p0.csv",
                        "traces/s0_p0/trace_meta.json", "plots/pareto.csv", "plots/round_curve.csv"}) {
    SCOPED_TRACE(f);
    CheckGolden(std::string("smoke/") + f, Slurp(dir / f));
  }
}

TEST(GoldenTest, CliReportOutput) {
  const auto dir = FreshDir("golden_cli");
  RunTo(Smoke(), dir);
  const auto out = dir / "stdout.txt";
  const std::string cmd = "'" + kCli + "' report '" + dir.string() + "' > '" + out.string() + "' 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  CheckGolden("cli_report.txt", Slurp(out));
}

}  // namespace
}  // namespace fedmia::harness
