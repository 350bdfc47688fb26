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

// fedmia: run, replay, verify and plot membership-inference audits.
//
// Exit codes: 0 ok, 2 config/usage error, 3 integrity error, 4 runtime failure.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "fedmia/config.hpp"
#include "fedmia/error.hpp"
#include "fedmia/experiment.hpp"
#include "fedmia/report.hpp"
#include "fedmia/version.hpp"

namespace {

namespace fs = std::filesystem;
using fedmia::Error;
using fedmia::ErrorCode;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIntegrity = 3;
constexpr int kExitRuntime = 4;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kParse:
      return kExitConfig;
    case ErrorCode::kIntegrity:
      return kExitIntegrity;
    default:
      return kExitRuntime;
  }
}

void PrintTable(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    for (char& c : line) {
      if (c == ',') c = '\t';
    }
    std::cout << line << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated membership-inference audit harness"};
  app.set_version_flag("--version", fedmia::kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed_override;
  std::string out;
  app.add_option("--jobs,-j", jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--seed-override", seed_override, "Run a single seed instead of the configured list");
  app.add_option("--out,-o", out, "Output directory (default: $FEDMIA_OUT_ROOT/<name>)");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Train, attack and write a report directory");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();

  std::string trace_dir;
  std::string attack_path;
  auto* replay = app.add_subcommand("replay", "Re-run attacks on a stored trace without retraining");
  replay->add_option("trace_dir", trace_dir, "Trace directory")->required();
  replay->add_option("attack_config", attack_path, "Attack config (JSON)")->required();

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Verify a report directory and print its metrics");
  report->add_option("report_dir", report_dir, "Report directory")->required();

  auto* plots = app.add_subcommand("plots", "Write plot tables into <report_dir>/plots");
  plots->add_option("report_dir", report_dir, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (run->parsed()) {
      const auto cfg = fedmia::config::LoadConfig(config_path);
      fedmia::harness::RunOptions opts;
      opts.jobs = jobs;
      opts.seed_override = seed_override;
      if (!out.empty()) opts.out_dir = fs::path(out);
      const auto rep = fedmia::harness::RunExperiment(cfg, opts);
      PrintTable(fedmia::ReadFile((rep.out_dir / "metrics.csv").string()));
      if (rep.inclusion_violations > 0) {
        std::cerr << "warning: " << rep.inclusion_violations << " of " << rep.inclusion_checks
                  << " decision sets fail the inclusion check\n";
      }
      std::cout << "report: " << rep.out_dir.string() << "\n";
    } else if (replay->parsed()) {
      const auto acfg = fedmia::config::LoadAttackConfig(attack_path);
      auto trace_name = fs::path(trace_dir).lexically_normal();
      if (trace_name.filename().empty()) trace_name = trace_name.parent_path();
      const fs::path dest = !out.empty() ? fs::path(out)
                                         : fedmia::harness::DefaultOutputRoot() /
                                               ("replay-" + trace_name.filename().string());
      fedmia::harness::ReplayAttack(trace_dir, acfg, dest, jobs);
      PrintTable(fedmia::ReadFile((dest / "metrics.csv").string()));
      std::cout << "replay: " << dest.string() << "\n";
    } else if (report->parsed()) {
      const auto v = fedmia::harness::VerifyReport(report_dir);
      PrintTable(fedmia::ReadFile((fs::path(report_dir) / "metrics.csv").string()));
      std::cout << "verified " << v.jobs.size() << " jobs, " << v.traces_checked << " traces, config hash "
                << v.report.value("config_hash", "") << "\n";
    } else if (plots->parsed()) {
      for (const auto& p : fedmia::harness::EmitPlots(report_dir)) std::cout << p.string() << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "fedmia: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "fedmia: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
