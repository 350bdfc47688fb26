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

// Re-checking a finished report directory, and turning it into plot-ready
// CSV tables. Neither touches a model.

#ifndef FEDMIA_REPORT_HPP_
#define FEDMIA_REPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "fedmia/attack.hpp"
#include "fedmia/config.hpp"
#include "fedmia/error.hpp"
#include "fedmia/experiment.hpp"
#include "fedmia/metrics.hpp"
#include "fedmia/serialize.hpp"
#include "fedmia/trace_io.hpp"

namespace fedmia {
namespace harness {

using CsvRow = std::vector<std::string>;

namespace internal {

inline std::string ReadRequired(const fs::path& p) {
  Require(fs::is_regular_file(p), ErrorCode::kIntegrity, "missing " + p.string());
  return ReadFile(p.string());
}

// Our CSVs never quote, so a plain split is exact.
inline std::vector<CsvRow> ParseCsv(const std::string& text, const fs::path& origin,
                                    std::size_t columns) {
  std::vector<CsvRow> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    CsvRow row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      row.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    Require(row.size() == columns, ErrorCode::kIntegrity,
            origin.string() + ":" + std::to_string(lineno) + ": expected " +
                std::to_string(columns) + " columns");
    if (lineno > 1) rows.push_back(std::move(row));
  }
  Require(lineno >= 1, ErrorCode::kIntegrity, origin.string() + " is empty");
  return rows;
}

inline double ParseNumber(const std::string& s, const fs::path& origin) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  Require(!s.empty() && end == s.c_str() + s.size(), ErrorCode::kIntegrity,
          origin.string() + ": bad number '" + s + "'");
  return v;
}

// Scores of one job, grouped by method in file order.
struct JobScores {
  std::vector<std::pair<Method, metrics::ScoredCohort>> methods;
};

inline JobScores ReadScores(const fs::path& path) {
  JobScores out;
  for (const auto& row : ParseCsv(ReadRequired(path), path, 4)) {
    Method m;
    try {
      m = attack::ParseMethod(row[0]);
    } catch (const Error&) {
      throw Error(ErrorCode::kIntegrity, path.string() + ": unknown method '" + row[0] + "'");
    }
    if (out.methods.empty() || out.methods.back().first != m) out.methods.emplace_back(m, metrics::ScoredCohort{});
    out.methods.back().second.push_back({ParseNumber(row[3], path), row[2] == "1"});
  }
  return out;
}

}  // namespace internal

struct VerifiedJob {
  std::string tag;
  std::uint64_t seed = 0;
  std::size_t point = 0;
  std::string defense;
  std::string param;
  double test_accuracy = 0.0;
  internal::JobScores scores;
};

struct VerifiedReport {
  config::ExperimentConfig config;
  Json report;
  std::vector<VerifiedJob> jobs;
  std::size_t traces_checked = 0;
};

// Checks that config.json matches the recorded hash and that every metric
// row can be recomputed, byte for byte, from the stored scores. Stored traces
// are checksum-verified. Any disagreement is an integrity error.
inline VerifiedReport VerifyReport(const fs::path& dir) {
  VerifiedReport v;
  const auto report_path = dir / "report.json";
  try {
    v.report = Json::parse(internal::ReadRequired(report_path));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIntegrity, report_path.string() + ": " + e.what());
  }
  Require(v.report.is_object() && v.report.value("format", "") == kReportFormat,
          ErrorCode::kIntegrity, report_path.string() + " is not a fedmia report");

  const std::string config_text = internal::ReadRequired(dir / "config.json");
  Require(Hex64(Fnv1a64(config_text)) == v.report.value("config_hash", ""), ErrorCode::kIntegrity,
          (dir / "config.json").string() + " does not match the config hash in report.json");
  try {
    v.config = config::ParseConfig(config_text, (dir / "config.json").string());
  } catch (const Error& e) {
    throw Error(ErrorCode::kIntegrity, e.message());
  }
  const double cap = v.config.attack.fpr_cap;

  std::string by_seed = MetricsHeader(true);
  try {
    for (const auto& j : v.report.at("jobs")) {
      VerifiedJob job;
      job.tag = j.at("tag").get<std::string>();
      job.seed = j.at("seed").get<std::uint64_t>();
      job.point = j.at("point").get<std::size_t>();
      job.defense = j.at("defense").at("kind").get<std::string>();
      job.param = j.at("param").get<std::string>();
      job.test_accuracy = j.at("test_accuracy").get<double>();
      job.scores = internal::ReadScores(dir / j.at("scores").get<std::string>());
      if (j.at("trace").is_string()) {
        const auto loaded = trace_io::ReadTrace(dir / j.at("trace").get<std::string>());
        Require(loaded.trace.rounds.back().test_accuracy == job.test_accuracy, ErrorCode::kIntegrity,
                "trace of job " + job.tag + " disagrees with report.json");
        ++v.traces_checked;
      }
      for (const auto& [m, cohort] : job.scores.methods) {
        const auto op = metrics::TprAtFpr(cohort, cap);
        by_seed += std::to_string(job.seed) + "," + attack::MethodName(m) + "," + job.defense + "," +
                   job.param + "," + FormatDouble(metrics::Auc(cohort)) + "," +
                   FormatDouble(op.tpr) + "," + FormatDouble(cap) + "," + FormatDouble(op.fpr) +
                   "," + FormatDouble(1.0 - job.test_accuracy) + "\n";
      }
      v.jobs.push_back(std::move(job));
    }
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIntegrity, report_path.string() + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kIntegrity) throw;
    throw Error(ErrorCode::kIntegrity, std::string("recomputing metrics: ") + e.message());
  }
  Require(!v.jobs.empty(), ErrorCode::kIntegrity, report_path.string() + " lists no jobs");
  Require(internal::ReadRequired(dir / "metrics_by_seed.csv") == by_seed, ErrorCode::kIntegrity,
          (dir / "metrics_by_seed.csv").string() + " does not match the stored scores");

  // Seed means, accumulated in the same order as the runner.
  std::string means = MetricsHeader(false);
  std::size_t points = 0;
  for (const auto& j : v.jobs) points = std::max(points, j.point + 1);
  for (std::size_t p = 0; p < points; ++p) {
    std::vector<const VerifiedJob*> group;
    for (const auto& j : v.jobs) {
      if (j.point == p) group.push_back(&j);
    }
    Require(!group.empty(), ErrorCode::kIntegrity, "sweep point " + std::to_string(p) + " has no jobs");
    const double n = static_cast<double>(group.size());
    for (std::size_t mi = 0; mi < group.front()->scores.methods.size(); ++mi) {
      double auc = 0.0, tpr = 0.0, loss = 0.0;
      for (const auto* j : group) {
        Require(mi < j->scores.methods.size(), ErrorCode::kIntegrity,
                "job " + j->tag + " is missing methods");
        const auto& cohort = j->scores.methods[mi].second;
        auc += metrics::Auc(cohort);
        tpr += metrics::TprAtFpr(cohort, cap).tpr;
        loss += 1.0 - j->test_accuracy;
      }
      means += attack::MethodName(group.front()->scores.methods[mi].first) + "," +
               group.front()->defense + "," + group.front()->param + "," + FormatDouble(auc / n) +
               "," + FormatDouble(tpr / n) + "," + FormatDouble(cap) + "," + FormatDouble(loss / n) +
               "\n";
    }
  }
  Require(internal::ReadRequired(dir / "metrics.csv") == means, ErrorCode::kIntegrity,
          (dir / "metrics.csv").string() + " does not match the stored scores");
  return v;
}

// Writes plots/*.csv for a verified report:
//   score_histogram.csv  20 equal-width bins per (method, param), seeds pooled
//   roc.csv              ROC per (method, param), seeds pooled
//   round_curve.csv      seed-mean AUC and TPR@FPR per round prefix
//   pareto.csv           seed-mean (utility_loss, tpr) per sweep point, front flag
inline std::vector<fs::path> EmitPlots(const fs::path& dir, std::size_t bins = 20) {
  const auto v = VerifyReport(dir);
  const auto plots = dir / "plots";
  fs::create_directories(plots);
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    WriteFile((plots / name).string(), text);
    written.push_back(plots / name);
  };

  // Pool the cohorts of every seed per (point, method).
  std::map<std::pair<std::size_t, std::size_t>, metrics::ScoredCohort> pooled;
  std::map<std::size_t, std::string> param_of;
  std::vector<Method> methods;
  for (const auto& j : v.jobs) {
    param_of[j.point] = j.param;
    for (std::size_t mi = 0; mi < j.scores.methods.size(); ++mi) {
      if (methods.size() <= mi) methods.push_back(j.scores.methods[mi].first);
      auto& dst = pooled[{mi, j.point}];
      dst.insert(dst.end(), j.scores.methods[mi].second.begin(), j.scores.methods[mi].second.end());
    }
  }

  std::string hist = "method,param,bin_lo,bin_hi,members,nonmembers\n";
  std::string roc = "method,param,fpr,tpr\n";
  for (const auto& [key, cohort] : pooled) {
    const std::string prefix = attack::MethodName(methods[key.first]) + "," + param_of[key.second] + ",";
    double lo = cohort.front().score, hi = lo;
    for (const auto& s : cohort) {
      lo = std::min(lo, s.score);
      hi = std::max(hi, s.score);
    }
    const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
    std::vector<std::size_t> mem(bins, 0), non(bins, 0);
    for (const auto& s : cohort) {
      auto b = static_cast<std::size_t>((s.score - lo) / width);
      b = std::min(b, bins - 1);
      (s.is_member ? mem : non)[b]++;
    }
    for (std::size_t b = 0; b < bins; ++b) {
      hist += prefix + FormatDouble(lo + width * static_cast<double>(b)) + "," +
              FormatDouble(lo + width * static_cast<double>(b + 1)) + "," + std::to_string(mem[b]) +
              "," + std::to_string(non[b]) + "\n";
    }
    for (const auto& p : metrics::Roc(cohort)) {
      roc += prefix + FormatDouble(p.fpr) + "," + FormatDouble(p.tpr) + "\n";
    }
  }
  emit("score_histogram.csv", hist);
  emit("roc.csv", roc);

  // round_metrics.csv: seed,method,defense,param,round,auc,tpr_at_fpr
  const auto round_path = dir / "round_metrics.csv";
  std::map<std::tuple<std::size_t, std::string, std::size_t>, std::pair<double, double>> sums;
  std::map<std::tuple<std::size_t, std::string, std::size_t>, std::size_t> counts;
  std::map<std::string, std::size_t> method_rank;
  for (std::size_t i = 0; i < methods.size(); ++i) method_rank[attack::MethodName(methods[i])] = i;
  std::map<std::string, std::size_t> point_of;
  for (const auto& [p, label] : param_of) point_of[label] = p;
  if (fs::exists(round_path)) {
    for (const auto& row : internal::ParseCsv(ReadFile(round_path.string()), round_path, 7)) {
      const auto key = std::make_tuple(point_of.at(row[3]), row[1],
                                       static_cast<std::size_t>(internal::ParseNumber(row[4], round_path)));
      sums[key].first += internal::ParseNumber(row[5], round_path);
      sums[key].second += internal::ParseNumber(row[6], round_path);
      counts[key]++;
    }
  }
  std::vector<std::pair<std::tuple<std::size_t, std::size_t, std::size_t>, std::string>> order;
  for (const auto& [key, s] : sums) {
    const auto& [p, m, r] = key;
    const double n = static_cast<double>(counts[key]);
    order.push_back({{p, method_rank.count(m) ? method_rank[m] : methods.size(), r},
                     m + "," + param_of[p] + "," + std::to_string(r) + "," + FormatDouble(s.first / n) +
                         "," + FormatDouble(s.second / n) + "\n"});
  }
  std::sort(order.begin(), order.end());
  std::string curve = "method,param,round,auc,tpr_at_fpr\n";
  for (const auto& [k, line] : order) curve += line;
  emit("round_curve.csv", curve);

  // Seed means straight from metrics.csv (already verified).
  const auto mpath = dir / "metrics.csv";
  std::vector<std::pair<std::string, std::vector<std::pair<metrics::ParetoPoint, std::string>>>> by_method;
  for (const auto& row : internal::ParseCsv(ReadFile(mpath.string()), mpath, 7)) {
    auto it = std::find_if(by_method.begin(), by_method.end(),
                           [&](const auto& e) { return e.first == row[0]; });
    if (it == by_method.end()) {
      by_method.push_back({row[0], {}});
      it = std::prev(by_method.end());
    }
    it->second.push_back({{internal::ParseNumber(row[6], mpath), internal::ParseNumber(row[4], mpath)},
                          row[2]});
  }
  std::string pareto = "method,param,utility_loss,privacy_leakage,on_front\n";
  for (auto& [m, pts] : by_method) {
    std::vector<metrics::ParetoPoint> raw;
    for (const auto& p : pts) raw.push_back(p.first);
    const auto front = metrics::ParetoFront(raw);
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
      return a.first.utility_loss < b.first.utility_loss;
    });
    for (const auto& [p, param] : pts) {
      const bool on = std::find(front.begin(), front.end(), p) != front.end();
      pareto += m + "," + param + "," + FormatDouble(p.utility_loss) + "," +
                FormatDouble(p.privacy_leakage) + "," + (on ? "1" : "0") + "\n";
    }
  }
  emit("pareto.csv", pareto);
  return written;
}

}  // namespace harness
}  // namespace fedmia

#endif  // FEDMIA_REPORT_HPP_
