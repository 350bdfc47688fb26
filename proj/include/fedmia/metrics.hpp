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

#ifndef FEDMIA_METRICS_HPP_
#define FEDMIA_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "fedmia/error.hpp"

namespace fedmia {
namespace metrics {

struct ScoredSample {
  double score = 0.0;
  bool is_member = false;
};

using ScoredCohort = std::vector<ScoredSample>;

inline ScoredCohort MakeCohort(std::span<const double> scores, std::span<const bool> is_member) {
  Require(scores.size() == is_member.size(), ErrorCode::kShape, "one label per score required");
  ScoredCohort c;
  c.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) c.push_back({scores[i], is_member[i]});
  return c;
}

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;

  bool operator==(const RocPoint&) const = default;
};

using RocCurve = std::vector<RocPoint>;

namespace internal {

struct Counts {
  std::size_t members = 0;
  std::size_t nonmembers = 0;
};

inline Counts Validate(std::span<const ScoredSample> cohort) {
  Counts c;
  for (const auto& s : cohort) {
    Require(std::isfinite(s.score), ErrorCode::kCohort, "cohort score is not finite");
    (s.is_member ? c.members : c.nonmembers)++;
  }
  Require(c.members > 0 && c.nonmembers > 0, ErrorCode::kCohort,
          "cohort needs at least one member and one non-member");
  return c;
}

}  // namespace internal

// Threshold sweep classifying score > theta as member. Tied scores move
// together, so each distinct score contributes one point.
inline RocCurve Roc(std::span<const ScoredSample> cohort) {
  const auto counts = internal::Validate(cohort);
  std::vector<ScoredSample> sorted(cohort.begin(), cohort.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const ScoredSample& a, const ScoredSample& b) { return a.score > b.score; });
  RocCurve curve{{0.0, 0.0}};
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double s = sorted[i].score;
    for (; i < sorted.size() && sorted[i].score == s; ++i) (sorted[i].is_member ? tp : fp)++;
    curve.push_back({static_cast<double>(fp) / static_cast<double>(counts.nonmembers),
                     static_cast<double>(tp) / static_cast<double>(counts.members)});
  }
  return curve;
}

// Trapezoidal area under the ROC curve; equal to the Mann-Whitney statistic
// with ties counted as one half.
inline double Auc(std::span<const ScoredSample> cohort) {
  const auto curve = Roc(cohort);
  double area = 0.0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
  }
  return area;
}

struct OperatingPoint {
  double tpr = 0.0;
  double fpr = 0.0;  // achieved, never above the cap
};

// Best TPR among thresholds whose FPR does not exceed fpr_cap.
inline OperatingPoint TprAtFpr(std::span<const ScoredSample> cohort, double fpr_cap) {
  Require(fpr_cap >= 0.0 && fpr_cap < 1.0, ErrorCode::kParameter, "fpr_cap must lie in [0, 1)");
  const auto counts = internal::Validate(cohort);
  // Compare in counts to avoid rounding at the boundary.
  const double max_fp = fpr_cap * static_cast<double>(counts.nonmembers) + 1e-9;
  OperatingPoint best;
  for (const auto& p : Roc(cohort)) {
    const double fp = p.fpr * static_cast<double>(counts.nonmembers);
    if (fp <= max_fp && p.tpr > best.tpr) best = {p.tpr, p.fpr};
  }
  return best;
}

struct ParetoPoint {
  double utility_loss = 0.0;
  double privacy_leakage = 0.0;

  bool operator==(const ParetoPoint&) const = default;
};

// Non-dominated subset when both coordinates are minimized, deduplicated and
// sorted by utility_loss.
inline std::vector<ParetoPoint> ParetoFront(std::span<const ParetoPoint> points) {
  Require(!points.empty(), ErrorCode::kEmptySample, "pareto front of no points");
  std::vector<ParetoPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    return a.utility_loss != b.utility_loss ? a.utility_loss < b.utility_loss
                                            : a.privacy_leakage < b.privacy_leakage;
  });
  std::vector<ParetoPoint> front;
  for (const auto& p : sorted) {
    if (front.empty() || p.privacy_leakage < front.back().privacy_leakage) front.push_back(p);
  }
  return front;
}

// Area of the union of boxes [y_i, z] in 2-D.
inline double Hypervolume(std::span<const ParetoPoint> points, ParetoPoint reference = {1.0, 1.0}) {
  if (points.empty()) return 0.0;
  for (const auto& p : points) {
    Require(p.utility_loss <= reference.utility_loss &&
                p.privacy_leakage <= reference.privacy_leakage,
            ErrorCode::kReferencePoint, "point lies outside the reference box");
  }
  const auto front = ParetoFront(points);
  double hv = 0.0;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const double next_x = i + 1 < front.size() ? front[i + 1].utility_loss : reference.utility_loss;
    hv += (next_x - front[i].utility_loss) * (reference.privacy_leakage - front[i].privacy_leakage);
  }
  return hv;
}

}  // namespace metrics
}  // namespace fedmia

#endif  // FEDMIA_METRICS_HPP_
