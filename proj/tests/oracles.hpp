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

// Independent reference computations used only by tests. Nothing here calls
// into the code path it is used to check.

#ifndef FEDMIA_TESTS_ORACLES_HPP_
#define FEDMIA_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

#include "fedmia/metrics.hpp"
#include "fedmia/model.hpp"

namespace fedmia::oracle {

// Normal CDF by composite Simpson quadrature of the density from mean - 12 sd.
inline double NormalCdfByQuadrature(double x, double mean, double variance) {
  const double sd = std::sqrt(variance);
  const double lo = -12.0;
  const double hi = (x - mean) / sd;
  if (hi <= lo) return 0.0;
  const int n = 200000;  // even
  const double h = (hi - lo) / n;
  auto pdf = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); };
  double s = pdf(lo) + pdf(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * pdf(lo + i * h);
  return s * h / 3.0;
}

// Mann-Whitney pair statistic over all (member, non-member) pairs.
inline double PairAuc(const metrics::ScoredCohort& cohort) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const auto& m : cohort) {
    if (!m.is_member) continue;
    for (const auto& n : cohort) {
      if (n.is_member) continue;
      pairs += 1.0;
      if (m.score > n.score) wins += 1.0;
      else if (m.score == n.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

struct MonteCarloEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Fraction of uniform points in [0, z] dominated by some front point, scaled
// by the box area.
inline MonteCarloEstimate HypervolumeMonteCarlo(const std::vector<metrics::ParetoPoint>& points,
                                                metrics::ParetoPoint z, std::size_t samples,
                                                unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> ux(0.0, z.utility_loss);
  std::uniform_real_distribution<double> uy(0.0, z.privacy_leakage);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double x = ux(gen);
    const double y = uy(gen);
    for (const auto& p : points) {
      if (x >= p.utility_loss && y >= p.privacy_leakage) {
        ++hits;
        break;
      }
    }
  }
  const double area = z.utility_loss * z.privacy_leakage;
  const double p = static_cast<double>(hits) / static_cast<double>(samples);
  return {area * p, area * std::sqrt(p * (1.0 - p) / static_cast<double>(samples))};
}

// Hand inclusion-exclusion over every non-empty subset of boxes.
inline double HypervolumeInclusionExclusion(const std::vector<metrics::ParetoPoint>& points,
                                            metrics::ParetoPoint z) {
  const std::size_t n = points.size();
  double total = 0.0;
  for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
    double x = 0.0;
    double y = 0.0;
    int bits = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mask & (std::size_t{1} << i))) continue;
      x = std::max(x, points[i].utility_loss);
      y = std::max(y, points[i].privacy_leakage);
      ++bits;
    }
    const double box = (z.utility_loss - x) * (z.privacy_leakage - y);
    total += (bits % 2 == 1 ? 1.0 : -1.0) * box;
  }
  return total;
}

// Central finite differences of the loss.
inline std::vector<double> FiniteDifferenceGradient(const model::ModelSpec& spec,
                                                    std::vector<double> params,
                                                    const model::LabeledSample& sample, double h) {
  std::vector<double> g(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + h;
    const double up = model::Loss(spec, params, sample);
    params[i] = keep - h;
    const double down = model::Loss(spec, params, sample);
    params[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace fedmia::oracle

#endif  // FEDMIA_TESTS_ORACLES_HPP_
