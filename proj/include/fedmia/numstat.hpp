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

// Deterministic numeric primitives: counter-based RNG streams, flat-vector
// arithmetic, population summary statistics and the normal CDF.

#ifndef FEDMIA_NUMSTAT_HPP_
#define FEDMIA_NUMSTAT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fedmia/error.hpp"

namespace fedmia {

// Flat parameter / update vector. Holds global models, client updates and
// per-sample gradients alike.
using ParamVector = std::vector<double>;

namespace numstat {

namespace internal {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace internal

// Counter-based random stream. The n-th output is a pure function of
// (seed, stream_id, n), so streams can be created in any order on any thread
// and replayed exactly. Copying a stream copies its position.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed),
        stream_id_(stream_id),
        key_lo_(internal::Mix64(seed ^ internal::Mix64(stream_id + internal::kGolden))),
        key_hi_(internal::Mix64(key_lo_ + stream_id * internal::kGolden + 1)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t position() const noexcept { return counter_; }

  // Child stream keyed by a path of integers, e.g. Derive({client, round}).
  RngStream Derive(std::initializer_list<std::uint64_t> path) const {
    std::uint64_t id = stream_id_;
    for (std::uint64_t p : path) {
      id = internal::Mix64(id * internal::kGolden + internal::Mix64(p + 0x632BE59BD9B4E019ULL));
    }
    return RngStream(seed_, id);
  }

  std::uint64_t NextU64() {
    const std::uint64_t c = counter_++;
    return internal::Mix64(internal::Mix64(c * internal::kGolden + key_lo_) ^ key_hi_);
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double NextUniform() { return static_cast<double>(NextU64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe as a log() argument.
  double NextOpenUniform() {
    return (static_cast<double>(NextU64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t NextBelow(std::uint64_t n) {
    Require(n > 0, ErrorCode::kParameter, "NextBelow requires n > 0");
    const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % n);
    std::uint64_t r = NextU64();
    while (r >= limit) r = NextU64();
    return r % n;
  }

  double NextNormal() {
    // Box-Muller; one normal per two uniforms keeps the stream position
    // arithmetic simple.
    const double u1 = NextOpenUniform();
    const double u2 = NextUniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key_lo_;
  std::uint64_t key_hi_;
  std::uint64_t counter_ = 0;
};

// Fisher-Yates shuffle driven by a stream.
template <typename T>
void Shuffle(RngStream& rng, std::vector<T>& values) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.NextBelow(i));
    std::swap(values[i - 1], values[j]);
  }
}

struct SummaryStats {
  double mean = 0.0;
  double variance = 0.0;  // population (divide-by-n)
  std::size_t count = 0;

  double stddev() const { return std::sqrt(variance); }
};

// Mean and population variance. Two-pass so that a constant sample yields a
// variance of exactly zero.
inline SummaryStats Summary(std::span<const double> values) {
  Require(!values.empty(), ErrorCode::kEmptySample, "summary of an empty sample");
  double sum = 0.0;
  for (double v : values) {
    Require(std::isfinite(v), ErrorCode::kParameter, "summary of a non-finite value");
    sum += v;
  }
  const double n = static_cast<double>(values.size());
  double mean = sum / n;
  bool constant = std::all_of(values.begin(), values.end(),
                              [&](double v) { return v == values.front(); });
  if (constant) return {values.front(), 0.0, values.size()};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, ss / n, values.size()};
}

// Phi((x - mean) / sqrt(variance)). erfc keeps full relative accuracy in the
// lower tail where 1 + erf would cancel.
inline double GaussianCdf(double x, double mean, double variance) {
  Require(std::isfinite(x) && std::isfinite(mean) && std::isfinite(variance),
          ErrorCode::kParameter, "gaussian_cdf inputs must be finite");
  Require(variance > 0.0, ErrorCode::kDegenerate, "gaussian_cdf requires variance > 0");
  const double z = (x - mean) / std::sqrt(variance);
  return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

inline void CheckSameDim(std::span<const double> a, std::span<const double> b) {
  Require(a.size() == b.size(), ErrorCode::kShape,
          "dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

inline double Dot(std::span<const double> a, std::span<const double> b) {
  CheckSameDim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double Norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

// y += alpha * x
inline void Axpy(double alpha, std::span<const double> x, std::span<double> y) {
  CheckSameDim(x, y);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void Scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

inline double Cosine(std::span<const double> a, std::span<const double> b) {
  CheckSameDim(a, b);
  const double na = Norm(a);
  const double nb = Norm(b);
  Require(na > 0.0 && nb > 0.0, ErrorCode::kZeroGradient, "cosine of a zero-norm vector");
  return std::clamp(Dot(a, b) / (na * nb), -1.0, 1.0);
}

inline ParamVector SampleGaussian(RngStream& rng, double mean, double stddev, std::size_t dim) {
  Require(stddev >= 0.0 && std::isfinite(stddev), ErrorCode::kParameter,
          "gaussian stddev must be finite and >= 0");
  ParamVector out(dim, mean);
  if (stddev == 0.0) return out;
  for (double& v : out) v += stddev * rng.NextNormal();
  return out;
}

// log of a Gamma(shape, 1) draw. Working in log space keeps tiny shapes
// (draws that underflow to 0 as doubles) usable for Beta and Dirichlet.
inline double SampleLogGamma(RngStream& rng, double shape) {
  Require(shape > 0.0 && std::isfinite(shape), ErrorCode::kParameter, "gamma shape must be > 0");
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a)
    return SampleLogGamma(rng, shape + 1.0) + std::log(rng.NextOpenUniform()) / shape;
  }
  // Marsaglia & Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = rng.NextNormal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.NextOpenUniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return std::log(d * v);
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

// Symmetric Beta(alpha, alpha).
inline double SampleBeta(RngStream& rng, double alpha) {
  Require(alpha > 0.0 && std::isfinite(alpha), ErrorCode::kParameter, "beta alpha must be > 0");
  const double lx = SampleLogGamma(rng, alpha);
  const double ly = SampleLogGamma(rng, alpha);
  // x / (x + y) = 1 / (1 + exp(ly - lx))
  return 1.0 / (1.0 + std::exp(ly - lx));
}

// Dirichlet(beta * 1_dim).
inline std::vector<double> SampleDirichlet(RngStream& rng, double beta, std::size_t dim) {
  Require(beta > 0.0 && std::isfinite(beta), ErrorCode::kParameter, "dirichlet beta must be > 0");
  Require(dim >= 1, ErrorCode::kParameter, "dirichlet dim must be >= 1");
  if (dim == 1) return {1.0};
  std::vector<double> logs(dim);
  for (double& l : logs) l = SampleLogGamma(rng, beta);
  const double top = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double& l : logs) {
    l = std::exp(l - top);
    total += l;
  }
  for (double& l : logs) l /= total;
  return logs;
}

}  // namespace numstat
}  // namespace fedmia

#endif  // FEDMIA_NUMSTAT_HPP_
