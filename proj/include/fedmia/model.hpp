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

// Small differentiable classifiers over flat parameter vectors: multinomial
// logistic regression and a one-hidden-layer tanh MLP, with analytic
// per-sample cross-entropy gradients.
//
// Parameter layout (row-major):
//   linear_softmax: W[C][D], b[C]
//   mlp:            W1[H][D], b1[H], W2[C][H], b2[C]

#ifndef FEDMIA_MODEL_HPP_
#define FEDMIA_MODEL_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fedmia/error.hpp"
#include "fedmia/numstat.hpp"

namespace fedmia {
namespace model {

enum class ModelKind { kLinearSoftmax, kMlp };

inline std::string ModelKindName(ModelKind kind) {
  return kind == ModelKind::kLinearSoftmax ? "linear_softmax" : "mlp";
}

inline ModelKind ParseModelKind(const std::string& name) {
  if (name == "linear_softmax") return ModelKind::kLinearSoftmax;
  if (name == "mlp") return ModelKind::kMlp;
  throw Error(ErrorCode::kConfig, "unknown model kind '" + name + "'");
}

struct ModelSpec {
  ModelKind kind = ModelKind::kLinearSoftmax;
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 0;
  std::size_t num_classes = 2;
  double init_std = 0.0;

  void Validate() const {
    Require(input_dim >= 1, ErrorCode::kConfig, "model.input_dim must be >= 1");
    Require(num_classes >= 2, ErrorCode::kConfig, "model.num_classes must be >= 2");
    Require(init_std >= 0.0 && std::isfinite(init_std), ErrorCode::kConfig,
            "model.init_std must be >= 0");
    if (kind == ModelKind::kLinearSoftmax) {
      Require(hidden_dim == 0, ErrorCode::kConfig, "linear_softmax requires hidden_dim == 0");
    } else {
      Require(hidden_dim >= 1, ErrorCode::kConfig, "mlp requires hidden_dim >= 1");
    }
  }

  std::size_t ParamCount() const {
    if (kind == ModelKind::kLinearSoftmax) return num_classes * input_dim + num_classes;
    return hidden_dim * input_dim + hidden_dim + num_classes * hidden_dim + num_classes;
  }

  bool operator==(const ModelSpec&) const = default;
};

struct LabeledSample {
  std::vector<double> features;
  std::size_t label = 0;

  bool operator==(const LabeledSample&) const = default;
};

// Smallest probability admitted inside the log of the cross-entropy.
inline constexpr double kLogClamp = 1e-30;

namespace internal {

inline void CheckShapes(const ModelSpec& spec, std::span<const double> params,
                        const LabeledSample& sample) {
  Require(params.size() == spec.ParamCount(), ErrorCode::kShape,
          "parameter vector has " + std::to_string(params.size()) + " entries, spec needs " +
              std::to_string(spec.ParamCount()));
  Require(sample.features.size() == spec.input_dim, ErrorCode::kShape,
          "sample has " + std::to_string(sample.features.size()) + " features, spec needs " +
              std::to_string(spec.input_dim));
  Require(sample.label < spec.num_classes, ErrorCode::kShape, "label out of range");
}

struct Forward {
  std::vector<double> hidden;  // tanh activations (mlp only)
  std::vector<double> logits;
};

inline Forward RunForward(const ModelSpec& spec, std::span<const double> p,
                          std::span<const double> x) {
  const std::size_t d = spec.input_dim;
  const std::size_t c = spec.num_classes;
  Forward f;
  f.logits.assign(c, 0.0);
  if (spec.kind == ModelKind::kLinearSoftmax) {
    const double* w = p.data();
    const double* b = w + c * d;
    for (std::size_t k = 0; k < c; ++k) {
      double z = b[k];
      for (std::size_t j = 0; j < d; ++j) z += w[k * d + j] * x[j];
      f.logits[k] = z;
    }
    return f;
  }
  const std::size_t h = spec.hidden_dim;
  const double* w1 = p.data();
  const double* b1 = w1 + h * d;
  const double* w2 = b1 + h;
  const double* b2 = w2 + c * h;
  f.hidden.assign(h, 0.0);
  for (std::size_t i = 0; i < h; ++i) {
    double a = b1[i];
    for (std::size_t j = 0; j < d; ++j) a += w1[i * d + j] * x[j];
    f.hidden[i] = std::tanh(a);
  }
  for (std::size_t k = 0; k < c; ++k) {
    double z = b2[k];
    for (std::size_t i = 0; i < h; ++i) z += w2[k * h + i] * f.hidden[i];
    f.logits[k] = z;
  }
  return f;
}

// Softmax probabilities and log-sum-exp of the logits.
inline double Softmax(std::span<const double> logits, std::vector<double>& probs) {
  const double top = *std::max_element(logits.begin(), logits.end());
  probs.resize(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    probs[k] = std::exp(logits[k] - top);
    total += probs[k];
  }
  for (double& q : probs) q /= total;
  return top + std::log(total);
}

inline double CrossEntropy(std::span<const double> logits, double lse, std::size_t label) {
  const double loss = lse - logits[label];
  return std::clamp(loss, 0.0, -std::log(kLogClamp));
}

// Adds weight * d(loss)/d(params) into grad, where the target distribution is
// lambda on label_a and (1 - lambda) on label_b. Returns the (unweighted)
// mixed loss.
inline double AccumulateGrad(const ModelSpec& spec, std::span<const double> p,
                             std::span<const double> x, std::size_t label_a,
                             std::size_t label_b, double lambda, double weight,
                             std::span<double> grad) {
  const std::size_t d = spec.input_dim;
  const std::size_t c = spec.num_classes;
  Forward f = RunForward(spec, p, x);
  std::vector<double> probs;
  const double lse = Softmax(f.logits, probs);
  const double loss = lambda * CrossEntropy(f.logits, lse, label_a) +
                      (1.0 - lambda) * CrossEntropy(f.logits, lse, label_b);
  // dL/dz = p - target
  std::vector<double>& dz = probs;
  dz[label_a] -= lambda;
  dz[label_b] -= 1.0 - lambda;

  if (spec.kind == ModelKind::kLinearSoftmax) {
    double* gw = grad.data();
    double* gb = gw + c * d;
    for (std::size_t k = 0; k < c; ++k) {
      const double s = weight * dz[k];
      if (s == 0.0) continue;
      for (std::size_t j = 0; j < d; ++j) gw[k * d + j] += s * x[j];
      gb[k] += s;
    }
    return loss;
  }
  const std::size_t h = spec.hidden_dim;
  const double* w2 = p.data() + h * d + h;
  double* gw1 = grad.data();
  double* gb1 = gw1 + h * d;
  double* gw2 = gb1 + h;
  double* gb2 = gw2 + c * h;
  std::vector<double> dh(h, 0.0);
  for (std::size_t k = 0; k < c; ++k) {
    const double s = weight * dz[k];
    for (std::size_t i = 0; i < h; ++i) {
      gw2[k * h + i] += s * f.hidden[i];
      dh[i] += dz[k] * w2[k * h + i];
    }
    gb2[k] += s;
  }
  for (std::size_t i = 0; i < h; ++i) {
    const double da = weight * dh[i] * (1.0 - f.hidden[i] * f.hidden[i]);
    if (da == 0.0) continue;
    for (std::size_t j = 0; j < d; ++j) gw1[i * d + j] += da * x[j];
    gb1[i] += da;
  }
  return loss;
}

}  // namespace internal

// Gaussian weights with init_std, zero biases.
inline ParamVector InitParams(const ModelSpec& spec, numstat::RngStream rng) {
  spec.Validate();
  ParamVector p(spec.ParamCount(), 0.0);
  if (spec.init_std == 0.0) return p;
  const std::size_t d = spec.input_dim;
  const std::size_t c = spec.num_classes;
  auto fill = [&](std::size_t begin, std::size_t count) {
    for (std::size_t i = begin; i < begin + count; ++i) p[i] = spec.init_std * rng.NextNormal();
  };
  if (spec.kind == ModelKind::kLinearSoftmax) {
    fill(0, c * d);
  } else {
    const std::size_t h = spec.hidden_dim;
    fill(0, h * d);
    fill(h * d + h, c * h);
  }
  return p;
}

inline std::vector<double> Logits(const ModelSpec& spec, std::span<const double> params,
                                  const LabeledSample& sample) {
  internal::CheckShapes(spec, params, sample);
  return internal::RunForward(spec, params, sample.features).logits;
}

// Cross-entropy -log softmax_y(logits), with the probability clamped at 1e-30.
inline double Loss(const ModelSpec& spec, std::span<const double> params,
                   const LabeledSample& sample) {
  internal::CheckShapes(spec, params, sample);
  const auto f = internal::RunForward(spec, params, sample.features);
  std::vector<double> probs;
  const double lse = internal::Softmax(f.logits, probs);
  return internal::CrossEntropy(f.logits, lse, sample.label);
}

inline ParamVector GradSample(const ModelSpec& spec, std::span<const double> params,
                              const LabeledSample& sample) {
  internal::CheckShapes(spec, params, sample);
  ParamVector g(params.size(), 0.0);
  internal::AccumulateGrad(spec, params, sample.features, sample.label, sample.label, 1.0, 1.0, g);
  return g;
}

// Mean of per-sample gradients.
inline ParamVector GradBatch(const ModelSpec& spec, std::span<const double> params,
                             std::span<const LabeledSample> samples) {
  Require(!samples.empty(), ErrorCode::kEmptySample, "gradient of an empty batch");
  ParamVector g(params.size(), 0.0);
  const double w = 1.0 / static_cast<double>(samples.size());
  for (const auto& s : samples) {
    internal::CheckShapes(spec, params, s);
    internal::AccumulateGrad(spec, params, s.features, s.label, s.label, 1.0, w, g);
  }
  return g;
}

// Gradient of the mixed loss lambda * l(x, y_a) + (1 - lambda) * l(x, y_b).
inline ParamVector GradMixed(const ModelSpec& spec, std::span<const double> params,
                             std::span<const double> features, std::size_t label_a,
                             std::size_t label_b, double lambda) {
  Require(features.size() == spec.input_dim && params.size() == spec.ParamCount(),
          ErrorCode::kShape, "mixed gradient shape mismatch");
  Require(label_a < spec.num_classes && label_b < spec.num_classes, ErrorCode::kShape,
          "label out of range");
  ParamVector g(params.size(), 0.0);
  internal::AccumulateGrad(spec, params, features, label_a, label_b, lambda, 1.0, g);
  return g;
}

inline double MixedLoss(const ModelSpec& spec, std::span<const double> params,
                        std::span<const double> features, std::size_t label_a,
                        std::size_t label_b, double lambda) {
  LabeledSample a{{features.begin(), features.end()}, label_a};
  LabeledSample b{{features.begin(), features.end()}, label_b};
  return lambda * Loss(spec, params, a) + (1.0 - lambda) * Loss(spec, params, b);
}

inline double MeanLoss(const ModelSpec& spec, std::span<const double> params,
                       std::span<const LabeledSample> data) {
  Require(!data.empty(), ErrorCode::kEmptySample, "mean loss of an empty set");
  double total = 0.0;
  for (const auto& s : data) total += Loss(spec, params, s);
  return total / static_cast<double>(data.size());
}

// Argmax class; ties go to the lowest index.
inline std::size_t Predict(const ModelSpec& spec, std::span<const double> params,
                           const LabeledSample& sample) {
  const auto z = Logits(spec, params, sample);
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

inline double Accuracy(const ModelSpec& spec, std::span<const double> params,
                       std::span<const LabeledSample> data) {
  Require(!data.empty(), ErrorCode::kEmptySample, "accuracy of an empty set");
  std::size_t correct = 0;
  for (const auto& s : data) correct += Predict(spec, params, s) == s.label ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// Shuffled mini-batch SGD. The per-epoch order comes from rng, so the result
// is a pure function of the arguments.
inline ParamVector SgdEpochs(const ModelSpec& spec, ParamVector params,
                             std::span<const LabeledSample> data, double lr, int epochs,
                             std::size_t batch_size, numstat::RngStream& rng) {
  Require(lr > 0.0 && std::isfinite(lr), ErrorCode::kParameter, "learning rate must be > 0");
  Require(epochs >= 1, ErrorCode::kParameter, "epochs must be >= 1");
  Require(batch_size >= 1, ErrorCode::kParameter, "batch_size must be >= 1");
  Require(!data.empty(), ErrorCode::kEmptySample, "sgd on an empty dataset");
  std::vector<std::size_t> order(data.size());
  std::vector<LabeledSample> batch;
  for (int e = 0; e < epochs; ++e) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    numstat::Shuffle(rng, order);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) batch.push_back(data[order[i]]);
      const ParamVector g = GradBatch(spec, params, batch);
      numstat::Axpy(-lr, g, params);
    }
  }
  return params;
}

}  // namespace model
}  // namespace fedmia

#endif  // FEDMIA_MODEL_HPP_
