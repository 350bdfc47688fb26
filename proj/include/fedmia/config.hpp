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

// Experiment configuration: a JSON document with "schema_version": 1.
// Unknown keys are rejected with their full path. ToJson writes every field
// explicitly, so parse -> serialize -> parse is the identity.

#ifndef FEDMIA_CONFIG_HPP_
#define FEDMIA_CONFIG_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fedmia/attack.hpp"
#include "fedmia/data.hpp"
#include "fedmia/error.hpp"
#include "fedmia/fedsim.hpp"
#include "fedmia/model.hpp"
#include "fedmia/serialize.hpp"

namespace fedmia {
namespace config {

inline constexpr int kSchemaVersion = 1;

struct DatasetConfig {
  enum class Kind { kSynthetic, kCsv };
  Kind kind = Kind::kSynthetic;
  // synthetic
  std::size_t num_classes = 10;
  std::size_t input_dim = 32;
  std::size_t per_class = 200;
  double class_sep = 2.0;
  // csv; a relative path is resolved against the config file's directory
  std::string path;
  std::optional<data::Geometry> geometry;

  bool operator==(const DatasetConfig&) const = default;
};

struct PartitionConfig {
  bool dirichlet = false;
  double beta = std::numeric_limits<double>::infinity();
  std::size_t num_clients = 10;
  std::size_t per_client = 100;
  std::size_t holdout = 1000;
  data::NonmemberSource nonmember_source = data::NonmemberSource::kHoldout;
  double holdout_fraction = 0.1;
  double others_fraction = 0.1;

  bool operator==(const PartitionConfig&) const = default;
};

struct ModelConfig {
  model::ModelKind kind = model::ModelKind::kMlp;
  std::size_t hidden_dim = 32;
  double init_std = 0.1;

  bool operator==(const ModelConfig&) const = default;
};

struct AttackConfig {
  std::vector<attack::Method> methods{attack::kAllMethods.begin(), attack::kAllMethods.end()};
  std::vector<double> deltas{0.5};
  double fpr_cap = 0.01;
  std::size_t target_client = 0;
  std::size_t targets_per_class = 200;
  attack::AttackOptions options;
  bool round_curves = true;

  bool operator==(const AttackConfig&) const = default;
};

// One defense parameter swept over a list of values; the defense kind and
// its other parameters come from federation.defense.
struct SweepConfig {
  std::string param;
  std::vector<double> values;

  bool operator==(const SweepConfig&) const = default;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetConfig dataset;
  PartitionConfig partition;
  ModelConfig model;
  fedsim::FedConfig federation;  // num_clients and seed are filled per run
  AttackConfig attack;
  std::optional<SweepConfig> sweep;
  std::vector<std::uint64_t> seeds{0};
  bool save_traces = true;

  bool operator==(const ExperimentConfig&) const = default;
};

// Parameters that a sweep may vary, by defense kind.
inline std::vector<std::string> SweepableParams(fedsim::DefenseKind kind) {
  using fedsim::DefenseKind;
  switch (kind) {
    case DefenseKind::kPerturb: return {"noise_std", "clip_norm"};
    case DefenseKind::kQuantize: return {"bits"};
    case DefenseKind::kSparsify: return {"rate"};
    case DefenseKind::kMixup: return {"alpha"};
    case DefenseKind::kAugment: return {"aug_noise_std"};
    case DefenseKind::kSample: return {"portion"};
    case DefenseKind::kAugmentAndSample: return {"portion", "aug_noise_std"};
    case DefenseKind::kNone: return {};
  }
  return {};
}

inline fedsim::DefenseConfig WithParam(fedsim::DefenseConfig d, const std::string& param,
                                       double value) {
  if (param == "noise_std") d.noise_std = value;
  else if (param == "clip_norm") d.clip_norm = value;
  else if (param == "rate") d.rate = value;
  else if (param == "alpha") d.mixup_alpha = value;
  else if (param == "aug_noise_std") d.augment.noise_std = value;
  else if (param == "portion") d.portion = value;
  else if (param == "bits") {
    Require(value == std::floor(value), ErrorCode::kConfig, "sweep value for bits must be integral");
    d.bits = static_cast<int>(value);
  } else {
    throw Error(ErrorCode::kConfig, "unknown sweep parameter '" + param + "'");
  }
  return d;
}

// Sweep points; a config without a sweep has one point.
inline std::vector<fedsim::DefenseConfig> DefensePoints(const ExperimentConfig& c) {
  if (!c.sweep) return {c.federation.defense};
  std::vector<fedsim::DefenseConfig> out;
  for (double v : c.sweep->values) out.push_back(WithParam(c.federation.defense, c.sweep->param, v));
  return out;
}

// --- parsing ---------------------------------------------------------------

namespace internal {

template <typename T>
std::vector<T> GetList(StrictObject& o, const std::string& key) {
  const Json& v = o.Raw(key);
  Require(v.is_array(), ErrorCode::kConfig, o.PathOf(key) + " must be a list");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::string path = o.PathOf(key) + "[" + std::to_string(i) + "]";
    if constexpr (std::is_same_v<T, std::string>) {
      Require(v[i].is_string(), ErrorCode::kConfig, path + ": expected a string");
    } else {
      Require(v[i].is_number(), ErrorCode::kConfig, path + ": expected a number");
      if constexpr (std::is_integral_v<T>) {
        Require(v[i].is_number_unsigned(), ErrorCode::kConfig,
                path + ": expected a non-negative integer");
      }
    }
    out.push_back(v[i].get<T>());
  }
  return out;
}

inline void Check(bool ok, const std::string& path, const std::string& what) {
  Require(ok, ErrorCode::kConfig, path + ": " + what);
}

inline std::optional<data::Geometry> GeometryFromJson(StrictObject& o) {
  if (!o.Has("geometry") || o.Raw("geometry").is_null()) return std::nullopt;
  StrictObject g(o.Raw("geometry"), o.PathOf("geometry"));
  data::Geometry out{g.Get<std::size_t>("rows"), g.Get<std::size_t>("cols")};
  g.Finish();
  Check(out.rows >= 1 && out.cols >= 1, o.PathOf("geometry"), "rows and cols must be >= 1");
  return out;
}

inline DatasetConfig DatasetFromJson(const Json& j) {
  StrictObject o(j, "dataset");
  DatasetConfig d;
  const auto kind = o.Get<std::string>("kind");
  if (kind == "synthetic") {
    d.kind = DatasetConfig::Kind::kSynthetic;
    d.num_classes = o.Get<std::size_t>("num_classes", d.num_classes);
    d.input_dim = o.Get<std::size_t>("input_dim", d.input_dim);
    d.per_class = o.Get<std::size_t>("per_class", d.per_class);
    d.class_sep = o.Get<double>("class_sep", d.class_sep);
    Check(d.num_classes >= 2, "dataset.num_classes", "must be >= 2");
    Check(d.input_dim >= 1, "dataset.input_dim", "must be >= 1");
    Check(d.per_class >= 1, "dataset.per_class", "must be >= 1");
    Check(d.class_sep >= 0.0 && std::isfinite(d.class_sep), "dataset.class_sep", "must be >= 0");
  } else if (kind == "csv") {
    d.kind = DatasetConfig::Kind::kCsv;
    d.path = o.Get<std::string>("path");
    d.num_classes = o.Get<std::size_t>("num_classes", 0);
    Check(!d.path.empty(), "dataset.path", "must not be empty");
  } else {
    throw Error(ErrorCode::kConfig, "dataset.kind: unknown dataset kind '" + kind + "'");
  }
  d.geometry = GeometryFromJson(o);
  if (d.geometry && d.kind == DatasetConfig::Kind::kSynthetic) {
    Check(d.geometry->rows * d.geometry->cols == d.input_dim, "dataset.geometry",
          "rows*cols must equal input_dim");
  }
  o.Finish();
  return d;
}

inline PartitionConfig PartitionFromJson(const Json& j) {
  StrictObject o(j, "partition");
  PartitionConfig p;
  const auto kind = o.Get<std::string>("kind", "iid");
  if (kind == "dirichlet") {
    p.dirichlet = true;
    const Json& beta = o.Raw("beta");
    if (beta.is_string()) {
      Check(beta.get<std::string>() == "inf", "partition.beta", "must be a number or \"inf\"");
    } else {
      Check(beta.is_number() && beta.get<double>() > 0.0, "partition.beta", "must be > 0");
      p.beta = beta.get<double>();
    }
  } else {
    Check(kind == "iid", "partition.kind", "must be \"iid\" or \"dirichlet\"");
  }
  p.num_clients = o.Get<std::size_t>("num_clients", p.num_clients);
  p.per_client = o.Get<std::size_t>("per_client", p.per_client);
  p.holdout = o.Get<std::size_t>("holdout", p.holdout);
  try {
    p.nonmember_source =
        data::ParseNonmemberSource(o.Get<std::string>("nonmember_source", "holdout"));
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("partition.nonmember_source: ") + e.message());
  }
  p.holdout_fraction = o.Get<double>("holdout_fraction", p.holdout_fraction);
  p.others_fraction = o.Get<double>("others_fraction", p.others_fraction);
  o.Finish();
  Check(p.num_clients >= 3, "partition.num_clients", "FedMIA needs at least 3 clients");
  Check(p.per_client >= 1, "partition.per_client", "must be >= 1");
  Check(p.holdout >= 1, "partition.holdout", "must be >= 1 (non-members and test accuracy)");
  Check(p.holdout_fraction > 0.0 && p.holdout_fraction <= 1.0, "partition.holdout_fraction",
        "must lie in (0, 1]");
  Check(p.others_fraction >= 0.0 && p.others_fraction <= 1.0, "partition.others_fraction",
        "must lie in [0, 1]");
  return p;
}

inline ModelConfig ModelFromJson(const Json& j) {
  StrictObject o(j, "model");
  ModelConfig m;
  try {
    m.kind = model::ParseModelKind(o.Get<std::string>("kind", "mlp"));
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("model.kind: ") + e.message());
  }
  m.hidden_dim = o.Get<std::size_t>("hidden_dim", m.kind == model::ModelKind::kMlp ? 32 : 0);
  m.init_std = o.Get<double>("init_std", m.init_std);
  o.Finish();
  if (m.kind == model::ModelKind::kMlp) {
    Check(m.hidden_dim >= 1, "model.hidden_dim", "must be >= 1 for mlp");
  } else {
    Check(m.hidden_dim == 0, "model.hidden_dim", "must be 0 for linear_softmax");
  }
  Check(m.init_std >= 0.0 && std::isfinite(m.init_std), "model.init_std", "must be >= 0");
  return m;
}

inline fedsim::FedConfig FederationFromJson(const Json& j) {
  StrictObject o(j, "federation");
  fedsim::FedConfig f;
  f.rounds = o.Get<std::size_t>("rounds", f.rounds);
  f.local_epochs = o.Get<int>("local_epochs", f.local_epochs);
  f.lr = o.Get<double>("lr", f.lr);
  f.lr_decay = o.Get<double>("lr_decay", f.lr_decay);
  f.batch_size = o.Get<std::size_t>("batch_size", f.batch_size);
  if (o.Has("defense")) f.defense = DefenseFromJson(o.Raw("defense"), "federation.defense");
  o.Finish();
  f.num_clients = 3;  // placeholder for validation; the partition block decides
  try {
    f.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, std::string("federation: ") + e.message());
  }
  return f;
}

inline AttackConfig AttackFromJson(const Json& j, const std::string& path = "attack") {
  StrictObject o(j, path);
  AttackConfig a;
  if (o.Has("methods")) {
    a.methods.clear();
    for (const auto& name : GetList<std::string>(o, "methods")) {
      try {
        a.methods.push_back(attack::ParseMethod(name));
      } catch (const Error& e) {
        throw Error(ErrorCode::kConfig, path + ".methods: " + e.message());
      }
    }
    Check(!a.methods.empty(), path + ".methods", "must not be empty");
    for (std::size_t i = 0; i < a.methods.size(); ++i) {
      for (std::size_t k = 0; k < i; ++k) {
        Check(a.methods[i] != a.methods[k], path + ".methods",
              "duplicate method " + attack::MethodName(a.methods[i]));
      }
    }
  }
  if (o.Has("deltas")) a.deltas = GetList<double>(o, "deltas");
  a.fpr_cap = o.Get<double>("fpr_cap", a.fpr_cap);
  a.target_client = o.Get<std::size_t>("target_client", a.target_client);
  a.targets_per_class = o.Get<std::size_t>("targets_per_class", a.targets_per_class);
  a.options.sigma_floor_scale = o.Get<double>("sigma_floor_scale", a.options.sigma_floor_scale);
  a.options.leave_one_out_filter =
      o.Get<bool>("leave_one_out_filter", a.options.leave_one_out_filter);
  a.round_curves = o.Get<bool>("round_curves", a.round_curves);
  o.Finish();
  Check(a.fpr_cap >= 0.0 && a.fpr_cap < 1.0, path + ".fpr_cap", "must lie in [0, 1)");
  Check(a.targets_per_class >= 1, path + ".targets_per_class", "must be >= 1");
  Check(a.options.sigma_floor_scale > 0.0, path + ".sigma_floor_scale", "must be > 0");
  for (double d : a.deltas) Check(std::isfinite(d), path + ".deltas", "must be finite");
  return a;
}

inline SweepConfig SweepFromJson(const Json& j, fedsim::DefenseKind kind) {
  StrictObject o(j, "sweep");
  SweepConfig s;
  s.param = o.Get<std::string>("param");
  s.values = GetList<double>(o, "values");
  o.Finish();
  const auto allowed = SweepableParams(kind);
  Check(std::find(allowed.begin(), allowed.end(), s.param) != allowed.end(), "sweep.param",
        "'" + s.param + "' is not a parameter of defense '" + fedsim::DefenseKindName(kind) + "'");
  Check(!s.values.empty(), "sweep.values", "must not be empty");
  return s;
}

}  // namespace internal

inline ExperimentConfig ConfigFromJson(const Json& j) {
  StrictObject o(j, "");
  const int version = o.Get<int>("schema_version");
  Require(version == kSchemaVersion, ErrorCode::kConfig,
          "schema_version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kSchemaVersion) + ")");
  ExperimentConfig c;
  c.name = o.Get<std::string>("name", c.name);
  internal::Check(!c.name.empty() && c.name.find('/') == std::string::npos, "name",
                  "must be a non-empty file name");
  c.dataset = internal::DatasetFromJson(o.Raw("dataset"));
  if (o.Has("partition")) c.partition = internal::PartitionFromJson(o.Raw("partition"));
  if (o.Has("model")) c.model = internal::ModelFromJson(o.Raw("model"));
  if (o.Has("federation")) c.federation = internal::FederationFromJson(o.Raw("federation"));
  c.federation.num_clients = c.partition.num_clients;
  if (o.Has("attack")) c.attack = internal::AttackFromJson(o.Raw("attack"));
  if (o.Has("sweep") && !o.Raw("sweep").is_null()) {
    c.sweep = internal::SweepFromJson(o.Raw("sweep"), c.federation.defense.kind);
  }
  if (o.Has("seeds")) c.seeds = internal::GetList<std::uint64_t>(o, "seeds");
  internal::Check(!c.seeds.empty(), "seeds", "must not be empty");
  c.save_traces = o.Get<bool>("save_traces", c.save_traces);
  o.Finish();

  internal::Check(c.attack.target_client < c.partition.num_clients, "attack.target_client",
                  "must be < partition.num_clients");
  for (const auto& d : DefensePoints(c)) {
    try {
      d.Validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, std::string("sweep: ") + e.message());
    }
  }
  return c;
}

inline ExperimentConfig ParseConfig(const std::string& text, const std::string& origin) {
  const Json j = ParseJson(text, origin);
  try {
    return ConfigFromJson(j);
  } catch (const Error& e) {
    throw Error(e.code() == ErrorCode::kParse ? ErrorCode::kParse : ErrorCode::kConfig,
                origin + ": " + e.message());
  }
}

// Reads a config file; a relative CSV dataset path becomes relative to the
// file's directory.
inline ExperimentConfig LoadConfig(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadFile(path.string());
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.message());
  }
  auto c = ParseConfig(text, path.string());
  if (c.dataset.kind == DatasetConfig::Kind::kCsv && std::filesystem::path(c.dataset.path).is_relative()) {
    c.dataset.path = (path.parent_path() / c.dataset.path).lexically_normal().string();
  }
  return c;
}

// --- serialization ---------------------------------------------------------

inline Json ToJson(const AttackConfig& a) {
  Json methods = Json::array();
  for (auto m : a.methods) methods.push_back(attack::MethodName(m));
  return Json{{"methods", methods},
              {"deltas", a.deltas},
              {"fpr_cap", a.fpr_cap},
              {"target_client", a.target_client},
              {"targets_per_class", a.targets_per_class},
              {"sigma_floor_scale", a.options.sigma_floor_scale},
              {"leave_one_out_filter", a.options.leave_one_out_filter},
              {"round_curves", a.round_curves}};
}

inline Json ToJson(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["name"] = c.name;

  Json ds;
  if (c.dataset.kind == DatasetConfig::Kind::kSynthetic) {
    ds["kind"] = "synthetic";
    ds["num_classes"] = c.dataset.num_classes;
    ds["input_dim"] = c.dataset.input_dim;
    ds["per_class"] = c.dataset.per_class;
    ds["class_sep"] = c.dataset.class_sep;
  } else {
    ds["kind"] = "csv";
    ds["path"] = c.dataset.path;
    ds["num_classes"] = c.dataset.num_classes;
  }
  ds["geometry"] = c.dataset.geometry
                       ? Json{{"rows", c.dataset.geometry->rows}, {"cols", c.dataset.geometry->cols}}
                       : Json(nullptr);
  j["dataset"] = ds;

  Json p;
  p["kind"] = c.partition.dirichlet ? "dirichlet" : "iid";
  if (c.partition.dirichlet) {
    p["beta"] = std::isinf(c.partition.beta) ? Json("inf") : Json(c.partition.beta);
  }
  p["num_clients"] = c.partition.num_clients;
  p["per_client"] = c.partition.per_client;
  p["holdout"] = c.partition.holdout;
  p["nonmember_source"] = data::NonmemberSourceName(c.partition.nonmember_source);
  p["holdout_fraction"] = c.partition.holdout_fraction;
  p["others_fraction"] = c.partition.others_fraction;
  j["partition"] = p;

  j["model"] = Json{{"kind", model::ModelKindName(c.model.kind)},
                    {"hidden_dim", c.model.hidden_dim},
                    {"init_std", c.model.init_std}};

  j["federation"] = Json{{"rounds", c.federation.rounds},
                         {"local_epochs", c.federation.local_epochs},
                         {"lr", c.federation.lr},
                         {"lr_decay", c.federation.lr_decay},
                         {"batch_size", c.federation.batch_size},
                         {"defense", fedmia::ToJson(c.federation.defense)}};
  j["attack"] = ToJson(c.attack);
  j["sweep"] = c.sweep ? Json{{"param", c.sweep->param}, {"values", c.sweep->values}} : Json(nullptr);
  j["seeds"] = c.seeds;
  j["save_traces"] = c.save_traces;
  return j;
}

inline std::string Serialize(const ExperimentConfig& c) { return ToJson(c).dump(2) + "\n"; }

// Replay accepts either {"schema_version": 1, "attack": {...}} or a full
// experiment config, from which the attack block is taken.
inline AttackConfig LoadAttackConfig(const std::filesystem::path& path) {
  std::string text;
  try {
    text = ReadFile(path.string());
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, e.message());
  }
  const Json j = ParseJson(text, path.string());
  try {
    if (j.is_object() && j.contains("dataset")) return ConfigFromJson(j).attack;
    StrictObject o(j, "");
    const int version = o.Get<int>("schema_version");
    Require(version == kSchemaVersion, ErrorCode::kConfig,
            "schema_version " + std::to_string(version) + " is not supported");
    AttackConfig a = o.Has("attack") ? internal::AttackFromJson(o.Raw("attack")) : AttackConfig{};
    o.Finish();
    return a;
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.message());
  }
}

}  // namespace config
}  // namespace fedmia

#endif  // FEDMIA_CONFIG_HPP_
