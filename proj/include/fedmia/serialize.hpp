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

// JSON conversion for configuration value types, a strict object reader that
// rejects unknown keys, and small deterministic text helpers.

#ifndef FEDMIA_SERIALIZE_HPP_
#define FEDMIA_SERIALIZE_HPP_

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "fedmia/error.hpp"
#include "fedmia/fedsim.hpp"
#include "fedmia/model.hpp"
#include "json.hpp"

namespace fedmia {

using Json = nlohmann::ordered_json;

// Reads fields of one JSON object, tracking which keys were consumed.
// Finish() fails on any key that was never asked for, naming its full path.
class StrictObject {
 public:
  StrictObject(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    Require(obj_.is_object(), ErrorCode::kConfig, path_ + " must be an object");
  }

  bool Has(const std::string& key) const { return obj_.contains(key); }

  std::string PathOf(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const Json& Raw(const std::string& key) {
    Require(obj_.contains(key), ErrorCode::kConfig, "missing required field " + PathOf(key));
    seen_.insert(key);
    return obj_.at(key);
  }

  template <typename T>
  T Get(const std::string& key) {
    const Json& v = Raw(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        Require(v.is_boolean(), ErrorCode::kConfig, "expected a boolean");
      } else if constexpr (std::is_arithmetic_v<T>) {
        Require(v.is_number(), ErrorCode::kConfig, "expected a number");
        if constexpr (std::is_integral_v<T>) {
          Require(v.is_number_integer(), ErrorCode::kConfig, "expected an integer");
          if constexpr (std::is_unsigned_v<T>) {
            Require(v.is_number_unsigned() || v.get<std::int64_t>() >= 0, ErrorCode::kConfig,
                    "expected a non-negative integer");
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        Require(v.is_string(), ErrorCode::kConfig, "expected a string");
      }
      return v.get<T>();
    } catch (const Error& e) {
      throw Error(ErrorCode::kConfig, PathOf(key) + ": " + e.message());
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kConfig, PathOf(key) + ": " + e.what());
    }
  }

  template <typename T>
  T Get(const std::string& key, T fallback) {
    return Has(key) ? Get<T>(key) : fallback;
  }

  void Finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      Require(seen_.count(it.key()) > 0, ErrorCode::kConfig, "unknown field " + PathOf(it.key()));
    }
  }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

// Shortest round-trip decimal for a double; stable across runs.
inline std::string FormatDouble(double v) {
  char buf[40];
  for (int precision = 15; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::uint64_t Fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string Hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Require(static_cast<bool>(in), ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Require(static_cast<bool>(out), ErrorCode::kIo, "cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  Require(static_cast<bool>(out), ErrorCode::kIo, "write failed for '" + path + "'");
}

inline Json ParseJson(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kParse, origin + ": " + e.what());
  }
}

// --- value types ---------------------------------------------------------

inline Json ToJson(const model::ModelSpec& spec) {
  return Json{{"kind", model::ModelKindName(spec.kind)},
              {"input_dim", spec.input_dim},
              {"hidden_dim", spec.hidden_dim},
              {"num_classes", spec.num_classes},
              {"init_std", spec.init_std}};
}

inline model::ModelSpec ModelSpecFromJson(const Json& j, const std::string& path) {
  StrictObject o(j, path);
  model::ModelSpec spec;
  spec.kind = model::ParseModelKind(o.Get<std::string>("kind"));
  spec.input_dim = o.Get<std::size_t>("input_dim");
  spec.hidden_dim = o.Get<std::size_t>("hidden_dim", 0);
  spec.num_classes = o.Get<std::size_t>("num_classes");
  spec.init_std = o.Get<double>("init_std", 0.0);
  o.Finish();
  return spec;
}

inline Json ToJson(const fedsim::DefenseConfig& d) {
  using fedsim::DefenseKind;
  Json j{{"kind", fedsim::DefenseKindName(d.kind)}};
  switch (d.kind) {
    case DefenseKind::kPerturb:
      j["clip_norm"] = d.clip_norm;
      j["noise_std"] = d.noise_std;
      break;
    case DefenseKind::kQuantize:
      j["bits"] = d.bits;
      break;
    case DefenseKind::kSparsify:
      j["rate"] = d.rate;
      break;
    case DefenseKind::kMixup:
      j["alpha"] = d.mixup_alpha;
      break;
    default:
      break;
  }
  if (d.UsesAugment()) {
    j["flip_h"] = d.augment.flip_h;
    j["shift"] = d.augment.shift;
    j["aug_noise_std"] = d.augment.noise_std;
  }
  if (d.UsesSampling()) j["portion"] = d.portion;
  return j;
}

inline fedsim::DefenseConfig DefenseFromJson(const Json& j, const std::string& path) {
  using fedsim::DefenseKind;
  StrictObject o(j, path);
  fedsim::DefenseConfig d;
  d.kind = fedsim::ParseDefenseKind(o.Get<std::string>("kind"));
  switch (d.kind) {
    case DefenseKind::kPerturb:
      d.clip_norm = o.Get<double>("clip_norm", d.clip_norm);
      d.noise_std = o.Get<double>("noise_std", d.noise_std);
      break;
    case DefenseKind::kQuantize:
      d.bits = o.Get<int>("bits", d.bits);
      break;
    case DefenseKind::kSparsify:
      d.rate = o.Get<double>("rate", d.rate);
      break;
    case DefenseKind::kMixup:
      d.mixup_alpha = o.Get<double>("alpha", d.mixup_alpha);
      break;
    default:
      break;
  }
  if (d.UsesAugment()) {
    d.augment.flip_h = o.Get<bool>("flip_h", true);
    d.augment.shift = o.Get<bool>("shift", true);
    d.augment.noise_std = o.Get<double>("aug_noise_std", 0.0);
  }
  if (d.UsesSampling()) d.portion = o.Get<double>("portion", d.portion);
  o.Finish();
  try {
    d.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfig, path + ": " + e.message());
  }
  return d;
}

}  // namespace fedmia

#endif  // FEDMIA_SERIALIZE_HPP_
