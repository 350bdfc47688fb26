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

// On-disk update traces, so attacks can be replayed without retraining.
//
// A trace directory holds:
//   trace_meta.json   format tag, model spec, K, T, defense, caller metadata
//                     and {name, bytes, fnv1a64} for every data file
//   round_NNNN.bin    little-endian float64: lr_t, test_accuracy, w^t (P),
//                     then I_1^t ... I_K^t (P each)
//   final_model.bin   little-endian float64, P values
//   targets.csv       sample_id,is_member,label,f1,...,fd (optional)

#ifndef FEDMIA_TRACE_IO_HPP_
#define FEDMIA_TRACE_IO_HPP_

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fedmia/error.hpp"
#include "fedmia/fedsim.hpp"
#include "fedmia/model.hpp"
#include "fedmia/serialize.hpp"

namespace fedmia {
namespace trace_io {

inline constexpr const char* kFormatTag = "fedmia-trace";
inline constexpr int kFormatVersion = 1;

// A scored target sample with its ground-truth membership.
struct TargetRecord {
  std::size_t sample_id = 0;
  bool is_member = false;
  model::LabeledSample sample;

  bool operator==(const TargetRecord&) const = default;
};

namespace internal {

inline void AppendDoubles(std::string& out, std::span<const double> values) {
  static_assert(std::endian::native == std::endian::little,
                "trace files are little-endian; add byte swapping for this host");
  const std::size_t offset = out.size();
  out.resize(offset + values.size() * sizeof(double));
  std::memcpy(out.data() + offset, values.data(), values.size() * sizeof(double));
}

inline std::vector<double> ReadDoubles(const std::string& bytes) {
  std::vector<double> v(bytes.size() / sizeof(double));
  std::memcpy(v.data(), bytes.data(), v.size() * sizeof(double));
  return v;
}

inline std::string RoundFileName(std::size_t t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "round_%04zu.bin", t);
  return buf;
}

inline std::string TargetsCsv(std::span<const TargetRecord> targets) {
  std::string out;
  for (const auto& t : targets) {
    out += std::to_string(t.sample_id);
    out += t.is_member ? ",1," : ",0,";
    out += std::to_string(t.sample.label);
    for (double f : t.sample.features) {
      out += ',';
      out += FormatDouble(f);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<TargetRecord> ParseTargetsCsv(const std::string& text, const std::string& name) {
  std::vector<TargetRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<std::string> fields;
    while (std::getline(cells, cell, ',')) fields.push_back(cell);
    Require(fields.size() >= 4, ErrorCode::kIntegrity,
            name + ":" + std::to_string(line_no) + ": too few fields");
    TargetRecord r;
    try {
      r.sample_id = std::stoull(fields[0]);
      r.is_member = fields[1] == "1";
      r.sample.label = std::stoull(fields[2]);
      for (std::size_t i = 3; i < fields.size(); ++i) {
        r.sample.features.push_back(std::strtod(fields[i].c_str(), nullptr));
      }
    } catch (const std::exception&) {
      throw Error(ErrorCode::kIntegrity, name + ":" + std::to_string(line_no) + ": malformed row");
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace internal

// Writes the trace (and optional targets) into `dir`, creating it. `extra`
// is stored verbatim under "metadata" in trace_meta.json.
inline void WriteTrace(const std::filesystem::path& dir, const fedsim::UpdateTrace& trace,
                       std::span<const TargetRecord> targets = {}, const Json& extra = Json::object()) {
  trace.Validate();
  std::filesystem::create_directories(dir);
  Json files = Json::array();
  auto emit = [&](const std::string& name, const std::string& bytes) {
    WriteFile((dir / name).string(), bytes);
    files.push_back(Json{{"name", name}, {"bytes", bytes.size()}, {"fnv1a64", Hex64(Fnv1a64(bytes))}});
  };
  for (const auto& r : trace.rounds) {
    std::string bytes;
    const double head[2] = {r.lr_effective, r.test_accuracy};
    internal::AppendDoubles(bytes, head);
    internal::AppendDoubles(bytes, r.global_before);
    for (const auto& u : r.updates) internal::AppendDoubles(bytes, u);
    emit(internal::RoundFileName(r.round), bytes);
  }
  {
    std::string bytes;
    internal::AppendDoubles(bytes, trace.final_model);
    emit("final_model.bin", bytes);
  }
  if (!targets.empty()) emit("targets.csv", internal::TargetsCsv(targets));

  Json meta;
  meta["format"] = kFormatTag;
  meta["version"] = kFormatVersion;
  meta["model"] = ToJson(trace.spec);
  meta["num_clients"] = trace.num_clients;
  meta["rounds"] = trace.num_rounds();
  meta["param_count"] = trace.spec.ParamCount();
  meta["defense"] = ToJson(trace.defense);
  meta["metadata"] = extra;
  meta["files"] = files;
  WriteFile((dir / "trace_meta.json").string(), meta.dump(2) + "\n");
}

struct LoadedTrace {
  fedsim::UpdateTrace trace;
  std::vector<TargetRecord> targets;
  Json metadata;
};

namespace internal {

inline LoadedTrace ReadTraceUnchecked(const std::filesystem::path& dir) {
  const auto meta_path = dir / "trace_meta.json";
  Require(std::filesystem::exists(meta_path), ErrorCode::kIntegrity,
          "missing " + meta_path.string());
  Json meta;
  try {
    meta = Json::parse(ReadFile(meta_path.string()));
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kIntegrity, meta_path.string() + ": " + e.what());
  }
  Require(meta.value("format", "") == kFormatTag && meta.value("version", 0) == kFormatVersion,
          ErrorCode::kIntegrity, meta_path.string() + ": unsupported trace format");

  LoadedTrace out;
  auto& trace = out.trace;
  try {
    trace.spec = ModelSpecFromJson(meta.at("model"), "model");
    trace.num_clients = meta.at("num_clients").get<std::size_t>();
    trace.defense = DefenseFromJson(meta.at("defense"), "defense");
    out.metadata = meta.value("metadata", Json::object());
  } catch (const Error& e) {
    throw Error(ErrorCode::kIntegrity, meta_path.string() + ": " + e.message());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::kIntegrity, meta_path.string() + ": " + e.what());
  }
  const std::size_t rounds = meta.at("rounds").get<std::size_t>();
  const std::size_t dim = trace.spec.ParamCount();

  std::map<std::string, std::string> contents;
  for (const auto& f : meta.at("files")) {
    const std::string name = f.at("name").get<std::string>();
    const auto path = dir / name;
    Require(std::filesystem::exists(path), ErrorCode::kIntegrity, "missing trace file " + name);
    std::string bytes = ReadFile(path.string());
    Require(bytes.size() == f.at("bytes").get<std::size_t>(), ErrorCode::kIntegrity,
            "trace file " + name + " has " + std::to_string(bytes.size()) + " bytes, expected " +
                f.at("bytes").dump());
    Require(Hex64(Fnv1a64(bytes)) == f.at("fnv1a64").get<std::string>(), ErrorCode::kIntegrity,
            "trace file " + name + " checksum mismatch");
    contents.emplace(name, std::move(bytes));
  }

  const std::size_t round_len = 2 + dim * (trace.num_clients + 1);
  for (std::size_t t = 0; t < rounds; ++t) {
    const std::string name = internal::RoundFileName(t);
    auto it = contents.find(name);
    Require(it != contents.end(), ErrorCode::kIntegrity, "trace file " + name + " not listed");
    Require(it->second.size() == round_len * sizeof(double), ErrorCode::kIntegrity,
            "trace file " + name + " has the wrong length");
    const auto v = internal::ReadDoubles(it->second);
    fedsim::RoundRecord r;
    r.round = t;
    r.lr_effective = v[0];
    r.test_accuracy = v[1];
    auto cursor = v.begin() + 2;
    r.global_before.assign(cursor, cursor + static_cast<std::ptrdiff_t>(dim));
    cursor += static_cast<std::ptrdiff_t>(dim);
    for (std::size_t k = 0; k < trace.num_clients; ++k) {
      r.updates.emplace_back(cursor, cursor + static_cast<std::ptrdiff_t>(dim));
      cursor += static_cast<std::ptrdiff_t>(dim);
    }
    trace.rounds.push_back(std::move(r));
  }
  auto fm = contents.find("final_model.bin");
  Require(fm != contents.end() && fm->second.size() == dim * sizeof(double), ErrorCode::kIntegrity,
          "trace file final_model.bin missing or the wrong length");
  trace.final_model = internal::ReadDoubles(fm->second);
  if (auto tg = contents.find("targets.csv"); tg != contents.end()) {
    out.targets = internal::ParseTargetsCsv(tg->second, "targets.csv");
  }
  trace.Validate();
  return out;
}

}  // namespace internal

// Reads a trace directory, verifying sizes and checksums of every listed
// file. Any mismatch is an integrity error naming the file.
inline LoadedTrace ReadTrace(const std::filesystem::path& dir) {
  try {
    return internal::ReadTraceUnchecked(dir);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kIntegrity, (dir / "trace_meta.json").string() + ": " + e.what());
  }
}

}  // namespace trace_io
}  // namespace fedmia

#endif  // FEDMIA_TRACE_IO_HPP_
