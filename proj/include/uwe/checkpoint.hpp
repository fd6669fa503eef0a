// Copyright 2026 The uwe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Named-tensor container on disk: <dir>/manifest.json describes every
// tensor (name, shape, dtype, byte offset) next to free-form metadata, and
// <dir>/tensors.bin holds the raw little-endian values back to back.
// Directories are written under a temporary name and renamed into place.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uwe/errors.hpp"
#include "uwe/tensor.hpp"

namespace uwe {

inline constexpr int kCheckpointFormatVersion = 1;

template <typename T>
constexpr const char* dtype_name() {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  return sizeof(T) == 4 ? "f32" : "f64";
}

template <typename T>
struct NamedTensorFile {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor<T>>> tensors;

  const Tensor<T>* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }

  nlohmann::json manifest() const {
    nlohmann::json m;
    m["format_version"] = kCheckpointFormatVersion;
    m["metadata"] = metadata;
    nlohmann::json list = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, t] : tensors) {
      const Shape& s = t.shape();
      list.push_back({{"name", name},
                      {"shape", {s.n, s.c, s.h, s.w}},
                      {"dtype", dtype_name<T>()},
                      {"offset", offset}});
      offset += t.size() * sizeof(T);
    }
    m["tensors"] = list;
    return m;
  }

  void save(const std::filesystem::path& dir) const {
    namespace fs = std::filesystem;
    const fs::path tmp = dir.string() + ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    {
      std::ofstream mf(tmp / "manifest.json");
      mf << manifest().dump(2) << '\n';
      std::ofstream bin(tmp / "tensors.bin", std::ios::binary);
      for (const auto& [name, t] : tensors)
        bin.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.size() * sizeof(T)));
      if (!mf || !bin) throw DataError("failed writing checkpoint '" + tmp.string() + "'");
    }
    fs::remove_all(dir);
    fs::rename(tmp, dir);
  }

  static NamedTensorFile load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    std::ifstream mf(dir / "manifest.json");
    if (!mf) throw DataError("checkpoint manifest not found in '" + dir.string() + "'");
    nlohmann::json m;
    try {
      mf >> m;
    } catch (const nlohmann::json::exception& e) {
      throw DataError("corrupt checkpoint manifest in '" + dir.string() + "': " + e.what());
    }
    if (m.value("format_version", -1) != kCheckpointFormatVersion)
      throw DataError("unsupported checkpoint format in '" + dir.string() + "'");
    std::ifstream bin(dir / "tensors.bin", std::ios::binary);
    if (!bin) throw DataError("checkpoint tensors not found in '" + dir.string() + "'");
    NamedTensorFile f;
    f.metadata = m.at("metadata");
    for (const auto& e : m.at("tensors")) {
      if (e.at("dtype").get<std::string>() != dtype_name<T>())
        throw DataError("checkpoint dtype mismatch for '" + e.at("name").get<std::string>() + "'");
      const auto dims = e.at("shape").get<std::vector<int>>();
      if (dims.size() != 4) throw DataError("checkpoint tensor with bad rank");
      Tensor<T> t(Shape{dims[0], dims[1], dims[2], dims[3]});
      bin.seekg(static_cast<std::streamoff>(e.at("offset").get<std::uint64_t>()));
      bin.read(reinterpret_cast<char*>(t.data()),
               static_cast<std::streamsize>(t.size() * sizeof(T)));
      if (!bin) throw DataError("truncated checkpoint tensor '" + e.at("name").get<std::string>() + "'");
      f.tensors.emplace_back(e.at("name").get<std::string>(), std::move(t));
    }
    return f;
  }
};

}  // namespace uwe
