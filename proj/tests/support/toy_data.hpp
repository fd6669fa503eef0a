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

// Synthetic paired data for tests: smooth textured references and a
// colour-cast, contrast-reduced copy playing the degraded input.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "uwe/data.hpp"
#include "uwe/image_io.hpp"
#include "uwe/tensor.hpp"

namespace uwe::testing {

/// One reference image: a sum of three random low-frequency gratings per
/// channel, mapped into roughly [0.1, 0.6].
template <typename T>
Tensor<T> toy_label(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor<T> out(Shape{1, 3, h, w});
  for (int c = 0; c < 3; ++c) {
    double fy[3], fx[3], ph[3];
    for (int k = 0; k < 3; ++k) {
      fy[k] = 1.0 + std::floor(u(rng) * 3.0);
      fx[k] = 1.0 + std::floor(u(rng) * 3.0);
      ph[k] = 2.0 * std::numbers::pi * u(rng);
    }
    const double base = 0.3 + 0.1 * u(rng);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double v = 0.0;
        for (int k = 0; k < 3; ++k)
          v += std::sin(2.0 * std::numbers::pi * (fy[k] * y / h + fx[k] * x / w) + ph[k]);
        out.at(0, c, y, x) = static_cast<T>(base + 0.08 * v);
      }
  }
  return out;
}

/// Attenuation towards a blue-green veiling light: in = gt*t + A*(1-t).
template <typename T>
Tensor<T> toy_degrade(const Tensor<T>& label) {
  constexpr double t[3] = {0.45, 0.8, 0.7};
  constexpr double a[3] = {0.1, 0.45, 0.55};
  Tensor<T> out(label.shape());
  const Shape& s = label.shape();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
          out.at(n, c, y, x) = static_cast<T>(label.at(n, c, y, x) * t[c] + a[c] * (1.0 - t[c]));
  return out;
}

template <typename T>
std::vector<PairedSample<T>> toy_pairs(int count, int h, int w, std::uint64_t seed = 1) {
  std::vector<PairedSample<T>> out;
  for (int i = 0; i < count; ++i) {
    Tensor<T> gt = toy_label<T>(h, w, seed * 1000 + static_cast<std::uint64_t>(i));
    Tensor<T> in = toy_degrade(gt);
    out.push_back({std::move(in), std::move(gt), "toy" + std::to_string(i)});
  }
  return out;
}

/// Writes pairs as 8-bit PNGs into <root>/input and <root>/label.
template <typename T>
void write_toy_dataset(const std::filesystem::path& root, const std::vector<PairedSample<T>>& pairs) {
  for (const auto& p : pairs) {
    io::write_image(root / "input" / (p.id + ".png"), p.input);
    io::write_image(root / "label" / (p.id + ".png"), p.label);
  }
}

/// Per-test scratch directory under the system temp dir, removed on exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("uwe_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace uwe::testing
