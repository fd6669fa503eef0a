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

#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "uwe/ops.hpp"

namespace uwe::nn {

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Var<T>>>;

using InitRng = std::mt19937_64;

/// Uniform fan-in initialization: U(-b, b) with b = 1 / sqrt(fan_in).
template <typename T>
Tensor<T> fan_in_uniform(Shape shape, int fan_in, InitRng& rng) {
  const T bound = static_cast<T>(std::sqrt(1.0 / fan_in));
  return uniform_tensor<T>(shape, rng, -bound, bound);
}

/// Convolution layer holding its own weight and bias parameters.
template <typename T>
struct Conv {
  Var<T> weight;  // (C_out, C_in/groups, K, K)
  Var<T> bias;    // (1, C_out, 1, 1)
  int stride = 1;
  int pad = 0;
  int groups = 1;

  static Conv make(int cin, int cout, int k, int stride, int groups, InitRng& rng) {
    Conv c;
    const int cin_g = cin / groups;
    c.weight = Var<T>::param(fan_in_uniform<T>(Shape{cout, cin_g, k, k}, cin_g * k * k, rng));
    c.bias = Var<T>::param(Tensor<T>(Shape{1, cout, 1, 1}));
    c.stride = stride;
    c.pad = k / 2;
    c.groups = groups;
    return c;
  }

  Var<T> operator()(const Var<T>& x) const {
    return ops::conv2d(x, weight, bias, stride, pad, groups);
  }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".weight", weight);
    out.emplace_back(prefix + ".bias", bias);
  }
};

/// Depthwise 3x3 (optionally strided) followed by a pointwise 1x1 mix.
template <typename T>
struct SeparableConv {
  Conv<T> depthwise;
  Conv<T> pointwise;

  static SeparableConv make(int cin, int cout, int stride, InitRng& rng) {
    return {Conv<T>::make(cin, cin, 3, stride, cin, rng), Conv<T>::make(cin, cout, 1, 1, 1, rng)};
  }

  Var<T> operator()(const Var<T>& x) const { return pointwise(depthwise(x)); }

  void collect(const std::string& prefix, NamedParams<T>& out) const {
    depthwise.collect(prefix + ".dw", out);
    pointwise.collect(prefix + ".pw", out);
  }
};

template <typename T>
void zero_params(const NamedParams<T>& params) {
  for (const auto& [name, p] : params) const_cast<Var<T>&>(p).mutable_value().fill(T{0});
}

template <typename T>
std::size_t parameter_count(const NamedParams<T>& params) {
  std::size_t n = 0;
  for (const auto& [name, p] : params) n += p.value().size();
  return n;
}

}  // namespace uwe::nn
