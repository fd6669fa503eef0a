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

// The full two-stage enhancer: stage-1 network followed by the corrector.

#include <memory>

#include "uwe/dsffnet.hpp"
#include "uwe/gac.hpp"
#include "uwe/losses.hpp"

namespace uwe {

struct ModelConfig {
  DsffnetConfig net{};
  GacOptions gac{};
};

template <typename T>
class Enhancer {
 public:
  explicit Enhancer(const ModelConfig& cfg = {})
      : cfg_(cfg), net_(cfg.net), corrector_(CorrectorParams<T>::make(cfg.net.seed + 1)) {}

  const ModelConfig& config() const { return cfg_; }
  Dsffnet<T>& net() { return net_; }
  const Dsffnet<T>& net() const { return net_; }
  CorrectorParams<T>& corrector() { return corrector_; }
  const CorrectorParams<T>& corrector() const { return corrector_; }

  nn::NamedParams<T> parameters() const {
    auto out = net_.parameters();
    for (auto& p : corrector_.parameters()) out.push_back(std::move(p));
    return out;
  }

  double alpha() const { return corrector_.alpha.item(); }

  /// Inference: (N,3,H,W) with H, W divisible by 4 -> enhanced image in [0,1].
  Tensor<T> enhance(const Tensor<T>& x_in) const {
    const Var<T> x1 = net_(Var<T>::constant(x_in));
    const auto r = gac_forward<T>(x1, std::nullopt, corrector_, false, cfg_.gac);
    return clamp01(r.x_out2.value());
  }

  /// Stage-1 output and the refined gradient map of it, for inspection.
  std::pair<Tensor<T>, Tensor<T>> stage1_and_gradient(const Tensor<T>& x_in) const {
    const Var<T> x1 = net_(Var<T>::constant(x_in));
    return {x1.value(), refine_gradient(sobel_gradient(x1), corrector_).value()};
  }

 private:
  ModelConfig cfg_;
  Dsffnet<T> net_;
  CorrectorParams<T> corrector_;
};

}  // namespace uwe
