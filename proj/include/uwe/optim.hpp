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

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "uwe/nn.hpp"

namespace uwe {

/// Cosine annealing from lr_max at step 0 to lr_min at total_steps. Steps
/// outside [0, total_steps] are clamped with a warning.
inline double cosine_lr(long step, long total_steps, double lr_max, double lr_min) {
  if (total_steps <= 0) throw InvalidInput("cosine_lr: total_steps must be positive");
  if (step < 0 || step > total_steps) {
    std::cerr << "warning: cosine_lr step " << step << " outside [0, " << total_steps
              << "], clamping\n";
    step = std::clamp(step, 0L, total_steps);
  }
  const double t = static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t));
}

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over a fixed list of named parameters. Moments are kept in the
/// parameter precision.
template <typename T>
class Adam {
 public:
  Adam(nn::NamedParams<T> params, AdamOptions opt = {}) : params_(std::move(params)), opt_(opt) {
    for (const auto& [name, p] : params_) {
      m_.emplace_back(p.shape());
      v_.emplace_back(p.shape());
    }
  }

  const nn::NamedParams<T>& params() const { return params_; }
  long steps() const { return t_; }
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  void set_steps(long t) { t_ = t; }

  void zero_grad() {
    for (auto& [name, p] : params_) p.zero_grad();
  }

  /// L2 norm over all parameter gradients.
  double grad_norm() const {
    double s = 0.0;
    for (const auto& [name, p] : params_)
      for (T g : p.grad().vec()) s += double(g) * double(g);
    return std::sqrt(s);
  }

  /// Rescales gradients so their global norm is at most max_norm. Returns
  /// the norm before clipping.
  double clip_grad_norm(double max_norm) {
    const double norm = grad_norm();
    const double coef = max_norm / (norm + 1e-6);
    if (coef < 1.0)
      for (auto& [name, p] : params_)
        for (T& g : p.mutable_grad().vec()) g = static_cast<T>(g * coef);
    return norm;
  }

  void step(double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params_.size(); ++k) {
      Var<T>& p = params_[k].second;
      if (p.grad().empty()) continue;
      T* w = p.mutable_value().data();
      const T* g = p.grad().data();
      T* m = m_[k].data();
      T* v = v_[k].data();
      for (std::size_t i = 0; i < p.value().size(); ++i) {
        m[i] = static_cast<T>(opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g[i]);
        v[i] = static_cast<T>(opt_.beta2 * v[i] + (1.0 - opt_.beta2) * double(g[i]) * g[i]);
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] = static_cast<T>(w[i] - lr * mhat / (std::sqrt(vhat) + opt_.eps));
      }
    }
  }

 private:
  nn::NamedParams<T> params_;
  AdamOptions opt_;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
  long t_ = 0;
};

}  // namespace uwe
