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
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "uwe/autodiff.hpp"
#include "uwe/errors.hpp"

namespace uwe {

struct GradCheckReport {
  std::string op_name;
  double max_rel_error = 0.0;
  bool passed = false;
  std::string failure;  // set when the check could not be evaluated
};

inline constexpr double kGradCheckTolerance = 1e-3;

/// Compares the analytic gradient of sum(w * f(x)), for a fixed random
/// weighting w, against central finite differences in every input entry.
/// The relative error of an entry is |a - b| / max(|a|, |b|, 1e-8).
template <typename T>
GradCheckReport grad_check(const std::string& op_name,
                           const std::function<Var<T>(const Var<T>&)>& op,
                           const Tensor<T>& input, double eps = 1e-6,
                           unsigned projection_seed = 7) {
  GradCheckReport report;
  report.op_name = op_name;
  if (eps < 1e-6 || eps > 1e-2) throw InvalidInput("grad_check: eps must lie in [1e-6, 1e-2]");
  if (!input.all_finite()) throw InvalidInput("grad_check: non-finite input");

  // Project a tensor output onto a scalar with fixed random weights so that
  // every output entry contributes.
  std::mt19937_64 rng(projection_seed);
  Tensor<T> weights;
  auto scalar_of = [&](const Tensor<T>& y) {
    if (weights.empty()) weights = uniform_tensor<T>(y.shape(), rng, T{0.5}, T{1.5});
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += double(weights[i]) * double(y[i]);
    return s;
  };

  Var<T> x = Var<T>::param(input);
  Var<T> y = op(x);
  scalar_of(y.value());  // draws the weights
  backward(y, &weights);
  const Tensor<T> analytic = x.grad().empty() ? Tensor<T>(input.shape()) : x.grad();
  if (!analytic.all_finite()) {
    report.failure = "non-finite analytic gradient";
    report.max_rel_error = std::numeric_limits<double>::infinity();
    return report;
  }

  // Outputs are differenced entry by entry before projection, and divided by
  // the step actually taken after rounding, which keeps linear ops exact.
  Tensor<T> probe = input;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const T orig = probe[i];
    probe[i] = static_cast<T>(orig + eps);
    const T hi = probe[i];
    const Tensor<T> up = op(Var<T>::constant(probe)).value();
    probe[i] = static_cast<T>(orig - eps);
    const T lo = probe[i];
    const Tensor<T> down = op(Var<T>::constant(probe)).value();
    probe[i] = orig;
    double diff = 0.0;
    for (std::size_t j = 0; j < up.size(); ++j)
      diff += double(weights[j]) * (double(up[j]) - double(down[j]));
    const double numeric = diff / (double(hi) - double(lo));
    const double a = analytic[i];
    if (!std::isfinite(numeric)) {
      report.failure = "non-finite numeric gradient";
      report.max_rel_error = std::numeric_limits<double>::infinity();
      return report;
    }
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  report.max_rel_error = worst;
  report.passed = worst < kGradCheckTolerance;
  return report;
}

}  // namespace uwe
