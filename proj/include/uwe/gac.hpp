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

// Stage-2 gradient-aware corrector: Sobel gradient maps, their learned
// refinement, the curriculum that blends predicted and ground-truth maps,
// and the alpha-weighted correction of the stage-1 output.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "uwe/nn.hpp"
#include "uwe/ops.hpp"

namespace uwe {

/// Largest Sobel magnitude attainable on an image with values in [0,1].
inline constexpr double kSobelMax = 4.0 * std::numbers::sqrt2;

/// Per-channel normalized Sobel magnitude with reflect padding.
template <typename T>
Var<T> sobel_gradient(const Var<T>& image) {
  return ops::affine(ops::magnitude(ops::sobel_xy(ops::pad_reflect(image, 1))), 1.0 / kSobelMax);
}

template <typename T>
Tensor<T> sobel_gradient(const Tensor<T>& image) {
  return sobel_gradient(Var<T>::constant(image)).value();
}

/// Refinement convolutions and the correction weight alpha.
template <typename T>
struct CorrectorParams {
  nn::Conv<T> refine1;  // 3 -> 3, 3x3
  nn::Conv<T> refine2;  // 3 -> 3, 3x3
  Var<T> alpha;         // (1,1,1,1)

  static constexpr double kInitialAlpha = 0.5;

  static CorrectorParams make(std::uint64_t seed, int channels = 3) {
    nn::InitRng rng(seed);
    CorrectorParams p;
    p.refine1 = nn::Conv<T>::make(channels, channels, 3, 1, 1, rng);
    p.refine2 = nn::Conv<T>::make(channels, channels, 3, 1, 1, rng);
    p.alpha = Var<T>::param(Tensor<T>::scalar(static_cast<T>(kInitialAlpha)));
    return p;
  }

  nn::NamedParams<T> parameters() const {
    nn::NamedParams<T> out;
    refine1.collect("gac.refine1", out);
    refine2.collect("gac.refine2", out);
    out.emplace_back("gac.alpha", alpha);
    return out;
  }
};

/// Sigmoid(Conv(GeLU(Conv(raw)))).
template <typename T>
Var<T> refine_gradient(const Var<T>& raw, const CorrectorParams<T>& params) {
  Var<T> g = ops::sigmoid(params.refine2(ops::gelu(params.refine1(raw))));
  if (!g.value().all_finite()) throw NumericError("refine_gradient: non-finite output");
  return g;
}

enum class LambdaFormula {
  continuous,     // (0.1 - L_g) / 0.05 on the middle branch
  paper_literal,  // (L_g - 0.1) / 0.05 on the middle branch, then clamped
};

struct CurricularState {
  double loss_g = 0.0;
  double lambda = 1.0;
  double hi_threshold = 0.1;
  double lo_threshold = 0.05;
};

/// Curriculum weight of the predicted gradient map given the current
/// gradient loss: 0 above the high threshold, 1 at or below the low one.
inline double curricular_lambda(double loss_g, LambdaFormula formula = LambdaFormula::continuous,
                                double hi = 0.1, double lo = 0.05) {
  if (!(loss_g >= 0.0)) throw InvalidInput("curricular_lambda: loss_g must be >= 0");
  double lambda;
  if (loss_g > hi)
    lambda = 0.0;
  else if (loss_g <= lo)
    lambda = 1.0;
  else if (formula == LambdaFormula::continuous)
    lambda = (hi - loss_g) / (hi - lo);
  else
    lambda = (loss_g - hi) / (hi - lo);
  return std::clamp(lambda, 0.0, 1.0);
}

/// lambda * g_s1 + (1 - lambda) * g_gt.
template <typename T>
Var<T> blend_gradient(const Var<T>& g_s1, const Var<T>& g_gt, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidInput("blend_gradient: lambda outside [0,1]");
  require_same_shape(g_s1.value(), g_gt.value(), "blend_gradient");
  return ops::add(ops::affine(g_s1, lambda), ops::affine(g_gt, 1.0 - lambda));
}

/// (1 - alpha) * x_out1 + alpha * g * x_out1, unclamped.
template <typename T>
Var<T> apply_corrector(const Var<T>& x_out1, const Var<T>& g, const Var<T>& alpha) {
  require_same_shape(x_out1.value(), g.value(), "apply_corrector");
  return ops::add(ops::scale_by(x_out1, ops::affine(alpha, -1.0, 1.0)),
                  ops::scale_by(ops::mul(g, x_out1), alpha));
}

template <typename T>
Tensor<T> clamp01(Tensor<T> t) {
  for (auto& v : t.vec()) v = std::clamp(v, T{0}, T{1});
  return t;
}

struct GacOptions {
  bool curricular = true;
  LambdaFormula formula = LambdaFormula::continuous;
};

template <typename T>
struct GacResult {
  Var<T> x_out2;  // unclamped; clamp with clamp01 for display
  Var<T> g_s1;
  Var<T> g;
  Var<T> loss_g;  // undefined in inference mode
  CurricularState state;
};

/// Training: needs the ground-truth gradient map and blends it in according
/// to the curriculum. Inference: the refined map of x_out1 is used as is.
template <typename T>
GacResult<T> gac_forward(const Var<T>& x_out1, const std::optional<Var<T>>& gt_gradient,
                         const CorrectorParams<T>& params, bool training,
                         const GacOptions& options = {}) {
  if (training && !gt_gradient)
    throw InvalidInput("gac_forward: training mode requires the ground-truth gradient map");
  GacResult<T> r;
  r.g_s1 = refine_gradient(sobel_gradient(x_out1), params);
  if (training) {
    r.loss_g = ops::rms(ops::sub(r.g_s1, *gt_gradient));
    r.state.loss_g = r.loss_g.item();
    r.state.lambda = options.curricular ? curricular_lambda(r.state.loss_g, options.formula) : 1.0;
    r.g = blend_gradient(r.g_s1, *gt_gradient, r.state.lambda);
  } else {
    r.state.lambda = 1.0;
    r.g = r.g_s1;
  }
  r.x_out2 = apply_corrector(x_out1, r.g, params.alpha);
  return r;
}

}  // namespace uwe
