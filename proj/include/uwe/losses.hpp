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
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "uwe/nn.hpp"
#include "uwe/ops.hpp"

namespace uwe {

struct LossWeights {
  double gamma1 = 1.0;  // stage-2 loss
  double gamma2 = 0.1;  // amplitude loss
  double gamma3 = 0.5;  // gradient loss
};

/// Mean absolute difference between the Fourier amplitudes of two images,
/// over all bins and channels.
template <typename T>
Var<T> amplitude_loss(const Var<T>& x_out1, const Var<T>& x_gt) {
  require_same_shape(x_out1.value(), x_gt.value(), "amplitude_loss");
  return ops::mean_abs(
      ops::sub(ops::magnitude(ops::fft2(x_out1)), ops::magnitude(ops::fft2(x_gt))));
}

/// Root-mean-square difference of two gradient maps.
template <typename T>
Var<T> gradient_loss(const Var<T>& g_s1, const Var<T>& g_gt) {
  require_same_shape(g_s1.value(), g_gt.value(), "gradient_loss");
  return ops::rms(ops::sub(g_s1, g_gt));
}

/// Frozen feature map used by the perceptual term. Gradients reach the input
/// but the extractor's own weights never change.
template <typename T>
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::vector<Var<T>> features(const Var<T>& image) const = 0;
  virtual std::vector<std::string> tap_names() const = 0;
};

/// Degenerate extractor whose single tap is the image itself.
template <typename T>
class IdentityExtractor final : public FeatureExtractor<T> {
 public:
  std::vector<Var<T>> features(const Var<T>& image) const override { return {image}; }
  std::vector<std::string> tap_names() const override { return {"identity"}; }
};

/// Default perceptual features: three 3x3 conv + GeLU stages (stride 1, 2,
/// 2; widths 8, 16, 32) with seed-pinned random weights held as constants.
template <typename T>
class RandomConvExtractor final : public FeatureExtractor<T> {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x5eed'f00dULL;

  explicit RandomConvExtractor(std::uint64_t seed = kDefaultSeed, int channels = 3) {
    nn::InitRng rng(seed);
    const int widths[3] = {8, 16, 32};
    const int strides[3] = {1, 2, 2};
    int cin = channels;
    for (int i = 0; i < 3; ++i) {
      Stage s;
      s.weight = Var<T>::constant(
          nn::fan_in_uniform<T>(Shape{widths[i], cin, 3, 3}, cin * 9, rng));
      s.stride = strides[i];
      stages_.push_back(std::move(s));
      cin = widths[i];
    }
  }

  std::vector<Var<T>> features(const Var<T>& image) const override {
    std::vector<Var<T>> taps;
    Var<T> h = image;
    for (const auto& s : stages_) {
      h = ops::gelu(ops::conv2d(h, s.weight, Var<T>{}, s.stride, 1, 1));
      taps.push_back(h);
    }
    return taps;
  }

  std::vector<std::string> tap_names() const override {
    return {"conv1_s1_w8", "conv2_s2_w16", "conv3_s2_w32"};
  }

 private:
  struct Stage {
    Var<T> weight;
    int stride = 1;
  };
  std::vector<Stage> stages_;
};

/// Pixel L1 plus the L1 distance of extractor features summed over taps,
/// all mean-reduced. A null extractor drops the perceptual term.
template <typename T>
Var<T> stage2_loss(const Var<T>& x_out2, const Var<T>& x_gt, const FeatureExtractor<T>* phi) {
  require_same_shape(x_out2.value(), x_gt.value(), "stage2_loss");
  Var<T> loss = ops::mean_abs(ops::sub(x_out2, x_gt));
  if (phi) {
    const auto fa = phi->features(x_out2);
    const auto fb = phi->features(x_gt);
    for (std::size_t i = 0; i < fa.size(); ++i)
      loss = ops::add(loss, ops::mean_abs(ops::sub(fa[i], fb[i].detach())));
  }
  return loss;
}

namespace detail {
inline void require_finite_component(double v, const char* name) {
  if (!std::isfinite(v)) throw NumericError(std::string("total_loss: ") + name + " is not finite");
}
}  // namespace detail

/// gamma1 * L_s2 + gamma2 * L_s1 + gamma3 * L_g.
inline double total_loss(double l_s1, double l_s2, double l_g, const LossWeights& w = {}) {
  detail::require_finite_component(l_s1, "L_s1");
  detail::require_finite_component(l_s2, "L_s2");
  detail::require_finite_component(l_g, "L_g");
  return w.gamma1 * l_s2 + w.gamma2 * l_s1 + w.gamma3 * l_g;
}

/// Differentiable total. Undefined components are treated as disabled.
template <typename T>
Var<T> total_loss(const Var<T>& l_s1, const Var<T>& l_s2, const Var<T>& l_g,
                  const LossWeights& w = {}) {
  Var<T> acc;
  auto accumulate = [&](const Var<T>& term, double weight, const char* name) {
    if (!term.defined()) return;
    detail::require_finite_component(term.item(), name);
    Var<T> scaled = ops::affine(term, weight);
    acc = acc.defined() ? ops::add(acc, scaled) : scaled;
  };
  accumulate(l_s2, w.gamma1, "L_s2");
  accumulate(l_s1, w.gamma2, "L_s1");
  accumulate(l_g, w.gamma3, "L_g");
  if (!acc.defined()) acc = Var<T>::constant(Tensor<T>::scalar(T{0}));
  return acc;
}

}  // namespace uwe
