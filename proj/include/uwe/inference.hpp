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

// Inference on whole images of any size: checkpoint loading, reflect
// padding to the network's stride and cropping back.

#include <filesystem>
#include <memory>
#include <utility>

#include "uwe/checkpoint.hpp"
#include "uwe/config.hpp"
#include "uwe/data.hpp"
#include "uwe/model.hpp"

namespace uwe {

/// Downsampling factor of the encoder; inputs must be multiples of it.
inline constexpr int kSizeMultiple = 4;

/// Mirror index into [0, n) without repeating the edge sample.
inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

/// Reflect-pads the bottom and right edges up to the next multiple of `m`.
template <typename T>
Tensor<T> pad_reflect_to_multiple(const Tensor<T>& t, int m) {
  const Shape& s = t.shape();
  const int h = (s.h + m - 1) / m * m, w = (s.w + m - 1) / m * m;
  if (h == s.h && w == s.w) return t;
  Tensor<T> out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          out.at(n, c, y, x) = t.at(n, c, reflect_index(y, s.h), reflect_index(x, s.w));
  return out;
}

/// Copies the tensors named like `params` out of `f` into them.
template <typename T>
void restore_parameters(const NamedTensorFile<T>& f, const nn::NamedParams<T>& params) {
  for (const auto& [name, p] : params) {
    const Tensor<T>* src = f.find(name);
    if (!src) throw DataError("checkpoint lacks parameter '" + name + "'");
    if (src->shape() != p.shape())
      throw DataError("checkpoint parameter '" + name + "' has shape " + src->shape().str() +
                      ", expected " + p.shape().str());
    const_cast<Var<T>&>(p).mutable_value() = *src;
  }
}

/// Model described by a training checkpoint, with its parameters restored.
template <typename T>
std::unique_ptr<Enhancer<T>> load_enhancer(const std::filesystem::path& dir) {
  const auto f = NamedTensorFile<T>::load(dir);
  if (!f.metadata.contains("config"))
    throw DataError("checkpoint '" + dir.string() + "' has no config");
  auto model =
      std::make_unique<Enhancer<T>>(config_from_json(f.metadata.at("config")).model_config());
  restore_parameters(f, model->parameters());
  return model;
}

/// Enhances an image of any size.
template <typename T>
Tensor<T> enhance_image(const Enhancer<T>& model, const Tensor<T>& image) {
  const Shape& s = image.shape();
  return crop(model.enhance(pad_reflect_to_multiple(image, kSizeMultiple)), 0, 0, s.h, s.w);
}

/// Stage-1 output and its refined gradient map for an image of any size.
template <typename T>
std::pair<Tensor<T>, Tensor<T>> stage1_maps(const Enhancer<T>& model, const Tensor<T>& image) {
  const Shape& s = image.shape();
  auto [x1, g] = model.stage1_and_gradient(pad_reflect_to_multiple(image, kSizeMultiple));
  return {crop(x1, 0, 0, s.h, s.w), crop(g, 0, 0, s.h, s.w)};
}

}  // namespace uwe
