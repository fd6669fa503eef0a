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

// Stage-1 enhancement network: a three-scale encoder-decoder whose
// bottleneck runs a frequency stream (Fourier fusion blocks) and a spatial
// stream (spatial fusion blocks) side by side, optionally exchanging
// features after every block.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "uwe/nn.hpp"
#include "uwe/ops.hpp"

namespace uwe {

struct DsffnetConfig {
  int width1 = 16;  // full resolution
  int width2 = 32;  // 1/2 resolution
  int width3 = 64;  // 1/4 resolution (bottleneck)
  int blocks = 4;   // blocks per bottleneck stream
  bool sfi = true;  // cross connections between the two streams
  std::uint64_t seed = 0;
};

/// Filled by DffBlock when tracing: the phase produced by the decomposition
/// and the phase handed to the recomposition.
template <typename T>
struct DffTrace {
  Tensor<T> decomposed_phase;
  Tensor<T> recomposed_phase;
};

template <typename T>
void require_finite(const Var<T>& v, const std::string& where) {
  if (!v.value().all_finite()) throw NumericError(where + ": non-finite features");
}

/// Fourier fusion block. The amplitude spectrum is rescaled to be
/// resolution independent, passed through a per-channel affine
/// normalization and a densely connected pointwise stack, then recombined
/// with the untouched phase. The result is added back onto the input.
template <typename T>
struct DffBlock {
  Var<T> norm_gain;  // (1,C,1,1)
  Var<T> norm_bias;  // (1,C,1,1)
  nn::Conv<T> amp1;  // C -> C, 1x1
  nn::Conv<T> amp2;  // C -> C, 1x1
  nn::Conv<T> proj;  // 2C -> C, 1x1

  static DffBlock make(int channels, nn::InitRng& rng) {
    DffBlock b;
    b.norm_gain = Var<T>::param(Tensor<T>(Shape{1, channels, 1, 1}, T{1}));
    b.norm_bias = Var<T>::param(Tensor<T>(Shape{1, channels, 1, 1}));
    b.amp1 = nn::Conv<T>::make(channels, channels, 1, 1, 1, rng);
    b.amp2 = nn::Conv<T>::make(channels, channels, 1, 1, 1, rng);
    b.proj = nn::Conv<T>::make(2 * channels, channels, 1, 1, 1, rng);
    return b;
  }

  Var<T> operator()(const Var<T>& x, DffTrace<T>* trace = nullptr) const {
    const double bins = static_cast<double>(x.shape().plane());
    const Var<T> spectrum = ops::fft2(x);
    const Var<T> amplitude = ops::magnitude(spectrum);
    const Var<T> phase = ops::phase(spectrum);
    const Var<T> a = ops::channel_affine(ops::affine(amplitude, 1.0 / std::sqrt(bins)), norm_gain,
                                         norm_bias);
    const Var<T> h1 = ops::gelu(amp1(a));
    const Var<T> h2 = amp2(h1);
    const Var<T> refined = ops::affine(proj(ops::concat_channels<T>({h1, h2})), std::sqrt(bins));
    if (trace) {
      trace->decomposed_phase = phase.value();
      trace->recomposed_phase = phase.value();
    }
    return ops::add(x, ops::ifft2(ops::polar(refined, phase)));
  }

  void collect(const std::string& prefix, nn::NamedParams<T>& out) const {
    out.emplace_back(prefix + ".norm_gain", norm_gain);
    out.emplace_back(prefix + ".norm_bias", norm_bias);
    amp1.collect(prefix + ".amp1", out);
    amp2.collect(prefix + ".amp2", out);
    proj.collect(prefix + ".proj", out);
  }
};

/// Spatial fusion block: two depthwise-separable convolutions with a GeLU
/// between them; both intermediates are concatenated and projected back to
/// C channels, then added to the input.
template <typename T>
struct DsfBlock {
  nn::SeparableConv<T> conv1;
  nn::SeparableConv<T> conv2;
  nn::Conv<T> proj;  // 2C -> C, 1x1

  static DsfBlock make(int channels, nn::InitRng& rng) {
    DsfBlock b;
    b.conv1 = nn::SeparableConv<T>::make(channels, channels, 1, rng);
    b.conv2 = nn::SeparableConv<T>::make(channels, channels, 1, rng);
    b.proj = nn::Conv<T>::make(2 * channels, channels, 1, 1, 1, rng);
    return b;
  }

  Var<T> operator()(const Var<T>& x) const {
    const Var<T> h1 = ops::gelu(conv1(x));
    const Var<T> h2 = conv2(h1);
    return ops::add(x, proj(ops::concat_channels<T>({h1, h2})));
  }

  void collect(const std::string& prefix, nn::NamedParams<T>& out) const {
    conv1.collect(prefix + ".conv1", out);
    conv2.collect(prefix + ".conv2", out);
    proj.collect(prefix + ".proj", out);
  }
};

template <typename T>
class Dsffnet {
 public:
  explicit Dsffnet(const DsffnetConfig& cfg = {}) : cfg_(cfg) {
    check_backend(native_ops());
    if (cfg.width1 < 1 || cfg.width2 < 1 || cfg.width3 < 1 || cfg.blocks < 1)
      throw InvalidInput("Dsffnet: widths and block count must be positive");
    nn::InitRng rng(cfg.seed);
    enc1_ = nn::Conv<T>::make(3, cfg.width1, 3, 1, 1, rng);
    down1_ = nn::SeparableConv<T>::make(cfg.width1, cfg.width2, 2, rng);
    down2_ = nn::SeparableConv<T>::make(cfg.width2, cfg.width3, 2, rng);
    for (int i = 0; i < cfg.blocks; ++i) {
      dff_.push_back(DffBlock<T>::make(cfg.width3, rng));
      dsf_.push_back(DsfBlock<T>::make(cfg.width3, rng));
    }
    fuse_ = nn::Conv<T>::make(2 * cfg.width3, cfg.width3, 1, 1, 1, rng);
    up2_ = nn::Conv<T>::make(cfg.width3, cfg.width2, 1, 1, 1, rng);
    dec2_ = nn::SeparableConv<T>::make(2 * cfg.width2, cfg.width2, 1, rng);
    up1_ = nn::Conv<T>::make(cfg.width2, cfg.width1, 1, 1, 1, rng);
    dec1_ = nn::SeparableConv<T>::make(2 * cfg.width1, cfg.width1, 1, rng);
    head_ = nn::Conv<T>::make(cfg.width1, 3, 3, 1, 1, rng);
  }

  const DsffnetConfig& config() const { return cfg_; }
  void set_sfi(bool enabled) { cfg_.sfi = enabled; }

  std::vector<DffBlock<T>>& dff_blocks() { return dff_; }
  std::vector<DsfBlock<T>>& dsf_blocks() { return dsf_; }
  const nn::Conv<T>& fusion() const { return fuse_; }

  /// Dual-stream bottleneck. With cross connections enabled, the input of
  /// block i+1 in both streams is the sum of the two block-i outputs; the
  /// streams are always merged at the end by a 1x1 fusion.
  Var<T> bottleneck(const Var<T>& features) const { return bottleneck(features, cfg_.sfi); }

  Var<T> bottleneck(const Var<T>& features, bool sfi) const {
    Var<T> freq = features;
    Var<T> spatial = features;
    for (std::size_t i = 0; i < dff_.size(); ++i) {
      Var<T> f = dff_[i](freq);
      require_finite(f, "DFF block " + std::to_string(i));
      Var<T> s = dsf_[i](spatial);
      require_finite(s, "DSF block " + std::to_string(i));
      if (sfi && i + 1 < dff_.size()) {
        freq = spatial = ops::add(f, s);
      } else {
        freq = f;
        spatial = s;
      }
    }
    return fuse_(ops::concat_channels<T>({freq, spatial}));
  }

  /// x_in: (N,3,H,W) with H and W divisible by 4. Returns output_s1 in [0,1].
  Var<T> operator()(const Var<T>& x) const {
    const Shape& s = x.shape();
    if (s.c != 3) throw InvalidInput("Dsffnet: expected 3 input channels, got " + std::to_string(s.c));
    if (s.h % 4 != 0 || s.w % 4 != 0)
      throw InvalidInput("Dsffnet: height and width must be divisible by 4 (got " +
                         std::to_string(s.h) + "x" + std::to_string(s.w) +
                         "); reflect-pad the image first");
    const Var<T> e1 = ops::gelu(enc1_(x));
    const Var<T> e2 = ops::gelu(down1_(e1));
    const Var<T> e3 = ops::gelu(down2_(e2));
    const Var<T> b = bottleneck(e3);
    const Var<T> d2 = ops::gelu(dec2_(ops::concat_channels<T>({up2_(ops::upsample2x(b)), e2})));
    const Var<T> d1 = ops::gelu(dec1_(ops::concat_channels<T>({up1_(ops::upsample2x(d2)), e1})));
    return ops::sigmoid(head_(d1));
  }

  nn::NamedParams<T> parameters() const {
    nn::NamedParams<T> out;
    enc1_.collect("dsffnet.enc1", out);
    down1_.collect("dsffnet.down1", out);
    down2_.collect("dsffnet.down2", out);
    for (std::size_t i = 0; i < dff_.size(); ++i) {
      dff_[i].collect("dsffnet.dff" + std::to_string(i), out);
      dsf_[i].collect("dsffnet.dsf" + std::to_string(i), out);
    }
    fuse_.collect("dsffnet.fuse", out);
    up2_.collect("dsffnet.up2", out);
    dec2_.collect("dsffnet.dec2", out);
    up1_.collect("dsffnet.up1", out);
    dec1_.collect("dsffnet.dec1", out);
    head_.collect("dsffnet.head", out);
    return out;
  }

 private:
  DsffnetConfig cfg_;
  nn::Conv<T> enc1_;
  nn::SeparableConv<T> down1_, down2_;
  std::vector<DffBlock<T>> dff_;
  std::vector<DsfBlock<T>> dsf_;
  nn::Conv<T> fuse_;
  nn::Conv<T> up2_;
  nn::SeparableConv<T> dec2_;
  nn::Conv<T> up1_;
  nn::SeparableConv<T> dec1_;
  nn::Conv<T> head_;
};

}  // namespace uwe
