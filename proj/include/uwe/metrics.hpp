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
#include <string>
#include <vector>

#include "uwe/tensor.hpp"

namespace uwe {

/// PSNR reported for identical images.
inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) for images with data range 1.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "psnr");
  if (a.empty()) throw InvalidInput("psnr: empty images");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i]) - double(b[i]);
    se += d * d;
  }
  const double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double data_range = 1.0;
};

namespace detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> g(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (auto& v : g) v /= sum;
  return g;
}

// Separable 'valid' Gaussian filter of an h x w plane.
inline std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                        const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int oh = h - k + 1, ow = w - k + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * src[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow, 0.0);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

}  // namespace detail

/// Single-scale SSIM with a Gaussian window evaluated over the fully
/// overlapping ('valid') window positions of every channel, then averaged.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b, const SsimParams& p = {}) {
  require_same_shape(a, b, "ssim");
  const Shape& s = a.shape();
  if (s.h < p.window || s.w < p.window)
    throw InvalidInput("ssim: image " + std::to_string(s.h) + "x" + std::to_string(s.w) +
                       " is smaller than the " + std::to_string(p.window) + "px window");
  const auto g = detail::gaussian_window(p.window, p.sigma);
  const double c1 = (p.k1 * p.data_range) * (p.k1 * p.data_range);
  const double c2 = (p.k2 * p.data_range) * (p.k2 * p.data_range);
  const std::size_t hw = s.plane();
  double total = 0.0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      std::vector<double> x(hw), y(hw), xx(hw), yy(hw), xy(hw);
      const T* pa = a.plane(n, c);
      const T* pb = b.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) {
        x[i] = pa[i];
        y[i] = pb[i];
        xx[i] = x[i] * x[i];
        yy[i] = y[i] * y[i];
        xy[i] = x[i] * y[i];
      }
      const auto mx = detail::filter_valid(x, s.h, s.w, g);
      const auto my = detail::filter_valid(y, s.h, s.w, g);
      const auto mxx = detail::filter_valid(xx, s.h, s.w, g);
      const auto myy = detail::filter_valid(yy, s.h, s.w, g);
      const auto mxy = detail::filter_valid(xy, s.h, s.w, g);
      double acc = 0.0;
      for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = mxx[i] - mx[i] * mx[i];
        const double vy = myy[i] - my[i] * my[i];
        const double cov = mxy[i] - mx[i] * my[i];
        const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
        const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
        acc += num / den;
      }
      total += acc / static_cast<double>(mx.size());
    }
  return total / (static_cast<double>(s.n) * s.c);
}

struct MetricEntry {
  std::string id;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricReport {
  std::vector<MetricEntry> entries;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;

  void add(MetricEntry e) {
    entries.push_back(std::move(e));
    double p = 0.0, q = 0.0;
    for (const auto& x : entries) {
      p += x.psnr;
      q += x.ssim;
    }
    mean_psnr = p / static_cast<double>(entries.size());
    mean_ssim = q / static_cast<double>(entries.size());
  }
};

}  // namespace uwe
