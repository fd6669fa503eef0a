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

// Complex DFT of arbitrary size in double precision, backed by OpenCV's
// cv::dft (mixed radix, any length).

#include <cmath>
#include <complex>
#include <cstddef>
#include <span>

#include <opencv2/core.hpp>

namespace uwe::fft {

using cplx = std::complex<double>;

namespace detail {

// std::complex<double> is layout-compatible with two doubles, i.e. CV_64FC2.
inline cv::Mat view(std::span<cplx> x, std::size_t rows, std::size_t cols) {
  return cv::Mat(static_cast<int>(rows), static_cast<int>(cols), CV_64FC2, x.data());
}

inline void transform(std::span<cplx> x, std::size_t rows, std::size_t cols, bool inverse) {
  if (x.empty()) return;
  cv::Mat m = view(x, rows, cols);
  cv::dft(m, m, inverse ? cv::DFT_INVERSE : 0);
}

}  // namespace detail

/// Unnormalized forward DFT in place: X[k] = sum_j x[j] exp(-2*pi*i*j*k/n).
inline void forward(std::span<cplx> x) { detail::transform(x, 1, x.size(), false); }

/// Unnormalized inverse DFT in place (no 1/n factor).
inline void inverse(std::span<cplx> x) { detail::transform(x, 1, x.size(), true); }

/// Orthonormal 2-D transform of a row-major h x w grid, in place. The
/// forward and inverse directions both carry 1/sqrt(h*w).
inline void ortho2d(std::span<cplx> grid, std::size_t h, std::size_t w, bool inverse_dir) {
  detail::transform(grid, h, w, inverse_dir);
  const double scale = 1.0 / std::sqrt(static_cast<double>(h * w));
  for (cplx& v : grid) v *= scale;
}

}  // namespace uwe::fft
