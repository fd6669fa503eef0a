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

// 8-bit image files <-> (1,3,H,W) tensors in [0,1], channel order RGB.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "uwe/errors.hpp"
#include "uwe/tensor.hpp"

namespace uwe::io {

template <typename T>
Tensor<T> from_mat(const cv::Mat& bgr) {
  Tensor<T> t(Shape{1, 3, bgr.rows, bgr.cols});
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x)
      for (int c = 0; c < 3; ++c) t.at(0, c, y, x) = static_cast<T>(row[x][2 - c] / 255.0);
  }
  return t;
}

/// Rounds [0,1] values to the nearest 8-bit level.
inline unsigned char quantize(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

template <typename T>
cv::Mat to_mat(const Tensor<T>& t, int n = 0) {
  const Shape& s = t.shape();
  if (s.c != 3 && s.c != 1) throw InvalidInput("to_mat: expected 1 or 3 channels");
  cv::Mat m(s.h, s.w, CV_8UC3);
  for (int y = 0; y < s.h; ++y) {
    auto* row = m.ptr<cv::Vec3b>(y);
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c) row[x][2 - c] = quantize(t.at(n, s.c == 3 ? c : 0, y, x));
  }
  return m;
}

template <typename T>
Tensor<T> read_image(const std::filesystem::path& path) {
  cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) throw DataError("cannot decode image '" + path.string() + "'");
  return from_mat<T>(m);
}

template <typename T>
void write_image(const std::filesystem::path& path, const Tensor<T>& t, int n = 0) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), to_mat(t, n)))
    throw DataError("cannot write image '" + path.string() + "'");
}

/// Bilinear resize of every plane.
template <typename T>
Tensor<T> resize_bilinear(const Tensor<T>& t, int h, int w) {
  const Shape& s = t.shape();
  Tensor<T> out(Shape{s.n, s.c, h, w});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      cv::Mat src(s.h, s.w, CV_64F), dst;
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) src.at<double>(y, x) = t.at(n, c, y, x);
      cv::resize(src, dst, cv::Size(w, h), 0, 0, cv::INTER_LINEAR);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(n, c, y, x) = static_cast<T>(dst.at<double>(y, x));
    }
  return out;
}

inline bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

}  // namespace uwe::io
