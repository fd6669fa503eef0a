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

// Orthonormal 2-D Fourier transform on single-channel planes together with
// the amplitude/phase (polar) view of a spectrum.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "uwe/errors.hpp"
#include "uwe/fft.hpp"
#include "uwe/tensor.hpp"

namespace uwe {

/// Row-major H x W matrix of doubles.
struct Plane {
  int h = 0;
  int w = 0;
  std::vector<double> data;

  Plane() = default;
  Plane(int rows, int cols, double fill = 0.0)
      : h(rows), w(cols), data(static_cast<std::size_t>(rows) * cols, fill) {}

  double& operator()(int y, int x) { return data[static_cast<std::size_t>(y) * w + x]; }
  double operator()(int y, int x) const { return data[static_cast<std::size_t>(y) * w + x]; }
  std::size_t size() const { return data.size(); }
  bool same_shape(const Plane& o) const { return h == o.h && w == o.w; }
};

using ImagePlane = Plane;

struct Spectrum {
  Plane real;
  Plane imag;
};

struct PolarSpectrum {
  Plane amplitude;
  Plane phase;  // radians in (-pi, pi]
};

namespace detail {

inline void require_finite(const Plane& p, const char* what) {
  if (p.h < 1 || p.w < 1) throw InvalidInput(std::string(what) + ": empty plane");
  for (double v : p.data)
    if (!std::isfinite(v)) throw InvalidInput(std::string(what) + ": non-finite input");
}

}  // namespace detail

inline Spectrum fft2(const ImagePlane& plane) {
  detail::require_finite(plane, "fft2");
  std::vector<fft::cplx> grid(plane.data.begin(), plane.data.end());
  fft::ortho2d(grid, plane.h, plane.w, false);
  Spectrum s{Plane(plane.h, plane.w), Plane(plane.h, plane.w)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    s.real.data[i] = grid[i].real();
    s.imag.data[i] = grid[i].imag();
  }
  return s;
}

/// Maximum imaginary residue tolerated when a spectrum is mapped back to a
/// real plane.
inline constexpr double kImagResidueTol = 1e-6;

/// Inverse transform. The result must be real: a residual imaginary part
/// above kImagResidueTol (relative to the plane's magnitude) means the
/// spectrum lacks Hermitian symmetry and is rejected.
inline ImagePlane ifft2(const Spectrum& spectrum) {
  detail::require_finite(spectrum.real, "ifft2");
  detail::require_finite(spectrum.imag, "ifft2");
  if (!spectrum.real.same_shape(spectrum.imag))
    throw InvalidInput("ifft2: real/imag shape mismatch");
  const int h = spectrum.real.h, w = spectrum.real.w;
  std::vector<fft::cplx> grid(spectrum.real.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = {spectrum.real.data[i], spectrum.imag.data[i]};
  fft::ortho2d(grid, h, w, true);
  ImagePlane out(h, w);
  double residue = 0.0, scale = 1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.data[i] = grid[i].real();
    residue = std::max(residue, std::abs(grid[i].imag()));
    scale = std::max(scale, std::abs(grid[i].real()));
  }
  if (residue > kImagResidueTol * scale)
    throw InvalidInput("ifft2: spectrum is not Hermitian (imaginary residue " +
                       std::to_string(residue) + ")");
  return out;
}

inline PolarSpectrum decompose(const Spectrum& s) {
  if (!s.real.same_shape(s.imag)) throw InvalidInput("decompose: real/imag shape mismatch");
  PolarSpectrum p{Plane(s.real.h, s.real.w), Plane(s.real.h, s.real.w)};
  for (std::size_t i = 0; i < s.real.size(); ++i) {
    const double re = s.real.data[i], im = s.imag.data[i];
    p.amplitude.data[i] = std::hypot(re, im);
    // atan2(0, 0) is 0 for +0 but pi for -0; pin the degenerate bin to 0.
    p.phase.data[i] = (re == 0.0 && im == 0.0) ? 0.0 : std::atan2(im, re);
  }
  return p;
}

inline Spectrum recompose(const PolarSpectrum& p) {
  if (!p.amplitude.same_shape(p.phase))
    throw InvalidInput("recompose: amplitude/phase shape mismatch");
  Spectrum s{Plane(p.amplitude.h, p.amplitude.w), Plane(p.amplitude.h, p.amplitude.w)};
  for (std::size_t i = 0; i < p.amplitude.size(); ++i) {
    const double a = p.amplitude.data[i];
    if (!(a >= 0.0)) throw InvalidInput("recompose: negative or non-finite amplitude");
    s.real.data[i] = a * std::cos(p.phase.data[i]);
    s.imag.data[i] = a * std::sin(p.phase.data[i]);
  }
  return s;
}

/// Orthogonal projection onto spectra of real planes:
/// (S(k) + conj(S(-k))) / 2. Phases of empty bins are rounding noise, so a
/// spectrum recombined from them is only Hermitian up to that noise.
inline Spectrum hermitian_part(const Spectrum& s) {
  const int h = s.real.h, w = s.real.w;
  Spectrum out{Plane(h, w), Plane(h, w)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int my = (h - y) % h, mx = (w - x) % w;
      out.real(y, x) = 0.5 * (s.real(y, x) + s.real(my, mx));
      out.imag(y, x) = 0.5 * (s.imag(y, x) - s.imag(my, mx));
    }
  return out;
}

template <typename T>
ImagePlane plane_of(const Tensor<T>& t, int n, int c) {
  const Shape& s = t.shape();
  ImagePlane p(s.h, s.w);
  const T* src = t.plane(n, c);
  for (std::size_t i = 0; i < p.size(); ++i) p.data[i] = static_cast<double>(src[i]);
  return p;
}

template <typename T>
void store_plane(Tensor<T>& t, int n, int c, const ImagePlane& p) {
  T* dst = t.plane(n, c);
  for (std::size_t i = 0; i < p.size(); ++i) dst[i] = static_cast<T>(p.data[i]);
}

/// Exchanges the Fourier amplitudes of two equally shaped images, channel by
/// channel. Returns (amplitude of b with phase of a, amplitude of a with
/// phase of b).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> swap_amplitude(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "swap_amplitude");
  const Shape& s = a.shape();
  Tensor<T> out_a(s), out_b(s);
  for (int n = 0; n < s.n; ++n) {
    for (int c = 0; c < s.c; ++c) {
      const PolarSpectrum pa = decompose(fft2(plane_of(a, n, c)));
      const PolarSpectrum pb = decompose(fft2(plane_of(b, n, c)));
      store_plane(out_a, n, c, ifft2(hermitian_part(recompose({pb.amplitude, pa.phase}))));
      store_plane(out_b, n, c, ifft2(hermitian_part(recompose({pa.amplitude, pb.phase}))));
    }
  }
  return {std::move(out_a), std::move(out_b)};
}

}  // namespace uwe
