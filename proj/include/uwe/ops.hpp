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
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "uwe/autodiff.hpp"
#include "uwe/fft.hpp"
#include "uwe/tensor.hpp"

namespace uwe {

// ---------------------------------------------------------------------------
// Backend capability contract
// ---------------------------------------------------------------------------

/// Operations the network needs from a differentiation backend, each with a
/// gradient.
inline std::vector<std::string_view> required_ops() {
  return {"conv2d",      "conv2d_strided", "depthwise_conv2d", "pointwise_conv2d",
          "upsample2x",  "gelu",           "sigmoid",          "add",
          "mul",         "concat",         "fft2",             "ifft2",
          "magnitude",   "l1",             "l2"};
}

/// Operations provided by the native backend in this header.
inline std::vector<std::string_view> native_ops() {
  return {"conv2d",      "conv2d_strided", "depthwise_conv2d", "pointwise_conv2d",
          "upsample2x",  "gelu",           "sigmoid",          "add",
          "sub",         "mul",            "affine",           "concat",
          "slice",       "pad_reflect",    "fft2",             "ifft2",
          "magnitude",   "phase",          "polar",            "hypot",
          "scale_by",    "channel_affine", "l1",               "l2",
          "mean",        "sobel"};
}

/// Throws CapabilityError naming every required op missing from `available`.
inline void check_backend(const std::vector<std::string_view>& available) {
  std::string missing;
  for (auto op : required_ops()) {
    if (std::find(available.begin(), available.end(), op) == available.end()) {
      if (!missing.empty()) missing += ", ";
      missing += op;
    }
  }
  if (!missing.empty()) throw CapabilityError("backend is missing required ops: " + missing);
}

namespace ops {

namespace detail {

template <typename T>
T dot(const T* __restrict a, const T* __restrict b, int n) {
  T acc[8] = {};
  int i = 0;
  for (; i + 8 <= n; i += 8)
    for (int l = 0; l < 8; ++l) acc[l] += a[i + l] * b[i + l];
  T s = 0;
  for (; i < n; ++i) s += a[i] * b[i];
  for (int l = 0; l < 8; ++l) s += acc[l];
  return s;
}

template <typename T>
T dot_strided(const T* __restrict a, const T* __restrict b, int n, int stride) {
  T s = 0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i * stride];
  return s;
}

// Output indices o in [lo, hi) whose input index o*stride - pad + k lies in [0, extent).
inline void valid_range(int extent, int out_extent, int stride, int pad, int k, int& lo,
                        int& hi) {
  const int first = pad - k;
  lo = first <= 0 ? 0 : (first + stride - 1) / stride;
  const int last = extent - 1 + pad - k;
  hi = last < 0 ? 0 : std::min(out_extent, last / stride + 1);
  if (hi < lo) hi = lo;
}

struct ConvGeom {
  int n, cin, h, w, cout, k, stride, pad, groups, oh, ow;
  int cin_g() const { return cin / groups; }
  int cout_g() const { return cout / groups; }
};

template <typename T>
ConvGeom conv_geom(const Shape& x, const Shape& w, int stride, int pad, int groups) {
  if (groups < 1 || x.c % groups != 0 || w.n % groups != 0)
    throw InvalidInput("conv2d: channel counts not divisible by groups");
  if (w.c != x.c / groups)
    throw InvalidInput("conv2d: weight shape " + w.str() + " does not match input " + x.str());
  if (w.h != w.w) throw InvalidInput("conv2d: only square kernels are supported");
  if (stride < 1 || pad < 0) throw InvalidInput("conv2d: bad stride/padding");
  ConvGeom g{x.n, x.c, x.h, x.w, w.n, w.h, stride, pad, groups, 0, 0};
  g.oh = (x.h + 2 * pad - w.h) / stride + 1;
  g.ow = (x.w + 2 * pad - w.w) / stride + 1;
  if (g.oh < 1 || g.ow < 1) throw InvalidInput("conv2d: input smaller than kernel");
  return g;
}

template <typename T>
void conv_forward(const ConvGeom& g, const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b,
                  Tensor<T>& out) {
  const int plane_out = g.oh * g.ow;
  const bool pointwise = g.k == 1 && g.stride == 1 && g.pad == 0;
  for (int n = 0; n < g.n; ++n) {
    for (int oc = 0; oc < g.cout; ++oc) {
      T* __restrict o = out.plane(n, oc);
      std::fill(o, o + plane_out, b ? (*b)[oc] : T{0});
      const int grp = oc / g.cout_g();
      for (int icg = 0; icg < g.cin_g(); ++icg) {
        const T* __restrict in = x.plane(n, grp * g.cin_g() + icg);
        const T* wk = w.plane(oc, icg);
        if (pointwise) {
          const T wv = wk[0];
          for (int i = 0; i < plane_out; ++i) o[i] += wv * in[i];
          continue;
        }
        for (int ky = 0; ky < g.k; ++ky) {
          int oy0, oy1;
          valid_range(g.h, g.oh, g.stride, g.pad, ky, oy0, oy1);
          for (int kx = 0; kx < g.k; ++kx) {
            int ox0, ox1;
            valid_range(g.w, g.ow, g.stride, g.pad, kx, ox0, ox1);
            const T wv = wk[ky * g.k + kx];
            const int len = ox1 - ox0;
            const int ix0 = ox0 * g.stride - g.pad + kx;
            for (int oy = oy0; oy < oy1; ++oy) {
              T* __restrict orow = o + oy * g.ow + ox0;
              const T* __restrict irow = in + (oy * g.stride - g.pad + ky) * g.w + ix0;
              if (g.stride == 1) {
                for (int i = 0; i < len; ++i) orow[i] += wv * irow[i];
              } else {
                for (int i = 0; i < len; ++i) orow[i] += wv * irow[i * g.stride];
              }
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_backward(const ConvGeom& g, const Tensor<T>& x, const Tensor<T>& w,
                   const Tensor<T>& gout, Tensor<T>* gx, Tensor<T>* gw, Tensor<T>* gb) {
  const int plane_out = g.oh * g.ow;
  const bool pointwise = g.k == 1 && g.stride == 1 && g.pad == 0;
  for (int n = 0; n < g.n; ++n) {
    for (int oc = 0; oc < g.cout; ++oc) {
      const T* __restrict go = gout.plane(n, oc);
      if (gb) {
        double s = 0;
        for (int i = 0; i < plane_out; ++i) s += go[i];
        (*gb)[oc] += static_cast<T>(s);
      }
      const int grp = oc / g.cout_g();
      for (int icg = 0; icg < g.cin_g(); ++icg) {
        const int ic = grp * g.cin_g() + icg;
        const T* __restrict in = x.plane(n, ic);
        T* __restrict gi = gx ? gx->plane(n, ic) : nullptr;
        const T* wk = w.plane(oc, icg);
        T* gwk = gw ? gw->plane(oc, icg) : nullptr;
        if (pointwise) {
          if (gi) {
            const T wv = wk[0];
            for (int i = 0; i < plane_out; ++i) gi[i] += wv * go[i];
          }
          if (gwk) gwk[0] += dot(go, in, plane_out);
          continue;
        }
        for (int ky = 0; ky < g.k; ++ky) {
          int oy0, oy1;
          valid_range(g.h, g.oh, g.stride, g.pad, ky, oy0, oy1);
          for (int kx = 0; kx < g.k; ++kx) {
            int ox0, ox1;
            valid_range(g.w, g.ow, g.stride, g.pad, kx, ox0, ox1);
            const T wv = wk[ky * g.k + kx];
            const int len = ox1 - ox0;
            const int ix0 = ox0 * g.stride - g.pad + kx;
            T acc = 0;
            for (int oy = oy0; oy < oy1; ++oy) {
              const T* __restrict grow = go + oy * g.ow + ox0;
              const std::size_t ioff =
                  static_cast<std::size_t>(oy * g.stride - g.pad + ky) * g.w + ix0;
              if (g.stride == 1) {
                if (gi) {
                  T* __restrict girow = gi + ioff;
                  for (int i = 0; i < len; ++i) girow[i] += wv * grow[i];
                }
                if (gwk) acc += dot(grow, in + ioff, len);
              } else {
                if (gi) {
                  T* girow = gi + ioff;
                  for (int i = 0; i < len; ++i) girow[i * g.stride] += wv * grow[i];
                }
                if (gwk) acc += dot_strided(grow, in + ioff, len, g.stride);
              }
            }
            if (gwk) gwk[ky * g.k + kx] += acc;
          }
        }
      }
    }
  }
}

inline int reflect_index(int i, int n) {
  if (n == 1) return 0;
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return i;
}

// Orthonormal 2-D transform applied to (re, im) plane pairs.
inline void ortho_planes(const double* re, const double* im, int h, int w, bool inverse,
                         double* out_re, double* out_im) {
  std::vector<fft::cplx> grid(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = {re[i], im ? im[i] : 0.0};
  fft::ortho2d(grid, h, w, inverse);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out_re[i] = grid[i].real();
    if (out_im) out_im[i] = grid[i].imag();
  }
}

template <typename T>
void require_same(const Var<T>& a, const Var<T>& b, const char* op) {
  require_same_shape(a.value(), b.value(), op);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  detail::require_same(a, b, "add");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return make_op<T>("add", std::move(out), {a, b}, [](Node<T>& self) {
    for (std::size_t k = 0; k < 2; ++k)
      if (auto* g = self.input_grad(k))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  detail::require_same(a, b, "sub");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  return make_op<T>("sub", std::move(out), {a, b}, [](Node<T>& self) {
    if (auto* g = self.input_grad(0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    if (auto* g = self.input_grad(1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
  });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  detail::require_same(a, b, "mul");
  Tensor<T> out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return make_op<T>("mul", std::move(out), {a, b}, [](Node<T>& self) {
    const auto& av = self.inputs[0]->value;
    const auto& bv = self.inputs[1]->value;
    if (auto* g = self.input_grad(0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * bv[i];
    if (auto* g = self.input_grad(1))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * av[i];
  });
}

/// scale * x + shift with constant coefficients.
template <typename T>
Var<T> affine(const Var<T>& x, double scale, double shift = 0.0) {
  Tensor<T> out = x.value();
  const T s = static_cast<T>(scale), t = static_cast<T>(shift);
  for (auto& v : out.vec()) v = s * v + t;
  return make_op<T>("affine", std::move(out), {x}, [s](Node<T>& self) {
    if (auto* g = self.input_grad(0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += s * self.grad[i];
  });
}

/// x multiplied by a (1,1,1,1) Var.
template <typename T>
Var<T> scale_by(const Var<T>& x, const Var<T>& s) {
  if (s.value().size() != 1) throw InvalidInput("scale_by: factor is not a scalar");
  Tensor<T> out = x.value();
  const T sv = s.item();
  for (auto& v : out.vec()) v *= sv;
  return make_op<T>("scale_by", std::move(out), {x, s}, [](Node<T>& self) {
    const auto& xv = self.inputs[0]->value;
    const T sv = self.inputs[1]->value[0];
    if (auto* g = self.input_grad(0))
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * sv;
    if (auto* g = self.input_grad(1)) {
      double acc = 0;
      for (std::size_t i = 0; i < xv.size(); ++i) acc += double(self.grad[i]) * double(xv[i]);
      (*g)[0] += static_cast<T>(acc);
    }
  });
}

/// Per-channel x * gamma + beta with gamma, beta shaped (1,C,1,1).
template <typename T>
Var<T> channel_affine(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta) {
  const Shape& s = x.shape();
  if (gamma.shape() != Shape{1, s.c, 1, 1} || beta.shape() != Shape{1, s.c, 1, 1})
    throw InvalidInput("channel_affine: parameter shape mismatch");
  Tensor<T> out(s);
  const std::size_t hw = s.plane();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* src = x.value().plane(n, c);
      T* dst = out.plane(n, c);
      const T ga = gamma.value()[c], be = beta.value()[c];
      for (std::size_t i = 0; i < hw; ++i) dst[i] = src[i] * ga + be;
    }
  return make_op<T>("channel_affine", std::move(out), {x, gamma, beta}, [](Node<T>& self) {
    const Shape& s = self.value.shape();
    const std::size_t hw = s.plane();
    const auto& xv = self.inputs[0]->value;
    const auto& gv = self.inputs[1]->value;
    auto* gx = self.input_grad(0);
    auto* gg = self.input_grad(1);
    auto* gbeta = self.input_grad(2);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const T* go = self.grad.plane(n, c);
        const T* xi = xv.plane(n, c);
        if (gx) {
          T* d = gx->plane(n, c);
          for (std::size_t i = 0; i < hw; ++i) d[i] += go[i] * gv[c];
        }
        if (gg) {
          double acc = 0;
          for (std::size_t i = 0; i < hw; ++i) acc += double(go[i]) * double(xi[i]);
          (*gg)[c] += static_cast<T>(acc);
        }
        if (gbeta) {
          double acc = 0;
          for (std::size_t i = 0; i < hw; ++i) acc += go[i];
          (*gbeta)[c] += static_cast<T>(acc);
        }
      }
  });
}

/// Exact (erf-based) Gaussian error linear unit.
template <typename T>
Var<T> gelu(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (auto& v : out.vec())
    v = static_cast<T>(0.5 * double(v) * (1.0 + std::erf(double(v) * std::numbers::sqrt2 / 2.0)));
  return make_op<T>("gelu", std::move(out), {x}, [](Node<T>& self) {
    const auto& xv = self.inputs[0]->value;
    if (auto* g = self.input_grad(0)) {
      const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
      for (std::size_t i = 0; i < g->size(); ++i) {
        const double v = xv[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * std::numbers::sqrt2 / 2.0));
        const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
        (*g)[i] += static_cast<T>(self.grad[i] * (cdf + v * pdf));
      }
    }
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (auto& v : out.vec()) v = static_cast<T>(1.0 / (1.0 + std::exp(-double(v))));
  return make_op<T>("sigmoid", std::move(out), {x}, [](Node<T>& self) {
    if (auto* g = self.input_grad(0))
      for (std::size_t i = 0; i < g->size(); ++i) {
        const T y = self.value[i];
        (*g)[i] += self.grad[i] * y * (T{1} - y);
      }
  });
}

/// sqrt(a^2 + b^2) with a zero gradient where the magnitude vanishes.
template <typename T>
Var<T> hypot(const Var<T>& a, const Var<T>& b) {
  detail::require_same(a, b, "hypot");
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<T>(std::hypot(double(a.value()[i]), double(b.value()[i])));
  return make_op<T>("hypot", std::move(out), {a, b}, [](Node<T>& self) {
    const auto& av = self.inputs[0]->value;
    const auto& bv = self.inputs[1]->value;
    auto* ga = self.input_grad(0);
    auto* gb = self.input_grad(1);
    for (std::size_t i = 0; i < self.value.size(); ++i) {
      const T m = self.value[i];
      if (m == T{0}) continue;
      const T s = self.grad[i] / m;
      if (ga) (*ga)[i] += s * av[i];
      if (gb) (*gb)[i] += s * bv[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Layout
// ---------------------------------------------------------------------------

template <typename T>
Var<T> concat_channels(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw InvalidInput("concat_channels: no inputs");
  Shape s = parts[0].shape();
  int total = 0;
  for (const auto& p : parts) {
    const Shape& ps = p.shape();
    if (ps.n != s.n || ps.h != s.h || ps.w != s.w)
      throw InvalidInput("concat_channels: incompatible shapes " + s.str() + " and " + ps.str());
    total += ps.c;
  }
  s.c = total;
  Tensor<T> out(s);
  const std::size_t hw = s.plane();
  for (int n = 0; n < s.n; ++n) {
    int c0 = 0;
    for (const auto& p : parts) {
      const int pc = p.shape().c;
      std::copy_n(p.value().plane(n, 0), pc * hw, out.plane(n, c0));
      c0 += pc;
    }
  }
  return make_op<T>("concat", std::move(out), parts, [](Node<T>& self) {
    const Shape& s = self.value.shape();
    const std::size_t hw = s.plane();
    int c0 = 0;
    for (std::size_t k = 0; k < self.inputs.size(); ++k) {
      const int pc = self.inputs[k]->value.shape().c;
      if (auto* g = self.input_grad(k))
        for (int n = 0; n < s.n; ++n) {
          const T* src = self.grad.plane(n, c0);
          T* dst = g->plane(n, 0);
          for (std::size_t i = 0; i < pc * hw; ++i) dst[i] += src[i];
        }
      c0 += pc;
    }
  });
}

template <typename T>
Var<T> slice_channels(const Var<T>& x, int start, int count) {
  const Shape& xs = x.shape();
  if (start < 0 || count < 1 || start + count > xs.c)
    throw InvalidInput("slice_channels: range out of bounds");
  Shape s = xs;
  s.c = count;
  Tensor<T> out(s);
  const std::size_t hw = s.plane();
  for (int n = 0; n < s.n; ++n) std::copy_n(x.value().plane(n, start), count * hw, out.plane(n, 0));
  return make_op<T>("slice", std::move(out), {x}, [start, count](Node<T>& self) {
    if (auto* g = self.input_grad(0)) {
      const Shape& s = self.value.shape();
      const std::size_t hw = s.plane();
      for (int n = 0; n < s.n; ++n) {
        const T* src = self.grad.plane(n, 0);
        T* dst = g->plane(n, start);
        for (std::size_t i = 0; i < count * hw; ++i) dst[i] += src[i];
      }
    }
  });
}

template <typename T>
Var<T> pad_reflect(const Var<T>& x, int pad) {
  const Shape& xs = x.shape();
  Shape s{xs.n, xs.c, xs.h + 2 * pad, xs.w + 2 * pad};
  Tensor<T> out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* src = x.value().plane(n, c);
      T* dst = out.plane(n, c);
      for (int y = 0; y < s.h; ++y) {
        const int sy = detail::reflect_index(y - pad, xs.h);
        for (int xx = 0; xx < s.w; ++xx)
          dst[y * s.w + xx] = src[sy * xs.w + detail::reflect_index(xx - pad, xs.w)];
      }
    }
  return make_op<T>("pad_reflect", std::move(out), {x}, [pad](Node<T>& self) {
    if (auto* g = self.input_grad(0)) {
      const Shape& s = self.value.shape();
      const Shape& xs = g->shape();
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
          const T* src = self.grad.plane(n, c);
          T* dst = g->plane(n, c);
          for (int y = 0; y < s.h; ++y) {
            const int sy = detail::reflect_index(y - pad, xs.h);
            for (int xx = 0; xx < s.w; ++xx)
              dst[sy * xs.w + detail::reflect_index(xx - pad, xs.w)] += src[y * s.w + xx];
          }
        }
    }
  });
}

/// Nearest-neighbour 2x upsampling.
template <typename T>
Var<T> upsample2x(const Var<T>& x) {
  const Shape& xs = x.shape();
  Shape s{xs.n, xs.c, xs.h * 2, xs.w * 2};
  Tensor<T> out(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* src = x.value().plane(n, c);
      T* dst = out.plane(n, c);
      for (int y = 0; y < s.h; ++y)
        for (int xx = 0; xx < s.w; ++xx) dst[y * s.w + xx] = src[(y / 2) * xs.w + xx / 2];
    }
  return make_op<T>("upsample2x", std::move(out), {x}, [](Node<T>& self) {
    if (auto* g = self.input_grad(0)) {
      const Shape& s = self.value.shape();
      const int iw = g->shape().w;
      for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
          const T* src = self.grad.plane(n, c);
          T* dst = g->plane(n, c);
          for (int y = 0; y < s.h; ++y)
            for (int xx = 0; xx < s.w; ++xx) dst[(y / 2) * iw + xx / 2] += src[y * s.w + xx];
        }
    }
  });
}

// ---------------------------------------------------------------------------
// Convolution
// ---------------------------------------------------------------------------

/// Zero-padded 2-D convolution. weight is (C_out, C_in/groups, K, K); bias,
/// when defined, is (1, C_out, 1, 1).
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride = 1,
              int pad = 0, int groups = 1) {
  const auto g = detail::conv_geom<T>(x.shape(), weight.shape(), stride, pad, groups);
  if (bias.defined() && bias.value().size() != static_cast<std::size_t>(g.cout))
    throw InvalidInput("conv2d: bias size mismatch");
  Tensor<T> out(Shape{g.n, g.cout, g.oh, g.ow});
  detail::conv_forward(g, x.value(), weight.value(), bias.defined() ? &bias.value() : nullptr, out);
  std::vector<Var<T>> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return make_op<T>("conv2d", std::move(out), std::move(inputs), [g](Node<T>& self) {
    Tensor<T>* gb = self.inputs.size() > 2 ? self.input_grad(2) : nullptr;
    detail::conv_backward(g, self.inputs[0]->value, self.inputs[1]->value, self.grad,
                          self.input_grad(0), self.input_grad(1), gb);
  });
}

/// Sobel responses of an already padded tensor (N,C,H+2,W+2) ->
/// (N,2C,H,W): horizontal derivative in channels [0,C), vertical in [C,2C).
/// Differences are taken before the 1-2-1 weighting, so flat regions give
/// exactly zero in any precision.
template <typename T>
Var<T> sobel_xy(const Var<T>& padded) {
  const Shape& ps = padded.shape();
  if (ps.h < 3 || ps.w < 3) throw InvalidInput("sobel_xy: input smaller than 3x3");
  const int h = ps.h - 2, w = ps.w - 2, pw = ps.w;
  Tensor<T> out(Shape{ps.n, 2 * ps.c, h, w});
  for (int n = 0; n < ps.n; ++n)
    for (int c = 0; c < ps.c; ++c) {
      const T* p = padded.value().plane(n, c);
      T* dx = out.plane(n, c);
      T* dy = out.plane(n, ps.c + c);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const T* r0 = p + y * pw + x;
          const T* r1 = r0 + pw;
          const T* r2 = r1 + pw;
          dx[y * w + x] = (r0[2] - r0[0]) + T{2} * (r1[2] - r1[0]) + (r2[2] - r2[0]);
          dy[y * w + x] = (r2[0] - r0[0]) + T{2} * (r2[1] - r0[1]) + (r2[2] - r0[2]);
        }
    }
  return make_op<T>("sobel", std::move(out), {padded}, [](Node<T>& self) {
    auto* g = self.input_grad(0);
    if (!g) return;
    const Shape& s = self.value.shape();
    const int c_in = s.c / 2, h = s.h, w = s.w, pw = w + 2;
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < c_in; ++c) {
        const T* gx = self.grad.plane(n, c);
        const T* gy = self.grad.plane(n, c_in + c);
        T* gp = g->plane(n, c);
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            const T a = gx[y * w + x], b = gy[y * w + x];
            T* r0 = gp + y * pw + x;
            T* r1 = r0 + pw;
            T* r2 = r1 + pw;
            r0[0] -= a + b;
            r0[1] -= T{2} * b;
            r0[2] += a - b;
            r1[0] -= T{2} * a;
            r1[2] += T{2} * a;
            r2[0] += b - a;
            r2[1] += T{2} * b;
            r2[2] += a + b;
          }
      }
  });
}

// ---------------------------------------------------------------------------
// Fourier domain. A complex tensor is stored with doubled channels: channels
// [0, C) hold the real parts and [C, 2C) the imaginary parts.
// ---------------------------------------------------------------------------

/// Orthonormal per-channel 2-D FFT of a real tensor -> (N, 2C, H, W).
template <typename T>
Var<T> fft2(const Var<T>& x) {
  const Shape& xs = x.shape();
  Tensor<T> out(Shape{xs.n, 2 * xs.c, xs.h, xs.w});
  const std::size_t hw = xs.plane();
  std::vector<double> re(hw), ore(hw), oim(hw);
  for (int n = 0; n < xs.n; ++n)
    for (int c = 0; c < xs.c; ++c) {
      const T* src = x.value().plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) re[i] = src[i];
      detail::ortho_planes(re.data(), nullptr, xs.h, xs.w, false, ore.data(), oim.data());
      T* dr = out.plane(n, c);
      T* di = out.plane(n, xs.c + c);
      for (std::size_t i = 0; i < hw; ++i) {
        dr[i] = static_cast<T>(ore[i]);
        di[i] = static_cast<T>(oim[i]);
      }
    }
  return make_op<T>("fft2", std::move(out), {x}, [](Node<T>& self) {
    auto* g = self.input_grad(0);
    if (!g) return;
    const Shape& xs = g->shape();
    const std::size_t hw = xs.plane();
    std::vector<double> gr(hw), gi(hw), o(hw);
    for (int n = 0; n < xs.n; ++n)
      for (int c = 0; c < xs.c; ++c) {
        const T* sr = self.grad.plane(n, c);
        const T* si = self.grad.plane(n, xs.c + c);
        for (std::size_t i = 0; i < hw; ++i) {
          gr[i] = sr[i];
          gi[i] = si[i];
        }
        // d/dx = Re(F^H (gR + i gI)).
        detail::ortho_planes(gr.data(), gi.data(), xs.h, xs.w, true, o.data(), nullptr);
        T* d = g->plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) d[i] += static_cast<T>(o[i]);
      }
  });
}

/// Real part of the orthonormal inverse FFT of a packed complex tensor.
template <typename T>
Var<T> ifft2(const Var<T>& z) {
  const Shape& zs = z.shape();
  if (zs.c % 2 != 0) throw InvalidInput("ifft2: complex tensor must have an even channel count");
  const int c_out = zs.c / 2;
  Tensor<T> out(Shape{zs.n, c_out, zs.h, zs.w});
  const std::size_t hw = zs.plane();
  std::vector<double> re(hw), im(hw), o(hw);
  for (int n = 0; n < zs.n; ++n)
    for (int c = 0; c < c_out; ++c) {
      const T* sr = z.value().plane(n, c);
      const T* si = z.value().plane(n, c_out + c);
      for (std::size_t i = 0; i < hw; ++i) {
        re[i] = sr[i];
        im[i] = si[i];
      }
      detail::ortho_planes(re.data(), im.data(), zs.h, zs.w, true, o.data(), nullptr);
      T* d = out.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i) d[i] = static_cast<T>(o[i]);
    }
  return make_op<T>("ifft2", std::move(out), {z}, [](Node<T>& self) {
    auto* g = self.input_grad(0);
    if (!g) return;
    const Shape& s = self.value.shape();
    const std::size_t hw = s.plane();
    std::vector<double> gy(hw), oRe(hw), oIm(hw);
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const T* src = self.grad.plane(n, c);
        for (std::size_t i = 0; i < hw; ++i) gy[i] = src[i];
        // (dR, dI) = F gy.
        detail::ortho_planes(gy.data(), nullptr, s.h, s.w, false, oRe.data(), oIm.data());
        T* dr = g->plane(n, c);
        T* di = g->plane(n, s.c + c);
        for (std::size_t i = 0; i < hw; ++i) {
          dr[i] += static_cast<T>(oRe[i]);
          di[i] += static_cast<T>(oIm[i]);
        }
      }
  });
}

/// Amplitude of a packed complex tensor; gradient 0 at empty bins.
template <typename T>
Var<T> magnitude(const Var<T>& z) {
  const int c = z.shape().c / 2;
  return hypot(slice_channels(z, 0, c), slice_channels(z, c, c));
}

/// Phase of a packed complex tensor in (-pi, pi]; 0 (with zero gradient) at
/// empty bins.
template <typename T>
Var<T> phase(const Var<T>& z) {
  const Shape& zs = z.shape();
  if (zs.c % 2 != 0) throw InvalidInput("phase: complex tensor must have an even channel count");
  const int c_out = zs.c / 2;
  Tensor<T> out(Shape{zs.n, c_out, zs.h, zs.w});
  const std::size_t hw = zs.plane();
  for (int n = 0; n < zs.n; ++n)
    for (int c = 0; c < c_out; ++c) {
      const T* re = z.value().plane(n, c);
      const T* im = z.value().plane(n, c_out + c);
      T* d = out.plane(n, c);
      for (std::size_t i = 0; i < hw; ++i)
        d[i] = (re[i] == T{0} && im[i] == T{0})
                   ? T{0}
                   : static_cast<T>(std::atan2(double(im[i]), double(re[i])));
    }
  return make_op<T>("phase", std::move(out), {z}, [](Node<T>& self) {
    auto* g = self.input_grad(0);
    if (!g) return;
    const Shape& s = self.value.shape();
    const auto& zv = self.inputs[0]->value;
    const std::size_t hw = s.plane();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const T* re = zv.plane(n, c);
        const T* im = zv.plane(n, s.c + c);
        const T* go = self.grad.plane(n, c);
        T* dr = g->plane(n, c);
        T* di = g->plane(n, s.c + c);
        for (std::size_t i = 0; i < hw; ++i) {
          const T m2 = re[i] * re[i] + im[i] * im[i];
          if (m2 == T{0}) continue;
          dr[i] += -go[i] * im[i] / m2;
          di[i] += go[i] * re[i] / m2;
        }
      }
  });
}

/// Packed complex tensor amplitude * (cos phase, sin phase).
template <typename T>
Var<T> polar(const Var<T>& amplitude, const Var<T>& phase_angle) {
  detail::require_same(amplitude, phase_angle, "polar");
  const Shape& s = amplitude.shape();
  Tensor<T> out(Shape{s.n, 2 * s.c, s.h, s.w});
  const std::size_t hw = s.plane();
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const T* a = amplitude.value().plane(n, c);
      const T* p = phase_angle.value().plane(n, c);
      T* dr = out.plane(n, c);
      T* di = out.plane(n, s.c + c);
      for (std::size_t i = 0; i < hw; ++i) {
        dr[i] = static_cast<T>(double(a[i]) * std::cos(double(p[i])));
        di[i] = static_cast<T>(double(a[i]) * std::sin(double(p[i])));
      }
    }
  return make_op<T>("polar", std::move(out), {amplitude, phase_angle}, [](Node<T>& self) {
    const auto& av = self.inputs[0]->value;
    const auto& pv = self.inputs[1]->value;
    auto* ga = self.input_grad(0);
    auto* gp = self.input_grad(1);
    const Shape& s = av.shape();
    const std::size_t hw = s.plane();
    for (int n = 0; n < s.n; ++n)
      for (int c = 0; c < s.c; ++c) {
        const T* a = av.plane(n, c);
        const T* p = pv.plane(n, c);
        const T* gr = self.grad.plane(n, c);
        const T* gi = self.grad.plane(n, s.c + c);
        for (std::size_t i = 0; i < hw; ++i) {
          const double cs = std::cos(double(p[i])), sn = std::sin(double(p[i]));
          const std::size_t k = av.offset(n, c, 0, 0) + i;
          if (ga) (*ga)[k] += static_cast<T>(gr[i] * cs + gi[i] * sn);
          if (gp) (*gp)[k] += static_cast<T>(double(a[i]) * (gi[i] * cs - gr[i] * sn));
        }
      }
  });
}

// ---------------------------------------------------------------------------
// Reductions to a (1,1,1,1) scalar. Accumulation is in double.
// ---------------------------------------------------------------------------

template <typename T>
Var<T> mean(const Var<T>& x) {
  double acc = 0;
  for (T v : x.value().vec()) acc += v;
  const double count = static_cast<double>(x.value().size());
  return make_op<T>("mean", Tensor<T>::scalar(static_cast<T>(acc / count)), {x},
                    [count](Node<T>& self) {
                      if (auto* g = self.input_grad(0)) {
                        const T d = static_cast<T>(self.grad[0] / count);
                        for (auto& v : g->vec()) v += d;
                      }
                    });
}

/// Mean absolute value (mean-reduced L1). Subgradient 0 at exact zeros.
template <typename T>
Var<T> mean_abs(const Var<T>& x) {
  double acc = 0;
  for (T v : x.value().vec()) acc += std::abs(double(v));
  const double count = static_cast<double>(x.value().size());
  return make_op<T>("l1", Tensor<T>::scalar(static_cast<T>(acc / count)), {x},
                    [count](Node<T>& self) {
                      if (auto* g = self.input_grad(0)) {
                        const auto& xv = self.inputs[0]->value;
                        const T d = static_cast<T>(self.grad[0] / count);
                        for (std::size_t i = 0; i < g->size(); ++i)
                          (*g)[i] += xv[i] > T{0} ? d : (xv[i] < T{0} ? -d : T{0});
                      }
                    });
}

/// Root mean square (mean-reduced L2). Gradient 0 when every entry is 0.
template <typename T>
Var<T> rms(const Var<T>& x) {
  double acc = 0;
  for (T v : x.value().vec()) acc += double(v) * double(v);
  const double count = static_cast<double>(x.value().size());
  const double r = std::sqrt(acc / count);
  return make_op<T>("l2", Tensor<T>::scalar(static_cast<T>(r)), {x}, [count, r](Node<T>& self) {
    auto* g = self.input_grad(0);
    if (!g || r == 0.0) return;
    const auto& xv = self.inputs[0]->value;
    const double k = self.grad[0] / (count * r);
    for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += static_cast<T>(k * xv[i]);
  });
}

}  // namespace ops
}  // namespace uwe
