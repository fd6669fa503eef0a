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


#include <cmath>
#include <functional>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "support/grad_suite.hpp"
#include "uwe/autodiff.hpp"
#include "uwe/fourier.hpp"
#include "uwe/gradcheck.hpp"
#include "uwe/ops.hpp"

namespace uwe {
namespace {

using namespace uwe::testing;

// Direct convolution oracle with zero padding.
Tensor<D> naive_conv(const Tensor<D>& x, const Tensor<D>& w, const Tensor<D>* b, int stride,
                     int pad, int groups) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  const int oh = (xs.h + 2 * pad - ws.h) / stride + 1;
  const int ow = (xs.w + 2 * pad - ws.w) / stride + 1;
  const int cin_g = xs.c / groups, cout_g = ws.n / groups;
  Tensor<D> out(Shape{xs.n, ws.n, oh, ow});
  for (int n = 0; n < xs.n; ++n)
    for (int co = 0; co < ws.n; ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          D acc = b ? (*b)[co] : 0;
          const int g = co / cout_g;
          for (int ci = 0; ci < cin_g; ++ci)
            for (int ky = 0; ky < ws.h; ++ky)
              for (int kx = 0; kx < ws.w; ++kx) {
                const int iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= xs.h || ix < 0 || ix >= xs.w) continue;
                acc += w.at(co, ci, ky, kx) * x.at(n, g * cin_g + ci, iy, ix);
              }
          out.at(n, co, oy, ox) = acc;
        }
  return out;
}

void expect_passes(const std::string& name, const Op& op, const Tensor<D>& input) {
  const GradCheckReport r = grad_check<D>(name, op, input);
  EXPECT_TRUE(r.passed) << name << ": max_rel_error=" << r.max_rel_error << " " << r.failure;
  EXPECT_LT(r.max_rel_error, kGradCheckTolerance) << name;
}

// -- capability contract ----------------------------------------------------

TEST(Backend, NativeOpsCoverRequiredOps) { EXPECT_NO_THROW(check_backend(native_ops())); }

TEST(Backend, MissingOpsAreNamed) {
  std::vector<std::string_view> ops = native_ops();
  std::erase(ops, "fft2");
  std::erase(ops, "gelu");
  try {
    check_backend(ops);
    FAIL() << "expected CapabilityError";
  } catch (const CapabilityError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("fft2"), std::string::npos);
    EXPECT_NE(msg.find("gelu"), std::string::npos);
    EXPECT_EQ(e.exit_code(), 1);
  }
}

// -- forward oracles ----------------------------------------------------------

TEST(Ops, ActivationFixedPoints) {
  const VarD z = VarD::constant(Tensor<D>(Shape{1, 1, 1, 1}, 0.0));
  EXPECT_EQ(ops::gelu(z).item(), 0.0);
  EXPECT_EQ(ops::sigmoid(z).item(), 0.5);
  const VarD one = VarD::constant(Tensor<D>::scalar(1.0));
  EXPECT_NEAR(ops::gelu(one).item(), 0.5 * (1 + std::erf(1 / std::sqrt(2.0))), 1e-15);
}

TEST(Ops, Conv3x3PaddedShapeContract) {
  const VarD x = cst({1, 3, 8, 8}, 1);
  const VarD w = cst({5, 3, 3, 3}, 2);
  EXPECT_EQ(ops::conv2d(x, w, VarD{}, 1, 1).shape(), (Shape{1, 5, 8, 8}));
  EXPECT_EQ(ops::conv2d(x, w, VarD{}, 2, 1).shape(), (Shape{1, 5, 4, 4}));
}

TEST(Ops, ConvMatchesDirectSummation) {
  struct Case {
    Shape x, w;
    int stride, pad, groups;
  };
  for (const Case& c : {Case{{2, 4, 7, 9}, {6, 4, 3, 3}, 1, 1, 1},
                        Case{{1, 4, 8, 8}, {4, 1, 3, 3}, 2, 1, 4},
                        Case{{2, 6, 5, 5}, {6, 2, 3, 3}, 1, 0, 3},
                        Case{{1, 3, 6, 6}, {5, 3, 1, 1}, 1, 0, 1},
                        Case{{1, 2, 9, 7}, {2, 2, 3, 3}, 2, 1, 1}}) {
    const Tensor<D> x = rand_t(c.x, 1), w = rand_t(c.w, 2), b = rand_t({1, c.w.n, 1, 1}, 3);
    const auto got = ops::conv2d(VarD::constant(x), VarD::constant(w), VarD::constant(b), c.stride,
                                 c.pad, c.groups);
    const auto ref = naive_conv(x, w, &b, c.stride, c.pad, c.groups);
    ASSERT_EQ(got.shape(), ref.shape());
    EXPECT_LT(max_abs_diff(got.value(), ref), 1e-12);
  }
}

TEST(Ops, DepthwiseIdentityKernelIsIdentity) {
  const VarD x = cst({2, 3, 6, 5}, 4);
  Tensor<D> w(Shape{3, 1, 3, 3});
  for (int c = 0; c < 3; ++c) w.at(c, 0, 1, 1) = 1.0;
  const VarD y = ops::conv2d(x, VarD::constant(w), VarD{}, 1, 1, 3);
  EXPECT_EQ(y.value(), x.value());
}

TEST(Ops, ConvRejectsBadShapes) {
  const VarD x = cst({1, 3, 8, 8}, 1);
  EXPECT_THROW(ops::conv2d(x, cst({4, 2, 3, 3}, 2), VarD{}, 1, 1), InvalidInput);
  EXPECT_THROW(ops::conv2d(x, cst({4, 3, 3, 3}, 2), cst({1, 3, 1, 1}, 3), 1, 1), InvalidInput);
}

TEST(Ops, UpsampleAndConcatLayout) {
  const VarD x = cst({1, 2, 2, 3}, 5);
  const VarD u = ops::upsample2x(x);
  ASSERT_EQ(u.shape(), (Shape{1, 2, 4, 6}));
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 4; ++y)
      for (int z = 0; z < 6; ++z) EXPECT_EQ(u.value().at(0, c, y, z), x.value().at(0, c, y / 2, z / 2));
  const VarD a = cst({2, 1, 3, 3}, 6), b = cst({2, 2, 3, 3}, 7);
  const VarD cat = ops::concat_channels<D>({a, b});
  EXPECT_EQ(cat.shape(), (Shape{2, 3, 3, 3}));
  EXPECT_EQ(ops::slice_channels(cat, 1, 2).value(), b.value());
  EXPECT_EQ(ops::slice_channels(cat, 0, 1).value(), a.value());
}

TEST(Ops, PadReflectMirrorsWithoutEdgeRepeat) {
  Tensor<D> t(Shape{1, 1, 1, 4});
  for (int i = 0; i < 4; ++i) t[i] = i;
  Tensor<D> col(Shape{1, 1, 3, 4});
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 4; ++x) col.at(0, 0, y, x) = 10 * y + x;
  const VarD p = ops::pad_reflect(VarD::constant(col), 1);
  ASSERT_EQ(p.shape(), (Shape{1, 1, 5, 6}));
  EXPECT_EQ(p.value().at(0, 0, 0, 0), 11.0);  // mirrors (1,1)
  EXPECT_EQ(p.value().at(0, 0, 1, 0), 1.0);
  EXPECT_EQ(p.value().at(0, 0, 4, 5), 12.0);
}

TEST(Ops, FftMatchesPlaneTransform) {
  const Tensor<D> x = rand_t({2, 2, 6, 5}, 8);
  const VarD z = ops::fft2(VarD::constant(x));
  ASSERT_EQ(z.shape(), (Shape{2, 4, 6, 5}));
  for (int n = 0; n < 2; ++n)
    for (int c = 0; c < 2; ++c) {
      const Spectrum s = uwe::fft2(plane_of(x, n, c));
      for (int y = 0; y < 6; ++y)
        for (int w = 0; w < 5; ++w) {
          EXPECT_NEAR(z.value().at(n, c, y, w), s.real(y, w), 1e-12);
          EXPECT_NEAR(z.value().at(n, 2 + c, y, w), s.imag(y, w), 1e-12);
        }
    }
  EXPECT_LT(max_abs_diff(ops::ifft2(z).value(), x), 1e-12);
}

TEST(Ops, ReductionsMatchDirectSums) {
  const Tensor<D> x = rand_t({2, 3, 4, 5}, 9);
  double s = 0, a = 0, q = 0;
  for (D v : x.vec()) {
    s += v;
    a += std::abs(v);
    q += v * v;
  }
  const double n = double(x.size());
  const VarD xv = VarD::constant(x);
  EXPECT_NEAR(ops::mean(xv).item(), s / n, 1e-15);
  EXPECT_NEAR(ops::mean_abs(xv).item(), a / n, 1e-15);
  EXPECT_NEAR(ops::rms(xv).item(), std::sqrt(q / n), 1e-15);
}

TEST(Ops, MagnitudeGradientIsZeroAtEmptyBins) {
  // Constant planes have energy only at the DC bin.
  const VarD x = VarD::param(Tensor<D>(Shape{1, 1, 4, 4}, 0.5));
  const VarD z = ops::fft2(x);
  const VarD m = ops::magnitude(z);
  backward(ops::mean(m));
  ASSERT_TRUE(x.grad().all_finite());
  const VarD zp = VarD::param(Tensor<D>(Shape{1, 2, 2, 2}, 0.0));
  backward(ops::mean(ops::magnitude(zp)));
  for (D g : zp.grad().vec()) EXPECT_EQ(g, 0.0);
}

TEST(Autodiff, SharedSubgraphAccumulatesGradients) {
  const VarD x = VarD::param(Tensor<D>::scalar(3.0));
  const VarD y = ops::mul(x, x);           // x^2
  const VarD z = ops::add(y, ops::mul(y, x));  // x^2 + x^3
  backward(z);
  EXPECT_DOUBLE_EQ(x.grad()[0], 2 * 3.0 + 3 * 9.0);
}

TEST(Autodiff, ConstantsKeepNoGraph) {
  const VarD x = cst({1, 1, 2, 2}, 1);
  const VarD y = ops::sigmoid(ops::add(x, x));
  EXPECT_FALSE(y.requires_grad());
  EXPECT_TRUE(y.node()->inputs.empty());
}

TEST(Autodiff, OpsAreDeterministic) {
  const VarD x = cst({1, 3, 8, 8}, 3), w = cst({4, 3, 3, 3}, 4);
  const auto f = [&] { return ops::gelu(ops::magnitude(ops::fft2(ops::conv2d(x, w, VarD{}, 1, 1)))).value(); };
  EXPECT_EQ(f(), f());
}

// -- grad_check itself ----------------------------------------------------------

TEST(GradCheck, IdentityIsExact) {
  const auto r = grad_check<D>("identity", [](const VarD& x) { return x; }, rand_t({1, 2, 3, 3}, 1));
  EXPECT_TRUE(r.passed);
  EXPECT_LT(r.max_rel_error, 1e-10);
}

TEST(GradCheck, SigmoidAndFftAmplitudeExamples) {
  const auto s = grad_check<D>("sigmoid", [](const VarD& x) { return ops::sigmoid(x); },
                               rand_t({1, 1, 4, 4}, 2), 1e-4);
  EXPECT_TRUE(s.passed) << s.max_rel_error;
  const auto a = grad_check<D>("fft_amplitude",
                               [](const VarD& x) { return ops::magnitude(ops::fft2(x)); },
                               rand_t({1, 1, 8, 8}, 3));
  EXPECT_TRUE(a.passed) << a.max_rel_error;
}

TEST(GradCheck, DetectsWrongGradient) {
  // Forward doubles the input but the backward reports the identity.
  const Op wrong = [](const VarD& x) {
    Tensor<D> v = x.value();
    for (auto& e : v.vec()) e *= 2;
    return make_op<D>("wrong", std::move(v), {x}, [](Node<D>& self) {
      if (auto* g = self.input_grad(0))
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    });
  };
  const auto r = grad_check<D>("wrong", wrong, rand_t({1, 1, 2, 2}, 1));
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_rel_error, 0.1);
}

TEST(GradCheck, NonFiniteGradientIsReportedNotThrown) {
  const Op bad = [](const VarD& x) {
    return make_op<D>("nan_grad", x.value(), {x}, [](Node<D>& self) {
      if (auto* g = self.input_grad(0)) (*g)[0] = std::nan("");
    });
  };
  GradCheckReport r;
  EXPECT_NO_THROW(r = grad_check<D>("nan_grad", bad, rand_t({1, 1, 2, 2}, 1)));
  EXPECT_FALSE(r.passed);
  EXPECT_FALSE(r.failure.empty());
}

TEST(GradCheck, RejectsEpsOutsideRange) {
  const Op id = [](const VarD& x) { return x; };
  EXPECT_THROW(grad_check<D>("id", id, rand_t({1, 1, 2, 2}, 1), 1e-7), InvalidInput);
  EXPECT_THROW(grad_check<D>("id", id, rand_t({1, 1, 2, 2}, 1), 0.1), InvalidInput);
}

// -- every differentiable op on three seeds ------------------------------------

TEST(GradCheckSuite, EveryOpOnThreeSeeds) {
  for (const GradCase& c : op_grad_cases())
    for (std::uint64_t seed : {11u, 22u, 33u}) {
      SCOPED_TRACE(c.name + " seed " + std::to_string(seed));
      expect_passes(c.name, c.make(seed), rand_t(c.input, seed, c.lo, c.hi));
    }
}

TEST(GradCheckSuite, CoversEveryRequiredOp) {
  std::vector<std::string> names;
  for (const auto& c : op_grad_cases()) names.push_back(c.name);
  for (auto op : required_ops()) {
    const bool found = std::any_of(names.begin(), names.end(), [&](const std::string& n) {
      return n.rfind(std::string(op), 0) == 0;
    });
    EXPECT_TRUE(found) << op;
  }
}

}  // namespace
}  // namespace uwe
