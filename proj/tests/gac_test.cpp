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
#include <random>

#include <gtest/gtest.h>

#include "uwe/gac.hpp"
#include "uwe/gradcheck.hpp"

namespace uwe {
namespace {

using VarD = Var<double>;

Tensor<double> rand_img(Shape s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return uniform_tensor<double>(s, rng, 0.0, 1.0);
}

int reflect(int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); }

// Direct per-pixel Sobel with mirrored borders.
Tensor<double> sobel_oracle(const Tensor<double>& x) {
  const Shape& s = x.shape();
  Tensor<double> out(s);
  const int kx[3][3] = {{-1, 0, 1}, {-2, 0, 2}, {-1, 0, 1}};
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int z = 0; z < s.w; ++z) {
          double gx = 0, gy = 0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dz = -1; dz <= 1; ++dz) {
              const double v = x.at(n, c, reflect(y + dy, s.h), reflect(z + dz, s.w));
              gx += kx[dy + 1][dz + 1] * v;
              gy += kx[dz + 1][dy + 1] * v;
            }
          out.at(n, c, y, z) = std::sqrt(gx * gx + gy * gy) / (4 * std::sqrt(2.0));
        }
  return out;
}

TEST(Sobel, ConstantImageIsExactlyZero) {
  for (double c : {0.0, 0.3, 1.0 / 3.0, 1.0}) {
    const auto g = sobel_gradient(Tensor<double>(Shape{2, 3, 9, 7}, c));
    for (double v : g.vec()) EXPECT_EQ(v, 0.0);
    const auto gf = sobel_gradient(Tensor<float>(Shape{1, 3, 8, 8}, static_cast<float>(c)));
    for (float v : gf.vec()) EXPECT_EQ(v, 0.0f);
  }
}

TEST(Sobel, HorizontalRampGivesEightTimesSlope) {
  const double slope = 0.05;
  Tensor<double> x(Shape{1, 1, 6, 10});
  for (int y = 0; y < 6; ++y)
    for (int z = 0; z < 10; ++z) x.at(0, 0, y, z) = slope * z;
  const auto g = sobel_gradient(x);
  for (int y = 0; y < 6; ++y)
    for (int z = 1; z < 9; ++z) EXPECT_NEAR(g.at(0, 0, y, z) * kSobelMax, 8 * slope, 1e-12);
}

TEST(Sobel, VerticalStepEdgePeaksOnEdgeColumns) {
  Tensor<double> x(Shape{1, 1, 8, 12});
  for (int y = 0; y < 8; ++y)
    for (int z = 6; z < 12; ++z) x.at(0, 0, y, z) = 1.0;
  const auto g = sobel_gradient(x);
  double max = 0;
  for (double v : g.vec()) max = std::max(max, v);
  for (int y = 0; y < 8; ++y) {
    EXPECT_DOUBLE_EQ(g.at(0, 0, y, 5), max);
    EXPECT_DOUBLE_EQ(g.at(0, 0, y, 6), max);
    for (int z : {0, 1, 2, 3, 8, 9, 10, 11}) EXPECT_EQ(g.at(0, 0, y, z), 0.0);
  }
  EXPECT_NEAR(max, 4.0 / kSobelMax, 1e-15);
}

TEST(Sobel, MatchesDirectOracleAndStaysInUnitRange) {
  const auto x = rand_img({2, 3, 11, 13}, 3);
  const auto g = sobel_gradient(x);
  EXPECT_LT(max_abs_diff(g, sobel_oracle(x)), 1e-12);
  for (double v : g.vec()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Sobel, NormalizationBoundsTheLargestResponse) {
  // The largest response on [0,1] images is |(4, 2)| = 2*sqrt(5), reached
  // by a bright right column plus the bottom-centre pixel; 4*sqrt(2) bounds it.
  Tensor<double> x(Shape{1, 1, 3, 3});
  for (int i = 0; i < 3; ++i) x.at(0, 0, i, 2) = 1.0;
  x.at(0, 0, 2, 1) = 1.0;
  EXPECT_NEAR(sobel_gradient(x).at(0, 0, 1, 1), 2 * std::sqrt(5.0) / kSobelMax, 1e-15);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 200; ++t) {
    Tensor<double> r(Shape{1, 1, 3, 3});
    for (auto& v : r.vec()) v = double(rng() & 1);
    EXPECT_LE(sobel_gradient(r).at(0, 0, 1, 1), 2 * std::sqrt(5.0) / kSobelMax + 1e-15);
  }
}

TEST(Refine, ZeroWeightsGiveOneHalf) {
  auto p = CorrectorParams<double>::make(1);
  nn::NamedParams<double> ps;
  p.refine1.collect("a", ps);
  p.refine2.collect("b", ps);
  nn::zero_params(ps);
  const auto g = refine_gradient(VarD::constant(rand_img({1, 3, 64, 64}, 2)), p);
  EXPECT_EQ(g.shape(), (Shape{1, 3, 64, 64}));
  for (double v : g.value().vec()) EXPECT_EQ(v, 0.5);
}

TEST(Refine, OutputInOpenUnitIntervalAndGradCheck) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto p = CorrectorParams<double>::make(seed);
    const auto x = rand_img({1, 3, 8, 8}, seed + 5);
    const auto g = refine_gradient(VarD::constant(x), p);
    for (double v : g.value().vec()) {
      EXPECT_GT(v, 0.0);
      EXPECT_LT(v, 1.0);
    }
    const auto r = grad_check<double>(
        "refine_gradient", [&](const VarD& v) { return refine_gradient(v, p); }, x);
    EXPECT_TRUE(r.passed) << r.max_rel_error;
  }
}

TEST(Refine, NonFiniteOutputIsNumericError) {
  auto p = CorrectorParams<double>::make(1);
  p.refine2.bias.mutable_value()[1] = std::nan("");
  EXPECT_THROW(refine_gradient(VarD::constant(rand_img({1, 3, 4, 4}, 1)), p), NumericError);
}

TEST(SobelGradient, GradCheckAwayFromFlatRegions) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = grad_check<double>("sobel", [](const VarD& v) { return sobel_gradient(v); },
                                      rand_img({1, 3, 6, 6}, seed));
    EXPECT_TRUE(r.passed) << r.max_rel_error;
  }
}

TEST(Lambda, OuterBranchesAreExact) {
  EXPECT_EQ(curricular_lambda(0.2), 0.0);
  EXPECT_EQ(curricular_lambda(0.04), 1.0);
  EXPECT_EQ(curricular_lambda(0.05), 1.0);
  EXPECT_EQ(curricular_lambda(0.1000001), 0.0);
  EXPECT_EQ(curricular_lambda(0.2, LambdaFormula::paper_literal), 0.0);
  EXPECT_EQ(curricular_lambda(0.04, LambdaFormula::paper_literal), 1.0);
}

TEST(Lambda, ContinuousMidpoint) { EXPECT_NEAR(curricular_lambda(0.075), 0.5, 1e-12); }

TEST(Lambda, LiteralVariantMiddleBranchClampsToZero) {
  for (double l : {0.051, 0.075, 0.099, 0.1}) EXPECT_EQ(curricular_lambda(l, LambdaFormula::paper_literal), 0.0);
}

TEST(Lambda, MonotoneAndContinuousOverSweep) {
  double prev = curricular_lambda(0.0);
  for (int i = 1; i <= 1000; ++i) {
    const double l = 0.2 * i / 1000.0;
    const double v = curricular_lambda(l);
    EXPECT_LE(v, prev) << l;
    EXPECT_LE(prev - v, 0.2 / 1000.0 / 0.05 + 1e-12) << "jump at " << l;
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    prev = v;
  }
}

TEST(Lambda, NegativeLossIsInvalid) {
  EXPECT_THROW(curricular_lambda(-1e-9), InvalidInput);
  EXPECT_THROW(curricular_lambda(std::nan("")), InvalidInput);
}

TEST(Blend, EndpointsAndMidpoint) {
  const auto a = VarD::constant(rand_img({1, 3, 4, 4}, 1));
  const auto b = VarD::constant(rand_img({1, 3, 4, 4}, 2));
  EXPECT_EQ(blend_gradient(a, b, 0.0).value(), b.value());
  EXPECT_EQ(blend_gradient(a, b, 1.0).value(), a.value());
  const auto m = blend_gradient(VarD::constant(Tensor<double>(Shape{1, 3, 2, 2}, 0.2)),
                                VarD::constant(Tensor<double>(Shape{1, 3, 2, 2}, 0.6)), 0.5);
  for (double v : m.value().vec()) EXPECT_NEAR(v, 0.4, 1e-15);
}

TEST(Blend, StaysBetweenInputsAndValidatesArguments) {
  const auto a = VarD::constant(rand_img({1, 3, 5, 5}, 3));
  const auto b = VarD::constant(rand_img({1, 3, 5, 5}, 4));
  for (double l : {0.1, 0.37, 0.9}) {
    const auto g = blend_gradient(a, b, l).value();
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_GE(g[i], std::min(a.value()[i], b.value()[i]) - 1e-15);
      EXPECT_LE(g[i], std::max(a.value()[i], b.value()[i]) + 1e-15);
    }
  }
  EXPECT_THROW(blend_gradient(a, b, 1.5), InvalidInput);
  EXPECT_THROW(blend_gradient(a, VarD::constant(rand_img({1, 3, 4, 5}, 1)), 0.5), InvalidInput);
}

TEST(Corrector, AlphaZeroIsBitwiseIdentity) {
  const auto x = Var<float>::constant(rand_img({2, 3, 8, 8}, 1).cast<float>());
  const auto g = Var<float>::constant(rand_img({2, 3, 8, 8}, 2).cast<float>());
  const auto a0 = Var<float>::constant(Tensor<float>::scalar(0.0f));
  EXPECT_EQ(apply_corrector(x, g, a0).value(), x.value());
}

TEST(Corrector, UnitGradientMapIsIdentityForAnyAlpha) {
  const auto x = Var<float>::constant(rand_img({1, 3, 8, 8}, 1).cast<float>());
  const auto ones = Var<float>::constant(Tensor<float>(Shape{1, 3, 8, 8}, 1.0f));
  for (float a : {-0.7f, 0.0f, 0.3f, 0.5f, 1.0f, 2.5f}) {
    const auto y = apply_corrector(x, ones, Var<float>::constant(Tensor<float>::scalar(a)));
    for (std::size_t i = 0; i < y.value().size(); ++i)
      EXPECT_NEAR(y.value()[i], x.value()[i], 4 * std::numeric_limits<float>::epsilon()) << a;
  }
}

TEST(Corrector, ZeroMapWithUnitAlphaVanishes) {
  const auto x = VarD::constant(rand_img({1, 3, 4, 4}, 1));
  const auto y = apply_corrector(x, VarD::constant(Tensor<double>(Shape{1, 3, 4, 4})),
                                 VarD::constant(Tensor<double>::scalar(1.0)));
  for (double v : y.value().vec()) EXPECT_EQ(v, 0.0);
}

TEST(Corrector, MatchesFormulaAndGradCheck) {
  const auto x = rand_img({1, 3, 5, 5}, 1);
  const auto g = VarD::constant(rand_img({1, 3, 5, 5}, 2));
  const auto a = VarD::constant(Tensor<double>::scalar(0.3));
  const auto y = apply_corrector(VarD::constant(x), g, a).value();
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_NEAR(y[i], 0.7 * x[i] + 0.3 * g.value()[i] * x[i], 1e-15);
  EXPECT_TRUE(grad_check<double>("corrector_x", [&](const VarD& v) { return apply_corrector(v, g, a); }, x).passed);
  EXPECT_TRUE(grad_check<double>("corrector_g", [&](const VarD& v) { return apply_corrector(VarD::constant(x), v, a); }, g.value()).passed);
  EXPECT_TRUE(grad_check<double>("corrector_alpha", [&](const VarD& v) { return apply_corrector(VarD::constant(x), g, v); }, a.value()).passed);
  EXPECT_THROW(apply_corrector(VarD::constant(x), VarD::constant(rand_img({1, 3, 4, 5}, 1)), a), InvalidInput);
}

TEST(GacForward, InferenceKeepsShapeAndUsesRefinedMap) {
  const auto p = CorrectorParams<double>::make(3);
  const auto x = VarD::constant(rand_img({1, 3, 16, 12}, 4));
  const auto r = gac_forward<double>(x, std::nullopt, p, false);
  EXPECT_EQ(r.x_out2.shape(), x.shape());
  EXPECT_EQ(r.state.lambda, 1.0);
  EXPECT_EQ(r.g.value(), r.g_s1.value());
  EXPECT_FALSE(r.loss_g.defined());
  const auto clamped = clamp01(r.x_out2.value());
  for (double v : clamped.vec()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(GacForward, TrainingRequiresGroundTruthGradient) {
  const auto p = CorrectorParams<double>::make(3);
  EXPECT_THROW(gac_forward<double>(VarD::constant(rand_img({1, 3, 4, 4}, 1)), std::nullopt, p, true),
               InvalidInput);
}

TEST(GacForward, ZeroLossFixedPoint) {
  const auto p = CorrectorParams<double>::make(3);
  const auto x = VarD::constant(rand_img({1, 3, 8, 8}, 5));
  const auto g_s1 = refine_gradient(sobel_gradient(x), p);
  const auto r = gac_forward<double>(x, g_s1, p, true);
  EXPECT_EQ(r.state.loss_g, 0.0);
  EXPECT_EQ(r.state.lambda, 1.0);
  EXPECT_EQ(r.g.value(), r.g_s1.value());
}

TEST(GacForward, LargeGradientLossStartsFromGroundTruth) {
  const auto p = CorrectorParams<double>::make(3);  // refined maps sit near 0.5
  const auto x = VarD::constant(rand_img({1, 3, 8, 8}, 6));
  const auto gt = VarD::constant(Tensor<double>(Shape{1, 3, 8, 8}, 0.0));
  const auto r = gac_forward<double>(x, gt, p, true);
  EXPECT_GT(r.state.loss_g, 0.1);
  EXPECT_EQ(r.state.lambda, 0.0);
  EXPECT_EQ(r.g.value(), gt.value());
  GacOptions no_cl;
  no_cl.curricular = false;
  const auto r2 = gac_forward<double>(x, gt, p, true, no_cl);
  EXPECT_EQ(r2.state.lambda, 1.0);
  EXPECT_EQ(r2.g.value(), r2.g_s1.value());
}

TEST(GacForward, LambdaIsDetachedFromTheGraph) {
  // The curriculum weight is a number, not a differentiable path: with
  // lambda = 0 no gradient reaches the refinement weights through G.
  auto p = CorrectorParams<double>::make(3);
  const auto x = VarD::constant(rand_img({1, 3, 8, 8}, 7));
  const auto gt = VarD::constant(Tensor<double>(Shape{1, 3, 8, 8}, 0.0));
  const auto r = gac_forward<double>(x, gt, p, true);
  ASSERT_EQ(r.state.lambda, 0.0);
  backward(ops::mean(r.x_out2));
  const auto& gw = p.refine1.weight.grad();
  for (double v : gw.vec()) EXPECT_EQ(v, 0.0);
  EXPECT_NE(p.alpha.grad()[0], 0.0);
}

}  // namespace
}  // namespace uwe
