#include <cmath>

#include <gtest/gtest.h>

#include "rlpa/lpa.hpp"

using namespace rlpa;

using V = std::vector<double>;

namespace {

SampleSet make_sample(std::size_t d, V x, V y) {
  SampleSet s;
  s.d = d;
  s.x = std::move(x);
  s.y = std::move(y);
  return s;
}

}  // namespace

TEST(MultiIndex, Monomials) {
  EXPECT_EQ(MultiIndexSet(1, 2).monomials(V{0.5}), (V{1.0, 0.5, 0.25}));
  EXPECT_EQ(MultiIndexSet(2, 1).monomials(V{0.3, -0.7}), (V{1.0, 0.3, -0.7}));
  EXPECT_EQ(MultiIndexSet(2, 2).monomials(V{0.0, 0.0}), (V{1.0, 0.0, 0.0, 0.0, 0.0, 0.0}));
  EXPECT_EQ(MultiIndexSet(3, 2).size(), 10u);
}

TEST(Criterion, EmptyWindowIsZero) {
  const auto s = make_sample(1, {0.05, 0.95}, {1.0, 2.0});
  LpaConfig cfg;
  const V t{0.3};
  EXPECT_EQ(criterion_value(s, ContrastSpec::huber(1.0), KernelSpec::symmetric(1), Bandwidth::isotropic(0.2, 1), cfg,
                            t),
            0.0);
}

TEST(Criterion, SinglePointAtFit) {
  const auto s = make_sample(1, {0.5}, {1.7});
  LpaConfig cfg;
  EXPECT_EQ(criterion_value(s, ContrastSpec::huber(1.0), KernelSpec::symmetric(1), Bandwidth::isotropic(0.2, 1), cfg,
                            V{1.7}),
            0.0);
}

TEST(Criterion, TwoPointHand) {
  // Both points in the window, K_h = 2, residuals 1 and -2 in the quadratic regime.
  const auto s = make_sample(1, {0.45, 0.6}, {1.0, -2.0});
  LpaConfig cfg;
  const double v = criterion_value(s, ContrastSpec::huber(10.0), KernelSpec::symmetric(1),
                                   Bandwidth::isotropic(0.5, 1), cfg, V{0.0});
  EXPECT_DOUBLE_EQ(v, (0.5 * 1.0 * 2.0 + 0.5 * 4.0 * 2.0) / 2.0);
}

TEST(Criterion, GradientQuadraticRegime) {
  const auto s = make_sample(1, {0.45, 0.6, 0.52}, {1.0, -2.0, 0.5});
  LpaConfig cfg;
  const double t = 0.2;
  const auto g = criterion_gradient(s, ContrastSpec::huber(1e6), KernelSpec::symmetric(1),
                                    Bandwidth::isotropic(0.5, 1), cfg, V{t});
  const double expect = -((1.0 - t) + (-2.0 - t) + (0.5 - t)) * 2.0 / 3.0;
  EXPECT_NEAR(g[0], expect, 1e-14);
  const auto zero = criterion_gradient(s, ContrastSpec::huber(1.0), KernelSpec::symmetric(1),
                                       Bandwidth::isotropic(0.01, 1), cfg, V{t});
  EXPECT_EQ(zero[0], 0.0);
}

TEST(Fit, WeightedMeanInQuadraticRegime) {
  const auto s = make_sample(1, {0.41, 0.47, 0.5, 0.58, 0.9}, {1.0, 2.0, 4.0, 7.0, 100.0});
  LpaConfig cfg;
  const auto fit = fit_lpa(s, ContrastSpec::huber(1e3), KernelSpec::symmetric(1), Bandwidth::isotropic(0.4, 1), cfg);
  EXPECT_NEAR(fit.estimate, 3.5, 1e-6);
  EXPECT_EQ(fit.effective_n, 4u);
  EXPECT_TRUE(fit.converged);
}

TEST(Fit, ClippedToBox) {
  const auto s = make_sample(1, {0.45, 0.55}, {50.0, 60.0});
  LpaConfig cfg;
  cfg.box = 10.0;
  const auto fit = fit_lpa(s, ContrastSpec::huber(1e3), KernelSpec::symmetric(1), Bandwidth::isotropic(0.4, 1), cfg);
  EXPECT_NEAR(fit.estimate, 10.0, 1e-12);
}

TEST(Fit, MedianRegime) {
  const auto s = make_sample(1, {0.45, 0.5, 0.55}, {1.0, 2.0, 10.0});
  LpaConfig cfg;
  const auto fit = fit_lpa(s, ContrastSpec::huber(1e-4), KernelSpec::symmetric(1), Bandwidth::isotropic(0.4, 1), cfg);
  EXPECT_NEAR(fit.estimate, 2.0, 1e-2);
}

TEST(Fit, LinearInterpolation) {
  // Noiseless line: the local linear fit recovers (a, b h) exactly.
  const double a = 1.5, b = -3.0, h = 0.4;
  V x, y;
  for (int i = 0; i < 9; ++i) {
    x.push_back(0.32 + 0.045 * i);
    y.push_back(a + b * (x.back() - 0.5));
  }
  const auto s = make_sample(1, x, y);
  LpaConfig cfg;
  cfg.degree = 1;
  for (const auto& c : {ContrastSpec::huber(1.0), ContrastSpec::arctan(0.5)}) {
    const auto fit = fit_lpa(s, c, KernelSpec::symmetric(1), Bandwidth::isotropic(h, 1), cfg);
    EXPECT_NEAR(fit.coeffs[0], a, 1e-6);
    EXPECT_NEAR(fit.coeffs[1], b * h, 1e-6);
  }
}

TEST(Fit, Errors) {
  const auto s = make_sample(1, {0.05}, {1.0});
  LpaConfig cfg;
  EXPECT_THROW(fit_lpa(s, ContrastSpec::huber(1.0), KernelSpec::symmetric(1), Bandwidth::isotropic(0.2, 1), cfg),
               EmptyWindow);
  LpaConfig bad;
  bad.x0 = {1.0};
  EXPECT_THROW(fit_lpa(s, ContrastSpec::huber(1.0), KernelSpec::symmetric(1), Bandwidth::isotropic(0.2, 1), bad),
               DomainError);
  bad.x0 = {0.5, 0.5};
  EXPECT_THROW(fit_lpa(s, ContrastSpec::huber(1.0), KernelSpec::symmetric(1), Bandwidth::isotropic(0.2, 1), bad),
               DimensionError);
}

TEST(Fit, TranslationEquivariance) {
  const auto base = make_sample(1, {0.42, 0.46, 0.49, 0.53, 0.57}, {0.3, -1.2, 2.5, 0.1, 0.9});
  auto shifted = base;
  for (double& v : shifted.y) v += 2.0;
  LpaConfig cfg;
  const auto k = KernelSpec::symmetric(1);
  const auto h = Bandwidth::isotropic(0.4, 1);
  const auto c = ContrastSpec::huber(0.7);
  EXPECT_NEAR(fit_lpa(shifted, c, k, h, cfg).estimate, fit_lpa(base, c, k, h, cfg).estimate + 2.0, 1e-7);
}

TEST(Fit, Deterministic) {
  const auto t = make_sample(2, {0.4, 0.5, 0.55, 0.6, 0.45, 0.52, 0.48, 0.58}, {1.0, 2.0, 0.5, -1.0});
  LpaConfig cfg;
  cfg.x0 = {0.5, 0.5};
  cfg.degree = 1;
  const auto f1 = fit_lpa(t, ContrastSpec::huber(1.0), KernelSpec::symmetric(2), Bandwidth::isotropic(0.5, 2), cfg);
  const auto f2 = fit_lpa(t, ContrastSpec::huber(1.0), KernelSpec::symmetric(2), Bandwidth::isotropic(0.5, 2), cfg);
  EXPECT_EQ(f1.coeffs, f2.coeffs);
  EXPECT_EQ(f1.iterations, f2.iterations);
}
