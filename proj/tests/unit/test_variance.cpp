#include <cmath>
#include <limits>
#include <sstream>

#include <gtest/gtest.h>

#include "rlpa/variance.hpp"

using namespace rlpa;

using V = std::vector<double>;

namespace {

SampleSet make_sample(V x, V y) {
  SampleSet s;
  s.d = 1;
  s.x = std::move(x);
  s.y = std::move(y);
  return s;
}

const KernelSpec k1 = KernelSpec::symmetric(1);

}  // namespace

TEST(EmpiricalVariance, TwoPointHand) {
  const auto s = make_sample({0.45, 0.55}, {1.0, -1.0});
  LpaConfig cfg;
  const auto ld = make_local_design(s, k1, Bandwidth::isotropic(0.5, 1), cfg);
  const V resid{1.0, -1.0};
  const auto rep = variance_from_residuals(ld, ContrastSpec::huber(10.0), k1, resid);
  EXPECT_NEAR(rep.numerator_core, std::sqrt(2.0), 1e-14);
  EXPECT_NEAR(rep.denominator, 2.0, 1e-14);
  const double ln2 = std::log(2.0);
  EXPECT_NEAR(rep.penalty, 10.0 * ln2 * ln2 / 1.0, 1e-14);
  const double r = (std::sqrt(2.0) + 10.0 * ln2 * ln2) / 2.0;
  EXPECT_NEAR(rep.v_hat, r * r, 1e-12);
  EXPECT_TRUE(rep.valid);
}

TEST(EmpiricalVariance, ZeroResiduals) {
  const auto s = make_sample({0.4, 0.5, 0.6, 0.9}, {0, 0, 0, 0});
  LpaConfig cfg;
  const auto ld = make_local_design(s, k1, Bandwidth::isotropic(0.4, 1), cfg);
  const auto rep = variance_from_residuals(ld, ContrastSpec::huber(3.0), k1, V(3, 0.0));
  EXPECT_EQ(rep.numerator_core, 0.0);
  EXPECT_DOUBLE_EQ(rep.denominator, 3.0 * 2.5 / 4.0);
  EXPECT_DOUBLE_EQ(rep.v_hat, std::pow(rep.penalty / rep.denominator, 2));
}

TEST(EmpiricalVariance, VanishingCurvatureIsInvalid) {
  const auto s = make_sample({0.45, 0.55}, {5.0, -5.0});
  LpaConfig cfg;
  const auto ld = make_local_design(s, k1, Bandwidth::isotropic(0.5, 1), cfg);
  const auto rep = variance_from_residuals(ld, ContrastSpec::huber(1.0), k1, V{5.0, -5.0});
  EXPECT_EQ(rep.denominator, 0.0);
  EXPECT_FALSE(rep.valid);
  EXPECT_TRUE(std::isinf(rep.v_hat));
}

TEST(Grid, Geometric) {
  const auto g = geometric_grid(0.5, 8.0, 5);
  EXPECT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.front(), 0.5);
  EXPECT_DOUBLE_EQ(g.back(), 8.0);
  EXPECT_NEAR(g[2], 2.0, 1e-14);
  EXPECT_THROW(geometric_grid(0.0, 1.0, 3), DomainError);
  EXPECT_EQ(median_of({3.0, 1.0, 2.0}), 2.0);
  EXPECT_EQ(median_of({4.0, 1.0, 2.0, 3.0}), 2.5);
  EXPECT_EQ(mad_of({1.0, 2.0, 3.0, 4.0, 100.0}), 1.0);
}

TEST(Grid, DefaultHuberContainsOne) {
  ModelSpec m;
  m.noise = gaussian_noise(0.01);
  const auto s = generate_sample(m, 500, 1);
  LpaConfig cfg;
  const auto grid = default_huber_grid(s, Bandwidth::isotropic(0.3, 1), cfg);
  EXPECT_EQ(grid.size(), 12u);
  EXPECT_LE(grid.front().gamma(), 1.0);
  EXPECT_GE(grid.back().gamma(), 1.0);
}

TEST(SelectLambda, SingleCandidate) {
  ModelSpec m;
  const auto s = generate_sample(m, 400, 2);
  LpaConfig cfg;
  const LambdaGrid g{{ContrastSpec::huber(1.5)}, {k1}};
  const auto sel = select_lambda(s, g, Bandwidth::isotropic(0.3, 1), cfg);
  EXPECT_EQ(sel.chosen, 0u);
  EXPECT_EQ(sel.best().contrast, ContrastSpec::huber(1.5));
}

TEST(SelectLambda, MinimizesVhatAndExcludesOutsideKernels) {
  ModelSpec m;
  m.noise = contaminated_noise(0.2, cauchy_noise());
  const auto s = generate_sample(m, 2000, 3);
  LpaConfig cfg;
  cfg.x0 = {0.2};
  LambdaGrid g{{ContrastSpec::huber(0.5), ContrastSpec::huber(2.0), ContrastSpec::arctan(1.0)}, default_kernels(1)};
  const auto h = Bandwidth::isotropic(0.5, 1);  // the left-shifted window leaves [0, 1]
  const auto sel = select_lambda(s, g, h, cfg);
  ASSERT_EQ(sel.reports.size(), 9u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(sel.reports[i].excluded);
  for (const auto& r : sel.reports) {
    if (r.valid) {
      EXPECT_LE(sel.best().v_hat, r.v_hat);
    }
  }
  EXPECT_FALSE(sel.best().excluded);
  EXPECT_TRUE(sel.fits[sel.chosen].has_value());
  const auto pre = select_lambda(s, g, h, cfg, VarianceMode::PreEstimator);
  EXPECT_EQ(pre.reports.size(), 9u);
}

TEST(SelectLambda, AllInvalid) {
  const auto s = make_sample({0.45, 0.55}, {5.0, -5.0});
  LpaConfig cfg;
  // Only two points: the denominator floor 1/(n Pi_h) exceeds any achievable curvature mass.
  const LambdaGrid g{{ContrastSpec::huber(0.01)}, {k1}};
  EXPECT_THROW(select_lambda(s, g, Bandwidth::isotropic(0.5, 1), cfg), AllInvalid);
}

TEST(SelectLambda, TraceCsv) {
  ModelSpec m;
  const auto s = generate_sample(m, 300, 4);
  LpaConfig cfg;
  const LambdaGrid g{{ContrastSpec::huber(1.0), ContrastSpec::huber(2.0)}, {k1}};
  const auto sel = select_lambda(s, g, Bandwidth::isotropic(0.3, 1), cfg);
  std::ostringstream os;
  write_lambda_trace_csv(os, sel);
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "contrast,gamma,kernel_shift,numerator_core,penalty,denominator,v_hat,valid,excluded,estimate,chosen");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}

TEST(OracleVariance, GaussianQuadraticLimit) {
  ModelSpec m;
  const auto pm = PopulationModel::from(m);
  const auto h = Bandwidth::isotropic(0.2, 1);
  const auto o = oracle_variance_parts(pm, ContrastSpec::huber(1e6), k1, h, V{0.5}, 1000);
  // Pi_h E[K_h^2] = 1 and E[K_h] = 1 for the uniform design.
  EXPECT_NEAR(o.numerator, 1.0, 1e-9);
  EXPECT_NEAR(o.denominator, 1.0, 1e-9);
  EXPECT_NEAR(o.v / std::pow(1.0 + o.penalty, 2), 1.0, 1e-9);
}

TEST(OracleVariance, ZeroNoise) {
  ModelSpec m;
  m.noise_level = ConstantLevel{0.0};
  const auto o = oracle_variance_parts(PopulationModel::from(m), ContrastSpec::huber(1.0), k1,
                                       Bandwidth::isotropic(0.2, 1), V{0.5}, 1000);
  EXPECT_EQ(o.numerator, 0.0);
  EXPECT_NEAR(o.denominator, 1.0, 1e-12);
}

TEST(OracleVariance, HuberGaussianClosedForm) {
  // E psi^2 = 2 int_0^g z^2 phi + 2 g^2 (1 - Phi(g)), E rho'' = 2 Phi(g) - 1.
  ModelSpec m;
  const double g = 1.3;
  const auto o = oracle_variance_parts(PopulationModel::from(m), ContrastSpec::huber(g), k1,
                                       Bandwidth::isotropic(0.25, 1), V{0.5}, 5000);
  const double Phi = special::normal_cdf(g), phi = special::normal_pdf(g);
  const double psi2 = (2.0 * Phi - 1.0) - 2.0 * g * phi + 2.0 * g * g * (1.0 - Phi);
  EXPECT_NEAR(o.numerator, psi2, 1e-10);
  EXPECT_NEAR(o.denominator, 2.0 * Phi - 1.0, 1e-10);
}

TEST(OracleVariance, DegenerateScaling) {
  // s = 1, sigma = |x - 1/2|^(1/2): numerator ~ h^2, denominator ~ h.
  ModelSpec m;
  m.design = DegenerateDesign{1.0, 0.5};
  m.noise_level = PowerDistanceLevel{0.5, {0.5}};
  const auto pm = PopulationModel::from(m);
  const auto c = ContrastSpec::huber(5.0);
  const auto a = oracle_variance_parts(pm, c, k1, Bandwidth::isotropic(0.2, 1), V{0.5}, 1000);
  const auto b = oracle_variance_parts(pm, c, k1, Bandwidth::isotropic(0.1, 1), V{0.5}, 1000);
  EXPECT_NEAR(a.numerator / b.numerator, 4.0, 0.04);
  EXPECT_NEAR(a.denominator / b.denominator, 2.0, 0.02);
}

TEST(OracleVariance, RulesAgreeOnHardCases) {
  ModelSpec m;
  m.design = DegenerateDesign{-0.5, 0.5};
  m.noise_level = PowerDistanceLevel{0.5, {0.5}};
  m.noise = cauchy_noise();
  const auto pm = PopulationModel::from(m);
  QuadratureSettings gl;
  gl.rule = quad::Rule::GaussLegendre;
  const auto c = ContrastSpec::huber(0.3);
  const auto h = Bandwidth::isotropic(0.2, 1);
  const double a = oracle_variance_parts(pm, c, k1, h, V{0.5}, 4096).v;
  const double b = oracle_variance_parts(pm, c, k1, h, V{0.5}, 4096, gl).v;
  EXPECT_NEAR(a / b, 1.0, 1e-8);
}

TEST(OracleVariance, TwoDimensional) {
  ModelSpec m;
  m.d = 2;
  const auto o = oracle_variance_parts(PopulationModel::from(m), ContrastSpec::huber(1e6), KernelSpec::symmetric(2),
                                       Bandwidth(V{0.2, 0.3}), V{0.5, 0.5}, 1000);
  EXPECT_NEAR(o.numerator, 1.0, 1e-8);
  EXPECT_NEAR(o.denominator, 1.0, 1e-8);
}

TEST(OracleVariance, WindowOutsideCube) {
  ModelSpec m;
  EXPECT_THROW(oracle_variance_parts(PopulationModel::from(m), ContrastSpec::huber(1.0), k1,
                                     Bandwidth::isotropic(0.5, 1), V{0.1}, 100),
               DomainError);
}

TEST(Entropy, BoundPlugIn) {
  EntropyConfig cfg;
  cfg.M = 1.0;
  EXPECT_NEAR(entropy_bound(cfg, 1.0), 2.0 * std::log(384.0), 1e-12);
  EXPECT_GT(entropy_bound(cfg, 0.5), entropy_bound(cfg, 1.0));
  EXPECT_THROW(entropy_bound(cfg, 0.0), DomainError);
}

TEST(Entropy, B0) {
  EXPECT_EQ(b0_constant([](double) { return 0.0; }, 100.0), 0.0);
  EntropyConfig cfg;
  cfg.M = 1.0;
  cfg.n = std::exp(4.0);
  // Oracle by direct quadrature in u with the singular endpoint handled by a fine split.
  const double integral = quad::integrate_with_breaks(
      quad::Rule::GaussLegendre, [&](double u) { return std::sqrt(entropy_bound(cfg, u)); }, 1e-300, 1.0,
      {1e-200, 1e-100, 1e-50, 1e-20, 1e-10, 1e-5, 1e-2}, {1e-12, 1e-300});
  const double expect = 27.0 * integral + 4.0 * 2.0 * std::log(384.0) / 16.0;
  EXPECT_NEAR(b0_constant(cfg), expect, 1e-4);
  EXPECT_NEAR(b0_constant(cfg, quad::Rule::GaussLegendre), b0_constant(cfg), 1e-8);
  EXPECT_GT(bz_constant(cfg, 2.0), b0_constant(cfg));
}

TEST(Diagnostics, GaussianHuber) {
  ModelSpec m;
  const auto pm = PopulationModel::from(m);
  LpaConfig cfg;
  cfg.degree = 1;
  EntropyConfig e;
  e.n = 1000;
  const auto d = diagnostics(pm, ContrastSpec::huber(1.0), k1, Bandwidth::isotropic(0.2, 1), cfg, 1000, 2.0, 1.0, e);
  // Constant noise level: Phi_h is E rho'' times the smallest eigenvalue of the moment matrix diag(1, 1/12).
  EXPECT_NEAR(d.phi_h, (2.0 * special::normal_cdf(1.0) - 1.0) / 12.0, 1e-9);
  EXPECT_NEAR(d.expected_kh, 1.0, 1e-12);
  EXPECT_NEAR(d.bias_proxy, 0.04, 1e-15);
  EXPECT_NEAR(d.inf_curvature, 2.0 * special::normal_cdf(1.0) - 1.0, 1e-9);
}

TEST(Diagnostics, NoCurvatureMass) {
  // Tiny Huber scale against a huge noise level: rho'' carries almost no mass.
  ModelSpec m;
  m.noise_level = ConstantLevel{1e4};
  const auto pm = PopulationModel::from(m);
  LpaConfig cfg;
  EntropyConfig e;
  const auto d = diagnostics(pm, ContrastSpec::huber(1e-6), k1, Bandwidth::isotropic(0.2, 1), cfg, 1000, 1.0, 1.0, e);
  EXPECT_LT(d.phi_h, 1e-9);
  EXPECT_FALSE(d.condition1_ok);
}

TEST(SelectLambda, GaussianTracksOracleMinimizer) {
  ModelSpec m;
  const auto pm = PopulationModel::from(m);
  const std::size_t n = 4096;
  const auto h = Bandwidth::isotropic(std::pow(static_cast<double>(n), -0.2), 1);
  const V gammas{0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  LambdaGrid g{{}, {k1}};
  for (double gm : gammas) g.contrasts.push_back(ContrastSpec::huber(gm));
  LpaConfig cfg;
  // Oracle minimizer of V over the grid at this (n, h).
  std::size_t star = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    const double v = oracle_variance_parts(pm, g.contrasts[i], k1, h, cfg.x0, n).v;
    if (v < best) {
      best = v;
      star = i;
    }
  }
  std::size_t hits = 0;
  const std::size_t R = 100;
  for (std::size_t r = 0; r < R; ++r) {
    const auto s = generate_sample(m, n, 300 + r);
    if (select_lambda(s, g, h, cfg).chosen >= star) ++hits;
  }
  EXPECT_GE(static_cast<double>(hits) / R, 0.80) << "oracle minimizer gamma = " << gammas[star];
}

TEST(SelectLambda, CauchyRejectsQuasiLeastSquares) {
  ModelSpec m;
  m.noise = cauchy_noise();
  const std::size_t n = 4096;
  const auto h = Bandwidth::isotropic(std::pow(static_cast<double>(n), -0.2), 1);
  LambdaGrid g{{}, {k1}};
  for (double gm : {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 1e6}) g.contrasts.push_back(ContrastSpec::huber(gm));
  LpaConfig cfg;
  std::size_t below = 0;
  const std::size_t R = 100;
  for (std::size_t r = 0; r < R; ++r) {
    const auto s = generate_sample(m, n, 700 + r);
    if (select_lambda(s, g, h, cfg).best().contrast.gamma() < 1e6) ++below;
  }
  EXPECT_GE(static_cast<double>(below) / R, 0.95);
}
