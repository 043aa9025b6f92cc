#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "rlpa/quadrature.hpp"
#include "rlpa/simulate.hpp"

using namespace rlpa;

namespace {

// Kolmogorov-Smirnov statistic against a continuous CDF.
template <class Cdf>
double ks_statistic(std::vector<double> v, const Cdf& cdf) {
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = cdf(v[i]);
    d = std::max({d, (i + 1) / n - f, f - i / n});
  }
  return d;
}

double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

}  // namespace

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  auto a = CounterRng::stream(42, 0), b = CounterRng::stream(42, 0), c = CounterRng::stream(42, 1);
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
  }
  EXPECT_EQ(design_stream(3), 6u);
  EXPECT_EQ(noise_stream(3), 7u);
}

TEST(Rng, UniformOpenInterval) {
  auto r = CounterRng::stream(1, 0);
  double mean = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    mean += u;
  }
  EXPECT_NEAR(mean / 100000, 0.5, 0.005);
}

TEST(Target, Evaluation) {
  const std::vector<double> x{0.25, 0.75};
  EXPECT_DOUBLE_EQ(TargetSpec(ConstantTarget{3.0})(x), 3.0);
  EXPECT_DOUBLE_EQ(TargetSpec(PolynomialTarget{{1.0, 2.0, 3.0}, 1, 0.5})(x), 1.0 + 2.0 * 0.25 + 3.0 * 0.0625);
  EXPECT_DOUBLE_EQ(TargetSpec(CuspTarget{{0.5, 0.5}, {1.0, 2.0}, {1.0, 4.0}})(x), 0.25 + 4.0 * 0.0625);
  EXPECT_NEAR(TargetSpec(SinusoidTarget{2.0, 1.0, 0.0, 0})(x), 2.0, 1e-15);
  EXPECT_THROW(TargetSpec(SinusoidTarget{1.0, 1.0, 0.0, 3})(x), DimensionError);
}

TEST(Target, HolderMetadata) {
  const auto cusp = TargetSpec(CuspTarget{{0.5}, {0.4}, {2.0}}).holder();
  EXPECT_DOUBLE_EQ(cusp.beta, 0.4);
  EXPECT_DOUBLE_EQ(cusp.L, 2.0);
  const auto over = TargetSpec(ConstantTarget{1.0}, HolderInfo{1.5, 2.0, 3.0}).holder();
  EXPECT_DOUBLE_EQ(over.beta, 1.5);
}

TEST(Design, CdfInverse) {
  EXPECT_DOUBLE_EQ(design_cdf_inverse(UniformDesign{}, 0.3), 0.3);
  const DesignSpec deg = DegenerateDesign{1.0, 0.5};
  EXPECT_NEAR(design_cdf_inverse(deg, 0.5), 0.5, 1e-15);
  // F(x) = (0.25 - (0.5 - x)^2) / 0.5 for x <= 0.5, so F^{-1}(0.125) = 0.5 - sqrt(0.1875).
  EXPECT_NEAR(design_cdf_inverse(deg, 0.125), 0.5 - std::sqrt(0.1875), 1e-14);
  for (double p : {0.01, 0.2, 0.7, 0.99}) EXPECT_NEAR(design_cdf(deg, design_cdf_inverse(deg, p)), p, 1e-14);
  EXPECT_THROW(design_cdf_inverse(deg, 1.5), DomainError);
}

TEST(Design, DensityIntegratesToOne) {
  // x = 0.4 +- len v^2 keeps the integrand finite at the center when s < 0.
  for (double s : {-0.5, 1.0, 2.0}) {
    const DesignSpec d = DegenerateDesign{s, 0.4};
    double mass = 0.0;
    for (const auto& [sign, len] : {std::pair{-1.0, 0.4}, std::pair{1.0, 0.6}}) {
      mass += quad::integrate(
          quad::Rule::AdaptiveSimpson,
          [&](double v) {
            const double x = 0.4 + sign * len * v * v;
            // Below v ~ 1e-8 the offset rounds away; that band holds O(1e-8) mass when s < 0.
            if (x == 0.4) return 0.0;
            return design_density(d, std::span<const double>(&x, 1)) * 2.0 * len * v;
          },
          0.0, 1.0, {1e-11, 1e-15});
    }
    EXPECT_NEAR(mass, 1.0, s < 0.0 ? 1e-7 : 1e-9) << "s=" << s;
  }
}

TEST(Design, SampleMatchesCdf) {
  for (double s : {2.0, -0.5}) {
    const DesignSpec d = DegenerateDesign{s, 0.5};
    auto rng = CounterRng::stream(5, 0);
    const auto x = sample_design(d, 1, 100000, rng);
    EXPECT_LT(ks_statistic(x, [&](double t) { return design_cdf(d, t); }), ks_critical_1pct(x.size()));
    const double in_band = std::count_if(x.begin(), x.end(), [](double v) { return v >= 0.45 && v <= 0.55; });
    EXPECT_NEAR(in_band / 1e5, design_cdf(d, 0.55) - design_cdf(d, 0.45), 0.005);
  }
}

TEST(Noise, GaussianMean) {
  auto rng = CounterRng::stream(11, 1);
  const auto v = sample_noise(gaussian_noise(), 100000, rng);
  double m = 0.0;
  for (double x : v) m += x;
  EXPECT_LT(std::abs(m / v.size()), 3.0 / std::sqrt(1e5));
}

TEST(Noise, ContaminationZeroIsNormal) {
  auto rng = CounterRng::stream(12, 1);
  const auto v = sample_noise(contaminated_noise(0.0, cauchy_noise()), 20000, rng);
  EXPECT_LT(ks_statistic(v, special::normal_cdf), ks_critical_1pct(v.size()));
}

TEST(Noise, CauchyQuartiles) {
  auto rng = CounterRng::stream(13, 1);
  auto v = sample_noise(cauchy_noise(), 100000, rng);
  std::sort(v.begin(), v.end());
  EXPECT_NEAR(v[50000], 0.0, 3.0 * (std::numbers::pi / 2.0) / std::sqrt(1e5));
  EXPECT_NEAR(v[75000] - v[25000], 2.0, 0.05);
}

TEST(Noise, SamplesFollowCdf) {
  for (const auto& spec : {student_t_noise(3.0), contaminated_noise(0.25, cauchy_noise()),
                           least_favorable_noise(0.1)}) {
    auto rng = CounterRng::stream(14, 1);
    const auto v = sample_noise(spec, 20000, rng);
    EXPECT_LT(ks_statistic(v, [&](double t) { return spec.cdf(t); }), ks_critical_1pct(v.size()));
  }
}

TEST(Noise, DensitiesIntegrateToOne) {
  for (const auto& spec : {gaussian_noise(2.0), student_t_noise(3.0), cauchy_noise(0.5),
                           contaminated_noise(0.2, student_t_noise(1.5)), least_favorable_noise(0.05)}) {
    const double mass = quad::integrate_real_line(
        quad::Rule::GaussLegendre, [&](double t) { return spec.pdf(t); }, spec.breakpoints(), {1e-12, 1e-300});
    EXPECT_NEAR(mass, 1.0, 1e-9);
    EXPECT_DOUBLE_EQ(spec.pdf(1.3), spec.pdf(-1.3));
  }
}

TEST(LeastFavorable, DensityValues) {
  EXPECT_NEAR(g0_density(0.0, 0.1), 0.9 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_DOUBLE_EQ(g0_density(2.5, 0.1), g0_density(-2.5, 0.1));
  EXPECT_THROW(g0_density(0.0, 1.0), DomainError);
  EXPECT_DOUBLE_EQ(g0_density(0.7, 0.0), special::normal_pdf(0.7));
}

TEST(Sample, ZeroNoiseGivesTarget) {
  ModelSpec m;
  m.target = TargetSpec(SinusoidTarget{1.0, 2.0, 0.1, 0});
  m.noise_level = ConstantLevel{0.0};
  const auto s = generate_sample(m, 200, 3);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(s.y[i], m.target(s.point(i)));
}

TEST(Sample, ResponseVariance) {
  ModelSpec m;
  const auto s = generate_sample(m, 10000, 4);
  double mean = 0.0, var = 0.0;
  for (double y : s.y) mean += y;
  mean /= s.size();
  for (double y : s.y) var += (y - mean) * (y - mean);
  EXPECT_NEAR(var / (s.size() - 1), 1.0, 0.05);
}

TEST(Sample, PowerDistanceBound) {
  ModelSpec m;
  m.noise_level = PowerDistanceLevel{1.0, {0.5}};
  m.noise = cauchy_noise();
  const auto s = generate_sample(m, 1000, 5);
  auto rng = CounterRng::stream(5, noise_stream(0));
  const auto xi = sample_noise(m.noise, 1000, rng);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(std::abs(s.y[i]), std::abs(s.x[i] - 0.5) * std::abs(xi[i]));
}

TEST(Sample, Reproducible) {
  ModelSpec m;
  m.d = 2;
  m.noise = student_t_noise(2.0);
  const auto a = generate_sample(m, 3, 77), b = generate_sample(m, 3, 77);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  const auto c = generate_sample(m, 3, 78);
  EXPECT_NE(a.x, c.x);
}

TEST(Sample, NoiseSeedLeavesDesign) {
  ModelSpec m;
  const auto a = generate_sample(m, 50, 9, 1, 0), b = generate_sample(m, 50, 9, 2, 0);
  EXPECT_EQ(a.x, b.x);
  EXPECT_NE(a.y, b.y);
}

TEST(Sample, CsvRoundTrip) {
  ModelSpec m;
  m.d = 2;
  const auto s = generate_sample(m, 25, 10);
  std::stringstream ss;
  write_sample_csv(ss, s);
  const auto text = ss.str();
  const auto back = read_sample_csv(ss);
  EXPECT_EQ(back.d, 2u);
  EXPECT_EQ(back.x, s.x);
  EXPECT_EQ(back.y, s.y);
  std::stringstream again;
  write_sample_csv(again, back);
  EXPECT_EQ(again.str(), text);
}

TEST(Sample, CsvErrors) {
  std::stringstream bad_header("a,y\n0.1,0.2\n");
  EXPECT_THROW(read_sample_csv(bad_header), ConfigError);
  std::stringstream short_row("x1,y\n0.1\n");
  EXPECT_THROW(read_sample_csv(short_row), ConfigError);
  std::stringstream junk("x1,y\n0.1,abc\n");
  EXPECT_THROW(read_sample_csv(junk), ConfigError);
}

TEST(Model, Validation) {
  ModelSpec m;
  m.d = 2;
  m.design = DegenerateDesign{1.0, 0.5};
  EXPECT_THROW(generate_sample(m, 10, 1), DimensionError);
  ModelSpec bad;
  bad.design = DegenerateDesign{-1.5, 0.5};
  EXPECT_THROW(generate_sample(bad, 10, 1), DomainError);
}
