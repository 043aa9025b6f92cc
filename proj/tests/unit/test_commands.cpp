#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "rlpa/commands.hpp"

using namespace rlpa;

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("rlpa_cmd_" + name);
  fs::remove_all(p);
  return p;
}

const char* kFixedFit = R"({
  "model": {"d": 1, "target": {"type": "sinusoid", "amplitude": 1.0, "frequency": 1.0, "phase": 0.3, "axis": 0}},
  "n": 2000,
  "seed": 42,
  "estimator": {"method": "fixed", "degree": 1, "contrasts": [{"type": "huber", "gamma": 1.5}],
                "bandwidth": {"h": [0.2]}}
})";

}  // namespace

TEST(Commands, FixedFitMatchesLibraryBitExactly) {
  const auto c = parse_config(kFixedFit);
  CommandOptions o;
  o.out_dir = scratch("fit").string();
  const auto files = run_command("fit", c, o);
  ASSERT_FALSE(files.empty());
  const auto report = Json::parse(read_file(fs::path(o.out_dir) / "fit.json"));

  const auto s = generate_sample(c.model, c.n, c.seed);
  LpaConfig cfg;
  cfg.x0 = {0.5};
  cfg.degree = 1;
  const auto fit = fit_lpa(s, ContrastSpec::huber(1.5), KernelSpec::symmetric(1), Bandwidth::isotropic(0.2, 1), cfg);
  EXPECT_EQ(report.at("estimate").get<double>(), fit.estimate);
  EXPECT_EQ(report.at("coefficients").get<std::vector<double>>(), fit.coeffs);
  EXPECT_TRUE(fs::exists(fs::path(o.out_dir) / "metadata.json"));
  fs::remove_all(o.out_dir);
}

TEST(Commands, NoiselessSimulateReturnsTarget) {
  auto c = parse_config(kFixedFit);
  c.model.noise_level = ConstantLevel{0.0};
  CommandOptions o;
  o.out_dir = scratch("sim").string();
  run_command("simulate", c, o);
  const auto s = load_sample_csv((fs::path(o.out_dir) / "sample.csv").string());
  ASSERT_EQ(s.size(), c.n);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::vector<double> x{s.x[i]};
    EXPECT_EQ(s.y[i], c.model.target(x));
  }
  fs::remove_all(o.out_dir);
}

TEST(Commands, NoiseSeedKeepsDesign) {
  auto c = parse_config(kFixedFit);
  CommandOptions o;
  o.out_dir = scratch("seed_a").string();
  run_command("simulate", c, o);
  const auto a = load_sample_csv((fs::path(o.out_dir) / "sample.csv").string());
  fs::remove_all(o.out_dir);
  c.noise_seed = 777;
  o.out_dir = scratch("seed_b").string();
  run_command("simulate", c, o);
  const auto b = load_sample_csv((fs::path(o.out_dir) / "sample.csv").string());
  fs::remove_all(o.out_dir);
  EXPECT_EQ(a.x, b.x);
  EXPECT_NE(a.y, b.y);
}

TEST(Commands, RepeatedRunsAreByteIdentical) {
  const auto c = parse_config(kFixedFit);
  CommandOptions o;
  o.out_dir = scratch("rep_a").string();
  const auto first = run_command("fit", c, o);
  o.out_dir = scratch("rep_b").string();
  o.threads = 2;
  const auto second = run_command("fit", c, o);
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) EXPECT_EQ(read_file(first[i]), read_file(second[i]));
  fs::remove_all(scratch("rep_a"));
  fs::remove_all(scratch("rep_b"));
}

TEST(Commands, DefaultNetIsEmptyAtSmallN) {
  auto c = parse_config(kFixedFit);
  c.n = 500;
  CommandOptions o;
  o.out_dir = scratch("net").string();
  try {
    run_command("lepski-iso", c, o);
    FAIL() << "expected NetEmpty";
  } catch (...) {
    const auto e = std::current_exception();
    EXPECT_EQ(exit_code_for(e), kExitMethod);
    EXPECT_THROW(std::rethrow_exception(e), NetEmpty);
  }
  fs::remove_all(o.out_dir);
}

TEST(Commands, OverridesValidated) {
  const auto c = parse_config(kFixedFit);
  CommandOptions o;
  o.out_dir = scratch("ovr").string();
  o.epsilon = 1.5;
  EXPECT_THROW(run_command("fit", c, o), ConfigError);
  o.epsilon.reset();
  o.q = 0.0;
  EXPECT_THROW(run_command("fit", c, o), ConfigError);
  o.q.reset();
  o.threshold_multiplier = -1.0;
  EXPECT_THROW(run_command("fit", c, o), ConfigError);
  EXPECT_THROW(run_command("nope", c, CommandOptions{}), ConfigError);
  fs::remove_all(o.out_dir);
}

TEST(Commands, ExitCodes) {
  const auto code = [](auto ex) { return exit_code_for(std::make_exception_ptr(ex)); };
  EXPECT_EQ(code(ConfigError("x")), kExitConfig);
  EXPECT_EQ(code(DomainError("x")), kExitConfig);
  EXPECT_EQ(code(DimensionError("x")), kExitConfig);
  EXPECT_EQ(code(NetEmpty("x")), kExitMethod);
  EXPECT_EQ(code(AllInvalid()), kExitMethod);
  EXPECT_EQ(code(EmptyWindow()), kExitMethod);
  EXPECT_EQ(code(std::runtime_error("x")), kExitInternal);
  EXPECT_EQ(code(Error("x")), kExitInternal);
}

TEST(Commands, Names) {
  EXPECT_EQ(command_names().size(), 8u);
}
