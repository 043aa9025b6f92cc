// Command-line front end: rlpa <command> --config FILE [options]

#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rlpa/rlpa.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Robust adaptive local polynomial estimation"};
  app.require_subcommand(1, 1);

  std::string config_path;
  rlpa::CommandOptions opts;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<double> multiplier, epsilon, q;
  std::optional<std::string> data;

  for (const auto& name : rlpa::command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "master seed (overrides config)");
    sub->add_option("--threads", threads, "worker threads (fallback: $ROBUST_LPA_THREADS)");
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--threshold-multiplier", multiplier, "scale applied to the Lepski thresholds");
    sub->add_option("--epsilon", epsilon, "bandwidth net ratio in (0, 1)");
    sub->add_option("--q", q, "risk power");
    sub->add_option("--data", data, "sample CSV used instead of simulating");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return rlpa::kExitConfig;
  }

  opts.seed = seed;
  opts.threads = threads;
  opts.threshold_multiplier = multiplier;
  opts.epsilon = epsilon;
  opts.q = q;
  opts.data = data;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const auto cfg = rlpa::load_config(config_path);
    for (const auto& path : rlpa::run_command(command, cfg, opts)) std::cout << path << '\n';
    return rlpa::kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "rlpa " << command << ": " << e.what() << '\n';
    return rlpa::exit_code_for(std::current_exception());
  } catch (...) {
    std::cerr << "rlpa " << command << ": unknown failure\n";
    return rlpa::kExitInternal;
  }
}
