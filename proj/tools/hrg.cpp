// hrg: command-line front end for the hierarchical Anderson model lab.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hrg/errors.hpp"
#include "hrg/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for the hierarchical Anderson model"};
  app.set_version_flag("--version", std::string(hrg::kVersion));
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out;
  int threads = 0;
  std::size_t dense_cap = 0;

  for (const auto& kind : hrg::experiment_kinds()) {
    auto* sub = app.add_subcommand(kind, fmt::format("run the {} experiment", kind));
    sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides config)");
    sub->add_option("--out", out, "output directory (overrides config)");
    sub->add_option("--threads", threads, "worker threads (default: HRG_THREADS, else all cores)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--dense-cap", dense_cap, "largest dense matrix dimension")->check(CLI::PositiveNumber);
  }

  CLI11_PARSE(app, argc, argv);

  const auto* sub = app.get_subcommands().front();
  hrg::RunOptions opt;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--out")) opt.out = out;
  if (sub->count("--threads")) opt.threads = threads;
  if (sub->count("--dense-cap")) opt.dense_cap = dense_cap;

  try {
    const auto result = hrg::run_experiment(hrg::load_config(config_path), sub->get_name(), opt);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& [key, value] : result.summary) fmt::print("{} = {}\n", key, value);
    fmt::print("outputs written to {}\n", result.out_dir.string());
    return 0;
  } catch (const hrg::ConfigError& e) {
    std::cerr << "config error at " << e.what() << '\n';
    return 2;
  } catch (const hrg::ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
