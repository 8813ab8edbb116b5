#include "sgpp/experiment.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"SGPP lab: proximal guidance experiments on 2D manifolds"};
  app.set_version_flag("--version", sgpp::version_string());
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  int jobs = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "experiment config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides config and SGPP_LAB_OUT)");
    sub->add_option("--seed", seed, "master seed (overrides config)");
    sub->add_option("--jobs", jobs, "worker threads, 0 = OpenMP default")->check(CLI::NonNegativeNumber);
  };
  auto* run = app.add_subcommand("run", "run the configured ensembles");
  auto* verify = app.add_subcommand("verify", "run the property checks");
  auto* plot = app.add_subcommand("plot", "re-render SVGs from trajectories.csv");
  for (auto* sub : {run, verify, plot}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? sgpp::kExitOk : sgpp::kExitInvalid;
  }

  sgpp::RunOptions opts;
  if (!out.empty()) opts.out_dir = std::filesystem::path(out);
  for (auto* sub : {run, verify, plot})
    if (sub->count("--seed")) opts.seed = seed;
  opts.jobs = jobs;
  opts.log = &std::cerr;

  try {
    if (*run) return sgpp::run_experiment(config, opts);
    if (*verify) return sgpp::run_verification_suite(config, opts);
    return sgpp::run_plot(config, opts);
  } catch (const std::exception& e) {
    std::cerr << "sgpp_lab: " << e.what() << "\n";
    return sgpp::kExitFailure;
  }
}
