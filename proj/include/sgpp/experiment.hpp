#pragma once

// Config-driven runs: ensembles -> trajectories.csv, reports.csv, SVGs and a
// manifest.json written last. Exit codes: 0 ok, 1 runtime failure, 2 invalid
// config (nothing written), 3 a configured assertion failed.

#include "sgpp/config.hpp"
#include "sgpp/samplers.hpp"
#include "sgpp/verification.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sgpp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitAssertion = 3;

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides config and SGPP_LAB_OUT
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  std::ostream* log = nullptr;
};

struct EnsembleSummary {
  std::string experiment_id;
  Method method = Method::sgpp_descent;
  double parameter = 0.0;  // sigma_p, DPS sigma_obs, or RF-Inversion eta
  std::size_t count = 0;
  std::size_t diverged = 0;
  double mean_terminal_normal = 0.0;
  double on_manifold_fraction = 0.0;
  double mean_distance_to_ref = 0.0;
};

struct LabeledRun {
  std::string experiment_id;
  double parameter = 0.0;
  std::vector<Trajectory> trajectories;
};

// Runs every ensemble the config describes (no files touched).
std::vector<LabeledRun> run_ensembles(const ExperimentConfig& cfg, Execution exec);
EnsembleSummary summarize(const LabeledRun& run, const ExperimentConfig& cfg);

// Output directory: --out, else [output] directory (relative paths resolve
// under SGPP_LAB_OUT when set), else SGPP_LAB_OUT/<id>, else ./<id>.
std::filesystem::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opts);

int run_experiment(const std::filesystem::path& config_path, const RunOptions& opts = {});
int run_experiment(const ExperimentConfig& cfg, const RunOptions& opts = {});

// Writes verification.csv into the output directory; 0 iff every check
// passes, 1 otherwise, 2 on an invalid config.
int run_verification_suite(const std::filesystem::path& config_path, const RunOptions& opts = {});

// `plot` subcommand: re-renders SVGs from an existing trajectories.csv.
int run_plot(const std::filesystem::path& config_path, const RunOptions& opts = {});

std::string version_string();

}  // namespace sgpp
