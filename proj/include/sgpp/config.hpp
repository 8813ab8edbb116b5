#pragma once

// Sectioned key-value experiment configuration. Parsing is strict: unknown
// sections or keys, malformed numbers and out-of-domain values all raise
// ConfigError / InvalidParams before anything runs.

#include "sgpp/geometry.hpp"
#include "sgpp/guidance.hpp"
#include "sgpp/samplers.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sgpp {

struct ManifoldConfig {
  std::string kind = "two_moons";  // circle | segment | two_moons
  std::size_t dim = 2;
  double radius = 1.0;
  std::vector<double> center{0.0, 0.0};
  std::vector<double> a{-1.0, 0.0};
  std::vector<double> b{1.0, 0.0};
  double offset_x = 1.0;
  double offset_y = 0.5;
  std::string density = "uniform";  // uniform | von_mises
  double concentration = 0.0;
  double mode_angle = 0.0;
  std::size_t atom_count = kDefaultAtomCount;

  bool operator==(const ManifoldConfig&) const = default;
};

struct GuidanceConfig {
  std::vector<double> sigma_p{0.2};  // one ensemble per value
  double eta = 0.0;
  double t_stop = 0.0;
  std::vector<double> x_ref{0.0, 1.0};
  bool use_mixture = false;
  LikelihoodModel likelihood = LikelihoodModel::gaussian_surrogate;

  bool operator==(const GuidanceConfig&) const = default;
};

struct SamplerConfig {
  Method method = Method::sgpp_descent;
  double t_start = 0.9;
  double t_end = 1e-3;
  std::size_t steps = 60;
  std::size_t steps_per_t = 1;
  Spacing spacing = Spacing::geometric;
  StepRule step_rule = StepRule::fraction(0.5);
  std::size_t ensemble_count = 64;

  bool operator==(const SamplerConfig& o) const {
    return method == o.method && t_start == o.t_start && t_end == o.t_end && steps == o.steps &&
           steps_per_t == o.steps_per_t && spacing == o.spacing && step_rule.kind == o.step_rule.kind &&
           step_rule.value == o.step_rule.value && ensemble_count == o.ensemble_count;
  }
};

struct BaselineConfig {
  // Illustrative sweep; the published DPS panel does not state its values.
  std::vector<double> dps_sigma_list{1.0, 0.5, 0.1, 0.05};
  double dps_step_scale = 10.0;
  double rf_inv_gamma = 0.5;
  double rf_inv_eta = 0.8;

  bool operator==(const BaselineConfig&) const = default;
};

struct OutputConfig {
  std::string directory;  // empty: experiment id
  bool emit_svg = true;

  bool operator==(const OutputConfig&) const = default;
};

// Optional run-level assertions; any failure makes run_experiment exit 3.
struct AssertConfig {
  std::optional<double> max_diverged_fraction;
  std::optional<double> min_on_manifold_fraction;
  std::optional<double> max_mean_terminal_normal;
  double on_manifold_tolerance = 0.05;

  bool operator==(const AssertConfig&) const = default;
};

struct VerifyConfig {
  std::vector<std::string> checks{"all"};
  std::vector<std::string> testbeds{"circle", "segment"};
  double sigma_p = 0.2;
  double contraction_fraction = 0.5;
  std::size_t contraction_seeds = 64;
  std::size_t posterior_paths = 2000;
  std::size_t posterior_steps = 1000;
  LikelihoodModel posterior_likelihood = LikelihoodModel::exact_discrete;

  bool operator==(const VerifyConfig&) const = default;
};

struct ExperimentConfig {
  std::string id = "experiment";
  ManifoldConfig manifold;
  GuidanceConfig guidance;
  SamplerConfig sampler;
  BaselineConfig baseline;
  OutputConfig output;
  std::uint64_t master_seed = 0;
  AssertConfig asserts;
  VerifyConfig verify;

  bool operator==(const ExperimentConfig&) const = default;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical text form; parse_config(to_config_text(c)) == c.
std::string to_config_text(const ExperimentConfig& c);

// Domain checks shared with the home modules. Throws InvalidParams.
void validate(const ExperimentConfig& c);

Manifold build_manifold(const ManifoldConfig& c);

std::string_view to_string(LikelihoodModel m);
std::string_view to_string(Spacing s);

}  // namespace sgpp
