#pragma once

// The property matrix behind `sgpp_lab verify` and the acceptance binary.
// Each check builds its own testbed, runs it, and reports pass/fail with a
// one-line diagnostic.

#include "sgpp/config.hpp"
#include "sgpp/samplers.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sgpp {

// Frozen calibration constants, measured once and rounded up. Forcing
// constants come from descent ensembles on streams 10000+ (sigma_p = 0.2).
inline constexpr double kForcingConstantCircle = 11.5;     // measured max 10.61
inline constexpr double kForcingConstantSegment = 11.5;    // measured max 10.10
// n*/t^2 over sigma_p {0.05, 0.2, 0.5} x three references x both circle densities;
// measured max 1.54 (von Mises, sigma_p 0.5), uniform density stays near kappa/2.
inline constexpr double kEquilibriumNormalConstant = 2.0;
inline constexpr double kDriftSlack = 1e-4;  // c in c * eta, measured max 1.2e-5 on the segment
inline constexpr double kDpsStepScale = 10.0;
inline constexpr std::uint64_t kCalibrationStreamOffset = 10000;

// Tolerances.
inline constexpr double kScoreFdRelTol = 1e-5;
inline constexpr double kVeEquivalenceTol = 1e-10;
inline constexpr double kHardLimitRelTol = 1e-3;
inline constexpr double kSignIdentityTol = 1e-12;
inline constexpr double kLockDistance = 1e-2;
inline constexpr double kOnManifoldDistance = 0.05;
inline constexpr double kMapGridCells = 2.0;
inline constexpr std::size_t kMapGridPoints = 10000;

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct CheckContext {
  std::uint64_t master_seed = 7;
  Execution exec;
};

CheckResult check_score_gradient(const CheckContext& ctx, std::size_t probes = 100);
CheckResult check_rf_ve_equivalence(const CheckContext& ctx, std::size_t probes = 100);
CheckResult check_score_decomposition(const CheckContext& ctx);
// fraction: step rule of the positive run; the negative control always uses 1.5.
CheckResult check_normal_contraction(const CheckContext& ctx, const std::vector<std::string>& testbeds,
                                     double sigma_p, double fraction, std::size_t seeds);
CheckResult check_drift_bound(const CheckContext& ctx);
CheckResult check_stability_asymptotics(const CheckContext& ctx);
CheckResult check_fixed_point_map(const CheckContext& ctx);
CheckResult check_posterior_frequencies(const CheckContext& ctx, LikelihoodModel likelihood, std::size_t paths,
                                        std::size_t steps);
CheckResult check_hard_limit(const CheckContext& ctx);
CheckResult check_geometric_locking(const CheckContext& ctx);
CheckResult check_dps_trend(const CheckContext& ctx);

// Checks selected by cfg.verify.checks ("all" or a list of names).
std::vector<CheckResult> run_checks(const ExperimentConfig& cfg, const CheckContext& ctx);

std::vector<std::string> check_names();

}  // namespace sgpp
