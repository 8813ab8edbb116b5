#pragma once

// Checks that tie sampler output back to the geometric theory: normal
// contraction traces, tangential drift, fixed points versus the constrained
// MAP, discrete posterior frequencies and the hard-guidance limit.

#include "sgpp/geometry.hpp"
#include "sgpp/guidance.hpp"
#include "sgpp/samplers.hpp"
#include "sgpp/score_field.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace sgpp {

// Pairs whose starting point sits farther than this fraction of the reach of
// M_t are excluded from contraction and drift statistics.
inline constexpr double kTubeFraction = 0.5;

struct ContractionStep {
  double t = 0.0;
  double eta = 0.0;
  double normal = 0.0;       // ||n_k|| against M_t
  double next_normal = 0.0;  // ||n_{k+1}|| against M_t
  double lambda = 0.0;
  double bound_rhs = 0.0;
  bool satisfied = true;
};

struct ContractionReport {
  std::vector<ContractionStep> steps;
  std::size_t violations = 0;
  // Steps with ||n_{k+1}|| > ||n_k|| taken while ||n_k|| exceeded the
  // equilibrium level eta C / lambda.
  std::size_t non_contracting = 0;
  std::size_t skipped = 0;  // pairs outside the tube
  double calibrated_C_N = 0.0;
};

// max_k (||n_{k+1}|| - (1 - lambda_k) ||n_k||) / eta_k over in-tube pairs of
// descent trajectories.
double calibrate_forcing_constant(std::span<const Trajectory> calibration, const Manifold& m0);

// Per-step check of ||n_{k+1}|| <= (1 - lambda_k) ||n_k|| + eta_k C.
ContractionReport normal_trace(const Trajectory& traj, const Manifold& m0, double forcing_constant);

struct DriftStep {
  double t = 0.0;
  double eta = 0.0;
  double normal = 0.0;
  double v_tan_norm = 0.0;
  double error = 0.0;  // ||measured - v_tan||
  double bound = 0.0;  // kappa ||n|| / (1 - kappa ||n||) ||v_tan||
  bool satisfied = true;
};

struct DriftReport {
  std::vector<DriftStep> steps;
  std::size_t violations = 0;
};

// Ideal tangential velocity at the projection pi of x onto M_t.
Vec ideal_tangent_velocity(const Manifold& m0, const Vec& x, double t, const GuidanceParams& p);

// Compares (pi_{k+1} - pi_k) / eta_k with the ideal velocity, allowing
// slack_c * eta_k on top of the curvature bound.
DriftReport drift_bound_check(const Trajectory& traj, const Manifold& m0, double slack_c);

// Two-record trajectory holding x and one proximal step from it at time t.
Trajectory single_step_trajectory(const ScoreField& field, const Vec& x, double t, double eta,
                                  const GuidanceParams& p);

struct MapSolution {
  Vec argmax_point;
  double argmax_param = 0.0;
  std::size_t component = 0;
  double objective_value = 0.0;
  double grid_resolution = 0.0;  // chart-parameter spacing on the argmax component
};

inline constexpr std::size_t kMinMapGridPoints = 1000;

// Brute-force argmax of log p_M(y) - ||y - x_ref||^2 / (2 sigma_p^2) on a
// uniform chart grid. Points are shared between components in proportion to
// arclength. Ties resolve to the lowest grid index.
MapSolution map_oracle(const Manifold& m, const Vec& x_ref, double sigma_p, std::size_t grid_points,
                       Execution exec = {});
MapSolution map_oracle_serial(const Manifold& m, const Vec& x_ref, double sigma_p, std::size_t grid_points);

struct FixedPointResult {
  Vec x_star;
  double n_star_norm = 0.0;
  std::size_t iterations = 0;
};

// Iterates sgpp_step at fixed t with step fraction * max_stable_step until
// ||dx|| <= tol. Throws NoConvergence after max_iters.
FixedPointResult fixed_point_solve(const ScoreField& field, const Manifold& m0, double t, const GuidanceParams& p,
                                   const Vec& x_init, std::size_t max_iters, double tol, double fraction = 0.5);

// Bound t^2 s^2 / (t^2 + s^2) on ||n*|| / C_N, with s = sigma_p(t).
double equilibrium_normal_factor(double t, double sigma_p);

std::vector<double> posterior_oracle_discrete(std::span<const Vec> atoms, std::span<const double> weights,
                                              const Vec& x_ref, double sigma_p);

struct FrequencyReport {
  std::vector<std::size_t> counts;
  std::vector<double> frequencies;
  std::vector<double> tolerances;  // 3 binomial standard deviations
  bool passed = true;
};

// Nearest-atom assignment of terminal states. Throws UnassignableState when a
// state lies farther than half the minimum atom separation from every atom.
FrequencyReport posterior_frequency_check(std::span<const Vec> terminals, std::span<const Vec> atoms,
                                          std::span<const double> oracle_weights);
FrequencyReport posterior_frequency_check(std::span<const Trajectory> ensemble, std::span<const Vec> atoms,
                                          std::span<const double> oracle_weights);

// ||v_cond(sigma) - (x - y0)/t|| for each sigma, where v_cond is the velocity
// driven by the Gaussian likelihood alone.
std::vector<std::pair<double, double>> hard_limit_error(const Vec& x, double t, const Vec& y0,
                                                        std::span<const double> sigma_list);

}  // namespace sgpp
