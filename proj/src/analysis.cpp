#include "sgpp/analysis.hpp"

#include "sgpp/error.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace sgpp {

namespace {

// Projection onto M_t through the homothety, restricted to a fraction of the
// reach. Empty when x is outside that tube or the projection is ambiguous.
std::optional<ProjectionResult> project_in_tube(const Manifold& m0, const Vec& x, double t) {
  const double scale = 1.0 - t;
  const double kappa = m0.kappa_max();
  const double tube = kappa > 0.0 ? kTubeFraction / kappa : kUnboundedTube;
  try {
    ProjectionResult pr = project(m0, x / scale, tube);
    pr.pi *= scale;
    pr.n *= scale;
    pr.distance *= scale;
    return pr;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::outside_tube || e.code() == ErrorCode::ambiguous_projection) return std::nullopt;
    throw;
  }
}

double step_lambda(double eta, double t, double sigma_p) {
  const double s = sigma_p_of_t(t, sigma_p);
  return eta * (1.0 / (t * t) + 1.0 / (s * s));
}

// Consecutive record pairs produced by one proximal step.
template <typename F>
void for_each_step(const Trajectory& traj, F&& f) {
  for (std::size_t k = 0; k + 1 < traj.records.size(); ++k) {
    const TrajectoryRecord& next = traj.records[k + 1];
    if (std::isnan(next.step_size)) continue;
    if (!traj.records[k].x.allFinite() || !next.x.allFinite()) break;
    f(traj.records[k], next);
  }
}

struct NormalPair {
  double t, eta, normal, next_normal, lambda;
};

std::vector<std::optional<NormalPair>> normal_pairs(const Trajectory& traj, const Manifold& m0) {
  if (traj.method != Method::sgpp_descent) {
    throw Error(ErrorCode::invalid_params, "normal_trace needs a descent trajectory");
  }
  std::vector<std::optional<NormalPair>> out;
  for_each_step(traj, [&](const TrajectoryRecord& cur, const TrajectoryRecord& next) {
    const double t = next.t;
    const auto a = project_in_tube(m0, cur.x, t);
    const auto b = a ? project_in_tube(m0, next.x, t) : std::nullopt;
    if (!a || !b) {
      out.emplace_back();
      return;
    }
    out.push_back(NormalPair{t, next.step_size, a->distance, b->distance,
                             step_lambda(next.step_size, t, traj.params.sigma_p)});
  });
  return out;
}

}  // namespace

double calibrate_forcing_constant(std::span<const Trajectory> calibration, const Manifold& m0) {
  double c = 0.0;
  for (const Trajectory& traj : calibration) {
    for (const auto& pair : normal_pairs(traj, m0)) {
      if (!pair) continue;
      c = std::max(c, (pair->next_normal - (1.0 - pair->lambda) * pair->normal) / pair->eta);
    }
  }
  return c;
}

ContractionReport normal_trace(const Trajectory& traj, const Manifold& m0, double forcing_constant) {
  ContractionReport report;
  report.calibrated_C_N = forcing_constant;
  for (const auto& pair : normal_pairs(traj, m0)) {
    if (!pair) {
      ++report.skipped;
      continue;
    }
    ContractionStep s;
    s.t = pair->t;
    s.eta = pair->eta;
    s.normal = pair->normal;
    s.next_normal = pair->next_normal;
    s.lambda = pair->lambda;
    s.bound_rhs = (1.0 - s.lambda) * s.normal + s.eta * forcing_constant;
    s.satisfied = s.next_normal <= s.bound_rhs;
    if (!s.satisfied) ++report.violations;
    const double equilibrium = s.eta * forcing_constant / s.lambda;
    if (s.next_normal > s.normal && s.normal > equilibrium) ++report.non_contracting;
    report.steps.push_back(s);
  }
  // A trajectory that left the tube for good (divergence) still counts against
  // contraction: the pair that escaped is the failing step.
  if (traj.diverged()) ++report.violations;
  return report;
}

Vec ideal_tangent_velocity(const Manifold& m0, const Vec& x, double t, const GuidanceParams& p) {
  check_open_unit_time(t);
  const double scale = 1.0 - t;
  const ProjectionResult pr = project(m0, x / scale);
  const Vec pi = scale * pr.pi;
  const Vec tangent = pr.tangent_basis.col(0);
  // The density of M_t per unit arclength is p_{M_0}(y / (1 - t)) / (1 - t).
  const Vec grad = m0.intrinsic_log_density_gradient(pr.component, pr.chart_param) / scale;
  const double s = sigma_p_of_t(t, p.sigma_p);
  const Vec pull = tangent * tangent.dot(pi - scale * p.x_ref) / (s * s);
  return grad - pull;
}

DriftReport drift_bound_check(const Trajectory& traj, const Manifold& m0, double slack_c) {
  DriftReport report;
  for_each_step(traj, [&](const TrajectoryRecord& cur, const TrajectoryRecord& next) {
    const double t = next.t;
    const double eta = next.step_size;
    const auto a = project_in_tube(m0, cur.x, t);
    const auto b = a ? project_in_tube(m0, next.x, t) : std::nullopt;
    if (!a || !b) return;
    const Vec measured = (b->pi - a->pi) / eta;
    const Vec v_tan = ideal_tangent_velocity(m0, cur.x, t, traj.params);
    const double kappa_n = m0.kappa_max() / (1.0 - t) * a->distance;
    DriftStep s;
    s.t = t;
    s.eta = eta;
    s.normal = a->distance;
    s.v_tan_norm = v_tan.norm();
    s.error = (measured - v_tan).norm();
    s.bound = kappa_n < 1.0 ? kappa_n / (1.0 - kappa_n) * s.v_tan_norm : std::numeric_limits<double>::infinity();
    s.satisfied = s.error <= s.bound + slack_c * eta;
    if (!s.satisfied) ++report.violations;
    report.steps.push_back(s);
  });
  return report;
}

Trajectory single_step_trajectory(const ScoreField& field, const Vec& x, double t, double eta,
                                  const GuidanceParams& p) {
  p.validate();
  Trajectory traj;
  traj.method = Method::sgpp_descent;
  traj.params = p;
  TrajectoryRecord first;
  first.t = t;
  first.x = x;
  TrajectoryRecord second;
  second.t = t;
  second.x = sgpp_step(field, x, t, eta, p);
  second.step_size = eta;
  traj.records = {first, second};
  return traj;
}

namespace {

struct MapGrid {
  std::vector<std::size_t> offsets;  // first global index per component, plus total
  std::vector<double> begin, spacing;
};

MapGrid make_map_grid(const Manifold& m, std::size_t grid_points) {
  if (grid_points < kMinMapGridPoints) {
    throw Error(ErrorCode::invalid_params, "map_oracle needs at least 1000 grid points");
  }
  MapGrid g;
  const double total = m.total_length();
  g.offsets.push_back(0);
  for (std::size_t c = 0; c < m.component_count(); ++c) {
    const CurvePiece& piece = m.piece(c);
    const auto n = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(static_cast<double>(grid_points) * piece.length() / total)));
    const double span = piece.param_end() - piece.param_begin();
    g.begin.push_back(piece.param_begin());
    // A closed curve's end coincides with its start and is not sampled twice.
    g.spacing.push_back(piece.full_circle ? span / static_cast<double>(n) : span / static_cast<double>(n - 1));
    g.offsets.push_back(g.offsets.back() + n);
  }
  return g;
}

struct Candidate {
  double value = -std::numeric_limits<double>::infinity();
  std::size_t index = std::numeric_limits<std::size_t>::max();

  void offer(double v, std::size_t i) {
    if (v > value || (v == value && i < index)) {
      value = v;
      index = i;
    }
  }
};

struct MapProblem {
  const Manifold& m;
  const Vec& x_ref;
  double inv_two_var;
  MapGrid grid;

  std::pair<std::size_t, double> locate(std::size_t i) const {
    const auto it = std::upper_bound(grid.offsets.begin(), grid.offsets.end(), i);
    const auto c = static_cast<std::size_t>(it - grid.offsets.begin()) - 1;
    return {c, grid.begin[c] + grid.spacing[c] * static_cast<double>(i - grid.offsets[c])};
  }

  double objective(std::size_t i) const {
    const auto [c, param] = locate(i);
    const Vec y = m.piece(c).point_at(param);
    return m.log_density(c, param) - (y - x_ref).squaredNorm() * inv_two_var;
  }

  MapSolution solution(const Candidate& best) const {
    const auto [c, param] = locate(best.index);
    MapSolution s;
    s.argmax_point = m.piece(c).point_at(param);
    s.argmax_param = param;
    s.component = c;
    s.objective_value = best.value;
    s.grid_resolution = grid.spacing[c];
    return s;
  }
};

MapProblem make_map_problem(const Manifold& m, const Vec& x_ref, double sigma_p, std::size_t grid_points) {
  if (!(sigma_p > 0.0)) throw Error(ErrorCode::invalid_params, "sigma_p must be positive");
  if (static_cast<std::size_t>(x_ref.size()) != m.dim()) {
    throw Error(ErrorCode::invalid_params, "x_ref dimension does not match the manifold");
  }
  return MapProblem{m, x_ref, 1.0 / (2.0 * sigma_p * sigma_p), make_map_grid(m, grid_points)};
}

}  // namespace

MapSolution map_oracle_serial(const Manifold& m, const Vec& x_ref, double sigma_p, std::size_t grid_points) {
  const MapProblem problem = make_map_problem(m, x_ref, sigma_p, grid_points);
  Candidate best;
  for (std::size_t i = 0; i < problem.grid.offsets.back(); ++i) best.offer(problem.objective(i), i);
  return problem.solution(best);
}

MapSolution map_oracle(const Manifold& m, const Vec& x_ref, double sigma_p, std::size_t grid_points,
                       Execution exec) {
  if (exec.mode == Execution::Mode::serial) return map_oracle_serial(m, x_ref, sigma_p, grid_points);
  const MapProblem problem = make_map_problem(m, x_ref, sigma_p, grid_points);
  const auto n = static_cast<long>(problem.grid.offsets.back());
  const int threads = exec.jobs > 0 ? exec.jobs : omp_get_max_threads();
  Candidate best;

#pragma omp parallel num_threads(threads)
  {
    Candidate local;
#pragma omp for schedule(static) nowait
    for (long i = 0; i < n; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      local.offer(problem.objective(idx), idx);
    }
#pragma omp critical(sgpp_map_oracle)
    best.offer(local.value, local.index);
  }
  return problem.solution(best);
}

FixedPointResult fixed_point_solve(const ScoreField& field, const Manifold& m0, double t, const GuidanceParams& p,
                                   const Vec& x_init, std::size_t max_iters, double tol, double fraction) {
  p.validate();
  if (!(t > kEpsEnd && t < 1.0)) throw Error(ErrorCode::time_out_of_range, "fixed point needs eps_end < t < 1");
  if (!(tol > 0.0)) throw Error(ErrorCode::invalid_params, "tol must be positive");
  const double eta = fraction * max_stable_step(t, p.sigma_p);
  Vec x = x_init;
  for (std::size_t it = 1; it <= max_iters; ++it) {
    Vec next = sgpp_step(field, x, t, eta, p);
    const double moved = (next - x).norm();
    x = std::move(next);
    if (!x.allFinite()) break;
    if (moved <= tol) return {x, normal_distance_at(m0, x, t), it};
  }
  throw Error(ErrorCode::no_convergence,
              "no fixed point within " + std::to_string(max_iters) + " iterations at t=" + std::to_string(t));
}

double equilibrium_normal_factor(double t, double sigma_p) {
  const double s2 = std::pow(sigma_p_of_t(t, sigma_p), 2);
  return t * t * s2 / (t * t + s2);
}

std::vector<double> posterior_oracle_discrete(std::span<const Vec> atoms, std::span<const double> weights,
                                              const Vec& x_ref, double sigma_p) {
  if (atoms.empty() || atoms.size() != weights.size()) {
    throw Error(ErrorCode::invalid_params, "need one weight per atom");
  }
  if (!(sigma_p > 0.0)) throw Error(ErrorCode::invalid_params, "sigma_p must be positive");
  std::vector<double> logw(atoms.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    logw[i] = std::log(weights[i]) - (atoms[i] - x_ref).squaredNorm() / (2.0 * sigma_p * sigma_p);
  }
  const double top = *std::max_element(logw.begin(), logw.end());
  double sum = 0.0;
  for (double& v : logw) sum += (v = std::exp(v - top));
  for (double& v : logw) v /= sum;
  return logw;
}

FrequencyReport posterior_frequency_check(std::span<const Vec> terminals, std::span<const Vec> atoms,
                                          std::span<const double> oracle_weights) {
  if (atoms.empty() || atoms.size() != oracle_weights.size()) {
    throw Error(ErrorCode::invalid_params, "need one oracle weight per atom");
  }
  if (terminals.empty()) throw Error(ErrorCode::invalid_params, "empty ensemble");
  double min_sep = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    for (std::size_t j = i + 1; j < atoms.size(); ++j) min_sep = std::min(min_sep, (atoms[i] - atoms[j]).norm());
  }
  const double radius = 0.5 * min_sep;

  FrequencyReport r;
  r.counts.assign(atoms.size(), 0);
  for (const Vec& x : terminals) {
    std::size_t nearest = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const double d = (x - atoms[i]).norm();
      if (d < best) {
        best = d;
        nearest = i;
      }
    }
    if (!(best <= radius)) {
      throw Error(ErrorCode::unassignable_state,
                  "terminal state " + std::to_string(best) + " away from the nearest atom");
    }
    ++r.counts[nearest];
  }
  const auto m = static_cast<double>(terminals.size());
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const double w = oracle_weights[i];
    r.frequencies.push_back(static_cast<double>(r.counts[i]) / m);
    r.tolerances.push_back(3.0 * std::sqrt(w * (1.0 - w) / m));
    if (std::abs(r.frequencies[i] - w) > r.tolerances[i]) r.passed = false;
  }
  return r;
}

FrequencyReport posterior_frequency_check(std::span<const Trajectory> ensemble, std::span<const Vec> atoms,
                                          std::span<const double> oracle_weights) {
  std::vector<Vec> terminals;
  terminals.reserve(ensemble.size());
  for (const Trajectory& traj : ensemble) {
    require_converged(traj);
    terminals.push_back(traj.terminal());
  }
  return posterior_frequency_check(std::span<const Vec>(terminals), atoms, oracle_weights);
}

std::vector<std::pair<double, double>> hard_limit_error(const Vec& x, double t, const Vec& y0,
                                                        std::span<const double> sigma_list) {
  check_open_unit_time(t);
  for (std::size_t i = 1; i < sigma_list.size(); ++i) {
    if (!(sigma_list[i] < sigma_list[i - 1])) {
      throw Error(ErrorCode::invalid_params, "sigma_list must be strictly decreasing");
    }
  }
  const Vec target = hard_limit_velocity(x, t, y0);
  std::vector<std::pair<double, double>> out;
  GuidanceParams p;
  p.x_ref = y0;
  for (double sigma : sigma_list) {
    p.sigma_p = sigma;
    p.validate();
    const Vec v_cond = -x / (1.0 - t) - (t / (1.0 - t)) * likelihood_score(x, t, p);
    out.emplace_back(sigma, (v_cond - target).norm());
  }
  return out;
}

}  // namespace sgpp
