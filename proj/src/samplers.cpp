#include "sgpp/samplers.hpp"

#include "sgpp/error.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <string>

namespace sgpp {

namespace {

constexpr double kClampSlack = 1e-12;

bool escaped(const Vec& x) { return !x.allFinite() || x.norm() > kDivergenceNorm; }

class Recorder {
 public:
  Recorder(Trajectory& traj, const Manifold* manifold) : traj_(traj), manifold_(manifold) {}

  void add(double t, const Vec& x, double step = std::numeric_limits<double>::quiet_NaN()) {
    TrajectoryRecord rec;
    rec.t = t;
    rec.x = x;
    rec.step_size = step;
    if (manifold_ != nullptr && x.allFinite()) rec.normal_distance = normal_distance_at(*manifold_, x, t);
    traj_.records.push_back(std::move(rec));
  }

 private:
  Trajectory& traj_;
  const Manifold* manifold_;
};

Trajectory start(Method method, const GuidanceParams& p, const RngStream* rng) {
  Trajectory traj;
  traj.method = method;
  traj.params = p;
  if (rng != nullptr) {
    traj.master_seed = rng->master_seed();
    traj.stream_id = rng->stream_id();
  }
  return traj;
}

}  // namespace

TimeGrid TimeGrid::make(double t_start, double t_end, std::size_t steps, Spacing spacing) {
  if (steps == 0) throw Error(ErrorCode::zero_steps, "time grid needs at least one step");
  if (!(t_end > 0.0 && t_end < t_start && t_start < 1.0)) {
    throw Error(ErrorCode::bad_range, "need 0 < t_end < t_start < 1");
  }
  if (t_start > 1.0 - kEpsStart + kClampSlack || t_end < kEpsEnd - kClampSlack) {
    throw Error(ErrorCode::bad_range, "grid must stay within [1e-3, 1 - 1e-3]");
  }
  TimeGrid g;
  g.times_.reserve(steps + 1);
  const double n = static_cast<double>(steps);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double frac = static_cast<double>(k) / n;
    g.times_.push_back(spacing == Spacing::uniform ? t_start + (t_end - t_start) * frac
                                                   : t_start * std::pow(t_end / t_start, frac));
  }
  g.times_.front() = t_start;
  g.times_.back() = t_end;
  return g;
}

TimeGrid make_time_grid(double t_start, double t_end, std::size_t steps, Spacing spacing) {
  return TimeGrid::make(t_start, t_end, steps, spacing);
}

std::string_view to_string(Method m) {
  switch (m) {
    case Method::sgpp_descent: return "sgpp_descent";
    case Method::posterior_ode: return "posterior_ode";
    case Method::sgpp_sde: return "sgpp_sde";
    case Method::dps: return "dps";
    case Method::rf_inversion: return "rf_inversion";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view s) {
  for (Method m : {Method::sgpp_descent, Method::posterior_ode, Method::sgpp_sde, Method::dps,
                   Method::rf_inversion}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

void require_converged(const Trajectory& traj) {
  if (traj.diverged()) {
    throw Error(ErrorCode::diverged_trajectory,
                std::string(to_string(traj.method)) + " stream " + std::to_string(traj.stream_id) +
                    " left the ball of radius 1e6");
  }
}

double StepRule::step_at(double t, double sigma_p) const {
  if (!(value > 0.0)) throw Error(ErrorCode::invalid_params, "step rule value must be positive");
  return kind == Kind::fixed ? value : value * max_stable_step(t, sigma_p);
}

Trajectory run_sgpp_descent(const ScoreField& field, const Manifold* manifold, const TimeGrid& grid,
                            const GuidanceParams& p, std::size_t steps_per_t, StepRule rule, RngStream& rng) {
  p.validate();
  if (steps_per_t == 0) throw Error(ErrorCode::zero_steps, "steps_per_t must be >= 1");
  Trajectory traj = start(Method::sgpp_descent, p, &rng);
  Recorder rec(traj, manifold);

  const double t0 = grid.front();
  Vec x = (1.0 - t0) * p.x_ref + t0 * rng.normal_vec(field.dim());
  rec.add(t0, x);
  for (double t : grid.times()) {
    const double eta = rule.step_at(t, p.sigma_p);
    for (std::size_t j = 0; j < steps_per_t; ++j) {
      x = sgpp_step(field, x, t, eta, p);
      rec.add(t, x, eta);
      if (escaped(x)) {
        traj.status = TrajectoryStatus::diverged;
        return traj;
      }
    }
  }
  return traj;
}

Trajectory integrate_posterior_ode(const ScoreField& field, const Manifold* manifold, const TimeGrid& grid,
                                   const GuidanceParams& p, const Vec& x_init) {
  p.validate();
  Trajectory traj = start(Method::posterior_ode, p, nullptr);
  Recorder rec(traj, manifold);
  Vec x = x_init;
  rec.add(grid[0], x);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    x += (grid[k + 1] - grid[k]) * posterior_velocity(field, x, grid[k], p);
    rec.add(grid[k + 1], x);
    if (escaped(x)) {
      traj.status = TrajectoryStatus::diverged;
      break;
    }
  }
  return traj;
}

Trajectory integrate_sgpp_sde(const ScoreField& field, const Manifold* manifold, const TimeGrid& grid,
                              const GuidanceParams& p, bool use_mixture, RngStream& rng) {
  p.validate();
  const double first_dt = grid[0] - grid[1];
  const double first_diffusion = std::sqrt(2.0 * grid[0] / (1.0 - grid[0]));
  if (first_diffusion * std::sqrt(first_dt) > 0.5) {
    throw Error(ErrorCode::step_too_coarse, "diffusion * sqrt(dt) = " +
                                                std::to_string(first_diffusion * std::sqrt(first_dt)) +
                                                " exceeds 0.5 at t_start");
  }
  Trajectory traj = start(Method::sgpp_sde, p, &rng);
  Recorder rec(traj, manifold);
  const std::size_t dim = field.dim();
  Vec x = grid[0] * rng.normal_vec(dim);
  rec.add(grid[0], x);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double dt = grid[k + 1] - grid[k];
    const SdeCoefficients c = sde_coefficients(field, x, grid[k], p, use_mixture);
    x += c.drift * dt + (c.diffusion * std::sqrt(-dt)) * rng.normal_vec(dim);
    rec.add(grid[k + 1], x);
    if (escaped(x)) {
      traj.status = TrajectoryStatus::diverged;
      break;
    }
  }
  return traj;
}

Trajectory run_rf_inversion(const ScoreField& field, const Manifold* manifold, const TimeGrid& grid,
                            const RfInversionParams& params, RngStream& rng) {
  if (!(params.gamma >= 0.0 && params.gamma <= 1.0) || !(params.eta >= 0.0 && params.eta <= 1.0)) {
    throw Error(ErrorCode::invalid_params, "gamma and eta must lie in [0, 1]");
  }
  GuidanceParams snapshot;
  snapshot.sigma_p = 0.0;  // hard guidance; not a proximal run
  snapshot.eta = params.eta;
  snapshot.x_ref = params.y0;
  snapshot.t_stop = params.t_stop;
  Trajectory traj = start(Method::rf_inversion, snapshot, &rng);
  Recorder rec(traj, manifold);

  // Forward (inversion) phase, t increasing.
  Vec x = params.y0;
  for (std::size_t k = grid.size() - 1; k > 0; --k) {
    x += (grid[k - 1] - grid[k]) * rf_velocity(field, x, grid[k]);
  }
  x = (1.0 - params.gamma) * x + params.gamma * rng.normal_vec(field.dim());
  rec.add(grid[0], x);

  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double t = grid[k];
    const Vec v = rf_velocity(field, x, t);
    // dx/dt is minus the RF-Inversion field in forward time tau = 1 - t.
    const Vec drift = t >= params.t_stop ? Vec(-rf_inversion_field(-v, x, 1.0 - t, params.y0, params.eta)) : v;
    x += (grid[k + 1] - t) * drift;
    rec.add(grid[k + 1], x);
    if (escaped(x)) {
      traj.status = TrajectoryStatus::diverged;
      break;
    }
  }
  return traj;
}

Trajectory run_dps(const ScoreField& field, const Manifold* manifold, const TimeGrid& grid, const Vec& x_ref,
                   double sigma_obs, double step_scale, RngStream& rng) {
  if (!(sigma_obs > 0.0)) throw Error(ErrorCode::invalid_params, "sigma_obs must be positive");
  if (!(step_scale >= 0.0)) throw Error(ErrorCode::invalid_params, "step_scale must be >= 0");
  GuidanceParams snapshot;
  snapshot.sigma_p = sigma_obs;
  snapshot.x_ref = x_ref;
  Trajectory traj = start(Method::dps, snapshot, &rng);
  Recorder rec(traj, manifold);
  Vec x = grid[0] * rng.normal_vec(field.dim());
  rec.add(grid[0], x);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double eta_step = step_scale * (grid[k] - grid[k + 1]);
    x = dps_step(field, x, grid[k], grid[k + 1], eta_step, x_ref, sigma_obs);
    rec.add(grid[k + 1], x);
    if (escaped(x)) {
      traj.status = TrajectoryStatus::diverged;
      break;
    }
  }
  return traj;
}

std::vector<Trajectory> run_ensemble_serial(const TrajectoryGenerator& generator, std::size_t count,
                                            std::uint64_t master_seed, std::uint64_t first_stream) {
  if (count == 0) throw Error(ErrorCode::invalid_params, "ensemble count must be >= 1");
  std::vector<Trajectory> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RngStream rng(master_seed, first_stream + i);
    out.push_back(generator(rng));
  }
  return out;
}

std::vector<Trajectory> run_ensemble(const TrajectoryGenerator& generator, std::size_t count,
                                     std::uint64_t master_seed, Execution exec, std::uint64_t first_stream) {
  if (exec.mode == Execution::Mode::serial) {
    return run_ensemble_serial(generator, count, master_seed, first_stream);
  }
  if (count == 0) throw Error(ErrorCode::invalid_params, "ensemble count must be >= 1");
  std::vector<Trajectory> out(count);
  std::vector<std::exception_ptr> errors(count);
  const int threads = exec.jobs > 0 ? exec.jobs : omp_get_max_threads();
  const auto n = static_cast<long>(count);

#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (long i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      RngStream rng(master_seed, first_stream + idx);
      out[idx] = generator(rng);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }

  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace sgpp
