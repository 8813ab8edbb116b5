#pragma once

// Time grids and trajectory generators: SGPP proximal descent, posterior ODE,
// SGPP-SDE and the DPS / RF-Inversion baselines, plus the ensemble runner.

#include "sgpp/geometry.hpp"
#include "sgpp/guidance.hpp"
#include "sgpp/rng.hpp"
#include "sgpp/score_field.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sgpp {

inline constexpr double kEpsStart = 1e-3;
inline constexpr double kEpsEnd = 1e-3;
inline constexpr double kDivergenceNorm = 1e6;

enum class Spacing { uniform, geometric };

class TimeGrid {
 public:
  // Strictly decreasing t_start = t_0 > ... > t_steps = t_end, all within
  // [kEpsEnd, 1 - kEpsStart]. Geometric spacing keeps t_{k+1} / t_k constant.
  static TimeGrid make(double t_start, double t_end, std::size_t steps, Spacing spacing);

  std::span<const double> times() const { return times_; }
  std::size_t size() const { return times_.size(); }
  double operator[](std::size_t i) const { return times_[i]; }
  double front() const { return times_.front(); }
  double back() const { return times_.back(); }

 private:
  std::vector<double> times_;
};

TimeGrid make_time_grid(double t_start, double t_end, std::size_t steps, Spacing spacing);

enum class Method { sgpp_descent, posterior_ode, sgpp_sde, dps, rf_inversion };
std::string_view to_string(Method m);
std::optional<Method> parse_method(std::string_view s);

enum class TrajectoryStatus { ok, diverged };

struct TrajectoryRecord {
  double t = 0.0;
  Vec x;
  std::optional<double> normal_distance;
  // Step size that produced this record; NaN for initial states and for
  // samplers that integrate in t.
  double step_size = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
  Method method = Method::sgpp_descent;
  std::vector<TrajectoryRecord> records;
  GuidanceParams params;
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
  TrajectoryStatus status = TrajectoryStatus::ok;

  const Vec& terminal() const { return records.back().x; }
  bool diverged() const { return status == TrajectoryStatus::diverged; }
};

// Throws DivergedTrajectory when the run was stopped by the divergence guard.
void require_converged(const Trajectory& traj);

struct StepRule {
  enum class Kind { fixed, fraction } kind = Kind::fraction;
  double value = 0.5;

  static StepRule fixed(double eta) { return {Kind::fixed, eta}; }
  static StepRule fraction(double c) { return {Kind::fraction, c}; }
  double step_at(double t, double sigma_p) const;
};

// Proximal descent from x_0 = (1 - t_0) x_ref + t_0 Z, running steps_per_t
// updates at every grid time. `manifold` (may be null) enables normal
// distance recording against M_t. Divergence is recorded in the status.
Trajectory run_sgpp_descent(const ScoreField& field, const Manifold* manifold, const TimeGrid& grid,
                            const GuidanceParams& p, std::size_t steps_per_t, StepRule rule, RngStream& rng);

// Explicit Euler on the posterior velocity from x_init at grid.front().
Trajectory integrate_posterior_ode(const ScoreField& field, const Manifold* manifold, const TimeGrid& grid,
                                   const GuidanceParams& p, const Vec& x_init);

// Euler-Maruyama on the reverse SDE, started at x = t_0 Z. Throws
// StepTooCoarse when diffusion(t_0) * sqrt(t_0 - t_1) > 0.5.
Trajectory integrate_sgpp_sde(const ScoreField& field, const Manifold* manifold, const TimeGrid& grid,
                              const GuidanceParams& p, bool use_mixture, RngStream& rng);

struct RfInversionParams {
  Vec y0;
  double eta = 0.8;
  double gamma = 0.5;
  double t_stop = 0.0;
};

// Forward phase: reverse-time unconditional Euler from y0 up to grid.front(),
// then x <- (1 - gamma) x + gamma Z. Reverse phase: the RF-Inversion field
// with weight eta, switched to the unconditional velocity below t_stop.
Trajectory run_rf_inversion(const ScoreField& field, const Manifold* manifold, const TimeGrid& grid,
                            const RfInversionParams& params, RngStream& rng);

// Unconditional Euler plus the DPS guidance step from x = t_0 Z.
Trajectory run_dps(const ScoreField& field, const Manifold* manifold, const TimeGrid& grid, const Vec& x_ref,
                   double sigma_obs, double step_scale, RngStream& rng);

struct Execution {
  enum class Mode { serial, parallel } mode = Mode::parallel;
  int jobs = 0;  // 0: OpenMP default

  static Execution serial() { return {Mode::serial, 1}; }
  static Execution parallel(int jobs = 0) { return {Mode::parallel, jobs}; }
};

using TrajectoryGenerator = std::function<Trajectory(RngStream&)>;

// Member i draws from RngStream(master_seed, first_stream + i); output order
// follows stream order regardless of scheduling.
std::vector<Trajectory> run_ensemble(const TrajectoryGenerator& generator, std::size_t count,
                                     std::uint64_t master_seed, Execution exec = {},
                                     std::uint64_t first_stream = 0);

// Serial reference kept for testing the parallel runner.
std::vector<Trajectory> run_ensemble_serial(const TrajectoryGenerator& generator, std::size_t count,
                                            std::uint64_t master_seed, std::uint64_t first_stream = 0);

}  // namespace sgpp
