#include "sgpp/error.hpp"
#include "sgpp/samplers.hpp"
#include "sgpp/trajectory_io.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace sgpp;
using testutil::v2;

namespace {

GuidanceParams params(double sigma_p, const Vec& x_ref) {
  GuidanceParams p;
  p.sigma_p = sigma_p;
  p.x_ref = x_ref;
  return p;
}

// Zero score: the data distribution is flat.
class ZeroField final : public ScoreField {
 public:
  std::size_t dim() const override { return 2; }
  Vec score(const Vec&, double t) const override {
    check_open_unit_time(t);
    return Vec::Zero(2);
  }
  double log_density(const Vec&, double) const override { return 0.0; }
};

std::string csv_of(const std::vector<Trajectory>& ens) {
  std::ostringstream out;
  const LabeledEnsemble block{"e", ens};
  write_trajectories_csv(out, std::span<const LabeledEnsemble>(&block, 1));
  return out.str();
}

}  // namespace

TEST_CASE("time grids") {
  const auto u = make_time_grid(0.9, 0.1, 2, Spacing::uniform);
  REQUIRE(u.size() == 3);
  CHECK(u[0] == 0.9);
  CHECK(u[1] == doctest::Approx(0.5));
  CHECK(u[2] == 0.1);
  const auto one = make_time_grid(0.9, 0.1, 1, Spacing::uniform);
  CHECK(one.size() == 2);
  const auto g = make_time_grid(0.9, 1e-3, 30, Spacing::geometric);
  const double r = g[1] / g[0];
  for (std::size_t k = 1; k + 1 < g.size(); ++k) CHECK(std::abs(g[k + 1] / g[k] - r) < 1e-12);
  CHECK(g.back() == 1e-3);

  CHECK_THROWS_AS(make_time_grid(0.9, 0.1, 0, Spacing::uniform), Error);
  CHECK_THROWS_AS(make_time_grid(0.1, 0.9, 5, Spacing::uniform), Error);
  CHECK_THROWS_AS(make_time_grid(1.0, 0.1, 5, Spacing::uniform), Error);
  CHECK_THROWS_AS(make_time_grid(0.9, 1e-5, 5, Spacing::uniform), Error);
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::sgpp_descent, Method::posterior_ode, Method::sgpp_sde, Method::dps, Method::rf_inversion}) {
    CHECK(parse_method(to_string(m)) == m);
  }
  CHECK_FALSE(parse_method("nope").has_value());
}

// The fixed point at the last grid time t_N is (1 - t_N) a, not a itself.
TEST_CASE("descent with a consistent anchor converges to the scaled atom") {
  const Vec a = v2(0.6, -0.3);
  const DiscreteSupportScore f({a}, {1.0});
  const auto grid = make_time_grid(0.9, 1e-3, 60, Spacing::geometric);
  RngStream rng(1, 0);
  const auto traj = run_sgpp_descent(f, nullptr, grid, params(0.2, a), 5, StepRule::fraction(0.5), rng);
  CHECK(traj.status == TrajectoryStatus::ok);
  CHECK((traj.terminal() - (1 - grid.back()) * a).norm() < 1e-6);
  CHECK((traj.terminal() - a).norm() < 1e-3);
}

TEST_CASE("descent on the uniform circle lands on the radial MAP") {
  const Manifold c = Manifold::circle(v2(0, 0), 1.0);
  const auto f = atoms_from_manifold(c, 512);
  const auto grid = make_time_grid(0.9, 1e-3, 60, Spacing::geometric);
  RngStream rng(7, 3);
  const auto traj = run_sgpp_descent(f, &c, grid, params(0.2, v2(2, 0)), 5, StepRule::fraction(0.5), rng);
  // One atom spacing on the unit circle.
  CHECK((traj.terminal() - v2(1, 0)).norm() < 2 * M_PI / 512);
  CHECK(traj.records.back().normal_distance.has_value());
}

TEST_CASE("oversized fixed steps diverge and are flagged") {
  const DiscreteSupportScore f({v2(1, 0)}, {1.0});
  const auto grid = make_time_grid(0.5, 0.01, 40, Spacing::geometric);
  RngStream rng(1, 0);
  const auto traj = run_sgpp_descent(f, nullptr, grid, params(0.2, v2(0, 1)), 5, StepRule::fixed(1.0), rng);
  CHECK(traj.diverged());
  CHECK_THROWS_AS(require_converged(traj), Error);
}

TEST_CASE("posterior ODE limits") {
  const DiscreteSupportScore f({v2(1, 0), v2(-1, 0.3)}, {0.4, 0.6});
  const auto grid = make_time_grid(0.95, 1e-3, 400, Spacing::uniform);
  const Vec x0 = v2(0.3, -0.4);
  const auto cond = integrate_posterior_ode(f, nullptr, grid, params(1e8, v2(0, 0)), x0);
  Vec x = x0;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) x += (grid[k + 1] - grid[k]) * rf_velocity(f, x, grid[k]);
  CHECK((cond.terminal() - x).norm() < 1e-6);

  const Vec a = v2(0.5, 0.5);
  const DiscreteSupportScore one({a}, {1.0});
  const auto fine = make_time_grid(0.95, 1e-3, 2000, Spacing::uniform);
  const auto t2 = integrate_posterior_ode(one, nullptr, fine, params(0.3, a), x0);
  CHECK((t2.terminal() - a).norm() < 1e-3);
}

TEST_CASE("SDE with a flat field stays centred") {
  const ZeroField f;
  const auto grid = make_time_grid(0.99, 1e-3, 1000, Spacing::uniform);
  const auto p = params(1e9, v2(0, 0));
  const auto ens = run_ensemble(
      [&](RngStream& rng) { return integrate_sgpp_sde(f, nullptr, grid, p, false, rng); }, 500, 11);
  Vec mean = Vec::Zero(2);
  double var = 0.0;
  for (const auto& t : ens) mean += t.terminal();
  mean /= 500.0;
  for (const auto& t : ens) var += (t.terminal() - mean).squaredNorm() / 2.0;
  var /= 499.0;
  const double tol = 3.0 * std::sqrt(var / 500.0) + 1e-12;
  CHECK(std::abs(mean[0]) <= tol);
  CHECK(std::abs(mean[1]) <= tol);

  // Late increments are nearly deterministic: the noise part has std <= 1e-2.
  double noise2 = 0.0;
  std::size_t n = 0;
  for (const auto& traj : ens) {
    const auto& recs = traj.records;
    for (std::size_t k = 1; k < recs.size(); ++k) {
      if (recs[k - 1].t > 0.01) continue;
      const double dt = recs[k].t - recs[k - 1].t;
      const auto c = sde_coefficients(f, recs[k - 1].x, recs[k - 1].t, p, false);
      noise2 += (recs[k].x - recs[k - 1].x - c.drift * dt).squaredNorm() / 2.0;
      ++n;
    }
  }
  REQUIRE(n > 0);
  CHECK(std::sqrt(noise2 / static_cast<double>(n)) <= 1e-2);
}

TEST_CASE("coarse SDE grids are rejected") {
  const ZeroField f;
  const auto grid = make_time_grid(0.99, 1e-3, 10, Spacing::uniform);
  RngStream rng(1, 0);
  CHECK_THROWS_AS(integrate_sgpp_sde(f, nullptr, grid, params(0.2, v2(0, 0)), false, rng), Error);
}

TEST_CASE("RF-Inversion with full guidance locks onto the reference") {
  const Manifold c = Manifold::circle(v2(0, 0), 1.0);
  const auto f = atoms_from_manifold(c, 512);
  const auto grid = make_time_grid(0.999, 1e-3, 500, Spacing::uniform);
  RfInversionParams rp;
  rp.y0 = v2(std::cos(0.7), std::sin(0.7));
  rp.eta = 1.0;
  rp.gamma = 0.5;
  RngStream rng(7, 0);
  const auto traj = run_rf_inversion(f, &c, grid, rp, rng);
  CHECK((traj.terminal() - rp.y0).norm() < 1e-3);

  rp.eta = 0.8;
  rp.t_stop = 0.1;
  const auto ens = run_ensemble([&](RngStream& r) { return run_rf_inversion(f, &c, grid, rp, r); }, 32, 7);
  int good = 0;
  for (const auto& t : ens) {
    if (*t.records.back().normal_distance <= 0.05 && (t.terminal() - rp.y0).norm() <= 0.3) ++good;
  }
  CHECK(good >= 29);
}

TEST_CASE("DPS with a single atom is the unconditional ODE") {
  const DiscreteSupportScore f({v2(1, 0.2)}, {1.0});
  const auto grid = make_time_grid(0.999, 1e-3, 100, Spacing::uniform);
  RngStream r1(3, 0);
  const auto dps = run_dps(f, nullptr, grid, v2(-1, 0), 0.1, 10.0, r1);
  RngStream r2(3, 0);
  Vec x = grid.front() * r2.normal_vec(2);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) x += (grid[k + 1] - grid[k]) * rf_velocity(f, x, grid[k]);
  CHECK((dps.terminal() - x).norm() < 1e-6);
}

TEST_CASE("DPS with an on-manifold reference stays near it") {
  const Manifold m = Manifold::two_moons();
  const auto f = atoms_from_manifold(m, 512);
  const auto grid = make_time_grid(0.999, 1e-3, 100, Spacing::uniform);
  const Vec x_ref = v2(0, 1);
  const auto ens = run_ensemble([&](RngStream& r) { return run_dps(f, &m, grid, x_ref, 0.5, 10.0, r); }, 100, 7);
  int near = 0;
  for (const auto& t : ens) near += (t.terminal() - x_ref).norm() <= 0.2;
  CHECK(near >= 50);
}

TEST_CASE("ensembles are deterministic and scheduling independent") {
  const Manifold m = Manifold::two_moons();
  const auto f = atoms_from_manifold(m, 128);
  const auto grid = make_time_grid(0.9, 1e-3, 20, Spacing::geometric);
  const auto p = params(0.2, v2(0, 1));
  const TrajectoryGenerator gen = [&](RngStream& rng) {
    return run_sgpp_descent(f, &m, grid, p, 2, StepRule::fraction(0.5), rng);
  };
  const auto serial = run_ensemble_serial(gen, 16, 42);
  const auto par1 = run_ensemble(gen, 16, 42, Execution::parallel(1));
  const auto par4 = run_ensemble(gen, 16, 42, Execution::parallel(4));
  CHECK(csv_of(serial) == csv_of(par1));
  CHECK(csv_of(serial) == csv_of(par4));
  CHECK(csv_of(serial) == csv_of(run_ensemble_serial(gen, 16, 42)));
  CHECK(csv_of(serial) != csv_of(run_ensemble_serial(gen, 16, 43)));

  const auto single = run_ensemble(gen, 1, 42);
  RngStream rng(42, 0);
  CHECK(csv_of(single) == csv_of({gen(rng)}));
  for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].stream_id == i);
}

TEST_CASE("parallel ensembles propagate member failures") {
  const TrajectoryGenerator gen = [](RngStream& rng) -> Trajectory {
    if (rng.stream_id() == 5) throw Error(ErrorCode::invalid_params, "boom");
    return Trajectory{};
  };
  CHECK_THROWS_AS(run_ensemble(gen, 8, 1, Execution::parallel(2)), Error);
}

TEST_CASE("rng streams are keyed") {
  RngStream a(1, 2), b(1, 2), c(1, 3);
  const double x = a.normal();
  CHECK(x == b.normal());
  CHECK(x != c.normal());
}
