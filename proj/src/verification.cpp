#include "sgpp/verification.hpp"

#include "sgpp/analysis.hpp"
#include "sgpp/error.hpp"
#include "sgpp/guidance.hpp"
#include "sgpp/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>

namespace sgpp {

namespace {

constexpr double kPi = std::numbers::pi;

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Manifold unit_circle(ComponentDensity d = {}) { return Manifold::circle(vec2(0.0, 0.0), 1.0, d); }
Manifold unit_segment() { return Manifold::segment(vec2(-1.0, 0.0), vec2(1.0, 0.0)); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

template <typename F>
CheckResult timed(const std::string& name, F&& body) {
  const auto start = std::chrono::steady_clock::now();
  CheckResult r;
  r.name = name;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

// Richardson-extrapolated central difference of log p_t along each axis.
Vec fd_gradient(const ScoreField& f, const Vec& x, double t, double h) {
  Vec g(x.size());
  Vec probe = x;
  auto central = [&](Eigen::Index i, double step) {
    probe[i] = x[i] + step;
    const double up = f.log_density(probe, t);
    probe[i] = x[i] - step;
    const double down = f.log_density(probe, t);
    probe[i] = x[i];
    return (up - down) / (2.0 * step);
  };
  for (Eigen::Index i = 0; i < x.size(); ++i) g[i] = (4.0 * central(i, h / 2.0) - central(i, h)) / 3.0;
  return g;
}

double angle_gap(double a, double b) { return std::remainder(a - b, 2.0 * kPi); }

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] < v[i - 1])) return false;
  }
  return true;
}

std::string join(const std::vector<double>& v, const char* f = "%.3g") {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(f, v[i]);
  return s;
}

}  // namespace

CheckResult check_score_gradient(const CheckContext& ctx, std::size_t probes) {
  return timed("score_gradient", [&](CheckResult& r) {
    RngStream rng(ctx.master_seed, 1);
    const DiscreteSupportScore discrete = atoms_from_manifold(Manifold::two_moons(), 64);
    std::vector<GmmComponent> comps;
    const std::vector<Vec> means{vec2(-1.0, 0.0), vec2(1.0, 0.5), vec2(0.0, -1.0)};
    const std::vector<double> weights{0.2, 0.3, 0.5};
    for (std::size_t k = 0; k < 3; ++k) {
      Eigen::MatrixXd a(2, 2);
      a << rng.normal(), rng.normal(), rng.normal(), rng.normal();
      comps.push_back({means[k], 0.2 * a * a.transpose() + 0.05 * Eigen::MatrixXd::Identity(2, 2), weights[k]});
    }
    const GmmScore gmm(comps);

    double worst = 0.0;
    for (const ScoreField* f : {static_cast<const ScoreField*>(&discrete), static_cast<const ScoreField*>(&gmm)}) {
      for (std::size_t i = 0; i < probes; ++i) {
        const double t = 0.1 + 0.8 * rng.uniform();
        const Vec x = 1.5 * rng.normal_vec(2);
        const Vec s = f->score(x, t);
        const Vec fd = fd_gradient(*f, x, t, 1e-3 * t);
        worst = std::max(worst, (fd - s).norm() / std::max(1.0, s.norm()));
      }
    }
    r.passed = worst <= kScoreFdRelTol;
    r.detail = "max relative FD error " + fmt("%.3g", worst) + " over " + std::to_string(2 * probes) + " probes";
  });
}

CheckResult check_rf_ve_equivalence(const CheckContext& ctx, std::size_t probes) {
  return timed("rf_ve", [&](CheckResult& r) {
    RngStream rng(ctx.master_seed, 2);
    std::vector<Vec> atoms;
    std::vector<double> w;
    double total = 0.0;
    for (int i = 0; i < 8; ++i) {
      atoms.push_back(rng.normal_vec(2));
      w.push_back(0.5 + rng.uniform());
      total += w.back();
    }
    for (double& v : w) v /= total;
    const DiscreteSupportScore rf(atoms, w);
    const VeDiscreteScore ve(rf);
    double worst = 0.0;
    for (std::size_t i = 0; i < probes; ++i) {
      const double t = 0.05 + 0.9 * rng.uniform();
      const Vec x = 1.5 * rng.normal_vec(2);
      worst = std::max(worst, (rf_score_via_ve(ve, x, t) - rf.score(x, t)).norm());
    }
    r.passed = worst <= kVeEquivalenceTol;
    r.detail = "max |via VE - direct| = " + fmt("%.3g", worst);
  });
}

CheckResult check_score_decomposition(const CheckContext&) {
  return timed("decomposition", [&](CheckResult& r) {
    const std::vector<double> ts{0.2, 0.1, 0.05, 0.025};
    const double n_norm = 0.05;
    const Manifold circle = unit_circle();
    const Manifold segment = unit_segment();
    const DiscreteSupportScore circle_field = atoms_from_manifold(circle);
    const DiscreteSupportScore segment_field = atoms_from_manifold(segment);
    std::vector<double> rc, rs;
    for (double t : ts) {
      const Vec u = vec2(std::cos(0.7), std::sin(0.7));
      const Vec xc = (1.0 - t) * u + n_norm * u;
      rc.push_back(decomposition_residual(circle, circle_field, xc, t).residual_norm / (n_norm / (t * t)));
      // Off-centre probe: at the midpoint the residual vanishes by symmetry.
      const Vec xs = vec2((1.0 - t) * 0.9, n_norm);
      rs.push_back(decomposition_residual(segment, segment_field, xs, t).residual_norm / (n_norm / (t * t)));
    }
    r.passed = strictly_decreasing(rc) && strictly_decreasing(rs);
    r.detail = "circle ratios " + join(rc) + "; segment ratios " + join(rs);
  });
}

namespace {

struct Testbed {
  Manifold m;
  DiscreteSupportScore field;
  double forcing_constant;
  bool circle;
};

Testbed make_testbed(const std::string& name) {
  if (name == "circle") {
    Manifold m = unit_circle();
    return {m, atoms_from_manifold(m), kForcingConstantCircle, true};
  }
  if (name == "segment") {
    Manifold m = unit_segment();
    return {m, atoms_from_manifold(m), kForcingConstantSegment, false};
  }
  throw Error(ErrorCode::invalid_params, "unknown testbed " + name);
}

TrajectoryGenerator contraction_generator(const Testbed& tb, const TimeGrid& grid, double sigma_p, double fraction) {
  return [&tb, &grid, sigma_p, fraction](RngStream& rng) {
    GuidanceParams p;
    p.sigma_p = sigma_p;
    if (tb.circle) {
      const double ang = 2.0 * kPi * rng.uniform();
      const double rad = 0.6 + 0.8 * rng.uniform();
      p.x_ref = vec2(rad * std::cos(ang), rad * std::sin(ang));
    } else {
      const double x = 2.4 * rng.uniform() - 1.2;
      p.x_ref = vec2(x, 0.8 * rng.uniform() - 0.4);
    }
    return run_sgpp_descent(tb.field, &tb.m, grid, p, 5, StepRule::fraction(fraction), rng);
  };
}

}  // namespace

CheckResult check_normal_contraction(const CheckContext& ctx, const std::vector<std::string>& testbeds,
                                     double sigma_p, double fraction, std::size_t seeds) {
  return timed("contraction", [&](CheckResult& r) {
    const TimeGrid grid = make_time_grid(0.9, kEpsEnd, 60, Spacing::geometric);
    std::ostringstream detail;
    bool ok = true;
    for (const auto& name : testbeds) {
      const Testbed tb = make_testbed(name);
      const auto ens = run_ensemble(contraction_generator(tb, grid, sigma_p, fraction), seeds, ctx.master_seed, ctx.exec);
      std::size_t violations = 0, non_contracting = 0;
      for (const auto& traj : ens) {
        const auto rep = normal_trace(traj, tb.m, tb.forcing_constant);
        violations += rep.violations;
        non_contracting += rep.non_contracting;
      }
      const auto neg = run_ensemble(contraction_generator(tb, grid, sigma_p, 1.5), seeds, ctx.master_seed, ctx.exec);
      std::size_t neg_violations = 0;
      for (const auto& traj : neg) neg_violations += normal_trace(traj, tb.m, tb.forcing_constant).violations;
      ok = ok && violations == 0 && neg_violations >= 1;
      detail << name << ": C_N=" << tb.forcing_constant << " violations=" << violations
             << " non_contracting=" << non_contracting << " control_violations=" << neg_violations << "; ";
    }
    r.passed = ok;
    r.detail = detail.str();
  });
}

CheckResult check_drift_bound(const CheckContext&) {
  return timed("drift", [&](CheckResult& r) {
    GuidanceParams p;
    p.sigma_p = 0.2;

    // Small steps keep the chord-versus-arc term well below the curvature bound.
    const double fraction = 0.05;

    // Flat testbed: the geometric bound is zero, so everything left is slack.
    // Probes stay several t away from the segment ends.
    const Manifold seg = unit_segment();
    const DiscreteSupportScore seg_field = atoms_from_manifold(seg);
    double worst_flat = 0.0;
    for (double t : {0.1, 0.05}) {
      for (double u : {-0.3, 0.0, 0.3}) {
        for (double off : {0.05, 0.1, 0.2}) {
          p.x_ref = vec2(u + 0.5, 0.3);
          const Vec x = vec2((1.0 - t) * u, off);
          const double eta = fraction * max_stable_step(t, p.sigma_p);
          const auto rep = drift_bound_check(single_step_trajectory(seg_field, x, t, eta, p), seg, 0.0);
          for (const auto& s : rep.steps) worst_flat = std::max(worst_flat, s.error / s.eta);
        }
      }
    }
    const bool flat_ok = worst_flat <= kDriftSlack;

    // Circle: offsets outside M_t, v_tan driven by an on-manifold reference.
    const Manifold circ = unit_circle();
    const DiscreteSupportScore circ_field = atoms_from_manifold(circ);
    const double t = 0.1;
    const Vec u = vec2(std::cos(0.4), std::sin(0.4));
    p.x_ref = vec2(std::cos(1.2), std::sin(1.2));
    const double eta = fraction * max_stable_step(t, p.sigma_p);
    std::vector<double> rel, bound;
    std::size_t violations = 0;
    for (double off : {0.05, 0.1, 0.2}) {
      const Vec x = (1.0 - t + off) * u;
      const auto rep = drift_bound_check(single_step_trajectory(circ_field, x, t, eta, p), circ, kDriftSlack);
      violations += rep.violations;
      rel.push_back(rep.steps.front().error / rep.steps.front().v_tan_norm);
      bound.push_back(rep.steps.front().bound / rep.steps.front().v_tan_norm);
    }
    std::vector<double> neg(rel.rbegin(), rel.rend());
    r.passed = flat_ok && violations == 0 && strictly_decreasing(neg);
    r.detail = "flat max error/eta " + fmt("%.3g", worst_flat) + " (slack " + fmt("%.3g", kDriftSlack) +
               "); circle error/|v_tan| " + join(rel) + " under bounds " + join(bound) + ", violations " + std::to_string(violations);
  });
}

CheckResult check_stability_asymptotics(const CheckContext&) {
  return timed("stability", [&](CheckResult& r) {
    const double t = 1e-3;
    const double ratio = max_stable_step(t, 0.2) / (2.0 * t * t);
    r.passed = ratio >= 0.99 && ratio <= 1.0;
    r.detail = "max_stable_step/(2t^2) at t=1e-3: " + fmt("%.9f", ratio);
  });
}

CheckResult check_fixed_point_map(const CheckContext&) {
  return timed("fixed_point", [&](CheckResult& r) {
    ComponentDensity vm;
    vm.kind = DensityKind::von_mises;
    vm.concentration = 2.0;
    vm.mode_angle = 0.0;
    std::ostringstream detail;
    bool ok = true;
    for (const auto& [label, density] : {std::pair{"uniform", ComponentDensity{}}, std::pair{"von_mises", vm}}) {
      const Manifold m = unit_circle(density);
      const DiscreteSupportScore field = atoms_from_manifold(m);
      GuidanceParams p;
      p.sigma_p = 0.05;

      // Tangential equilibrium: the fixed point at t projects onto the MAP of
      // M_t with reference (1-t) x_ref and width sigma_p(t).
      const double t = 0.05;
      p.x_ref = vec2(0.3, 1.1);
      const auto fp = fixed_point_solve(field, m, t, p, (1.0 - t) * p.x_ref.normalized(), 100000, 1e-12);
      const auto map = map_oracle(m.scaled(1.0 - t), (1.0 - t) * p.x_ref, sigma_p_of_t(t, p.sigma_p), kMapGridPoints);
      const double cells = std::abs(angle_gap(project(m, fp.x_star / (1.0 - t)).chart_param, map.argmax_param)) /
                           map.grid_resolution;
      ok = ok && cells <= kMapGridCells;

      // Quadratic suppression of the normal offset, on-manifold references.
      double worst = 0.0;
      for (double sp : {0.05, 0.2, 0.5}) {
        for (double ang : {0.7, 1.3, 2.5}) {
          GuidanceParams q;
          q.sigma_p = sp;
          q.x_ref = vec2(std::cos(ang), std::sin(ang));
          for (double ts : {0.2, 0.1, 0.05}) {
            const auto f = fixed_point_solve(field, m, ts, q, (1.0 - ts) * q.x_ref, 400000, 1e-12);
            worst = std::max(worst, f.n_star_norm / (ts * ts));
          }
        }
      }
      ok = ok && worst <= kEquilibriumNormalConstant;
      detail << label << ": |pi(x*) - MAP| = " << fmt("%.2f", cells) << " cells, max n*/t^2 = " << fmt("%.3f", worst)
             << "; ";
    }
    r.passed = ok;
    r.detail = detail.str();
  });
}

CheckResult check_posterior_frequencies(const CheckContext& ctx, LikelihoodModel likelihood, std::size_t paths,
                                        std::size_t steps) {
  const std::string name =
      likelihood == LikelihoodModel::exact_discrete ? "posterior_exact" : "posterior_surrogate";
  return timed(name, [&](CheckResult& r) {
    const std::vector<Vec> atoms{vec2(0.0, 0.0), vec2(1.0, 0.0)};
    const std::vector<double> prior{0.5, 0.5};
    const DiscreteSupportScore field(atoms, prior);
    GuidanceParams p;
    p.sigma_p = 0.5;
    p.x_ref = vec2(0.0, 0.0);
    p.likelihood = likelihood;
    const TimeGrid grid = make_time_grid(0.99, kEpsEnd, steps, Spacing::uniform);
    const auto ens = run_ensemble(
        [&](RngStream& rng) { return integrate_sgpp_sde(field, nullptr, grid, p, false, rng); }, paths,
        ctx.master_seed, ctx.exec);
    const auto oracle = posterior_oracle_discrete(atoms, prior, p.x_ref, p.sigma_p);
    const auto rep = posterior_frequency_check(std::span<const Trajectory>(ens), atoms, oracle);
    r.passed = rep.passed;
    r.detail = "frequency of atom 0: " + fmt("%.4f", rep.frequencies[0]) + " vs " + fmt("%.4f", oracle[0]) +
               " +- " + fmt("%.4f", rep.tolerances[0]) + " (" + std::string(to_string(likelihood)) + ")";
  });
}

CheckResult check_hard_limit(const CheckContext& ctx) {
  return timed("hard_limit", [&](CheckResult& r) {
    RngStream rng(ctx.master_seed, 3);
    const std::vector<double> sigmas{1e-1, 1e-2, 1e-3};
    bool ok = true;
    double worst_rel = 0.0, worst_sign = 0.0;
    for (int i = 0; i < 20; ++i) {
      const double t = 0.1 + 0.8 * rng.uniform();
      const Vec x = rng.normal_vec(2);
      const Vec y0 = rng.normal_vec(2);
      const auto errs = hard_limit_error(x, t, y0, sigmas);
      std::vector<double> e;
      for (const auto& pr : errs) e.push_back(pr.second);
      ok = ok && strictly_decreasing(e);
      worst_rel = std::max(worst_rel, e.back() / hard_limit_velocity(x, t, y0).norm());

      // eta = 1: the hard-limit velocity is minus the RF-Inversion field.
      const Vec v_rf = rf_inversion_field(rng.normal_vec(2), x, 1.0 - t, y0, 1.0);
      worst_sign = std::max(worst_sign, (hard_limit_velocity(x, t, y0) + v_rf).norm());
    }
    r.passed = ok && worst_rel <= kHardLimitRelTol && worst_sign <= kSignIdentityTol;
    r.detail = std::string(ok ? "monotone" : "NOT monotone") + ", final relative error " + fmt("%.3g", worst_rel) +
               ", sign identity residual " + fmt("%.3g", worst_sign);
  });
}

CheckResult check_geometric_locking(const CheckContext& ctx) {
  return timed("locking", [&](CheckResult& r) {
    const Manifold m = unit_circle();
    const DiscreteSupportScore field = atoms_from_manifold(m);
    const TimeGrid grid = make_time_grid(0.999, kEpsEnd, 500, Spacing::uniform);
    const Vec y0 = vec2(std::cos(0.7), std::sin(0.7));
    const std::size_t seeds = 64;
    auto run = [&](double t_stop) {
      RfInversionParams rp;
      rp.y0 = y0;
      rp.eta = 0.8;
      rp.gamma = 0.5;
      rp.t_stop = t_stop;
      return run_ensemble([&](RngStream& rng) { return run_rf_inversion(field, &m, grid, rp, rng); }, seeds,
                          ctx.master_seed, ctx.exec);
    };
    const auto locked = run(0.0);
    const auto released = run(0.1);
    std::size_t close = 0, on_manifold = 0;
    double d_locked = 0.0, d_released = 0.0;
    for (const auto& traj : locked) {
      const double d = (traj.terminal() - y0).norm();
      close += d <= kLockDistance;
      d_locked += d / seeds;
    }
    for (const auto& traj : released) {
      const auto& last = traj.records.back();
      on_manifold += !traj.diverged() && last.normal_distance && *last.normal_distance <= kOnManifoldDistance;
      d_released += (traj.terminal() - y0).norm() / seeds;
    }
    const double f_close = static_cast<double>(close) / seeds;
    const double f_on = static_cast<double>(on_manifold) / seeds;
    r.passed = f_close >= 0.95 && f_on >= 0.90 && d_released > d_locked;
    r.detail = "locked within 1e-2: " + fmt("%.3f", f_close) + ", released on-manifold: " + fmt("%.3f", f_on) +
               ", mean distance to x_ref " + fmt("%.4f", d_locked) + " -> " + fmt("%.4f", d_released);
  });
}

CheckResult check_dps_trend(const CheckContext& ctx) {
  return timed("dps_trend", [&](CheckResult& r) {
    const Manifold m = Manifold::two_moons();
    const DiscreteSupportScore field = atoms_from_manifold(m);
    const TimeGrid grid = make_time_grid(0.999, kEpsEnd, 100, Spacing::uniform);
    const Vec x_ref = vec2(0.0, 1.0);
    const std::size_t seeds = 64;
    std::vector<double> bad;
    for (double sigma : {1.0, 0.5, 0.1, 0.05}) {
      const auto ens = run_ensemble(
          [&](RngStream& rng) { return run_dps(field, &m, grid, x_ref, sigma, kDpsStepScale, rng); }, seeds,
          ctx.master_seed, ctx.exec);
      std::size_t n = 0;
      for (const auto& traj : ens) {
        const auto& last = traj.records.back();
        n += traj.diverged() || !last.normal_distance || *last.normal_distance > kOnManifoldDistance;
      }
      bad.push_back(static_cast<double>(n) / seeds);
    }
    bool ok = true;
    for (std::size_t i = 1; i < bad.size(); ++i) ok = ok && bad[i] >= bad[i - 1];
    r.passed = ok;
    r.detail = "diverged-or-off-manifold fraction for sigma 1, 0.5, 0.1, 0.05: " + join(bad);
  });
}

std::vector<std::string> check_names() {
  return {"score_gradient", "rf_ve",     "decomposition", "contraction", "drift",    "stability",
          "fixed_point",    "posterior", "hard_limit",    "locking",     "dps_trend"};
}

std::vector<CheckResult> run_checks(const ExperimentConfig& cfg, const CheckContext& ctx) {
  const auto& v = cfg.verify;
  const bool all = std::find(v.checks.begin(), v.checks.end(), "all") != v.checks.end();
  const auto names = check_names();
  for (const auto& c : v.checks) {
    if (c != "all" && std::find(names.begin(), names.end(), c) == names.end()) {
      throw Error(ErrorCode::config_error, "unknown check " + c);
    }
  }
  auto wanted = [&](const std::string& n) {
    return all || std::find(v.checks.begin(), v.checks.end(), n) != v.checks.end();
  };
  std::vector<CheckResult> out;
  if (wanted("score_gradient")) out.push_back(check_score_gradient(ctx));
  if (wanted("rf_ve")) out.push_back(check_rf_ve_equivalence(ctx));
  if (wanted("decomposition")) out.push_back(check_score_decomposition(ctx));
  if (wanted("contraction")) {
    out.push_back(check_normal_contraction(ctx, v.testbeds, v.sigma_p, v.contraction_fraction, v.contraction_seeds));
  }
  if (wanted("drift")) out.push_back(check_drift_bound(ctx));
  if (wanted("stability")) out.push_back(check_stability_asymptotics(ctx));
  if (wanted("fixed_point")) out.push_back(check_fixed_point_map(ctx));
  if (wanted("posterior")) {
    out.push_back(check_posterior_frequencies(ctx, v.posterior_likelihood, v.posterior_paths, v.posterior_steps));
  }
  if (wanted("hard_limit")) out.push_back(check_hard_limit(ctx));
  if (wanted("locking")) out.push_back(check_geometric_locking(ctx));
  if (wanted("dps_trend")) out.push_back(check_dps_trend(ctx));
  return out;
}

}  // namespace sgpp
