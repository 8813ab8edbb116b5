#include "sgpp/experiment.hpp"

#include "sgpp/error.hpp"
#include "sgpp/rng.hpp"
#include "sgpp/svg_plot.hpp"
#include "sgpp/trajectory_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#ifndef SGPP_VERSION
#define SGPP_VERSION "0.0.0"
#endif
#ifndef SGPP_GIT_DESCRIBE
#define SGPP_GIT_DESCRIBE "unknown"
#endif

namespace sgpp {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

std::ostream& log_of(const RunOptions& opts) { return opts.log ? *opts.log : std::clog; }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::config_error, "cannot write " + path.string());
  out << text;
}

ExperimentConfig with_overrides(ExperimentConfig cfg, const RunOptions& opts) {
  if (opts.seed) cfg.master_seed = *opts.seed;
  return cfg;
}

struct AssertionResult {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = true;
};

std::vector<AssertionResult> evaluate_assertions(const AssertConfig& a, const std::vector<EnsembleSummary>& sums) {
  std::vector<AssertionResult> out;
  for (const auto& s : sums) {
    const double div = static_cast<double>(s.diverged) / static_cast<double>(s.count);
    if (a.max_diverged_fraction) {
      out.push_back({s.experiment_id + ".diverged_fraction", div, *a.max_diverged_fraction,
                     div <= *a.max_diverged_fraction});
    }
    if (a.min_on_manifold_fraction) {
      out.push_back({s.experiment_id + ".on_manifold_fraction", s.on_manifold_fraction, *a.min_on_manifold_fraction,
                     s.on_manifold_fraction >= *a.min_on_manifold_fraction});
    }
    if (a.max_mean_terminal_normal) {
      out.push_back({s.experiment_id + ".mean_terminal_normal", s.mean_terminal_normal, *a.max_mean_terminal_normal,
                     s.mean_terminal_normal <= *a.max_mean_terminal_normal});
    }
  }
  return out;
}

}  // namespace

std::string version_string() { return std::string(SGPP_VERSION) + " (" + SGPP_GIT_DESCRIBE + ")"; }

std::vector<LabeledRun> run_ensembles(const ExperimentConfig& cfg, Execution exec) {
  const Manifold m = build_manifold(cfg.manifold);
  const DiscreteSupportScore field = atoms_from_manifold(m, cfg.manifold.atom_count);
  const auto& s = cfg.sampler;
  const TimeGrid grid = make_time_grid(s.t_start, s.t_end, s.steps, s.spacing);
  const Vec x_ref = to_vec(cfg.guidance.x_ref);
  const std::size_t count = s.ensemble_count;

  GuidanceParams base;
  base.eta = cfg.guidance.eta;
  base.x_ref = x_ref;
  base.t_stop = cfg.guidance.t_stop;
  base.likelihood = cfg.guidance.likelihood;

  std::vector<LabeledRun> runs;
  auto add = [&](const std::string& key, double value, const TrajectoryGenerator& gen) {
    runs.push_back({cfg.id + ":" + key + "=" + label(value), value, run_ensemble(gen, count, cfg.master_seed, exec)});
  };

  switch (s.method) {
    case Method::sgpp_descent:
      for (double sp : cfg.guidance.sigma_p) {
        GuidanceParams p = base;
        p.sigma_p = sp;
        add("sigma_p", sp, [&, p](RngStream& rng) {
          return run_sgpp_descent(field, &m, grid, p, s.steps_per_t, s.step_rule, rng);
        });
      }
      break;
    case Method::sgpp_sde:
      for (double sp : cfg.guidance.sigma_p) {
        GuidanceParams p = base;
        p.sigma_p = sp;
        add("sigma_p", sp, [&, p](RngStream& rng) {
          return integrate_sgpp_sde(field, &m, grid, p, cfg.guidance.use_mixture, rng);
        });
      }
      break;
    case Method::posterior_ode:
      for (double sp : cfg.guidance.sigma_p) {
        GuidanceParams p = base;
        p.sigma_p = sp;
        add("sigma_p", sp, [&, p](RngStream& rng) {
          Trajectory traj = integrate_posterior_ode(field, &m, grid, p, grid.front() * rng.normal_vec(m.dim()));
          traj.master_seed = rng.master_seed();
          traj.stream_id = rng.stream_id();
          return traj;
        });
      }
      break;
    case Method::dps:
      for (double sigma : cfg.baseline.dps_sigma_list) {
        add("sigma_obs", sigma, [&, sigma](RngStream& rng) {
          return run_dps(field, &m, grid, x_ref, sigma, cfg.baseline.dps_step_scale, rng);
        });
      }
      break;
    case Method::rf_inversion: {
      RfInversionParams rp;
      rp.y0 = x_ref;
      rp.eta = cfg.baseline.rf_inv_eta;
      rp.gamma = cfg.baseline.rf_inv_gamma;
      rp.t_stop = cfg.guidance.t_stop;
      add("eta", rp.eta, [&, rp](RngStream& rng) { return run_rf_inversion(field, &m, grid, rp, rng); });
      break;
    }
  }
  return runs;
}

EnsembleSummary summarize(const LabeledRun& run, const ExperimentConfig& cfg) {
  EnsembleSummary s;
  s.experiment_id = run.experiment_id;
  s.method = cfg.sampler.method;
  s.parameter = run.parameter;
  s.count = run.trajectories.size();
  const Vec x_ref = to_vec(cfg.guidance.x_ref);
  std::size_t finite = 0, on = 0;
  for (const auto& traj : run.trajectories) {
    if (traj.diverged()) {
      ++s.diverged;
      continue;
    }
    const auto& last = traj.records.back();
    if (last.normal_distance) {
      ++finite;
      s.mean_terminal_normal += *last.normal_distance;
      on += *last.normal_distance <= cfg.asserts.on_manifold_tolerance;
    }
    s.mean_distance_to_ref += (last.x - x_ref).norm();
  }
  const std::size_t kept = s.count - s.diverged;
  s.mean_terminal_normal = finite ? s.mean_terminal_normal / static_cast<double>(finite)
                                  : std::numeric_limits<double>::quiet_NaN();
  s.mean_distance_to_ref = kept ? s.mean_distance_to_ref / static_cast<double>(kept)
                                : std::numeric_limits<double>::quiet_NaN();
  s.on_manifold_fraction = static_cast<double>(on) / static_cast<double>(s.count);
  return s;
}

fs::path resolve_output_dir(const ExperimentConfig& cfg, const RunOptions& opts) {
  if (opts.out_dir) return *opts.out_dir;
  const char* env = std::getenv("SGPP_LAB_OUT");
  const fs::path root = (env && *env) ? fs::path(env) : fs::current_path();
  if (!cfg.output.directory.empty()) {
    const fs::path d(cfg.output.directory);
    return d.is_absolute() ? d : root / d;
  }
  return root / cfg.id;
}

int run_experiment(const fs::path& config_path, const RunOptions& opts) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const Error& e) {
    log_of(opts) << "invalid config: " << e.what() << "\n";
    return kExitInvalid;
  }
  return run_experiment(cfg, opts);
}

int run_experiment(const ExperimentConfig& input, const RunOptions& opts) {
  std::ostream& log = log_of(opts);
  const ExperimentConfig cfg = with_overrides(input, opts);
  try {
    validate(cfg);
  } catch (const Error& e) {
    log << "invalid config: " << e.what() << "\n";
    return kExitInvalid;
  }

  const auto started = std::chrono::steady_clock::now();
  const fs::path out = resolve_output_dir(cfg, opts);
  fs::create_directories(out);
  // A stale manifest would mark a half-written directory as complete.
  fs::remove(out / "manifest.json");

  json manifest;
  manifest["config"] = to_config_text(cfg);
  manifest["version"] = SGPP_VERSION;
  manifest["git_describe"] = SGPP_GIT_DESCRIBE;
  json artifacts = json::array();
  int code = kExitOk;

  try {
    const auto runs = run_ensembles(cfg, Execution::parallel(opts.jobs));

    std::vector<LabeledEnsemble> blocks;
    for (const auto& r : runs) blocks.push_back({r.experiment_id, r.trajectories});
    write_trajectories_csv(out / "trajectories.csv", blocks, cfg.manifold.dim);
    artifacts.push_back("trajectories.csv");

    std::vector<EnsembleSummary> sums;
    std::ostringstream rep;
    rep << "experiment_id,method,parameter,count,diverged,mean_terminal_normal,on_manifold_fraction,"
           "mean_distance_to_ref\n";
    for (const auto& r : runs) {
      const auto s = summarize(r, cfg);
      sums.push_back(s);
      rep << s.experiment_id << ',' << to_string(s.method) << ',' << format_double(s.parameter) << ',' << s.count
          << ',' << s.diverged << ',' << format_double(s.mean_terminal_normal) << ','
          << format_double(s.on_manifold_fraction) << ',' << format_double(s.mean_distance_to_ref) << '\n';
      log << s.experiment_id << ": " << s.count << " trajectories, " << s.diverged << " diverged, on-manifold "
          << s.on_manifold_fraction << "\n";
    }
    write_text(out / "reports.csv", rep.str());
    artifacts.push_back("reports.csv");

    if (cfg.output.emit_svg) {
      const Manifold m = build_manifold(cfg.manifold);
      for (const auto& p : render_plot(out / "trajectories.csv", m, out / "plots")) {
        artifacts.push_back(fs::relative(p, out).generic_string());
      }
    }

    json status = json::array();
    for (const auto& r : runs) {
      for (std::size_t i = 0; i < r.trajectories.size(); ++i) {
        status.push_back({{"experiment_id", r.experiment_id},
                          {"trajectory_id", i},
                          {"status", r.trajectories[i].diverged() ? "diverged" : "ok"}});
      }
    }
    manifest["trajectories"] = status;

    json checks = json::array();
    for (const auto& a : evaluate_assertions(cfg.asserts, sums)) {
      checks.push_back({{"name", a.name}, {"value", a.value}, {"limit", a.limit}, {"passed", a.passed}});
      if (!a.passed) {
        log << "assertion failed: " << a.name << " = " << a.value << " (limit " << a.limit << ")\n";
        code = kExitAssertion;
      }
    }
    manifest["assertions"] = checks;
    manifest["status"] = code == kExitOk ? "ok" : "assertion_failed";
  } catch (const std::exception& e) {
    log << "run failed: " << e.what() << "\n";
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    code = kExitFailure;
  }

  manifest["artifacts"] = artifacts;
  manifest["wall_clock_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  manifest["exit_code"] = code;
  write_text(out / "manifest.json", manifest.dump(2) + "\n");
  return code;
}

int run_verification_suite(const fs::path& config_path, const RunOptions& opts) {
  std::ostream& log = log_of(opts);
  ExperimentConfig cfg;
  try {
    cfg = with_overrides(load_config(config_path), opts);
    validate(cfg);
    // Every check name must be known before anything runs.
    for (const auto& c : cfg.verify.checks) {
      const auto names = check_names();
      if (c != "all" && std::find(names.begin(), names.end(), c) == names.end()) {
        throw Error(ErrorCode::config_error, "unknown check " + c);
      }
    }
  } catch (const Error& e) {
    log << "invalid config: " << e.what() << "\n";
    return kExitInvalid;
  }

  CheckContext ctx;
  ctx.master_seed = cfg.master_seed;
  ctx.exec = Execution::parallel(opts.jobs);
  const auto results = run_checks(cfg, ctx);

  std::ostringstream table;
  table << "check,passed,seconds,detail\n";
  bool all = true;
  for (const auto& r : results) {
    all = all && r.passed;
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.3f", r.seconds);
    std::string detail = r.detail;
    for (char& c : detail) {
      if (c == ',' || c == '\n') c = ';';
    }
    table << r.name << ',' << (r.passed ? "true" : "false") << ',' << secs << ',' << detail << '\n';
    log << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << secs << " s): " << r.detail << "\n";
  }
  const fs::path out = resolve_output_dir(cfg, opts);
  fs::create_directories(out);
  write_text(out / "verification.csv", table.str());
  return all ? kExitOk : kExitFailure;
}

int run_plot(const fs::path& config_path, const RunOptions& opts) {
  std::ostream& log = log_of(opts);
  ExperimentConfig cfg;
  try {
    cfg = with_overrides(load_config(config_path), opts);
    validate(cfg);
  } catch (const Error& e) {
    log << "invalid config: " << e.what() << "\n";
    return kExitInvalid;
  }
  const fs::path out = resolve_output_dir(cfg, opts);
  try {
    const auto written = render_plot(out / "trajectories.csv", build_manifold(cfg.manifold), out / "plots");
    for (const auto& p : written) log << p.string() << "\n";
  } catch (const Error& e) {
    log << "plot failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace sgpp
