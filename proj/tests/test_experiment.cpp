#include "sgpp/config.hpp"
#include "sgpp/experiment.hpp"
#include "sgpp/trajectory_io.hpp"
#include "test_util.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace sgpp;
namespace fs = std::filesystem;

namespace {

const std::string kSmall =
    "[experiment]\nid = small\n[manifold]\nkind = two_moons\natom_count = 128\n"
    "[guidance]\nsigma_p = 0.5 0.2 0.01\nx_ref = 0 1\n"
    "[sampler]\nmethod = sgpp_descent\nsteps = 12\nsteps_per_t = 2\nspacing = geometric\nensemble_count = 8\n"
    "[output]\nemit_svg = true\n[seed]\nmaster_seed = 3\n";

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir / name;
  std::ofstream(p, std::ios::binary) << text;
  return p;
}

RunOptions quiet(const fs::path& out) {
  static std::ostringstream sink;
  RunOptions o;
  o.out_dir = out;
  o.log = &sink;
  return o;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(SGPP_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("run writes CSV, reports, plots and a manifest") {
  const auto dir = testutil::scratch("exp_run");
  const auto cfg_path = write_config(dir, "small.ini", kSmall);
  const fs::path out = dir / "out";
  REQUIRE(run_experiment(cfg_path, quiet(out)) == kExitOk);

  const auto rows = read_trajectories_csv(out / "trajectories.csv");
  const auto cfg = load_config(cfg_path);
  // Initial state plus steps_per_t updates at each of steps + 1 grid times.
  const std::size_t per_traj = 1 + (cfg.sampler.steps + 1) * cfg.sampler.steps_per_t;
  CHECK(rows.size() == 3 * cfg.sampler.ensemble_count * per_traj);
  CHECK(fs::exists(out / "reports.csv"));

  std::size_t svgs = 0;
  for (const auto& e : fs::directory_iterator(out / "plots")) svgs += e.path().extension() == ".svg";
  CHECK(svgs == 3);

  const auto manifest = nlohmann::json::parse(testutil::slurp(out / "manifest.json"));
  CHECK(manifest["exit_code"] == 0);
  CHECK(manifest["status"] == "ok");
  CHECK(manifest["trajectories"].size() == 3 * cfg.sampler.ensemble_count);
  CHECK(parse_config(manifest["config"].get<std::string>()) == cfg);
  CHECK(manifest["artifacts"].size() == 5);
  const auto mtime = fs::last_write_time(out / "manifest.json");
  CHECK(mtime >= fs::last_write_time(out / "trajectories.csv"));
}

TEST_CASE("reruns are byte-identical and seeds override the config") {
  const auto dir = testutil::scratch("exp_det");
  const auto cfg_path = write_config(dir, "small.ini", kSmall);
  REQUIRE(run_experiment(cfg_path, quiet(dir / "a")) == kExitOk);
  REQUIRE(run_experiment(cfg_path, quiet(dir / "b")) == kExitOk);
  CHECK(testutil::slurp(dir / "a/trajectories.csv") == testutil::slurp(dir / "b/trajectories.csv"));
  for (const auto& e : fs::directory_iterator(dir / "a/plots")) {
    CHECK(testutil::slurp(e.path()) == testutil::slurp(dir / "b/plots" / e.path().filename()));
  }
  auto opts = quiet(dir / "c");
  opts.seed = 4;
  REQUIRE(run_experiment(cfg_path, opts) == kExitOk);
  CHECK(testutil::slurp(dir / "a/trajectories.csv") != testutil::slurp(dir / "c/trajectories.csv"));
  opts.out_dir = dir / "d";
  opts.jobs = 3;
  REQUIRE(run_experiment(cfg_path, opts) == kExitOk);
  CHECK(testutil::slurp(dir / "c/trajectories.csv") == testutil::slurp(dir / "d/trajectories.csv"));
}

TEST_CASE("invalid configs exit 2 and write nothing") {
  const auto dir = testutil::scratch("exp_invalid");
  std::string bad = kSmall;
  bad.replace(bad.find("sigma_p = 0.5"), 13, "sigma_p = -0.5");
  const auto p = write_config(dir, "bad.ini", bad);
  CHECK(run_experiment(p, quiet(dir / "out")) == kExitInvalid);
  CHECK_FALSE(fs::exists(dir / "out"));
  const auto q = write_config(dir, "typo.ini", kSmall + "[sampler]\nstepz = 3\n");
  CHECK(run_experiment(q, quiet(dir / "out")) == kExitInvalid);
  CHECK(run_experiment(dir / "missing.ini", quiet(dir / "out")) == kExitInvalid);
  CHECK_FALSE(fs::exists(dir / "out"));
}

TEST_CASE("failed assertions exit 3 but keep the artifacts") {
  const auto dir = testutil::scratch("exp_assert");
  const auto p = write_config(dir, "a.ini", kSmall + "[assert]\nmin_on_manifold_fraction = 1.5\n");
  CHECK(run_experiment(p, quiet(dir / "out")) == kExitAssertion);
  CHECK(fs::exists(dir / "out/trajectories.csv"));
  const auto manifest = nlohmann::json::parse(testutil::slurp(dir / "out/manifest.json"));
  CHECK(manifest["status"] == "assertion_failed");
  CHECK(manifest["exit_code"] == 3);
}

TEST_CASE("verification exit codes") {
  const auto dir = testutil::scratch("exp_verify");
  const std::string base = "[guidance]\nx_ref = 0 1\n[seed]\nmaster_seed = 7\n";
  const auto ok = write_config(dir, "ok.ini", base + "[verify]\nchecks = stability hard_limit rf_ve\n");
  CHECK(run_verification_suite(ok, quiet(dir / "ok")) == kExitOk);
  CHECK(testutil::slurp(dir / "ok/verification.csv").rfind("check,passed,seconds,detail\n", 0) == 0);

  const auto over = write_config(dir, "over.ini",
                                 base + "[verify]\nchecks = contraction\ncontraction_fraction = 1.5\n"
                                        "contraction_seeds = 8\n");
  CHECK(run_verification_suite(over, quiet(dir / "over")) == kExitFailure);

  const auto zero = write_config(dir, "zero.ini", base + "[verify]\nsigma_p = 0\n");
  CHECK(run_verification_suite(zero, quiet(dir / "zero")) == kExitInvalid);
  const auto unknown = write_config(dir, "unknown.ini", base + "[verify]\nchecks = everything\n");
  CHECK(run_verification_suite(unknown, quiet(dir / "unknown")) == kExitInvalid);
}

TEST_CASE("output directory resolution") {
  ExperimentConfig cfg;
  cfg.id = "exp";
  RunOptions opts;
  setenv("SGPP_LAB_OUT", "/tmp/root_a", 1);
  CHECK(resolve_output_dir(cfg, opts) == fs::path("/tmp/root_a/exp"));
  cfg.output.directory = "rel";
  CHECK(resolve_output_dir(cfg, opts) == fs::path("/tmp/root_a/rel"));
  cfg.output.directory = "/abs/dir";
  CHECK(resolve_output_dir(cfg, opts) == fs::path("/abs/dir"));
  opts.out_dir = "/explicit";
  CHECK(resolve_output_dir(cfg, opts) == fs::path("/explicit"));
  unsetenv("SGPP_LAB_OUT");
}

TEST_CASE("command line") {
  const auto dir = testutil::scratch("exp_cli");
  const auto cfg = write_config(dir, "small.ini", kSmall);
  const std::string c = " --config " + cfg.string();
  CHECK(cli("run" + c + " --out " + (dir / "a").string() + " --seed 5 --jobs 2") == 0);
  CHECK(load_config(cfg).master_seed == 3);
  const auto rows = read_trajectories_csv(dir / "a/trajectories.csv");
  CHECK(rows.front().seed_master == 5);

  // SGPP_LAB_OUT supplies the root when --out is absent.
  const std::string env = "SGPP_LAB_OUT=" + (dir / "env").string() + " ";
  const int rc = std::system((env + SGPP_CLI + " run" + c + " >/dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(rc) == 0);
  CHECK(fs::exists(dir / "env/small/manifest.json"));

  // plot re-renders identical SVGs.
  const auto before = testutil::slurp(dir / "a/plots/small_sigma_p_0.5__sgpp_descent.svg");
  fs::remove_all(dir / "a/plots");
  CHECK(cli("plot" + c + " --out " + (dir / "a").string()) == 0);
  CHECK(testutil::slurp(dir / "a/plots/small_sigma_p_0.5__sgpp_descent.svg") == before);

  CHECK(cli("bogus" + c) == 2);
  CHECK(cli("run") == 2);
  CHECK(cli("run" + c + " --seed notanumber") == 2);
}
