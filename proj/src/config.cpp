#include "sgpp/config.hpp"

#include "sgpp/error.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sgpp {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"experiment", {"id"}},
      {"manifold",
       {"kind", "dim", "radius", "center", "a", "b", "offset_x", "offset_y", "density", "concentration",
        "mode_angle", "atom_count"}},
      {"guidance", {"sigma_p", "eta", "t_stop", "x_ref", "use_mixture", "likelihood"}},
      {"sampler",
       {"method", "t_start", "t_end", "steps", "steps_per_t", "spacing", "step_rule", "step_value",
        "ensemble_count"}},
      {"baseline", {"dps_sigma_list", "dps_step_scale", "rf_inv_gamma", "rf_inv_eta"}},
      {"output", {"directory", "emit_svg"}},
      {"seed", {"master_seed"}},
      {"assert",
       {"max_diverged_fraction", "min_on_manifold_fraction", "max_mean_terminal_normal", "on_manifold_tolerance"}},
      {"verify",
       {"checks", "testbeds", "sigma_p", "contraction_fraction", "contraction_seeds", "posterior_paths",
        "posterior_steps", "posterior_likelihood"}},
  };
  return s;
}

[[noreturn]] void bad(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorCode::config_error, key + " = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v)) bad(key, s, "not a finite number");
  return v;
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) bad(key, s, "not an unsigned integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  bad(key, s, "expected true or false");
}

std::vector<std::string> words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& s) {
  std::vector<double> out;
  for (const auto& w : words(s)) out.push_back(to_double(key, w));
  if (out.empty()) bad(key, s, "empty list");
  return out;
}

LikelihoodModel to_likelihood(const std::string& key, const std::string& s) {
  if (s == "gaussian_surrogate") return LikelihoodModel::gaussian_surrogate;
  if (s == "exact_discrete") return LikelihoodModel::exact_discrete;
  bad(key, s, "expected gaussian_surrogate or exact_discrete");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + v[i];
  return out;
}

Vec to_vec(const std::vector<double>& v, std::size_t dim) {
  Vec out = Vec::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < v.size() && i < dim; ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

}  // namespace

std::string_view to_string(LikelihoodModel m) {
  return m == LikelihoodModel::gaussian_surrogate ? "gaussian_surrogate" : "exact_discrete";
}

std::string_view to_string(Spacing s) { return s == Spacing::uniform ? "uniform" : "geometric"; }

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::config_error, e.what());
  }

  ExperimentConfig c;
  for (const auto& [section, body] : tree) {
    const auto known = schema().find(section);
    if (known == schema().end()) {
      if (body.empty()) throw Error(ErrorCode::config_error, "key outside any section: " + section);
      throw Error(ErrorCode::config_error, "unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      if (!known->second.count(key)) throw Error(ErrorCode::config_error, "unknown key " + section + "." + key);
      const std::string v = node.data();
      const std::string k = section + "." + key;

      if (section == "experiment") {
        if (v.empty() || v.find_first_of(" ,/\\") != std::string::npos) bad(k, v, "ids are single words");
        c.id = v;
      } else if (section == "manifold") {
        auto& m = c.manifold;
        if (key == "kind") m.kind = v;
        else if (key == "dim") m.dim = to_u64(k, v);
        else if (key == "radius") m.radius = to_double(k, v);
        else if (key == "center") m.center = to_list(k, v);
        else if (key == "a") m.a = to_list(k, v);
        else if (key == "b") m.b = to_list(k, v);
        else if (key == "offset_x") m.offset_x = to_double(k, v);
        else if (key == "offset_y") m.offset_y = to_double(k, v);
        else if (key == "density") m.density = v;
        else if (key == "concentration") m.concentration = to_double(k, v);
        else if (key == "mode_angle") m.mode_angle = to_double(k, v);
        else if (key == "atom_count") m.atom_count = to_u64(k, v);
      } else if (section == "guidance") {
        auto& g = c.guidance;
        if (key == "sigma_p") g.sigma_p = to_list(k, v);
        else if (key == "eta") g.eta = to_double(k, v);
        else if (key == "t_stop") g.t_stop = to_double(k, v);
        else if (key == "x_ref") g.x_ref = to_list(k, v);
        else if (key == "use_mixture") g.use_mixture = to_bool(k, v);
        else if (key == "likelihood") g.likelihood = to_likelihood(k, v);
      } else if (section == "sampler") {
        auto& s = c.sampler;
        if (key == "method") {
          const auto m = parse_method(v);
          if (!m) bad(k, v, "unknown method");
          s.method = *m;
        } else if (key == "t_start") s.t_start = to_double(k, v);
        else if (key == "t_end") s.t_end = to_double(k, v);
        else if (key == "steps") s.steps = to_u64(k, v);
        else if (key == "steps_per_t") s.steps_per_t = to_u64(k, v);
        else if (key == "spacing") {
          if (v == "uniform") s.spacing = Spacing::uniform;
          else if (v == "geometric") s.spacing = Spacing::geometric;
          else bad(k, v, "expected uniform or geometric");
        } else if (key == "step_rule") {
          if (v == "fraction") s.step_rule.kind = StepRule::Kind::fraction;
          else if (v == "fixed") s.step_rule.kind = StepRule::Kind::fixed;
          else bad(k, v, "expected fraction or fixed");
        } else if (key == "step_value") s.step_rule.value = to_double(k, v);
        else if (key == "ensemble_count") s.ensemble_count = to_u64(k, v);
      } else if (section == "baseline") {
        auto& b = c.baseline;
        if (key == "dps_sigma_list") b.dps_sigma_list = to_list(k, v);
        else if (key == "dps_step_scale") b.dps_step_scale = to_double(k, v);
        else if (key == "rf_inv_gamma") b.rf_inv_gamma = to_double(k, v);
        else if (key == "rf_inv_eta") b.rf_inv_eta = to_double(k, v);
      } else if (section == "output") {
        if (key == "directory") c.output.directory = v;
        else if (key == "emit_svg") c.output.emit_svg = to_bool(k, v);
      } else if (section == "seed") {
        c.master_seed = to_u64(k, v);
      } else if (section == "assert") {
        auto& a = c.asserts;
        if (key == "max_diverged_fraction") a.max_diverged_fraction = to_double(k, v);
        else if (key == "min_on_manifold_fraction") a.min_on_manifold_fraction = to_double(k, v);
        else if (key == "max_mean_terminal_normal") a.max_mean_terminal_normal = to_double(k, v);
        else if (key == "on_manifold_tolerance") a.on_manifold_tolerance = to_double(k, v);
      } else if (section == "verify") {
        auto& vf = c.verify;
        if (key == "checks") vf.checks = words(v);
        else if (key == "testbeds") vf.testbeds = words(v);
        else if (key == "sigma_p") vf.sigma_p = to_double(k, v);
        else if (key == "contraction_fraction") vf.contraction_fraction = to_double(k, v);
        else if (key == "contraction_seeds") vf.contraction_seeds = to_u64(k, v);
        else if (key == "posterior_paths") vf.posterior_paths = to_u64(k, v);
        else if (key == "posterior_steps") vf.posterior_steps = to_u64(k, v);
        else if (key == "posterior_likelihood") vf.posterior_likelihood = to_likelihood(k, v);
      }
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::config_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& m = c.manifold;
  const auto& g = c.guidance;
  const auto& s = c.sampler;
  const auto& b = c.baseline;
  const auto& a = c.asserts;
  const auto& v = c.verify;
  o << "[experiment]\nid = " << c.id << "\n\n";
  o << "[manifold]\nkind = " << m.kind << "\ndim = " << m.dim << "\nradius = " << fmt(m.radius)
    << "\ncenter = " << fmt(m.center) << "\na = " << fmt(m.a) << "\nb = " << fmt(m.b)
    << "\noffset_x = " << fmt(m.offset_x) << "\noffset_y = " << fmt(m.offset_y) << "\ndensity = " << m.density
    << "\nconcentration = " << fmt(m.concentration) << "\nmode_angle = " << fmt(m.mode_angle)
    << "\natom_count = " << m.atom_count << "\n\n";
  o << "[guidance]\nsigma_p = " << fmt(g.sigma_p) << "\neta = " << fmt(g.eta) << "\nt_stop = " << fmt(g.t_stop)
    << "\nx_ref = " << fmt(g.x_ref) << "\nuse_mixture = " << (g.use_mixture ? "true" : "false")
    << "\nlikelihood = " << to_string(g.likelihood) << "\n\n";
  o << "[sampler]\nmethod = " << to_string(s.method) << "\nt_start = " << fmt(s.t_start)
    << "\nt_end = " << fmt(s.t_end) << "\nsteps = " << s.steps << "\nsteps_per_t = " << s.steps_per_t
    << "\nspacing = " << to_string(s.spacing)
    << "\nstep_rule = " << (s.step_rule.kind == StepRule::Kind::fraction ? "fraction" : "fixed")
    << "\nstep_value = " << fmt(s.step_rule.value) << "\nensemble_count = " << s.ensemble_count << "\n\n";
  o << "[baseline]\ndps_sigma_list = " << fmt(b.dps_sigma_list) << "\ndps_step_scale = " << fmt(b.dps_step_scale)
    << "\nrf_inv_gamma = " << fmt(b.rf_inv_gamma) << "\nrf_inv_eta = " << fmt(b.rf_inv_eta) << "\n\n";
  o << "[output]\n";
  if (!c.output.directory.empty()) o << "directory = " << c.output.directory << "\n";
  o << "emit_svg = " << (c.output.emit_svg ? "true" : "false") << "\n\n";
  o << "[seed]\nmaster_seed = " << c.master_seed << "\n\n";
  o << "[assert]\n";
  if (a.max_diverged_fraction) o << "max_diverged_fraction = " << fmt(*a.max_diverged_fraction) << "\n";
  if (a.min_on_manifold_fraction) o << "min_on_manifold_fraction = " << fmt(*a.min_on_manifold_fraction) << "\n";
  if (a.max_mean_terminal_normal) o << "max_mean_terminal_normal = " << fmt(*a.max_mean_terminal_normal) << "\n";
  o << "on_manifold_tolerance = " << fmt(a.on_manifold_tolerance) << "\n\n";
  o << "[verify]\nchecks = " << join(v.checks) << "\ntestbeds = " << join(v.testbeds)
    << "\nsigma_p = " << fmt(v.sigma_p) << "\ncontraction_fraction = " << fmt(v.contraction_fraction)
    << "\ncontraction_seeds = " << v.contraction_seeds << "\nposterior_paths = " << v.posterior_paths
    << "\nposterior_steps = " << v.posterior_steps << "\nposterior_likelihood = " << to_string(v.posterior_likelihood)
    << "\n";
  return o.str();
}

void validate(const ExperimentConfig& c) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::invalid_params, what); };
  const auto& m = c.manifold;
  if (m.kind != "circle" && m.kind != "segment" && m.kind != "two_moons") fail("manifold.kind: " + m.kind);
  if (m.dim < 2) fail("manifold.dim must be >= 2");
  if (m.density != "uniform" && m.density != "von_mises") fail("manifold.density: " + m.density);
  if (m.density == "von_mises" && m.kind == "segment") fail("von_mises density needs an arc");
  if (!(m.radius > 0.0)) fail("manifold.radius must be positive");
  if (m.concentration < 0.0) fail("manifold.concentration must be >= 0");
  if (m.atom_count < 2) fail("manifold.atom_count must be >= 2");
  if (m.center.size() > m.dim || m.a.size() > m.dim || m.b.size() > m.dim) fail("manifold point exceeds dim");

  const auto& g = c.guidance;
  for (double s : g.sigma_p) {
    if (!(s > 0.0)) fail("guidance.sigma_p must be positive");
  }
  if (!(g.eta >= 0.0 && g.eta <= 1.0)) fail("guidance.eta must lie in [0, 1]");
  if (!(g.t_stop >= 0.0 && g.t_stop < 1.0)) fail("guidance.t_stop must lie in [0, 1)");
  if (g.x_ref.size() != m.dim) fail("guidance.x_ref must have manifold.dim entries");

  const auto& s = c.sampler;
  const TimeGrid grid = make_time_grid(s.t_start, s.t_end, s.steps, s.spacing);
  if (s.method == Method::sgpp_sde) {
    const double kick = std::sqrt(2.0 * grid[0] / (1.0 - grid[0])) * std::sqrt(grid[0] - grid[1]);
    if (kick > 0.5) throw Error(ErrorCode::step_too_coarse, "first SDE step too coarse: " + fmt(kick));
  }
  if (s.steps_per_t == 0) throw Error(ErrorCode::zero_steps, "sampler.steps_per_t must be >= 1");
  if (!(s.step_rule.value > 0.0)) fail("sampler.step_value must be positive");
  if (s.ensemble_count == 0) fail("sampler.ensemble_count must be >= 1");

  const auto& b = c.baseline;
  for (double s2 : b.dps_sigma_list) {
    if (!(s2 > 0.0)) fail("baseline.dps_sigma_list entries must be positive");
  }
  if (b.dps_step_scale < 0.0) fail("baseline.dps_step_scale must be >= 0");
  if (!(b.rf_inv_gamma >= 0.0 && b.rf_inv_gamma <= 1.0)) fail("baseline.rf_inv_gamma must lie in [0, 1]");
  if (!(b.rf_inv_eta >= 0.0 && b.rf_inv_eta <= 1.0)) fail("baseline.rf_inv_eta must lie in [0, 1]");

  if (!(c.asserts.on_manifold_tolerance > 0.0)) fail("assert.on_manifold_tolerance must be positive");

  const auto& v = c.verify;
  if (!(v.sigma_p > 0.0)) fail("verify.sigma_p must be positive");
  if (!(v.contraction_fraction > 0.0)) fail("verify.contraction_fraction must be positive");
  if (v.contraction_seeds == 0 || v.posterior_paths == 0 || v.posterior_steps == 0) {
    fail("verify counts must be >= 1");
  }
  for (const auto& tb : v.testbeds) {
    if (tb != "circle" && tb != "segment") fail("verify.testbeds: " + tb);
  }
}

Manifold build_manifold(const ManifoldConfig& c) {
  ComponentDensity density;
  if (c.density == "von_mises") {
    density.kind = DensityKind::von_mises;
    density.concentration = c.concentration;
    density.mode_angle = c.mode_angle;
  }
  if (c.kind == "circle") return Manifold::circle(to_vec(c.center, c.dim), c.radius, density);
  if (c.kind == "segment") return Manifold::segment(to_vec(c.a, c.dim), to_vec(c.b, c.dim), density);
  TwoMoonsSpec spec;
  spec.radius = c.radius;
  spec.offset_x = c.offset_x;
  spec.offset_y = c.offset_y;
  spec.dim = c.dim;
  return Manifold::two_moons(spec, {density, density});
}

}  // namespace sgpp
