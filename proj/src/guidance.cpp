#include "sgpp/guidance.hpp"

#include "sgpp/error.hpp"

#include <cmath>
#include <string>

namespace sgpp {

void GuidanceParams::validate() const {
  if (!(sigma_p > 0.0) || !std::isfinite(sigma_p)) {
    throw Error(ErrorCode::invalid_params, "sigma_p must be positive and finite");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(ErrorCode::invalid_params, "eta must lie in [0, 1]");
  if (!(t_stop >= 0.0 && t_stop < 1.0)) throw Error(ErrorCode::invalid_params, "t_stop must lie in [0, 1)");
  if (x_ref.size() == 0 || !x_ref.allFinite()) {
    throw Error(ErrorCode::invalid_params, "x_ref must be a finite vector");
  }
}

double sigma_p_of_t(double t, double sigma_p) {
  const double a = (1.0 - t) * sigma_p;
  return std::sqrt(a * a + t * t);
}

bool guidance_active(double t, const GuidanceParams& p) { return t >= p.t_stop; }

Vec likelihood_score(const Vec& x, double t, const GuidanceParams& p) {
  if (!(t >= 0.0 && t < 1.0)) {
    throw Error(ErrorCode::time_out_of_range, "likelihood needs 0 <= t < 1, got " + std::to_string(t));
  }
  const double s = sigma_p_of_t(t, p.sigma_p);
  return -(x - (1.0 - t) * p.x_ref) / (s * s);
}

Vec exact_likelihood_score(const DiscreteSupportScore& prior, const Vec& x, double t, const Vec& x_ref,
                           double sigma_p) {
  check_open_unit_time(t);
  const Eigen::VectorXd r = prior.responsibilities(x, t);
  const Eigen::MatrixXd& atoms = prior.atom_matrix();
  const Eigen::VectorXd log_lik =
      -(atoms.colwise() - x_ref).colwise().squaredNorm().transpose() / (2.0 * sigma_p * sigma_p);
  Eigen::VectorXd tilted = r.array().log() + log_lik.array();
  tilted = (tilted.array() - tilted.maxCoeff()).exp();
  tilted /= tilted.sum();
  return ((1.0 - t) / (t * t)) * (atoms * (tilted - r));
}

Vec guided_likelihood_score(const ScoreField& field, const Vec& x, double t, const GuidanceParams& p) {
  if (!guidance_active(t, p)) return Vec::Zero(x.size());
  if (p.likelihood == LikelihoodModel::gaussian_surrogate) return likelihood_score(x, t, p);
  const auto* discrete = dynamic_cast<const DiscreteSupportScore*>(&field);
  if (discrete == nullptr) {
    throw Error(ErrorCode::unsupported, "exact likelihood requires a discrete-support field");
  }
  return exact_likelihood_score(*discrete, x, t, p.x_ref, p.sigma_p);
}

GuidanceForce sgpp_force(const ScoreField& field, const Vec& x, double t, const GuidanceParams& p) {
  check_open_unit_time(t);
  GuidanceForce f;
  f.score_part = field.score(x, t);
  f.fidelity_part = guidance_active(t, p) ? likelihood_score(x, t, p) : Vec::Zero(x.size());
  f.total = f.score_part + f.fidelity_part;
  return f;
}

Vec sgpp_step(const ScoreField& field, const Vec& x, double t, double eta_step, const GuidanceParams& p) {
  if (!(eta_step > 0.0)) throw Error(ErrorCode::invalid_params, "step size must be positive");
  return x + eta_step * sgpp_force(field, x, t, p).total;
}

double max_stable_step(double t, double sigma_p) {
  check_open_unit_time(t);
  const double s = sigma_p_of_t(t, sigma_p);
  return 2.0 / (1.0 / (t * t) + 1.0 / (s * s));
}

Vec mixture_score(const ScoreField& field, const Vec& x, double t, const GuidanceParams& p) {
  check_open_unit_time(t);
  const Vec s = field.score(x, t);
  if (!guidance_active(t, p)) return s;
  return (1.0 - p.eta) * s + p.eta * guided_likelihood_score(field, x, t, p);
}

Vec posterior_velocity(const ScoreField& field, const Vec& x, double t, const GuidanceParams& p) {
  check_open_unit_time(t);
  const Vec post = field.score(x, t) + guided_likelihood_score(field, x, t, p);
  return -x / (1.0 - t) - (t / (1.0 - t)) * post;
}

SdeCoefficients sde_coefficients(const ScoreField& field, const Vec& x, double t, const GuidanceParams& p,
                                 bool use_mixture) {
  check_open_unit_time(t);
  const Vec post =
      use_mixture ? mixture_score(field, x, t, p) : Vec(field.score(x, t) + guided_likelihood_score(field, x, t, p));
  SdeCoefficients c;
  c.drift = -x / (1.0 - t) - (2.0 * t / (1.0 - t)) * post;
  c.diffusion = std::sqrt(2.0 * t / (1.0 - t));
  return c;
}

Vec rf_inversion_field(const Vec& v_uncond, const Vec& x, double tau, const Vec& y0, double eta) {
  if (!(tau >= 0.0 && tau < 1.0)) {
    throw Error(ErrorCode::tau_out_of_range, "tau must lie in [0, 1), got " + std::to_string(tau));
  }
  return (1.0 - eta) * v_uncond + eta * (y0 - x) / (1.0 - tau);
}

Vec hard_limit_velocity(const Vec& x, double t, const Vec& y0) {
  check_open_unit_time(t);
  return (x - y0) / t;
}

Vec tweedie_x0(const ScoreField& field, const Vec& x, double t) {
  check_open_unit_time(t);
  return (x + t * t * field.score(x, t)) / (1.0 - t);
}

Vec dps_guidance_gradient(const ScoreField& field, const Vec& x, double t, const Vec& x_ref,
                          double sigma_obs) {
  if (!(sigma_obs > 0.0)) throw Error(ErrorCode::invalid_params, "sigma_obs must be positive");
  const Vec residual = x_ref - tweedie_x0(field, x, t);
  const double h = 1e-4 * (1.0 + x.norm());
  const Eigen::Index d = x.size();
  Vec grad(d);
  Vec probe = x;
  for (Eigen::Index j = 0; j < d; ++j) {
    probe[j] = x[j] + h;
    const Vec plus = tweedie_x0(field, probe, t);
    probe[j] = x[j] - h;
    const Vec minus = tweedie_x0(field, probe, t);
    probe[j] = x[j];
    // Column j of the Jacobian, contracted with the residual.
    grad[j] = -((plus - minus) / (2.0 * h)).dot(residual) / (sigma_obs * sigma_obs);
  }
  return grad;
}

Vec dps_step(const ScoreField& field, const Vec& x, double t, double t_next, double eta_step, const Vec& x_ref,
             double sigma_obs) {
  check_open_unit_time(t);
  return x + (t_next - t) * rf_velocity(field, x, t) -
         eta_step * dps_guidance_gradient(field, x, t, x_ref, sigma_obs);
}

}  // namespace sgpp
