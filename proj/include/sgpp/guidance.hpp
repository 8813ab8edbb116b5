#pragma once

// Guidance vector fields: the proximal (SGPP) force and step, the sigma_p(t)
// schedule, likelihood and mixture scores, posterior ODE/SDE coefficients and
// the DPS / RF-Inversion baselines.

#include "sgpp/geometry.hpp"
#include "sgpp/score_field.hpp"

namespace sgpp {

enum class LikelihoodModel {
  // -||x - (1-t) x_ref||^2 / (2 sigma_p(t)^2)
  gaussian_surrogate,
  // log sum_i P(a_i | x_t) N(x_ref; a_i, sigma_p^2 I); DiscreteSupportScore only
  exact_discrete,
};

struct GuidanceParams {
  double sigma_p = 0.2;
  double eta = 0.0;
  Vec x_ref;
  double t_stop = 0.0;
  LikelihoodModel likelihood = LikelihoodModel::gaussian_surrogate;

  // Throws InvalidParams on sigma_p <= 0, eta outside [0,1], t_stop outside [0,1).
  void validate() const;
};

struct GuidanceForce {
  Vec total;
  Vec score_part;
  Vec fidelity_part;
};

double sigma_p_of_t(double t, double sigma_p);

// Fidelity terms are switched off strictly below t_stop.
bool guidance_active(double t, const GuidanceParams& p);

Vec likelihood_score(const Vec& x, double t, const GuidanceParams& p);

// Gradient of the exact conditional log-likelihood log p(x_ref | x_t) for a
// discrete prior. Adding it to the prior score gives the score of the
// reweighted (posterior) mixture.
Vec exact_likelihood_score(const DiscreteSupportScore& prior, const Vec& x, double t, const Vec& x_ref,
                           double sigma_p);

// Likelihood score under p.likelihood, zero when guidance is inactive at t.
Vec guided_likelihood_score(const ScoreField& field, const Vec& x, double t, const GuidanceParams& p);

GuidanceForce sgpp_force(const ScoreField& field, const Vec& x, double t, const GuidanceParams& p);
Vec sgpp_step(const ScoreField& field, const Vec& x, double t, double eta_step, const GuidanceParams& p);

// Exclusive upper bound 2 / (1/t^2 + 1/sigma_p(t)^2) on the proximal step.
double max_stable_step(double t, double sigma_p);

Vec mixture_score(const ScoreField& field, const Vec& x, double t, const GuidanceParams& p);
Vec posterior_velocity(const ScoreField& field, const Vec& x, double t, const GuidanceParams& p);

struct SdeCoefficients {
  Vec drift;
  double diffusion = 0.0;
};

// Reverse-time drift -x/(1-t) - 2t/(1-t) s and diffusion sqrt(2t/(1-t)), where
// s is the posterior score, or the eta-mixture score when use_mixture is set.
SdeCoefficients sde_coefficients(const ScoreField& field, const Vec& x, double t, const GuidanceParams& p,
                                 bool use_mixture);

// (1 - eta) v + eta (y0 - x) / (1 - tau), in the forward time tau = 1 - t.
Vec rf_inversion_field(const Vec& v_uncond, const Vec& x, double tau, const Vec& y0, double eta);

// (x - y0) / t: the sigma_p -> 0 limit of the conditional velocity.
Vec hard_limit_velocity(const Vec& x, double t, const Vec& y0);

// Tweedie estimate (x + t^2 grad log p_t(x)) / (1 - t).
Vec tweedie_x0(const ScoreField& field, const Vec& x, double t);

// grad_x ||x_ref - x0_hat(x)||^2 / (2 sigma_obs^2) with the Jacobian of x0_hat
// from central differences, h = 1e-4 (1 + ||x||).
Vec dps_guidance_gradient(const ScoreField& field, const Vec& x, double t, const Vec& x_ref,
                          double sigma_obs);

// One DPS update: Euler step of the unconditional RF ODE from t to t_next,
// minus eta_step times the guidance gradient.
Vec dps_step(const ScoreField& field, const Vec& x, double t, double t_next, double eta_step, const Vec& x_ref,
             double sigma_obs);

}  // namespace sgpp
