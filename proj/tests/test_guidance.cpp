#include "sgpp/error.hpp"
#include "sgpp/guidance.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace sgpp;
using testutil::v2;

namespace {

GuidanceParams params(double sigma_p, const Vec& x_ref, double eta = 0.0) {
  GuidanceParams p;
  p.sigma_p = sigma_p;
  p.x_ref = x_ref;
  p.eta = eta;
  return p;
}

double log_lik(const Vec& x, double t, const GuidanceParams& p) {
  const double s = sigma_p_of_t(t, p.sigma_p);
  return -(x - (1 - t) * p.x_ref).squaredNorm() / (2 * s * s);
}

}  // namespace

TEST_CASE("sigma_p schedule") {
  CHECK(sigma_p_of_t(0.0, 0.2) == doctest::Approx(0.2));
  CHECK(sigma_p_of_t(1.0, 0.2) == doctest::Approx(1.0));
  CHECK(sigma_p_of_t(0.5, 0.2) == doctest::Approx(0.509902).epsilon(1e-6));
}

TEST_CASE("likelihood score") {
  const auto p = params(1.0, v2(0, 0));
  CHECK((likelihood_score(v2(1, 0), 0.0, p) - v2(-1, 0)).norm() < 1e-14);
  const auto q = params(0.3, v2(0.4, -1));
  CHECK(likelihood_score(0.6 * q.x_ref, 0.4, q).norm() < 1e-14);
  const Vec x = v2(0.2, 0.7);
  const double t = 0.35, h = 1e-5;
  Vec fd(2);
  for (int i = 0; i < 2; ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    fd[i] = (log_lik(a, t, q) - log_lik(b, t, q)) / (2 * h);
  }
  CHECK(testutil::rel_err(likelihood_score(x, t, q), fd) < 1e-6);
}

TEST_CASE("force reduces to the score when the fidelity is flat") {
  const DiscreteSupportScore f({v2(1, 0), v2(0, 1)}, {0.5, 0.5});
  const auto p = params(1e6, v2(5, 5));
  const auto force = sgpp_force(f, v2(0.3, 0.2), 0.4, p);
  CHECK((force.total - force.score_part).norm() / force.score_part.norm() < 1e-6);
}

TEST_CASE("force is minus the gradient of the proximal objective") {
  const DiscreteSupportScore f({v2(1, 0), v2(0, 1), v2(-1, 0.2)}, {0.2, 0.5, 0.3});
  const auto p = params(0.3, v2(0.5, 0.5));
  const double t = 0.3, h = 1e-5;
  auto J = [&](const Vec& x) { return -f.log_density(x, t) - log_lik(x, t, p); };
  const Vec x = v2(0.1, 0.4);
  Vec grad(2);
  for (int i = 0; i < 2; ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    grad[i] = (J(a) - J(b)) / (2 * h);
  }
  CHECK(testutil::rel_err(sgpp_force(f, x, t, p).total, -grad) < 1e-5);
}

TEST_CASE("single-atom anchors") {
  const Vec a = v2(1, 0.5);
  const DiscreteSupportScore f({a}, {1.0});
  const double t = 0.3;
  const auto p = params(0.2, a);
  CHECK(sgpp_force(f, (1 - t) * a, t, p).total.norm() < 1e-12);
  CHECK((sgpp_step(f, (1 - t) * a, t, 0.01, p) - (1 - t) * a).norm() < 1e-14);

  // Two quadratic pulls: closed-form stationary point.
  const Vec b = v2(-0.5, 1);
  const auto q = params(0.2, b);
  const double s2 = std::pow(sigma_p_of_t(t, 0.2), 2);
  const Vec expect = (1 - t) * (a / (t * t) + b / s2) / (1 / (t * t) + 1 / s2);
  Vec x = v2(0, 0);
  const double eta = 0.5 * max_stable_step(t, 0.2);
  for (int k = 0; k < 2000; ++k) x = sgpp_step(f, x, t, eta, q);
  CHECK((x - expect).norm() < 1e-10);
}

TEST_CASE("max stable step") {
  CHECK(max_stable_step(0.1, 0.2) == doctest::Approx(2.0 / (100.0 + 1.0 / 0.0424)));
  CHECK(max_stable_step(0.1, 0.2) == doctest::Approx(0.016182).epsilon(1e-4));
  const double r = max_stable_step(1e-3, 0.2) / (2e-6);
  CHECK(r >= 0.99);
  CHECK(r <= 1.0);
  CHECK(max_stable_step(0.3, 1e8) == doctest::Approx(2 * 0.09).epsilon(1e-9));
}

TEST_CASE("mixture score endpoints") {
  const DiscreteSupportScore f({v2(1, 0), v2(0, 1)}, {0.5, 0.5});
  const Vec x = v2(0.3, -0.1);
  const double t = 0.4;
  auto p = params(0.3, v2(0.2, 0.2), 0.0);
  CHECK((mixture_score(f, x, t, p) - f.score(x, t)).norm() < 1e-14);
  p.eta = 1.0;
  CHECK((mixture_score(f, x, t, p) - likelihood_score(x, t, p)).norm() < 1e-14);
  p.eta = 0.5;
  const Vec mean = 0.5 * (f.score(x, t) + likelihood_score(x, t, p));
  CHECK((mixture_score(f, x, t, p) - mean).norm() < 1e-12);
}

TEST_CASE("posterior velocity limits") {
  const DiscreteSupportScore f({v2(1, 0), v2(0, 1)}, {0.5, 0.5});
  const double t = 0.4;
  auto p = params(0.3, v2(0.2, 0.7));
  const Vec anchor = (1 - t) * p.x_ref;
  CHECK((posterior_velocity(f, anchor, t, p) - rf_velocity(f, anchor, t)).norm() < 1e-12);
  p.sigma_p = 1e7;
  const Vec x = v2(0.3, 0.3);
  CHECK(testutil::rel_err(posterior_velocity(f, x, t, p), rf_velocity(f, x, t)) < 1e-6);

  // Single atom a = x_ref: both pulls point to (1-t) a.
  const Vec a = v2(0.5, -0.5);
  const DiscreteSupportScore one({a}, {1.0});
  auto q = params(0.4, a);
  const double s2 = std::pow(sigma_p_of_t(t, 0.4), 2);
  const Vec total = -(x - (1 - t) * a) * (1 / (t * t) + 1 / s2);
  const Vec expect = -x / (1 - t) - t / (1 - t) * total;
  CHECK((posterior_velocity(one, x, t, q) - expect).norm() < 1e-10);
}

TEST_CASE("SDE coefficients") {
  const DiscreteSupportScore f({v2(1, 0), v2(-1, 0)}, {0.5, 0.5});
  auto p = params(1e9, v2(0, 0));
  const auto c = sde_coefficients(f, v2(0, 0), 0.5, p, false);
  CHECK(c.diffusion == doctest::Approx(std::sqrt(2.0)));
  CHECK(c.drift.norm() < 1e-12);
  CHECK(sde_coefficients(f, v2(0.1, 0), 1e-3, p, false).diffusion < 0.05);
}

TEST_CASE("RF-Inversion and hard-limit fields") {
  const Vec v = v2(0.3, -0.2), x = v2(1, 1), y0 = v2(0.5, 0);
  const double tau = 0.4;
  CHECK((rf_inversion_field(v, x, tau, y0, 1.0) - (y0 - x) / (1 - tau)).norm() < 1e-14);
  CHECK((rf_inversion_field(v, x, tau, y0, 0.0) - v).norm() < 1e-14);
  CHECK((rf_inversion_field(v, y0, tau, y0, 0.3) - 0.7 * v).norm() < 1e-14);

  CHECK((hard_limit_velocity(v2(1, 0), 0.5, v2(0, 0)) - v2(2, 0)).norm() < 1e-14);
  CHECK(hard_limit_velocity(y0, 0.5, y0).norm() == 0.0);
  const double t = 0.3;
  CHECK((hard_limit_velocity(x, t, y0) + rf_inversion_field(v, x, 1 - t, y0, 1.0)).norm() < 1e-12);
}

TEST_CASE("DPS guidance") {
  const DiscreteSupportScore one({v2(1, 0)}, {1.0});
  const Vec x = v2(0.3, 0.2);
  CHECK(dps_guidance_gradient(one, x, 0.5, v2(0, 0), 0.5).norm() < 1e-6);
  const double t = 0.5;
  const Vec euler = x - (0.5 - 0.4) * rf_velocity(one, x, t);
  CHECK((dps_step(one, x, t, 0.4, 1.0, v2(0, 0), 0.5) - euler).norm() < 1e-6);

  const DiscreteSupportScore two({v2(1, 0), v2(-1, 0.5)}, {0.5, 0.5});
  const Vec x_ref = v2(0.2, 0.1);
  const double sig = 0.5, h = 1e-5;
  auto loss = [&](const Vec& y) { return (x_ref - tweedie_x0(two, y, t)).squaredNorm() / (2 * sig * sig); };
  Vec fd(2);
  for (int i = 0; i < 2; ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    fd[i] = (loss(a) - loss(b)) / (2 * h);
  }
  CHECK(testutil::rel_err(dps_guidance_gradient(two, x, t, x_ref, sig), fd) < 1e-4);

  // Observation already satisfied.
  const Vec hat = tweedie_x0(two, x, t);
  CHECK(dps_guidance_gradient(two, x, t, hat, sig).norm() < 1e-12);
}

TEST_CASE("parameter validation") {
  auto p = params(0.0, v2(0, 0));
  CHECK_THROWS_AS(p.validate(), Error);
  p = params(0.2, v2(0, 0), 1.5);
  CHECK_THROWS_AS(p.validate(), Error);
  p = params(0.2, v2(0, 0));
  p.t_stop = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
}
