#include "sgpp/error.hpp"
#include "sgpp/score_field.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <random>

using namespace sgpp;
using testutil::v2;

namespace {

Vec fd_gradient(const ScoreField& f, const Vec& x, double t, double h) {
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec a = x, b = x;
    a[i] += h;
    b[i] -= h;
    g[i] = (f.log_density(a, t) - f.log_density(b, t)) / (2.0 * h);
  }
  return g;
}

}  // namespace

TEST_CASE("single-atom score closed form") {
  const DiscreteSupportScore f({v2(2, 0)}, {1.0});
  CHECK(f.score(v2(1, 0), 0.5).norm() < 1e-12);
  CHECK((f.score(v2(1.5, 0), 0.5) - v2(-2, 0)).norm() < 1e-12);
}

TEST_CASE("symmetric atoms give zero score at the origin") {
  const DiscreteSupportScore f({v2(1, 0), v2(-1, 0)}, {0.5, 0.5});
  for (double t : {0.1, 0.5, 0.9}) CHECK(f.score(v2(0, 0), t).norm() < 1e-14);
}

TEST_CASE("discrete score matches finite differences") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  std::vector<Vec> atoms;
  std::vector<double> w;
  for (int i = 0; i < 8; ++i) {
    atoms.push_back(v2(nd(gen), nd(gen)));
    w.push_back((1.0 + i) / 36.0);
  }
  const DiscreteSupportScore f(atoms, w);
  for (int k = 0; k < 20; ++k) {
    const Vec x = v2(nd(gen), nd(gen));
    const Vec s = f.score(x, 0.3);
    CHECK(testutil::rel_err(s, fd_gradient(f, x, 0.3, 1e-5)) < 1e-5);
  }
}

TEST_CASE("GMM score matches finite differences") {
  GmmComponent a{v2(1, 0), Eigen::Matrix2d::Identity() * 0.1, 0.3};
  Eigen::Matrix2d cov;
  cov << 0.2, 0.05, 0.05, 0.1;
  GmmComponent b{v2(-1, 0.5), cov, 0.7};
  const GmmScore f({a, b});
  for (double t : {0.1, 0.4, 0.8}) {
    const Vec x = v2(0.3, -0.2);
    CHECK(testutil::rel_err(f.score(x, t), fd_gradient(f, x, t, 1e-5)) < 1e-6);
  }
}

TEST_CASE("time outside (0, 1) is rejected") {
  const DiscreteSupportScore f({v2(0, 0)}, {1.0});
  CHECK_THROWS_AS(f.score(v2(0, 0), 0.0), Error);
  CHECK_THROWS_AS(f.score(v2(0, 0), 1.0), Error);
}

TEST_CASE("velocity closed forms") {
  const DiscreteSupportScore f({v2(2, 0)}, {1.0});
  CHECK(rf_velocity(f, v2(2, 0), 0.3).norm() < 1e-12);
  CHECK((rf_velocity(f, v2(0, 0), 0.5) - v2(-4, 0)).norm() < 1e-12);

  const DiscreteSupportScore two({v2(1, 0), v2(0, 1)}, {0.3, 0.7});
  const Vec x = v2(0.2, -0.4);
  const double t = 0.35;
  const Vec expect = -x / (1 - t) - t / (1 - t) * rf_marginal_score(two, x, t);
  CHECK((rf_velocity(two, x, t) - expect).norm() < 1e-12);
}

TEST_CASE("VE transform reproduces the RF score") {
  const DiscreteSupportScore one({v2(0.5, -1)}, {1.0});
  CHECK((rf_score_via_ve(VeDiscreteScore(one), v2(0.1, 0.2), 0.5) - one.score(v2(0.1, 0.2), 0.5)).norm() < 1e-12);

  std::mt19937_64 gen(5);
  std::normal_distribution<double> nd;
  std::vector<Vec> atoms;
  for (int i = 0; i < 6; ++i) atoms.push_back(v2(nd(gen), nd(gen)));
  const DiscreteSupportScore f(atoms, std::vector<double>(6, 1.0 / 6.0));
  const VeDiscreteScore ve(f);
  for (double t : {0.2, 0.5, 0.8}) {
    const Vec x = v2(nd(gen), nd(gen));
    CHECK((rf_score_via_ve(ve, x, t) - f.score(x, t)).norm() < 1e-10);
  }
  const Vec x = (1 - 1e-3) * atoms[0] + v2(1e-3, 0);
  const Vec direct = f.score(x, 1e-3);
  CHECK(direct.allFinite());
  CHECK((rf_score_via_ve(ve, x, 1e-3) - direct).norm() / direct.norm() < 1e-8);
}

TEST_CASE("posterior mean and responsibilities") {
  const DiscreteSupportScore f({v2(1, 0), v2(-1, 0)}, {0.5, 0.5});
  const auto r = f.responsibilities(v2(0.5, 0), 0.5);
  CHECK(r.sum() == doctest::Approx(1.0));
  CHECK(r[0] > r[1]);
  const double t = 0.4;
  const Vec x = v2(0.3, 0.1);
  const Vec tweedie = (x + t * t * f.score(x, t)) / (1 - t);
  CHECK((f.posterior_mean(x, t) - tweedie).norm() < 1e-12);
}

TEST_CASE("atoms follow the manifold density") {
  const Manifold c = Manifold::circle(v2(0, 0), 1.0);
  const auto f = atoms_from_manifold(c, 64);
  CHECK(f.atom_count() == 64);
  double sum = 0.0;
  for (std::size_t i = 0; i < f.atom_count(); ++i) {
    CHECK(f.atom(i).norm() == doctest::Approx(1.0));
    sum += f.weight(i);
  }
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("decomposition residual on the segment") {
  const Manifold s = Manifold::segment(v2(-1, 0), v2(1, 0));
  const auto f = atoms_from_manifold(s, 512);
  for (double t : {0.1, 0.05}) {
    const Vec x = (1 - t) * v2(0.3, 0) + v2(0, 0.05);
    const auto r = decomposition_residual(s, f, x, t);
    CHECK((r.predicted - v2(0, -0.05 / (t * t))).norm() < 1e-9);
    CHECK(r.residual_norm <= 0.5);
  }
}

TEST_CASE("decomposition residual on the circle shrinks relative to the score") {
  const Manifold c = Manifold::circle(v2(0, 0), 1.0);
  const auto f = atoms_from_manifold(c, 512);
  double prev = 1e300;
  for (double t : {0.2, 0.1, 0.05, 0.025}) {
    const Vec x = (1 - t + 0.05) * v2(std::cos(0.7), std::sin(0.7));
    const auto r = decomposition_residual(c, f, x, t);
    const double ratio = r.residual_norm / r.actual.norm();
    CHECK(ratio < prev);
    prev = ratio;
  }
  // On the curve the normal term vanishes.
  for (double t : {0.2, 0.05}) {
    const Vec x = (1 - t) * v2(std::cos(0.7), std::sin(0.7));
    const auto r = decomposition_residual(c, f, x, t);
    CHECK(std::isfinite(r.residual_norm));
    CHECK(r.residual_norm < 5.0);
  }
}
