#include "sgpp/error.hpp"
#include "sgpp/geometry.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace sgpp;
using testutil::v2;

TEST_CASE("circle projection is radial") {
  const Manifold c = Manifold::circle(v2(0, 0), 1.0);
  const auto pr = project(c, v2(2, 0));
  CHECK((pr.pi - v2(1, 0)).norm() < 1e-14);
  CHECK((pr.n - v2(1, 0)).norm() < 1e-14);
  CHECK(pr.distance == doctest::Approx(1.0));
}

TEST_CASE("circle center is ambiguous") {
  const Manifold c = Manifold::circle(v2(0, 0), 1.0);
  try {
    project(c, v2(0, 0));
    FAIL("expected AmbiguousProjection");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ambiguous_projection);
  }
}

TEST_CASE("projection outside the tube is rejected") {
  const Manifold c = Manifold::circle(v2(0, 0), 1.0);
  CHECK_THROWS_AS(project(c, v2(3, 0), 0.5), Error);
}

TEST_CASE("two-moons projection matches a dense parameter grid") {
  const Manifold m = Manifold::two_moons();
  const Vec x = v2(0.3, 1.2);
  const auto pr = project(m, x);
  double best = 1e300;
  const int n = 100000;
  for (std::size_t c = 0; c < m.component_count(); ++c) {
    const auto& p = m.piece(c);
    for (int i = 0; i <= n; ++i) {
      const double u = p.param_begin() + (p.param_end() - p.param_begin()) * i / n;
      best = std::min(best, (p.point_at(u) - x).norm());
    }
  }
  CHECK(std::abs(pr.distance - best) < 1e-6);
}

TEST_CASE("curvature of circles and segments") {
  const Manifold c2 = Manifold::circle(v2(0, 0), 2.0);
  const auto pr = project(c2, v2(3, 1));
  const auto cd = curvature_data(c2, pr);
  CHECK(cd.kappa_max == doctest::Approx(0.5));
  CHECK(cd.mean_curvature.norm() == doctest::Approx(0.5));
  const Vec dir = (v2(0, 0) - pr.pi).normalized();
  CHECK((cd.mean_curvature.normalized() - dir).norm() < 1e-12);

  const Manifold s = Manifold::segment(v2(-1, 0), v2(1, 0));
  const auto cs = curvature_data(s, project(s, v2(0.2, 0.3)));
  CHECK(cs.kappa_max == 0.0);
  CHECK(cs.mean_curvature.norm() == 0.0);

  CHECK(Manifold::circle(v2(0, 0), 1.0).scaled(0.5).kappa_max() == doctest::Approx(2.0));
}

TEST_CASE("scaling is a homothety") {
  const Manifold c = Manifold::circle(v2(0, 0), 1.0);
  const Manifold same = scale_manifold(c, 1.0);
  CHECK(same.piece(0).radius == 1.0);
  const Manifold half = scale_manifold(c, 0.5);
  CHECK(half.piece(0).radius == doctest::Approx(0.5));
  CHECK(half.piece(0).center.norm() == 0.0);
  CHECK_THROWS_AS(scale_manifold(c, 0.0), Error);
}

TEST_CASE("intrinsic density gradient scales inversely with the factor") {
  ComponentDensity vm{DensityKind::von_mises, 2.0, 0.0};
  const Manifold m0 = Manifold::circle(v2(0, 0), 1.0, vm);
  const double f = 0.4;
  const Manifold mt = m0.scaled(f);
  const double u = 0.7;
  const Vec g0 = m0.intrinsic_log_density_gradient(0, u);
  const Vec gt = mt.intrinsic_log_density_gradient(0, u);
  CHECK((gt - g0 / f).norm() < 1e-10);

  // Central difference along arclength on the scaled curve.
  const double h = 1e-5;
  const double ds = h * mt.piece(0).speed();
  const double fd = (mt.log_density(0, u + h) - mt.log_density(0, u - h)) / (2.0 * ds);
  CHECK(gt.dot(mt.piece(0).unit_tangent_at(u)) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("tube validation") {
  const Manifold c = Manifold::circle(v2(0, 0), 1.0);
  CHECK(validate_tube(c, 0.5, 0.5));
  CHECK_FALSE(validate_tube(c, 0.9, 0.5));
  const Manifold s = Manifold::segment(v2(-1, 0), v2(1, 0));
  CHECK(validate_tube(s, 100.0, 0.99));
}

TEST_CASE("normal distance uses the scaled manifold") {
  const Manifold c = Manifold::circle(v2(0, 0), 1.0);
  CHECK(normal_distance_at(c, v2(0.7, 0), 0.5) == doctest::Approx(0.2));
  CHECK(normal_distance_at(c, v2(0, 2), 0.0) == doctest::Approx(1.0));
}

TEST_CASE("outline samples lie on the curve") {
  const Manifold m = Manifold::two_moons();
  const auto pts = sample_outline(m, 50);
  CHECK(pts.size() == 100);
  for (const auto& p : pts) CHECK(project(m, p).distance < 1e-12);
}

TEST_CASE("von Mises density integrates to one") {
  ComponentDensity vm{DensityKind::von_mises, 2.0, 0.3};
  const Manifold m = Manifold::circle(v2(0, 0), 1.5, vm);
  const auto& p = m.piece(0);
  const int n = 20000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = p.param_begin() + (p.param_end() - p.param_begin()) * (i + 0.5) / n;
    acc += std::exp(m.log_density(0, u)) * p.length() / n;
  }
  CHECK(acc == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("invalid manifolds are rejected") {
  CHECK_THROWS_AS(Manifold::circle(v2(0, 0), -1.0), Error);
  CHECK_THROWS_AS(Manifold::segment(v2(0, 0), v2(0, 0)), Error);
  CHECK_THROWS_AS(Manifold::segment(v2(-1, 0), v2(1, 0), {DensityKind::von_mises, 1.0, 0.0}), Error);
}
