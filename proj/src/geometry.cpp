#include "sgpp/geometry.hpp"

#include "sgpp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace sgpp {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Vec planar(std::size_t dim, double c, double s) {
  Vec v = Vec::Zero(static_cast<Eigen::Index>(dim));
  v[0] = c;
  v[1] = s;
  return v;
}

void require_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) {
    throw Error(ErrorCode::invalid_manifold, std::string(what) + " has non-finite entries");
  }
}

// Composite Simpson rule; the integrands here are smooth and bounded.
template <typename F>
double simpson(F&& f, double lo, double hi, int panels = 4096) {
  const double h = (hi - lo) / panels;
  double acc = f(lo) + f(hi);
  for (int i = 1; i < panels; ++i) {
    acc += f(lo + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
  }
  return acc * h / 3.0;
}

struct Candidate {
  Vec pi;
  double param = 0.0;
  double distance = 0.0;
  bool at_boundary = false;
  std::size_t component = 0;
};

// Angle of the planar offset mapped into [begin, begin + 2*pi).
double wrap_from(double angle, double begin) {
  double a = std::fmod(angle - begin, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return begin + a;
}

Candidate project_arc(const CurvePiece& p, const Vec& x, std::size_t component) {
  const Vec d = x - p.center;
  const double rho = std::hypot(d[0], d[1]);
  if (rho <= kProjectionTieTolerance) {
    throw Error(ErrorCode::ambiguous_projection, "point sits on the axis of a circular arc");
  }
  Candidate c;
  c.component = component;
  const double theta = std::atan2(d[1], d[0]);
  if (p.full_circle) {
    c.param = theta;
  } else {
    const double wrapped = wrap_from(theta, p.angle_begin);
    if (wrapped <= p.angle_end) {
      c.param = wrapped;
    } else {
      const Vec e0 = p.point_at(p.angle_begin);
      const Vec e1 = p.point_at(p.angle_end);
      const double d0 = (x - e0).norm();
      const double d1 = (x - e1).norm();
      if (std::abs(d0 - d1) <= kProjectionTieTolerance && (e0 - e1).norm() > kProjectionTieTolerance) {
        throw Error(ErrorCode::ambiguous_projection, "point is equidistant from both arc ends");
      }
      c.param = d0 < d1 ? p.angle_begin : p.angle_end;
      c.at_boundary = true;
    }
  }
  c.pi = p.point_at(c.param);
  c.distance = (x - c.pi).norm();
  return c;
}

Candidate project_segment(const CurvePiece& p, const Vec& x, std::size_t component) {
  const Vec dir = p.b - p.a;
  const double len = dir.norm();
  const double s = (x - p.a).dot(dir) / len;
  Candidate c;
  c.component = component;
  c.param = std::clamp(s, 0.0, len);
  c.at_boundary = s < 0.0 || s > len;
  c.pi = p.point_at(c.param);
  c.distance = (x - c.pi).norm();
  return c;
}

}  // namespace

double CurvePiece::length() const {
  return is_arc ? radius * (angle_end - angle_begin) : (b - a).norm();
}

Vec CurvePiece::point_at(double param) const {
  if (is_arc) {
    return center + radius * planar(static_cast<std::size_t>(center.size()), std::cos(param), std::sin(param));
  }
  return a + (b - a) * (param / (b - a).norm());
}

Vec CurvePiece::unit_tangent_at(double param) const {
  if (is_arc) {
    return planar(static_cast<std::size_t>(center.size()), -std::sin(param), std::cos(param));
  }
  return (b - a).normalized();
}

Manifold Manifold::circle(const Vec& center, double radius, ComponentDensity density) {
  if (center.size() < 2) throw Error(ErrorCode::invalid_manifold, "ambient dimension must be >= 2");
  require_finite(center, "circle center");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorCode::invalid_manifold, "circle radius must be positive");
  }
  Manifold m;
  m.kind_ = ManifoldKind::circle;
  m.dim_ = static_cast<std::size_t>(center.size());
  CurvePiece p;
  p.is_arc = true;
  p.center = center;
  p.radius = radius;
  p.angle_begin = -std::numbers::pi;
  p.angle_end = std::numbers::pi;
  p.full_circle = true;
  m.pieces_.push_back(p);
  m.densities_.push_back(density);
  m.weights_.push_back(1.0);
  m.finalize();
  return m;
}

Manifold Manifold::segment(const Vec& a, const Vec& b, ComponentDensity density) {
  if (a.size() < 2 || a.size() != b.size()) {
    throw Error(ErrorCode::invalid_manifold, "segment endpoints must share a dimension >= 2");
  }
  require_finite(a, "segment endpoint");
  require_finite(b, "segment endpoint");
  if ((a - b).norm() <= 0.0) throw Error(ErrorCode::invalid_manifold, "segment endpoints coincide");
  for (Eigen::Index i = 2; i < a.size(); ++i) {
    if (a[i] != 0.0 || b[i] != 0.0) {
      throw Error(ErrorCode::invalid_manifold, "segments must lie in the first two coordinates");
    }
  }
  Manifold m;
  m.kind_ = ManifoldKind::segment;
  m.dim_ = static_cast<std::size_t>(a.size());
  CurvePiece p;
  p.is_arc = false;
  p.a = a;
  p.b = b;
  m.pieces_.push_back(p);
  m.densities_.push_back(density);
  m.weights_.push_back(1.0);
  m.finalize();
  return m;
}

Manifold Manifold::arc_union(const std::vector<ArcSpec>& arcs,
                             const std::vector<ComponentDensity>& densities,
                             const std::vector<double>& weights) {
  if (arcs.empty()) throw Error(ErrorCode::invalid_manifold, "arc union needs at least one arc");
  if (densities.size() != arcs.size() || weights.size() != arcs.size()) {
    throw Error(ErrorCode::invalid_manifold, "one density and one weight per arc required");
  }
  Manifold m;
  m.kind_ = ManifoldKind::arc_union;
  m.dim_ = static_cast<std::size_t>(arcs.front().center.size());
  if (m.dim_ < 2) throw Error(ErrorCode::invalid_manifold, "ambient dimension must be >= 2");
  for (const auto& arc : arcs) {
    if (static_cast<std::size_t>(arc.center.size()) != m.dim_) {
      throw Error(ErrorCode::invalid_manifold, "arcs must share the ambient dimension");
    }
    require_finite(arc.center, "arc center");
    if (!(arc.radius > 0.0)) throw Error(ErrorCode::invalid_manifold, "arc radius must be positive");
    if (!(arc.angle_end > arc.angle_begin)) {
      throw Error(ErrorCode::invalid_manifold, "arc angular interval must be nonempty");
    }
    if (arc.angle_end - arc.angle_begin > kTwoPi) {
      throw Error(ErrorCode::invalid_manifold, "arc angular interval exceeds a full turn");
    }
    CurvePiece p;
    p.is_arc = true;
    p.center = arc.center;
    p.radius = arc.radius;
    p.angle_begin = arc.angle_begin;
    p.angle_end = arc.angle_end;
    m.pieces_.push_back(p);
  }
  m.densities_ = densities;
  m.weights_ = weights;
  m.finalize();
  return m;
}

Manifold Manifold::two_moons(const TwoMoonsSpec& spec, const std::vector<ComponentDensity>& densities,
                             const std::vector<double>& weights) {
  if (spec.dim < 2) throw Error(ErrorCode::invalid_manifold, "ambient dimension must be >= 2");
  const auto d = static_cast<Eigen::Index>(spec.dim);
  ArcSpec upper{Vec::Zero(d), spec.radius, 0.0, std::numbers::pi};
  ArcSpec lower{Vec::Zero(d), spec.radius, std::numbers::pi, kTwoPi};
  lower.center[0] = spec.offset_x;
  lower.center[1] = spec.offset_y;
  const std::vector<ComponentDensity> dens = densities.empty() ? std::vector<ComponentDensity>(2) : densities;
  const std::vector<double> w = weights.empty() ? std::vector<double>{0.5, 0.5} : weights;
  return arc_union({upper, lower}, dens, w);
}

void Manifold::finalize() {
  if (weights_.size() != pieces_.size() || densities_.size() != pieces_.size()) {
    throw Error(ErrorCode::invalid_manifold, "component bookkeeping mismatch");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorCode::invalid_manifold, "weights must be >= 0");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::invalid_manifold, "weights must sum to 1");

  log_normalizers_.clear();
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const CurvePiece& p = pieces_[i];
    const ComponentDensity& dens = densities_[i];
    if (dens.kind == DensityKind::uniform) {
      log_normalizers_.push_back(std::log(p.length()));
      continue;
    }
    if (!p.is_arc) {
      throw Error(ErrorCode::invalid_manifold, "von_mises density is only defined on arcs");
    }
    if (!(dens.concentration >= 0.0)) {
      throw Error(ErrorCode::invalid_manifold, "von_mises concentration must be >= 0");
    }
    // Integrate exp(k (cos - 1)) to keep the integrand bounded, then restore.
    const double k = dens.concentration;
    const double mu = dens.mode_angle;
    const double z = simpson([&](double a) { return std::exp(k * (std::cos(a - mu) - 1.0)); },
                             p.angle_begin, p.angle_end);
    log_normalizers_.push_back(std::log(z * p.radius) + k);
  }
}

double Manifold::kappa_max() const {
  double kappa = 0.0;
  for (const auto& p : pieces_) {
    if (p.is_arc) kappa = std::max(kappa, 1.0 / p.radius);
  }
  return kappa;
}

double Manifold::total_length() const {
  double len = 0.0;
  for (const auto& p : pieces_) len += p.length();
  return len;
}

double Manifold::log_density(std::size_t component, double param) const {
  const ComponentDensity& dens = densities_.at(component);
  double value = std::log(weights_[component]) - log_normalizers_[component];
  if (dens.kind == DensityKind::von_mises) {
    value += dens.concentration * std::cos(param - dens.mode_angle);
  }
  return value;
}

Vec Manifold::intrinsic_log_density_gradient(std::size_t component, double param) const {
  const ComponentDensity& dens = densities_.at(component);
  const CurvePiece& p = pieces_[component];
  const Vec tangent = p.unit_tangent_at(param);
  if (dens.kind == DensityKind::uniform) return Vec::Zero(tangent.size());
  const double d_dparam = -dens.concentration * std::sin(param - dens.mode_angle);
  return (d_dparam / p.speed()) * tangent;
}

Manifold Manifold::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw Error(ErrorCode::non_positive_factor, "scale factor must be positive");
  }
  Manifold m = *this;
  for (auto& p : m.pieces_) {
    if (p.is_arc) {
      p.center *= factor;
      p.radius *= factor;
    } else {
      p.a *= factor;
      p.b *= factor;
    }
  }
  m.finalize();
  return m;
}

ProjectionResult project(const Manifold& m, const Vec& x, double tube_radius) {
  if (static_cast<std::size_t>(x.size()) != m.dim()) {
    throw Error(ErrorCode::invalid_params, "point dimension does not match the manifold");
  }
  std::vector<Candidate> candidates;
  candidates.reserve(m.component_count());
  for (std::size_t i = 0; i < m.component_count(); ++i) {
    const CurvePiece& p = m.piece(i);
    candidates.push_back(p.is_arc ? project_arc(p, x, i) : project_segment(p, x, i));
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& l, const Candidate& r) { return l.distance < r.distance; });
  const Candidate& best = candidates.front();
  if (candidates.size() > 1) {
    const Candidate& runner_up = candidates[1];
    if (runner_up.distance - best.distance <= kProjectionTieTolerance &&
        (runner_up.pi - best.pi).norm() > kProjectionTieTolerance) {
      throw Error(ErrorCode::ambiguous_projection, "two components are equally near");
    }
  }
  if (best.distance >= tube_radius) {
    throw Error(ErrorCode::outside_tube, "distance " + std::to_string(best.distance) +
                                             " reaches tube radius " + std::to_string(tube_radius));
  }
  ProjectionResult pr;
  pr.pi = best.pi;
  pr.n = x - best.pi;
  pr.distance = best.distance;
  pr.tangent_basis = m.piece(best.component).unit_tangent_at(best.param);
  pr.chart_param = best.param;
  pr.component = best.component;
  pr.at_boundary = best.at_boundary;
  return pr;
}

CurvatureData curvature_data(const Manifold& m, const ProjectionResult& pr) {
  const CurvePiece& p = m.piece(pr.component);
  CurvatureData cd;
  if (!p.is_arc) {
    cd.mean_curvature = Vec::Zero(pr.pi.size());
    return cd;
  }
  cd.kappa_max = 1.0 / p.radius;
  cd.mean_curvature = (p.center - pr.pi) / (p.radius * p.radius);
  cd.shape_operator_norm = cd.kappa_max * pr.distance;
  return cd;
}

Manifold scale_manifold(const Manifold& m, double factor) { return m.scaled(factor); }

bool validate_tube(const Manifold& m, double tau, double delta) {
  return tau * m.kappa_max() <= (1.0 - delta) + 1e-12;
}

double normal_distance_at(const Manifold& m0, const Vec& x, double t) {
  const double scale = 1.0 - t;
  return scale * project(m0, x / scale).distance;
}

std::vector<Vec> sample_outline(const Manifold& m, std::size_t points_per_component) {
  std::vector<Vec> out;
  const std::size_t n = std::max<std::size_t>(points_per_component, 2);
  for (std::size_t i = 0; i < m.component_count(); ++i) {
    const CurvePiece& p = m.piece(i);
    const double lo = p.param_begin();
    const double hi = p.param_end();
    for (std::size_t k = 0; k < n; ++k) {
      out.push_back(p.point_at(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1)));
    }
  }
  return out;
}

}  // namespace sgpp
