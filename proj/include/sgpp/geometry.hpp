#pragma once

// Exact geometry of 1-d curves (circles, segments, unions of circular arcs)
// embedded in R^D. Curves live in the plane of the first two coordinates.

#include <Eigen/Dense>

#include <cstddef>
#include <limits>
#include <vector>

namespace sgpp {

using Vec = Eigen::VectorXd;

enum class DensityKind { uniform, von_mises };

// Density of one curve component with respect to arclength, before the
// component weight is applied. von_mises is proportional to
// exp(concentration * cos(angle - mode_angle)) and is only defined on arcs.
struct ComponentDensity {
  DensityKind kind = DensityKind::uniform;
  double concentration = 0.0;
  double mode_angle = 0.0;
};

struct ArcSpec {
  Vec center;
  double radius = 1.0;
  double angle_begin = 0.0;
  double angle_end = 0.0;
};

struct TwoMoonsSpec {
  double radius = 1.0;
  double offset_x = 1.0;
  double offset_y = 0.5;
  std::size_t dim = 2;
};

enum class ManifoldKind { circle, segment, arc_union };

// One smooth piece of the curve. Arcs are parameterised by angle, segments by
// arclength measured from `a`.
struct CurvePiece {
  bool is_arc = true;
  // arc
  Vec center;
  double radius = 0.0;
  double angle_begin = 0.0;
  double angle_end = 0.0;
  bool full_circle = false;
  // segment
  Vec a;
  Vec b;

  double param_begin() const { return is_arc ? angle_begin : 0.0; }
  double param_end() const { return is_arc ? angle_end : (b - a).norm(); }
  double length() const;
  // arclength per unit chart parameter
  double speed() const { return is_arc ? radius : 1.0; }
  Vec point_at(double param) const;
  Vec unit_tangent_at(double param) const;
};

class Manifold {
 public:
  static Manifold circle(const Vec& center, double radius, ComponentDensity density = {});
  static Manifold segment(const Vec& a, const Vec& b, ComponentDensity density = {});
  static Manifold arc_union(const std::vector<ArcSpec>& arcs,
                            const std::vector<ComponentDensity>& densities,
                            const std::vector<double>& weights);
  static Manifold two_moons(const TwoMoonsSpec& spec = {},
                            const std::vector<ComponentDensity>& densities = {},
                            const std::vector<double>& weights = {});

  ManifoldKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t component_count() const { return pieces_.size(); }
  const CurvePiece& piece(std::size_t i) const { return pieces_[i]; }
  const ComponentDensity& density(std::size_t i) const { return densities_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

  // Supremum of the principal curvature over the whole curve.
  double kappa_max() const;
  double total_length() const;

  // log of the on-manifold density per unit arclength at a chart parameter.
  double log_density(std::size_t component, double param) const;
  // Analytic intrinsic gradient of log_density as an ambient vector.
  Vec intrinsic_log_density_gradient(std::size_t component, double param) const;

  // Homothety about the origin. Densities are expressed in chart parameters
  // normalised by the current geometry, so mass is conserved automatically.
  Manifold scaled(double factor) const;

 private:
  Manifold() = default;
  void finalize();

  ManifoldKind kind_ = ManifoldKind::circle;
  std::size_t dim_ = 2;
  std::vector<CurvePiece> pieces_;
  std::vector<ComponentDensity> densities_;
  std::vector<double> weights_;
  std::vector<double> log_normalizers_;
};

struct ProjectionResult {
  Vec pi;
  Vec n;
  double distance = 0.0;
  Eigen::MatrixXd tangent_basis;  // D x 1, orthonormal
  double chart_param = 0.0;
  std::size_t component = 0;
  // Nearest point is an arc or segment end rather than a foot of a normal.
  bool at_boundary = false;
};

struct CurvatureData {
  double kappa_max = 0.0;
  Vec mean_curvature;
  double shape_operator_norm = 0.0;
};

inline constexpr double kProjectionTieTolerance = 1e-9;
inline constexpr double kUnboundedTube = std::numeric_limits<double>::infinity();

// Nearest-point projection. Throws AmbiguousProjection on ties within
// kProjectionTieTolerance, OutsideTube when the distance reaches `tube_radius`.
ProjectionResult project(const Manifold& m, const Vec& x, double tube_radius = kUnboundedTube);

CurvatureData curvature_data(const Manifold& m, const ProjectionResult& pr);

Manifold scale_manifold(const Manifold& m, double factor);

// True iff tau * kappa_max <= 1 - delta.
bool validate_tube(const Manifold& m, double tau, double delta);

// Distance from x to M_t = (1 - t) M_0, evaluated through the homothety.
double normal_distance_at(const Manifold& m0, const Vec& x, double t);

// Evenly spaced outline points, used by plotting and oracles.
std::vector<Vec> sample_outline(const Manifold& m, std::size_t points_per_component);

}  // namespace sgpp
