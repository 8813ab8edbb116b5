#pragma once

// Closed-form scores of rectified-flow marginals X_t = (1 - t) X_0 + t Z for
// data distributions whose Gaussian smoothing stays a Gaussian mixture.

#include "sgpp/geometry.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace sgpp {

class ScoreField {
 public:
  virtual ~ScoreField() = default;
  virtual std::size_t dim() const = 0;
  // grad_x log p_t(x); 0 < t < 1.
  virtual Vec score(const Vec& x, double t) const = 0;
  virtual double log_density(const Vec& x, double t) const = 0;
};

// Throws TimeOutOfRange unless 0 < t < 1.
void check_open_unit_time(double t);

// p_data = sum_i w_i delta(a_i); p_t = sum_i w_i N((1 - t) a_i, t^2 I).
class DiscreteSupportScore final : public ScoreField {
 public:
  DiscreteSupportScore(std::vector<Vec> atoms, std::vector<double> weights);

  std::size_t dim() const override { return static_cast<std::size_t>(atoms_.rows()); }
  Vec score(const Vec& x, double t) const override;
  double log_density(const Vec& x, double t) const override;

  // Tweedie posterior mean E[X_0 | X_t = x].
  Vec posterior_mean(const Vec& x, double t) const;
  // Posterior responsibilities P(X_0 = a_i | X_t = x).
  Eigen::VectorXd responsibilities(const Vec& x, double t) const;

  std::size_t atom_count() const { return static_cast<std::size_t>(atoms_.cols()); }
  Vec atom(std::size_t i) const { return atoms_.col(static_cast<Eigen::Index>(i)); }
  const Eigen::MatrixXd& atom_matrix() const { return atoms_; }
  double weight(std::size_t i) const { return weights_[static_cast<Eigen::Index>(i)]; }
  std::vector<double> weights() const;

  // Same support with new weights (used for exact conditional flows).
  DiscreteSupportScore reweighted(const std::vector<double>& weights) const;

 private:
  // Per-atom log of w_i N(x; (1 - t) a_i, t^2 I) without the shared constant.
  Eigen::VectorXd component_logits(const Vec& x, double t) const;

  Eigen::MatrixXd atoms_;  // D x N
  Eigen::VectorXd weights_;
  Eigen::VectorXd log_weights_;
};

struct GmmComponent {
  Vec mean;
  Eigen::MatrixXd covariance;
  double weight = 1.0;
};

// Gaussian-mixture data; component k becomes N((1-t) mu_k, (1-t)^2 S_k + t^2 I).
class GmmScore final : public ScoreField {
 public:
  explicit GmmScore(std::vector<GmmComponent> components);

  std::size_t dim() const override { return static_cast<std::size_t>(components_.front().mean.size()); }
  Vec score(const Vec& x, double t) const override;
  double log_density(const Vec& x, double t) const override;

 private:
  std::vector<GmmComponent> components_;
};

// Variance-exploding model X = Y + sigma Z over a discrete support.
class VeDiscreteScore {
 public:
  VeDiscreteScore(std::vector<Vec> atoms, std::vector<double> weights);
  explicit VeDiscreteScore(const DiscreteSupportScore& support);

  std::size_t dim() const { return static_cast<std::size_t>(atoms_.rows()); }
  Vec score(const Vec& x, double sigma) const;
  double log_density(const Vec& x, double sigma) const;

 private:
  Eigen::MatrixXd atoms_;
  Eigen::VectorXd log_weights_;
};

Vec rf_marginal_score(const ScoreField& field, const Vec& x, double t);

// RF ODE drift v = -x/(1-t) - t/(1-t) grad log p_t(x), integrated from t=1 to 0.
Vec rf_velocity(const ScoreField& field, const Vec& x, double t);

// RF score through the VE model at sigma(t) = t / (1 - t).
Vec rf_score_via_ve(const VeDiscreteScore& field, const Vec& x, double t);

struct DecompositionResidual {
  Vec predicted;
  Vec actual;
  double residual_norm = 0.0;
};

inline constexpr double kIntrinsicFdStep = 1e-4;  // arclength

// Compares the field's score against -n/t^2 + grad_T log p_{M_t} + H_t / 2,
// with the intrinsic gradient taken by central differences along the chart.
DecompositionResidual decomposition_residual(const Manifold& m, const ScoreField& field, const Vec& x,
                                             double t, double tube_radius = kUnboundedTube);

inline constexpr std::size_t kDefaultAtomCount = 512;

// Midpoint-rule discretisation of the on-manifold density. Atoms are spread
// evenly in arclength; weights are density times arclength cell, normalised.
DiscreteSupportScore atoms_from_manifold(const Manifold& m, std::size_t atom_count = kDefaultAtomCount);

}  // namespace sgpp
