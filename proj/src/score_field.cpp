#include "sgpp/score_field.hpp"

#include "sgpp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace sgpp {

namespace {

double log_sum_exp(const Eigen::VectorXd& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double top = logits.maxCoeff();
  Eigen::VectorXd r = (logits.array() - top).exp();
  return r / r.sum();
}

Eigen::MatrixXd stack_atoms(const std::vector<Vec>& atoms) {
  if (atoms.empty()) throw Error(ErrorCode::invalid_params, "at least one atom required");
  const Eigen::Index d = atoms.front().size();
  Eigen::MatrixXd m(d, static_cast<Eigen::Index>(atoms.size()));
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (atoms[i].size() != d) throw Error(ErrorCode::invalid_params, "atoms must share a dimension");
    if (!atoms[i].allFinite()) throw Error(ErrorCode::invalid_params, "atoms must be finite");
    m.col(static_cast<Eigen::Index>(i)) = atoms[i];
  }
  return m;
}

Eigen::VectorXd normalized_weights(const std::vector<double>& weights, std::size_t count) {
  if (weights.size() != count) throw Error(ErrorCode::invalid_params, "one weight per atom required");
  Eigen::VectorXd w(static_cast<Eigen::Index>(count));
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw Error(ErrorCode::invalid_params, "weights must be finite and >= 0");
    }
    w[static_cast<Eigen::Index>(i)] = weights[i];
    total += weights[i];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::invalid_params, "weights must not all vanish");
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error(ErrorCode::invalid_params, "weights must sum to 1 (got " + std::to_string(total) + ")");
  }
  return w / total;
}

}  // namespace

void check_open_unit_time(double t) {
  if (!(t > 0.0 && t < 1.0)) {
    throw Error(ErrorCode::time_out_of_range, "t = " + std::to_string(t) + " outside (0, 1)");
  }
}

DiscreteSupportScore::DiscreteSupportScore(std::vector<Vec> atoms, std::vector<double> weights)
    : atoms_(stack_atoms(atoms)), weights_(normalized_weights(weights, atoms.size())) {
  log_weights_ = weights_.array().log();
}

std::vector<double> DiscreteSupportScore::weights() const {
  return {weights_.data(), weights_.data() + weights_.size()};
}

DiscreteSupportScore DiscreteSupportScore::reweighted(const std::vector<double>& weights) const {
  std::vector<Vec> atoms;
  atoms.reserve(atom_count());
  for (std::size_t i = 0; i < atom_count(); ++i) atoms.push_back(atom(i));
  return DiscreteSupportScore(std::move(atoms), weights);
}

Eigen::VectorXd DiscreteSupportScore::component_logits(const Vec& x, double t) const {
  const Eigen::Index n = atoms_.cols();
  const Eigen::Index d = atoms_.rows();
  const double shrink = 1.0 - t;
  const double inv_two_var = 0.5 / (t * t);
  Eigen::VectorXd logits(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sq = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double diff = x[k] - shrink * atoms_(k, i);
      sq += diff * diff;
    }
    logits[i] = log_weights_[i] - sq * inv_two_var;
  }
  return logits;
}

Eigen::VectorXd DiscreteSupportScore::responsibilities(const Vec& x, double t) const {
  check_open_unit_time(t);
  return softmax(component_logits(x, t));
}

Vec DiscreteSupportScore::posterior_mean(const Vec& x, double t) const {
  return atoms_ * responsibilities(x, t);
}

Vec DiscreteSupportScore::score(const Vec& x, double t) const {
  const Vec mean = posterior_mean(x, t);
  return ((1.0 - t) * mean - x) / (t * t);
}

double DiscreteSupportScore::log_density(const Vec& x, double t) const {
  check_open_unit_time(t);
  const double d = static_cast<double>(atoms_.rows());
  return log_sum_exp(component_logits(x, t)) - 0.5 * d * std::log(2.0 * std::numbers::pi * t * t);
}

GmmScore::GmmScore(std::vector<GmmComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw Error(ErrorCode::invalid_params, "at least one component required");
  const Eigen::Index d = components_.front().mean.size();
  double total = 0.0;
  for (const auto& c : components_) {
    if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d) {
      throw Error(ErrorCode::invalid_params, "component shapes disagree");
    }
    if (!c.covariance.isApprox(c.covariance.transpose(), 1e-12)) {
      throw Error(ErrorCode::invalid_params, "covariance must be symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::invalid_params, "covariance must be positive definite");
    }
    if (!(c.weight >= 0.0)) throw Error(ErrorCode::invalid_params, "weights must be >= 0");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) throw Error(ErrorCode::invalid_params, "weights must sum to 1");
}

namespace {

struct GmmEval {
  Eigen::VectorXd logits;
  std::vector<Vec> grads;  // per-component gradient of the log Gaussian
};

GmmEval evaluate_gmm(const std::vector<GmmComponent>& comps, const Vec& x, double t) {
  const Eigen::Index d = x.size();
  GmmEval out;
  out.logits.resize(static_cast<Eigen::Index>(comps.size()));
  out.grads.reserve(comps.size());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const auto& c = comps[k];
    const Eigen::MatrixXd cov = (1.0 - t) * (1.0 - t) * c.covariance + t * t * eye;
    const Eigen::LLT<Eigen::MatrixXd> llt(cov);
    const Vec diff = x - (1.0 - t) * c.mean;
    const Vec solved = llt.solve(diff);
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    out.logits[static_cast<Eigen::Index>(k)] =
        std::log(c.weight) - 0.5 * diff.dot(solved) - 0.5 * log_det;
    out.grads.push_back(-solved);
  }
  return out;
}

}  // namespace

Vec GmmScore::score(const Vec& x, double t) const {
  check_open_unit_time(t);
  const GmmEval e = evaluate_gmm(components_, x, t);
  const Eigen::VectorXd r = softmax(e.logits);
  Vec s = Vec::Zero(x.size());
  for (std::size_t k = 0; k < components_.size(); ++k) s += r[static_cast<Eigen::Index>(k)] * e.grads[k];
  return s;
}

double GmmScore::log_density(const Vec& x, double t) const {
  check_open_unit_time(t);
  const GmmEval e = evaluate_gmm(components_, x, t);
  return log_sum_exp(e.logits) - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

VeDiscreteScore::VeDiscreteScore(std::vector<Vec> atoms, std::vector<double> weights)
    : atoms_(stack_atoms(atoms)) {
  log_weights_ = normalized_weights(weights, atoms.size()).array().log();
}

VeDiscreteScore::VeDiscreteScore(const DiscreteSupportScore& support) : atoms_(support.atom_matrix()) {
  log_weights_ = Eigen::VectorXd::Map(support.weights().data(),
                                      static_cast<Eigen::Index>(support.atom_count()))
                     .array()
                     .log();
}

namespace {

Eigen::VectorXd ve_logits(const Eigen::MatrixXd& atoms, const Eigen::VectorXd& log_w, const Vec& x,
                          double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::invalid_params, "VE noise level must be positive");
  }
  return log_w - (atoms.colwise() - x).colwise().squaredNorm().transpose() / (2.0 * sigma * sigma);
}

}  // namespace

Vec VeDiscreteScore::score(const Vec& x, double sigma) const {
  const Eigen::VectorXd r = softmax(ve_logits(atoms_, log_weights_, x, sigma));
  return (atoms_ * r - x) / (sigma * sigma);
}

double VeDiscreteScore::log_density(const Vec& x, double sigma) const {
  const double d = static_cast<double>(atoms_.rows());
  return log_sum_exp(ve_logits(atoms_, log_weights_, x, sigma)) -
         0.5 * d * std::log(2.0 * std::numbers::pi * sigma * sigma);
}

Vec rf_marginal_score(const ScoreField& field, const Vec& x, double t) {
  check_open_unit_time(t);
  return field.score(x, t);
}

Vec rf_velocity(const ScoreField& field, const Vec& x, double t) {
  check_open_unit_time(t);
  return -x / (1.0 - t) - (t / (1.0 - t)) * field.score(x, t);
}

Vec rf_score_via_ve(const VeDiscreteScore& field, const Vec& x, double t) {
  check_open_unit_time(t);
  const double scale = 1.0 - t;
  const double sigma = t / scale;
  return field.score(x / scale, sigma) / scale;
}

DecompositionResidual decomposition_residual(const Manifold& m, const ScoreField& field, const Vec& x,
                                             double t, double tube_radius) {
  check_open_unit_time(t);
  const Manifold mt = m.scaled(1.0 - t);
  const ProjectionResult pr = project(mt, x, tube_radius);
  const CurvatureData cd = curvature_data(mt, pr);

  const CurvePiece& piece = mt.piece(pr.component);
  const double dparam = kIntrinsicFdStep / piece.speed();
  const double slope = (mt.log_density(pr.component, pr.chart_param + dparam) -
                        mt.log_density(pr.component, pr.chart_param - dparam)) /
                       (2.0 * kIntrinsicFdStep);
  const Vec intrinsic = slope * piece.unit_tangent_at(pr.chart_param);

  DecompositionResidual out;
  out.predicted = -pr.n / (t * t) + intrinsic + 0.5 * cd.mean_curvature;
  out.actual = field.score(x, t);
  out.residual_norm = (out.actual - out.predicted).norm();
  return out;
}

DiscreteSupportScore atoms_from_manifold(const Manifold& m, std::size_t atom_count) {
  const std::size_t comps = m.component_count();
  if (atom_count < comps) {
    throw Error(ErrorCode::invalid_params, "need at least one atom per manifold component");
  }
  // Largest-remainder allocation proportional to arclength.
  const double total = m.total_length();
  std::vector<std::size_t> counts(comps, 1);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = comps;
  const std::size_t spare = atom_count - comps;
  for (std::size_t j = 0; j < comps; ++j) {
    const double share = static_cast<double>(spare) * m.piece(j).length() / total;
    const auto whole = static_cast<std::size_t>(std::floor(share));
    counts[j] += whole;
    assigned += whole;
    remainders.emplace_back(share - static_cast<double>(whole), j);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& l, const auto& r) { return l.first > r.first; });
  for (std::size_t k = 0; assigned < atom_count; ++k, ++assigned) ++counts[remainders[k].second];

  std::vector<Vec> atoms;
  std::vector<double> log_w;
  atoms.reserve(atom_count);
  log_w.reserve(atom_count);
  for (std::size_t j = 0; j < comps; ++j) {
    const CurvePiece& p = m.piece(j);
    const double lo = p.param_begin();
    const double step = (p.param_end() - lo) / static_cast<double>(counts[j]);
    for (std::size_t k = 0; k < counts[j]; ++k) {
      const double param = lo + (static_cast<double>(k) + 0.5) * step;
      atoms.push_back(p.point_at(param));
      log_w.push_back(m.log_density(j, param) + std::log(step * p.speed()));
    }
  }
  const double top = *std::max_element(log_w.begin(), log_w.end());
  double norm = 0.0;
  for (double lw : log_w) norm += std::exp(lw - top);
  std::vector<double> weights;
  weights.reserve(log_w.size());
  for (double lw : log_w) weights.push_back(std::exp(lw - top) / norm);
  // Absorb rounding so the weights sum to one within the 1e-12 contract.
  const double drift = std::accumulate(weights.begin(), weights.end(), 0.0) - 1.0;
  weights[static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin())] -= drift;
  return DiscreteSupportScore(std::move(atoms), std::move(weights));
}

}  // namespace sgpp
