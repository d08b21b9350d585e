#include "htopt/loss.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>

#include "htopt/geometry.hpp"

namespace htopt::loss {

double softplus(double y) {
  return std::max(y, 0.0) + std::log1p(std::exp(-std::abs(y)));
}

Eigen::VectorXd softplus(const Eigen::VectorXd& y) {
  Eigen::VectorXd out(y.size());
  for (int i = 0; i < y.size(); ++i) out(i) = softplus(y(i));
  return out;
}

double sigmoid(double y) {
  if (y >= 0.0) {
    return 1.0 / (1.0 + std::exp(-y));
  }
  const double e = std::exp(y);
  return e / (1.0 + e);
}

double smoothness_bound(const Eigen::MatrixXd& P, double L_bar) {
  if (!(L_bar > 0.0)) {
    throw std::invalid_argument("smoothness_bound requires L_bar > 0");
  }
  double spectral = 0.0;
  if (P.size() > 0) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(P);
    spectral = svd.singularValues()(0);
  }
  return std::sqrt(1.0 + spectral) * L_bar;
}

ReducedLoss::ReducedLoss(std::shared_ptr<const problem::ProblemSpec> spec,
                         completion::CompletionMap completion,
                         PenaltyWeights weights, GradientMode mode,
                         std::uint64_t seed)
    : spec_(std::move(spec)),
      completion_(std::move(completion)),
      weights_(weights),
      mode_(mode),
      seed_(seed) {
  if (!spec_) {
    throw std::invalid_argument("ReducedLoss requires a problem");
  }
  if (!(weights_.lambda_h > 0.0)) {
    throw std::invalid_argument("lambda_h must be positive");
  }
  if (spec_->has_inequality() && !(weights_.lambda_g > 0.0)) {
    throw std::invalid_argument("lambda_g must be positive when inequality "
                                "constraints are present");
  }
  if (weights_.lambda_g < 0.0) {
    throw std::invalid_argument("lambda_g must be nonnegative");
  }
  if (completion::partition_of(completion_).n != spec_->n) {
    throw std::invalid_argument("completion partition disagrees with problem");
  }
}

int ReducedLoss::dim() const {
  return completion::partition_of(completion_).nf();
}

double ReducedLoss::full_loss(const Eigen::VectorXd& x) const {
  double value = spec_->objective.value(x);
  const Eigen::VectorXd h = problem::residual_equality(*spec_, x);
  if (h.size() > 0) {
    value += weights_.lambda_h * h.squaredNorm();
  }
  if (spec_->has_inequality()) {
    value += weights_.lambda_g *
             softplus(problem::residual_inequality(*spec_, x)).squaredNorm();
  }
  return value;
}

double ReducedLoss::reduced_loss(const Eigen::VectorXd& theta) const {
  const Eigen::VectorXd x = completion::complete(completion_, theta);
  double value = spec_->objective.value(x);
  if (spec_->has_inequality()) {
    value += weights_.lambda_g *
             softplus(problem::residual_inequality(*spec_, x)).squaredNorm();
  }
  return value;
}

Eigen::VectorXd ReducedLoss::chain_gradient(const Eigen::VectorXd& theta) const {
  const auto& partition = completion::partition_of(completion_);
  const Eigen::VectorXd x = completion::complete(completion_, theta);
  Eigen::VectorXd grad_x = problem::gradient_of(spec_->objective, x);
  if (spec_->has_inequality()) {
    const Eigen::VectorXd g = spec_->inequality->value(x);
    const Eigen::MatrixXd Jg = problem::jacobian_of(*spec_->inequality, x);
    for (int i = 0; i < g.size(); ++i) {
      grad_x += (2.0 * weights_.lambda_g * softplus(g(i)) * sigmoid(g(i))) *
                Jg.row(i).transpose();
    }
  }
  const Eigen::MatrixXd J = completion::completion_jacobian(completion_, theta);
  return partition.independent_of(grad_x) + J.transpose() * partition.dependent_of(grad_x);
}

Eigen::VectorXd ReducedLoss::reduced_gradient(const Eigen::VectorXd& theta) const {
  if (mode_ == GradientMode::ChainRule) {
    return chain_gradient(theta);
  }
  return problem::fd_gradient(
      [this](const Eigen::VectorXd& t) { return reduced_loss(t); }, theta);
}

std::optional<double> ReducedLoss::metadata_smoothness() const {
  if (!spec_->smoothness) return std::nullopt;
  if (const auto* affine =
          std::get_if<completion::AffineCompletion>(&completion_)) {
    return smoothness_bound(affine->P(), *spec_->smoothness);
  }
  return std::nullopt;
}

double ReducedLoss::conservative_curvature(const Eigen::VectorXd& theta) const {
  if (spec_->smoothness) {
    if (auto bound = metadata_smoothness()) {
      return *bound;
    }
    // Newton completion: bound through the local linearization.
    const Eigen::MatrixXd J = completion::completion_jacobian(completion_, theta);
    return smoothness_bound(J, *spec_->smoothness);
  }
  if (!sampled_curvature_) {
    std::mt19937_64 rng(seed_ ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> dist(0.0, 1.0);
    double best = 0.0;
    for (int s = 0; s < 50; ++s) {
      Eigen::VectorXd a(theta.size()), b(theta.size());
      for (int i = 0; i < theta.size(); ++i) {
        a(i) = theta(i) + dist(rng);
        b(i) = theta(i) + dist(rng);
      }
      const double dist_ab = (a - b).norm();
      if (dist_ab < 1e-12) continue;
      const double ratio =
          (reduced_gradient(a) - reduced_gradient(b)).norm() / dist_ab;
      if (std::isfinite(ratio)) best = std::max(best, ratio);
    }
    sampled_curvature_ = best;
  }
  return *sampled_curvature_;
}

double ReducedLoss::hessian_max_eigenvalue(const Eigen::VectorXd& theta) const {
  const int nf = static_cast<int>(theta.size());
  std::mt19937_64 rng(seed_);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::VectorXd v(nf);
  for (int i = 0; i < nf; ++i) v(i) = dist(rng);
  const double vnorm = v.norm();
  v = (vnorm > 0.0) ? Eigen::VectorXd(v / vnorm)
                    : Eigen::VectorXd(Eigen::VectorXd::Unit(nf, 0));

  const double eps = std::cbrt(std::numeric_limits<double>::epsilon()) *
                     (1.0 + theta.lpNorm<Eigen::Infinity>());
  double lambda_prev = 0.0;
  for (int it = 0; it < 200; ++it) {
    const Eigen::VectorXd hv = (reduced_gradient(theta + eps * v) -
                                reduced_gradient(theta - eps * v)) /
                               (2.0 * eps);
    if (!hv.allFinite()) break;
    const double lambda = v.dot(hv);
    const double hv_norm = hv.norm();
    if (hv_norm <= 1e-11) {
      return 0.0;  // curvature indistinguishable from zero
    }
    v = hv / hv_norm;
    if (it > 0 && std::abs(lambda - lambda_prev) <=
                      1e-6 * std::max(1.0, std::abs(lambda))) {
      return lambda;
    }
    lambda_prev = lambda;
  }
  return conservative_curvature(theta);
}

double ReducedLoss::normalizing_signal(const Eigen::VectorXd& theta,
                                       NormalizingPolicy policy) const {
  if (policy == NormalizingPolicy::Exact) {
    return 1.0 + hessian_max_eigenvalue(theta);
  }
  return 1.0 + conservative_curvature(theta);
}

NormalizingPolicy ReducedLoss::default_policy() const {
  return dim() <= 50 ? NormalizingPolicy::Exact : NormalizingPolicy::Conservative;
}

Eigen::VectorXd ReducedLoss::complete(const Eigen::VectorXd& theta) const {
  return completion::complete(completion_, theta);
}

double estimate_lipschitz(const ReducedLoss& rl,
                          const problem::ConvexRegionSpec& region,
                          int samples) {
  if (region.dimension() != rl.dim()) {
    throw std::invalid_argument("estimate_lipschitz: region dimension must "
                                "match the reduced space");
  }
  std::mt19937_64 rng(rl.seed() ^ 0xd1b54a32d192ed03ull);
  double best = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::VectorXd a = geometry::sample_point(region, rng);
    const Eigen::VectorXd b = geometry::sample_point(region, rng);
    const double d = (a - b).norm();
    if (d < 1e-12) continue;
    const double ratio = (rl.reduced_gradient(a) - rl.reduced_gradient(b)).norm() / d;
    if (std::isfinite(ratio)) best = std::max(best, ratio);
  }
  return best;
}

}  // namespace htopt::loss
