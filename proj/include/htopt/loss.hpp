#ifndef HTOPT_LOSS_HPP
#define HTOPT_LOSS_HPP

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>

#include "htopt/completion.hpp"
#include "htopt/problem.hpp"

namespace htopt::loss {

/// Overflow-safe log(1 + e^y) = max(y, 0) + log1p(e^{-|y|}).
double softplus(double y);
Eigen::VectorXd softplus(const Eigen::VectorXd& y);

double sigmoid(double y);

struct PenaltyWeights {
  double lambda_h = 1.0;
  double lambda_g = 1.0;
};

enum class GradientMode { ChainRule, FiniteDifference };
enum class NormalizingPolicy { Exact, Conservative };

/// sqrt(1 + ||P||_2) * L_bar, the smoothness constant the affine reduction
/// inherits from an L_bar-smooth objective.
double smoothness_bound(const Eigen::MatrixXd& P, double L_bar);

/// Penalized loss composed with the completion map. Affine instances are
/// pure; a Newton completion's warm-start cache (and the lazily cached
/// curvature estimate) confine each instance to one solver run at a time.
/// Copies start with fresh caches.
class ReducedLoss {
 public:
  ReducedLoss(std::shared_ptr<const problem::ProblemSpec> spec,
              completion::CompletionMap completion,
              PenaltyWeights weights = {},
              GradientMode mode = GradientMode::ChainRule,
              std::uint64_t seed = 0);

  int dim() const;  // n_f

  /// f(x) + lambda_h ||h(x)||^2 + lambda_g ||softplus(g(x))||^2.
  double full_loss(const Eigen::VectorXd& x) const;

  /// full_loss(complete(theta)) with the equality penalty dropped, which is
  /// exact on the completion manifold.
  double reduced_loss(const Eigen::VectorXd& theta) const;

  Eigen::VectorXd reduced_gradient(const Eigen::VectorXd& theta) const;

  /// Dominant eigenvalue of the reduced Hessian by power iteration on
  /// Hessian-vector products (relative tolerance 1e-6, at most 200 steps,
  /// returns the last Rayleigh quotient). Falls back to the conservative
  /// curvature bound when the iteration does not settle.
  double hessian_max_eigenvalue(const Eigen::VectorXd& theta) const;

  /// Exact: 1 + hessian_max_eigenvalue. Conservative: 1 + the smoothness
  /// bound from metadata, or a sampled estimate when metadata is absent.
  double normalizing_signal(const Eigen::VectorXd& theta,
                            NormalizingPolicy policy) const;

  /// Exact policy while n_f stays small, conservative beyond that.
  NormalizingPolicy default_policy() const;

  Eigen::VectorXd complete(const Eigen::VectorXd& theta) const;

  const problem::ProblemSpec& spec() const { return *spec_; }
  const std::shared_ptr<const problem::ProblemSpec>& spec_ptr() const {
    return spec_;
  }
  const completion::CompletionMap& completion() const { return completion_; }
  const PenaltyWeights& weights() const { return weights_; }
  GradientMode gradient_mode() const { return mode_; }
  std::uint64_t seed() const { return seed_; }

  /// Smoothness constant of l implied by objective metadata, when the
  /// completion is affine and the metadata is present.
  std::optional<double> metadata_smoothness() const;

 private:
  double conservative_curvature(const Eigen::VectorXd& theta) const;
  Eigen::VectorXd chain_gradient(const Eigen::VectorXd& theta) const;

  std::shared_ptr<const problem::ProblemSpec> spec_;
  completion::CompletionMap completion_;
  PenaltyWeights weights_;
  GradientMode mode_;
  std::uint64_t seed_;
  mutable std::optional<double> sampled_curvature_;
};

/// Largest sampled gradient-difference ratio over random pairs in the
/// region; a lower bound on the true Lipschitz constant of the gradient.
double estimate_lipschitz(const ReducedLoss& rl,
                          const problem::ConvexRegionSpec& region,
                          int samples);

}  // namespace htopt::loss

#endif
