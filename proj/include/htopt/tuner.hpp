#ifndef HTOPT_TUNER_HPP
#define HTOPT_TUNER_HPP

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "htopt/geometry.hpp"
#include "htopt/loss.hpp"

namespace htopt::tuner {

class GainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Validated gain triple: 0 < beta < 1, 0 < gamma < beta(2-beta)/(8+beta),
/// alpha >= 0 (alpha only drives the inequality-correction step).
class Gains {
 public:
  static double gamma_bound(double beta) {
    return beta * (2.0 - beta) / (8.0 + beta);
  }

  Gains(double beta, double gamma, double alpha = 0.0);

  double beta() const { return beta_; }
  double gamma() const { return gamma_; }
  double alpha() const { return alpha_; }

 private:
  double beta_;
  double gamma_;
  double alpha_;
};

/// Throws GainError naming the violated inequality and the computed bound.
Gains validate_gains(double beta, double gamma, double alpha = 0.0);

struct TunerState {
  Eigen::VectorXd theta;
  Eigen::VectorXd nu;
  long k = 0;
};

/// At least max_iters is always active; grad_tol and loss_tol terminate a
/// run early when reached.
struct StopRule {
  long max_iters = 100000;
  double grad_tol = 1e-10;
  std::optional<double> loss_tol;
  double loss_ref = 0.0;
};

enum class Termination { GradTol, LossTol, MaxIters, Aborted };

struct TraceRow {
  long k = 0;
  double l = 0;
  double full_loss = 0;
  double eq_residual_inf = 0;
  double ineq_violation_inf = 0;
  double grad_norm = 0;
  double normalizing = 0;
};

struct RunMetadata {
  std::string algorithm;
  double beta = 0;
  double gamma = 0;
  double alpha = 0;
  double lambda_h = 1;
  double lambda_g = 1;
  std::uint64_t seed = 0;
  double wall_seconds = 0;  // reported on stdout, never written to trace files
};

struct IterationTrace {
  RunMetadata meta;
  std::vector<TraceRow> rows;
};

struct SolverStats {
  long normalizing_evals = 0;  // exactly one per recorded iterate
  long steps = 0;
};

struct RunResult {
  TunerState state;
  IterationTrace trace;
  std::vector<Eigen::VectorXd> iterates;  // theta_k, one per trace row
  Termination termination = Termination::MaxIters;
  SolverStats stats;
};

/// One accelerated update with a caller-supplied normalizing signal; both
/// normalized gradients inside the step divide by this same value.
TunerState ht_step(const loss::ReducedLoss& rl, const TunerState& s,
                   const Gains& gains, double normalizing);

/// Computes the normalizing signal once at s.theta, then updates.
TunerState ht_step(const loss::ReducedLoss& rl, const TunerState& s,
                   const Gains& gains,
                   loss::NormalizingPolicy policy = loss::NormalizingPolicy::Exact);

/// Gradient with respect to theta of ||softplus(g(complete(theta)))||^2,
/// composed through the completion Jacobian.
Eigen::VectorXd correction_delta(const loss::ReducedLoss& rl,
                                 const Eigen::VectorXd& theta);

/// Inequality correction along the equality manifold's tangent:
/// [theta; z] -> [theta - alpha d; z - alpha J d] with d = correction_delta.
/// Exact for affine completions, first order otherwise.
Eigen::VectorXd rho(const loss::ReducedLoss& rl, const Eigen::VectorXd& x,
                    double alpha);

RunResult run_alg1(const loss::ReducedLoss& rl, const Eigen::VectorXd& theta0,
                   const std::optional<Eigen::VectorXd>& nu0, const Gains& gains,
                   const StopRule& stop,
                   std::optional<loss::NormalizingPolicy> policy = std::nullopt);

/// Equality + inequality: the accelerated update followed by the rho
/// correction; the solver state is re-extracted from the corrected point.
RunResult run_alg2(const loss::ReducedLoss& rl, const Eigen::VectorXd& x0,
                   const std::optional<Eigen::VectorXd>& nu0, const Gains& gains,
                   const StopRule& stop,
                   std::optional<loss::NormalizingPolicy> policy = std::nullopt);

/// Projected variant: theta0 and every update are projected onto the
/// region (given in independent coordinates, or sliced when x-dimensional).
RunResult run_alg3(const loss::ReducedLoss& rl, const Eigen::VectorXd& theta0,
                   const std::optional<Eigen::VectorXd>& nu0, const Gains& gains,
                   const StopRule& stop, const problem::ConvexRegionSpec& region,
                   std::optional<loss::NormalizingPolicy> policy = std::nullopt);

/// Projected + corrected variant; the x-space projection is realized as
/// projection of the independent block followed by re-completion.
RunResult run_alg4(const loss::ReducedLoss& rl, const Eigen::VectorXd& x0,
                   const std::optional<Eigen::VectorXd>& nu0, const Gains& gains,
                   const StopRule& stop, const problem::ConvexRegionSpec& region_n,
                   std::optional<loss::NormalizingPolicy> policy = std::nullopt);

enum class BaselineMethod { GradientDescent, Nesterov };

/// Gradient descent with step 1/estimate_lipschitz, or Nesterov's
/// constant-momentum scheme, with the same trace format (N_k column 0).
RunResult run_baseline(const loss::ReducedLoss& rl, const Eigen::VectorXd& theta0,
                       const StopRule& stop, BaselineMethod method);

}  // namespace htopt::tuner

#endif
