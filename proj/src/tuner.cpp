#include "htopt/tuner.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <utility>

namespace htopt::tuner {

namespace {

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

Gains::Gains(double beta, double gamma, double alpha)
    : beta_(beta), gamma_(gamma), alpha_(alpha) {
  if (!(beta > 0.0 && beta < 1.0)) {
    throw GainError("beta " + format_number(beta) +
                    " out of range: require 0 < beta < 1");
  }
  const double bound = gamma_bound(beta);
  if (!(gamma > 0.0 && gamma < bound)) {
    throw GainError("gamma " + format_number(gamma) +
                    " out of range: require 0 < gamma < beta(2-beta)/(8+beta) = " +
                    format_number(bound) + " for beta = " + format_number(beta));
  }
  if (alpha < 0.0) {
    throw GainError("alpha " + format_number(alpha) + " must be nonnegative");
  }
}

Gains validate_gains(double beta, double gamma, double alpha) {
  return Gains(beta, gamma, alpha);
}

namespace {

using ThetaMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct StepOutcome {
  Eigen::VectorXd theta_next;
  Eigen::VectorXd nu_next;
  Eigen::VectorXd grad_next;
};

// Algorithm core shared by ht_step and the run loops. `in_update` projects
// inside the theta update line; `post` applies the correction (and the
// x-space projection) afterwards. Both normalized gradients share `N`.
StepOutcome step_core(const loss::ReducedLoss& rl, const TunerState& s,
                      const Gains& gains, double N,
                      const Eigen::VectorXd& grad_at_theta,
                      const ThetaMap& in_update, const ThetaMap& post) {
  const double beta = gains.beta();
  const double gamma = gains.gamma();
  const Eigen::VectorXd gq = grad_at_theta / N;
  const Eigen::VectorXd theta_bar = s.theta - gamma * beta * gq;
  Eigen::VectorXd theta_next = theta_bar - beta * (theta_bar - s.nu);
  if (in_update) theta_next = in_update(theta_next);
  if (post) theta_next = post(theta_next);
  StepOutcome out;
  out.grad_next = rl.reduced_gradient(theta_next);
  out.nu_next = s.nu - gamma * (out.grad_next / N);
  out.theta_next = std::move(theta_next);
  return out;
}

struct EngineConfig {
  std::string algorithm;
  ThetaMap initial;    // applied to theta0 before the first recorded iterate
  ThetaMap in_update;  // alg3 projection
  ThetaMap post;       // alg2/alg4 correction (+ projection)
};

RunResult run_engine(const loss::ReducedLoss& rl, Eigen::VectorXd theta0,
                     const std::optional<Eigen::VectorXd>& nu0,
                     const Gains& gains, const StopRule& stop,
                     std::optional<loss::NormalizingPolicy> policy_opt,
                     EngineConfig config) {
  const auto wall_start = std::chrono::steady_clock::now();
  const loss::NormalizingPolicy policy =
      policy_opt.value_or(rl.default_policy());
  if (stop.max_iters <= 0) {
    throw std::invalid_argument("stop rule requires max_iters > 0");
  }
  if (config.initial) theta0 = config.initial(theta0);
  TunerState s;
  s.theta = theta0;
  s.nu = nu0.value_or(theta0);
  s.k = 0;
  if (s.nu.size() != s.theta.size()) {
    throw std::invalid_argument("nu0 dimension differs from theta0");
  }

  RunResult result;
  result.trace.meta.algorithm = config.algorithm;
  result.trace.meta.beta = gains.beta();
  result.trace.meta.gamma = gains.gamma();
  result.trace.meta.alpha = gains.alpha();
  result.trace.meta.lambda_h = rl.weights().lambda_h;
  result.trace.meta.lambda_g = rl.weights().lambda_g;
  result.trace.meta.seed = rl.seed();

  const auto& spec = rl.spec();
  std::optional<Eigen::VectorXd> pending_grad;
  Termination reason = Termination::MaxIters;
  for (;;) {
    const Eigen::VectorXd x = rl.complete(s.theta);
    const double l = rl.reduced_loss(s.theta);
    const Eigen::VectorXd grad =
        pending_grad ? *std::move(pending_grad) : rl.reduced_gradient(s.theta);
    pending_grad.reset();
    const double N = rl.normalizing_signal(s.theta, policy);
    ++result.stats.normalizing_evals;

    TraceRow row;
    row.k = s.k;
    row.l = l;
    row.full_loss = rl.full_loss(x);
    const Eigen::VectorXd hres = problem::residual_equality(spec, x);
    row.eq_residual_inf = hres.size() > 0 ? hres.lpNorm<Eigen::Infinity>() : 0.0;
    if (spec.has_inequality()) {
      row.ineq_violation_inf =
          problem::residual_inequality(spec, x).cwiseMax(0.0).lpNorm<Eigen::Infinity>();
    }
    row.grad_norm = grad.norm();
    row.normalizing = N;
    result.trace.rows.push_back(row);
    result.iterates.push_back(s.theta);

    if (!std::isfinite(l) || !grad.allFinite() || !std::isfinite(N)) {
      reason = Termination::Aborted;
      break;
    }
    if (row.grad_norm <= stop.grad_tol) {
      reason = Termination::GradTol;
      break;
    }
    if (stop.loss_tol && std::abs(l - stop.loss_ref) <= *stop.loss_tol) {
      reason = Termination::LossTol;
      break;
    }
    if (s.k >= stop.max_iters) {
      reason = Termination::MaxIters;
      break;
    }

    StepOutcome out = step_core(rl, s, gains, N, grad, config.in_update,
                                config.post);
    pending_grad = std::move(out.grad_next);
    s.theta = std::move(out.theta_next);
    s.nu = std::move(out.nu_next);
    ++s.k;
    ++result.stats.steps;
  }
  result.state = std::move(s);
  result.termination = reason;
  result.trace.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
          .count();
  return result;
}

}  // namespace

TunerState ht_step(const loss::ReducedLoss& rl, const TunerState& s,
                   const Gains& gains, double normalizing) {
  StepOutcome out = step_core(rl, s, gains, normalizing,
                              rl.reduced_gradient(s.theta), nullptr, nullptr);
  return TunerState{std::move(out.theta_next), std::move(out.nu_next), s.k + 1};
}

TunerState ht_step(const loss::ReducedLoss& rl, const TunerState& s,
                   const Gains& gains, loss::NormalizingPolicy policy) {
  return ht_step(rl, s, gains, rl.normalizing_signal(s.theta, policy));
}

Eigen::VectorXd correction_delta(const loss::ReducedLoss& rl,
                                 const Eigen::VectorXd& theta) {
  const auto& spec = rl.spec();
  if (!spec.has_inequality()) {
    throw std::logic_error("correction_delta: problem has no inequality block");
  }
  const auto& partition = completion::partition_of(rl.completion());
  const Eigen::VectorXd x = rl.complete(theta);
  const Eigen::VectorXd g = problem::residual_inequality(spec, x);
  const Eigen::MatrixXd Jg = problem::jacobian_of(*spec.inequality, x);
  const Eigen::MatrixXd J = completion::completion_jacobian(rl.completion(), theta);
  Eigen::VectorXd delta = Eigen::VectorXd::Zero(partition.nf());
  for (int i = 0; i < g.size(); ++i) {
    const Eigen::VectorXd row = Jg.row(i).transpose();
    const Eigen::VectorXd row_theta =
        partition.independent_of(row) + J.transpose() * partition.dependent_of(row);
    delta += (2.0 * loss::softplus(g(i)) * loss::sigmoid(g(i))) * row_theta;
  }
  return delta;
}

Eigen::VectorXd rho(const loss::ReducedLoss& rl, const Eigen::VectorXd& x,
                    double alpha) {
  const auto& partition = completion::partition_of(rl.completion());
  const Eigen::VectorXd theta = partition.independent_of(x);
  const Eigen::VectorXd delta = correction_delta(rl, theta);
  const Eigen::MatrixXd J = completion::completion_jacobian(rl.completion(), theta);
  const Eigen::VectorXd z = partition.dependent_of(x);
  return partition.assemble(theta - alpha * delta, z - alpha * (J * delta));
}

RunResult run_alg1(const loss::ReducedLoss& rl, const Eigen::VectorXd& theta0,
                   const std::optional<Eigen::VectorXd>& nu0, const Gains& gains,
                   const StopRule& stop,
                   std::optional<loss::NormalizingPolicy> policy) {
  EngineConfig config;
  config.algorithm = "ht1";
  return run_engine(rl, theta0, nu0, gains, stop, policy, std::move(config));
}

RunResult run_alg2(const loss::ReducedLoss& rl, const Eigen::VectorXd& x0,
                   const std::optional<Eigen::VectorXd>& nu0, const Gains& gains,
                   const StopRule& stop,
                   std::optional<loss::NormalizingPolicy> policy) {
  if (!rl.spec().has_inequality()) {
    throw std::logic_error("run_alg2 requires an inequality block");
  }
  const auto& partition = completion::partition_of(rl.completion());
  const double alpha = gains.alpha();
  EngineConfig config;
  config.algorithm = "ht2";
  config.post = [&rl, &partition, alpha](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd corrected = rho(rl, rl.complete(theta), alpha);
    return partition.independent_of(corrected);
  };
  return run_engine(rl, partition.independent_of(x0), nu0, gains, stop, policy,
                    std::move(config));
}

RunResult run_alg3(const loss::ReducedLoss& rl, const Eigen::VectorXd& theta0,
                   const std::optional<Eigen::VectorXd>& nu0, const Gains& gains,
                   const StopRule& stop, const problem::ConvexRegionSpec& region,
                   std::optional<loss::NormalizingPolicy> policy) {
  const auto& partition = completion::partition_of(rl.completion());
  const problem::ConvexRegionSpec region_m =
      (region.dimension() == partition.n && partition.n != partition.nf())
          ? geometry::slice_independent(region, partition)
          : region;
  if (region_m.dimension() != partition.nf()) {
    throw std::invalid_argument("run_alg3: region dimension must match the "
                                "reduced space");
  }
  auto projector = std::make_shared<geometry::Projector>(region_m);
  EngineConfig config;
  config.algorithm = "ht3";
  config.initial = [projector](const Eigen::VectorXd& t) {
    return projector->project(t);
  };
  config.in_update = [projector](const Eigen::VectorXd& t) {
    return projector->project(t);
  };
  return run_engine(rl, theta0, nu0, gains, stop, policy, std::move(config));
}

RunResult run_alg4(const loss::ReducedLoss& rl, const Eigen::VectorXd& x0,
                   const std::optional<Eigen::VectorXd>& nu0, const Gains& gains,
                   const StopRule& stop, const problem::ConvexRegionSpec& region_n,
                   std::optional<loss::NormalizingPolicy> policy) {
  if (!rl.spec().has_inequality()) {
    throw std::logic_error("run_alg4 requires an inequality block");
  }
  const auto& partition = completion::partition_of(rl.completion());
  const problem::ConvexRegionSpec region_m =
      (region_n.dimension() == partition.n && partition.n != partition.nf())
          ? geometry::slice_independent(region_n, partition)
          : region_n;
  if (region_m.dimension() != partition.nf()) {
    throw std::invalid_argument("run_alg4: region dimension must match the "
                                "reduced space");
  }
  auto projector = std::make_shared<geometry::Projector>(region_m);
  const double alpha = gains.alpha();
  EngineConfig config;
  config.algorithm = "ht4";
  config.initial = [projector](const Eigen::VectorXd& t) {
    return projector->project(t);
  };
  // The update line keeps the inner projection of the projected variant.
  // Without it a boundary-pinned solution lets nu drift until rho is
  // evaluated far outside the region, where the penalty gradient throws
  // the iterate across the box.
  config.in_update = [projector](const Eigen::VectorXd& t) {
    return projector->project(t);
  };
  // Proj_x(rho(.)) realized on the independent block; dependent entries are
  // recompleted whenever the iterate is evaluated.
  config.post = [&rl, &partition, projector, alpha](const Eigen::VectorXd& theta) {
    const Eigen::VectorXd corrected = rho(rl, rl.complete(theta), alpha);
    return projector->project(partition.independent_of(corrected));
  };
  return run_engine(rl, partition.independent_of(x0), nu0, gains, stop, policy,
                    std::move(config));
}

RunResult run_baseline(const loss::ReducedLoss& rl, const Eigen::VectorXd& theta0,
                       const StopRule& stop, BaselineMethod method) {
  const auto wall_start = std::chrono::steady_clock::now();
  if (stop.max_iters <= 0) {
    throw std::invalid_argument("stop rule requires max_iters > 0");
  }
  double lipschitz = loss::estimate_lipschitz(
      rl, problem::ConvexRegionSpec::ball(theta0, 2.0), 100);
  if (!(lipschitz > 1e-12)) lipschitz = 1.0;
  const double step = 1.0 / lipschitz;
  double momentum = 0.9;
  if (rl.spec().strong_convexity && *rl.spec().strong_convexity > 0.0) {
    const double kappa = lipschitz / *rl.spec().strong_convexity;
    if (kappa >= 1.0) {
      const double rt = std::sqrt(kappa);
      momentum = (rt - 1.0) / (rt + 1.0);
    }
  }

  RunResult result;
  result.trace.meta.algorithm =
      method == BaselineMethod::GradientDescent ? "gd" : "nesterov";
  result.trace.meta.lambda_h = rl.weights().lambda_h;
  result.trace.meta.lambda_g = rl.weights().lambda_g;
  result.trace.meta.seed = rl.seed();

  const auto& spec = rl.spec();
  Eigen::VectorXd theta = theta0;
  Eigen::VectorXd y = theta0;  // Nesterov extrapolation point
  long k = 0;
  Termination reason = Termination::MaxIters;
  for (;;) {
    const Eigen::VectorXd x = rl.complete(theta);
    const double l = rl.reduced_loss(theta);
    const Eigen::VectorXd grad = rl.reduced_gradient(theta);

    TraceRow row;
    row.k = k;
    row.l = l;
    row.full_loss = rl.full_loss(x);
    const Eigen::VectorXd hres = problem::residual_equality(spec, x);
    row.eq_residual_inf = hres.size() > 0 ? hres.lpNorm<Eigen::Infinity>() : 0.0;
    if (spec.has_inequality()) {
      row.ineq_violation_inf =
          problem::residual_inequality(spec, x).cwiseMax(0.0).lpNorm<Eigen::Infinity>();
    }
    row.grad_norm = grad.norm();
    row.normalizing = 0.0;
    result.trace.rows.push_back(row);
    result.iterates.push_back(theta);

    if (!std::isfinite(l) || !grad.allFinite()) {
      reason = Termination::Aborted;
      break;
    }
    if (row.grad_norm <= stop.grad_tol) {
      reason = Termination::GradTol;
      break;
    }
    if (stop.loss_tol && std::abs(l - stop.loss_ref) <= *stop.loss_tol) {
      reason = Termination::LossTol;
      break;
    }
    if (k >= stop.max_iters) {
      reason = Termination::MaxIters;
      break;
    }

    if (method == BaselineMethod::GradientDescent) {
      theta -= step * grad;
    } else {
      const Eigen::VectorXd theta_next = y - step * rl.reduced_gradient(y);
      y = theta_next + momentum * (theta_next - theta);
      theta = theta_next;
    }
    ++k;
    ++result.stats.steps;
  }
  result.state.theta = std::move(theta);
  result.state.nu = std::move(y);
  result.state.k = k;
  result.termination = reason;
  result.trace.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start)
          .count();
  return result;
}

}  // namespace htopt::tuner
