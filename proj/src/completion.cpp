#include "htopt/completion.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>

namespace htopt::completion {

AffineCompletion::AffineCompletion(Eigen::MatrixXd P, Eigen::VectorXd q,
                                   problem::VariablePartition partition)
    : P_(std::move(P)), q_(std::move(q)), partition_(std::move(partition)) {
  if (P_.rows() != partition_.m() || P_.cols() != partition_.nf() ||
      q_.size() != partition_.m()) {
    throw std::invalid_argument("affine completion dimensions disagree with partition");
  }
}

Eigen::VectorXd AffineCompletion::complete(const Eigen::VectorXd& theta) const {
  if (theta.size() != partition_.nf()) {
    throw std::invalid_argument("complete: theta has dimension " +
                                std::to_string(theta.size()) + ", expected " +
                                std::to_string(partition_.nf()));
  }
  return partition_.assemble(theta, P_ * theta + q_);
}

AffineCompletion build_affine_completion(
    const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
    const problem::VariablePartition& partition) {
  const int m = partition.m();
  const int nf = partition.nf();
  if (A.rows() != m || A.cols() != partition.n || b.size() != m) {
    throw std::invalid_argument("build_affine_completion: dimension mismatch");
  }
  Eigen::MatrixXd Az(m, m);
  Eigen::MatrixXd Atheta(m, nf);
  for (int j = 0; j < m; ++j) Az.col(j) = A.col(partition.dependent[j]);
  for (int j = 0; j < nf; ++j) Atheta.col(j) = A.col(partition.independent[j]);

  if (m == 0) {
    return AffineCompletion(Eigen::MatrixXd(0, nf), Eigen::VectorXd(0), partition);
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Az);
  const double rcond = lu.rcond();
  if (!std::isfinite(rcond) || rcond < 1e-12) {
    std::string idx;
    for (int i : partition.dependent) {
      if (!idx.empty()) idx += ", ";
      idx += "x" + std::to_string(i + 1);
    }
    throw CompletionError("dependent column block {" + idx +
                          "} is singular or near-singular (reciprocal condition " +
                          std::to_string(rcond) + ")");
  }
  Eigen::MatrixXd P = -lu.solve(Atheta);
  Eigen::VectorXd q = lu.solve(b);
  return AffineCompletion(std::move(P), std::move(q), partition);
}

NewtonCompletion::NewtonCompletion(problem::VectorField h,
                                   problem::VariablePartition partition,
                                   int max_iters, double tolerance,
                                   InitialGuess guess_policy,
                                   std::optional<Eigen::VectorXd> initial_dependent)
    : h_(std::move(h)),
      partition_(std::move(partition)),
      max_iters_(max_iters),
      tolerance_(tolerance),
      guess_policy_(guess_policy) {
  if (h_.output_dim != partition_.m()) {
    throw std::invalid_argument("Newton completion needs one dependent variable "
                                "per equality component");
  }
  if (max_iters_ <= 0 || !(tolerance_ > 0.0)) {
    throw std::invalid_argument("Newton completion needs max_iters > 0, tolerance > 0");
  }
  if (initial_dependent) {
    if (initial_dependent->size() != partition_.m()) {
      throw std::invalid_argument("initial dependent guess has wrong dimension");
    }
    seed_guess_ = std::move(*initial_dependent);
  } else {
    seed_guess_ = Eigen::VectorXd::Zero(partition_.m());
  }
}

Eigen::VectorXd NewtonCompletion::solve_dependent(const Eigen::VectorXd& theta) const {
  const int m = partition_.m();
  Eigen::VectorXd z = seed_guess_;
  if (guess_policy_ == InitialGuess::WarmStart && warm_) {
    z = *warm_;
  }
  Eigen::VectorXd x = partition_.assemble(theta, z);
  Eigen::VectorXd r = h_.value(x);
  for (int it = 0; it < max_iters_; ++it) {
    if (r.lpNorm<Eigen::Infinity>() <= tolerance_) {
      warm_ = z;
      return z;
    }
    // dh/dz by central differences on the dependent coordinates.
    Eigen::MatrixXd Jz(m, m);
    for (int j = 0; j < m; ++j) {
      const int col = partition_.dependent[j];
      const double h = problem::fd_step(x(col));
      const double saved = x(col);
      x(col) = saved + h;
      const Eigen::VectorXd rp = h_.value(x);
      x(col) = saved - h;
      const Eigen::VectorXd rm = h_.value(x);
      x(col) = saved;
      Jz.col(j) = (rp - rm) / (2.0 * h);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(Jz);
    const double rcond = lu.rcond();
    if (!std::isfinite(rcond) || rcond < 1e-14) {
      throw CompletionError("Newton completion: dependent Jacobian block is "
                            "singular at iteration " + std::to_string(it));
    }
    const Eigen::VectorXd step = lu.solve(r);
    z -= step;
    if (!z.allFinite()) {
      throw CompletionError("Newton completion diverged to non-finite values");
    }
    for (int j = 0; j < m; ++j) x(partition_.dependent[j]) = z(j);
    r = h_.value(x);
  }
  if (r.lpNorm<Eigen::Infinity>() <= tolerance_) {
    warm_ = z;
    return z;
  }
  throw CompletionError("Newton completion did not converge in " +
                        std::to_string(max_iters_) + " iterations (residual " +
                        std::to_string(r.lpNorm<Eigen::Infinity>()) + ")");
}

Eigen::VectorXd NewtonCompletion::complete(const Eigen::VectorXd& theta) const {
  if (theta.size() != partition_.nf()) {
    throw std::invalid_argument("complete: theta dimension mismatch");
  }
  return partition_.assemble(theta, solve_dependent(theta));
}

Eigen::MatrixXd NewtonCompletion::jacobian(const Eigen::VectorXd& theta) const {
  const int m = partition_.m();
  const int nf = partition_.nf();
  Eigen::VectorXd x = complete(theta);
  Eigen::MatrixXd Jz(m, m);
  Eigen::MatrixXd Jtheta(m, nf);
  auto column = [&](int col, Eigen::Ref<Eigen::VectorXd> out) {
    const double h = problem::fd_step(x(col));
    const double saved = x(col);
    x(col) = saved + h;
    const Eigen::VectorXd rp = h_.value(x);
    x(col) = saved - h;
    const Eigen::VectorXd rm = h_.value(x);
    x(col) = saved;
    out = (rp - rm) / (2.0 * h);
  };
  for (int j = 0; j < m; ++j) column(partition_.dependent[j], Jz.col(j));
  for (int j = 0; j < nf; ++j) column(partition_.independent[j], Jtheta.col(j));
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Jz);
  const double rcond = lu.rcond();
  if (!std::isfinite(rcond) || rcond < 1e-14) {
    throw CompletionError("completion Jacobian: dependent block is singular");
  }
  return -lu.solve(Jtheta);
}

Eigen::VectorXd complete(const CompletionMap& map, const Eigen::VectorXd& theta) {
  return std::visit([&](const auto& c) { return c.complete(theta); }, map);
}

Eigen::MatrixXd completion_jacobian(const CompletionMap& map,
                                    const Eigen::VectorXd& theta) {
  if (const auto* affine = std::get_if<AffineCompletion>(&map)) {
    return affine->P();
  }
  return std::get<NewtonCompletion>(map).jacobian(theta);
}

const problem::VariablePartition& partition_of(const CompletionMap& map) {
  return std::visit([](const auto& c) -> const problem::VariablePartition& {
    return c.partition();
  }, map);
}

double completion_tolerance(const CompletionMap& map) {
  if (std::holds_alternative<AffineCompletion>(map)) {
    return 1e-9;
  }
  return std::get<NewtonCompletion>(map).tolerance();
}

}  // namespace htopt::completion
