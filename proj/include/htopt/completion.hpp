#ifndef HTOPT_COMPLETION_HPP
#define HTOPT_COMPLETION_HPP

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <variant>

#include "htopt/problem.hpp"

namespace htopt::completion {

class CompletionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dependent block as an affine map of the independent one: z = P theta + q.
/// Immutable and safe to share.
class AffineCompletion {
 public:
  AffineCompletion(Eigen::MatrixXd P, Eigen::VectorXd q,
                   problem::VariablePartition partition);

  Eigen::VectorXd complete(const Eigen::VectorXd& theta) const;
  const Eigen::MatrixXd& P() const { return P_; }
  const Eigen::VectorXd& q() const { return q_; }
  const problem::VariablePartition& partition() const { return partition_; }

 private:
  Eigen::MatrixXd P_;  // m x nf
  Eigen::VectorXd q_;  // m
  problem::VariablePartition partition_;
};

/// Solves the dependent column block: P = -Az^{-1} Atheta, q = Az^{-1} b.
/// Fails when the dependent block is singular (condition estimate > 1e12),
/// naming the offending indices.
AffineCompletion build_affine_completion(const Eigen::MatrixXd& A,
                                         const Eigen::VectorXd& b,
                                         const problem::VariablePartition& partition);

enum class InitialGuess { WarmStart, Zero };

/// Newton solve of h(assemble(theta, z)) = 0 for z. The warm-start cache
/// makes each instance single-owner per solver run; copy for a fresh run.
class NewtonCompletion {
 public:
  NewtonCompletion(problem::VectorField h, problem::VariablePartition partition,
                   int max_iters = 50, double tolerance = 1e-12,
                   InitialGuess guess_policy = InitialGuess::WarmStart,
                   std::optional<Eigen::VectorXd> initial_dependent = std::nullopt);

  Eigen::VectorXd complete(const Eigen::VectorXd& theta) const;

  /// -(dh/dz)^{-1} (dh/dtheta) at the completed point, partials by central
  /// finite differences.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& theta) const;

  const problem::VariablePartition& partition() const { return partition_; }
  double tolerance() const { return tolerance_; }

 private:
  Eigen::VectorXd solve_dependent(const Eigen::VectorXd& theta) const;

  problem::VectorField h_;
  problem::VariablePartition partition_;
  int max_iters_;
  double tolerance_;
  InitialGuess guess_policy_;
  Eigen::VectorXd seed_guess_;
  mutable std::optional<Eigen::VectorXd> warm_;
};

using CompletionMap = std::variant<AffineCompletion, NewtonCompletion>;

Eigen::VectorXd complete(const CompletionMap& map, const Eigen::VectorXd& theta);
Eigen::MatrixXd completion_jacobian(const CompletionMap& map,
                                    const Eigen::VectorXd& theta);
const problem::VariablePartition& partition_of(const CompletionMap& map);

/// Residual tolerance the map guarantees on its completions.
double completion_tolerance(const CompletionMap& map);

}  // namespace htopt::completion

#endif
