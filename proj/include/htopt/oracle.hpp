#ifndef HTOPT_ORACLE_HPP
#define HTOPT_ORACLE_HPP

#include <Eigen/Core>

#include <functional>
#include <stdexcept>
#include <string>

#include "htopt/loss.hpp"
#include "htopt/tuner.hpp"

namespace htopt::oracle {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleResult {
  Eigen::VectorXd minimizer;
  double optimal_value = 0.0;
  std::string method;           // "kkt" | "grid" | "reference-descent"
  Eigen::VectorXd certificate;  // residual norms, method-specific
};

/// Solves min 0.5 x'Qx + c'x s.t. Ax = b through the stationarity +
/// feasibility linear system. Certificate entries are the stationarity and
/// feasibility residuals, both required to be <= 1e-10.
OracleResult kkt_solve_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                          const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// Exhaustive lattice scan over a box (dimension <= 3) followed by one
/// golden-section refinement pass per axis. Certificate entries are the
/// final bracket widths.
OracleResult grid_minimize(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    int points_per_axis);

/// Long-horizon accelerated reference run on the reduced loss. Gradients
/// come from the oracle's own central differences of loss values, never
/// from the solver gradient path. Returns the best iterate seen; the
/// certificate reports its finite-difference gradient norm.
OracleResult reference_minimize(const loss::ReducedLoss& rl,
                                const Eigen::VectorXd& theta0,
                                const tuner::StopRule& stop);

}  // namespace htopt::oracle

#endif
