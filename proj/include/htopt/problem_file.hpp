#ifndef HTOPT_PROBLEM_FILE_HPP
#define HTOPT_PROBLEM_FILE_HPP

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "htopt/loss.hpp"
#include "htopt/problem.hpp"
#include "htopt/tuner.hpp"

namespace htopt::bench {

class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadraticObjective {
  Eigen::MatrixXd Q;  // objective 0.5 x'Qx + c'x
  Eigen::VectorXd c;
};

struct RegionFile {
  std::string kind;  // "box" | "ball" | "halfspaces"
  Eigen::VectorXd lower, upper;    // box
  Eigen::VectorXd center;          // ball
  double radius = 0.0;             // ball
  Eigen::MatrixXd normals;         // halfspaces
  Eigen::VectorXd offsets;         // halfspaces
};

/// Parsed problem document. Variable indices in the file are 1-based to
/// match the expression grammar (x1..xn); matrices are arrays of rows.
struct ProblemFile {
  int n = 0;
  std::optional<QuadraticObjective> quadratic;
  std::optional<std::string> objective_expression;
  std::optional<Eigen::MatrixXd> equality_A;
  std::optional<Eigen::VectorXd> equality_b;
  std::vector<std::string> equality_expressions;
  std::vector<std::string> inequality_expressions;
  std::optional<std::vector<int>> dependent;  // 1-based
  std::optional<RegionFile> region;
  double lambda_h = 1.0;
  double lambda_g = 1.0;
  std::optional<double> beta;
  std::optional<double> gamma;
  double alpha = 0.0;
  long max_iters = 100000;
  double grad_tol = 1e-10;
  std::optional<double> loss_tol;
  double loss_ref = 0.0;
  std::optional<double> smoothness;
  std::optional<double> strong_convexity;
  std::uint64_t seed = 0;
  std::optional<Eigen::VectorXd> initial;  // theta0, dimension n_f
};

ProblemFile parse_problem_text(const std::string& json_text);

/// Canonical JSON emission; loading an emitted document reproduces an
/// identical ProblemFile and ProblemSpec.
std::string emit_problem(const ProblemFile& file);

struct LoadedProblem {
  ProblemFile file;
  std::shared_ptr<const problem::ProblemSpec> spec;
};

/// Parses, builds and validates; validation diagnostics are echoed
/// verbatim inside the LoadError message.
LoadedProblem load_problem(const std::string& path);
LoadedProblem load_problem_text(const std::string& json_text);

/// Fresh completion map for one solver run.
completion::CompletionMap make_completion(const LoadedProblem& p);

loss::ReducedLoss make_reduced_loss(const LoadedProblem& p,
                                    std::optional<double> lambda_h,
                                    std::optional<double> lambda_g,
                                    std::uint64_t seed);

std::optional<problem::ConvexRegionSpec> region_of(const ProblemFile& file);

Eigen::VectorXd initial_theta(const LoadedProblem& p);

tuner::StopRule stop_rule_of(const ProblemFile& file);

}  // namespace htopt::bench

#endif
