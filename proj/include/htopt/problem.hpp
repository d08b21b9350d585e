#ifndef HTOPT_PROBLEM_HPP
#define HTOPT_PROBLEM_HPP

#include <Eigen/Core>

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace htopt::problem {

/// Split of x in R^n into an independent block theta (size n - m) and a
/// dependent block z (size m, one entry per equality constraint).
/// Indices are 0-based and stored in ascending order.
struct VariablePartition {
  int n = 0;
  std::vector<int> dependent;
  std::vector<int> independent;

  static VariablePartition from_dependent(int n, std::vector<int> dependent);

  int m() const { return static_cast<int>(dependent.size()); }
  int nf() const { return n - m(); }

  Eigen::VectorXd assemble(const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& z) const;
  Eigen::VectorXd independent_of(const Eigen::VectorXd& x) const;
  Eigen::VectorXd dependent_of(const Eigen::VectorXd& x) const;
};

/// Scalar field with an optional analytic gradient. When `gradient` is
/// empty, callers fall back to central finite differences.
struct ScalarField {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

/// Vector field with an optional analytic Jacobian (rows = outputs).
struct VectorField {
  int output_dim = 0;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> value;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jacobian;
};

/// f(x) = 0.5 x'Qx + c'x with exact gradient Qx + c.
ScalarField make_quadratic(Eigen::MatrixXd Q, Eigen::VectorXd c);

/// Central-difference step: cbrt(eps) * (1 + |coordinate|).
double fd_step(double coordinate);

Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x);

Eigen::MatrixXd fd_jacobian(const VectorField& f, const Eigen::VectorXd& x);

/// Evaluates a scalar field's gradient, analytic when available.
Eigen::VectorXd gradient_of(const ScalarField& f, const Eigen::VectorXd& x);

/// Evaluates a vector field's Jacobian, analytic when available.
Eigen::MatrixXd jacobian_of(const VectorField& f, const Eigen::VectorXd& x);

struct AffineEquality {
  Eigen::MatrixXd A;  // m x n
  Eigen::VectorXd b;  // m
};

/// Constrained problem: min f(x) s.t. h(x) = 0, g(x) <= 0.
/// Exactly one of `affine_equality` / `nonlinear_equality` is set; m = 0
/// (a 0 x n affine block) models problems without equality constraints.
struct ProblemSpec {
  int n = 0;
  ScalarField objective;
  std::optional<AffineEquality> affine_equality;
  std::optional<VectorField> nonlinear_equality;
  std::optional<VectorField> inequality;
  VariablePartition partition;
  std::optional<double> smoothness;        // gradient Lipschitz upper bound
  std::optional<double> strong_convexity;  // mu

  int equality_count() const;
  bool has_inequality() const { return inequality.has_value(); }
};

Eigen::VectorXd residual_equality(const ProblemSpec& spec,
                                  const Eigen::VectorXd& x);

/// Requires an inequality block; positive entries are violations.
Eigen::VectorXd residual_inequality(const ProblemSpec& spec,
                                    const Eigen::VectorXd& x);

struct Diagnostic {
  std::string code;
  std::string message;
};

/// Structural checks: dimension consistency, m <= n, partition sanity,
/// nonsingular dependent column block (affine case), plus a light
/// finite-difference differentiability probe at seeded sample points.
/// Pure: identical inputs yield identical diagnostics.
std::vector<Diagnostic> validate(const ProblemSpec& spec);

/// Dependent indices chosen by greedy column pivoting on A so the
/// dependent block is as well conditioned as possible.
VariablePartition default_partition(const Eigen::MatrixXd& A);

struct BoxRegion {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct BallRegion {
  Eigen::VectorXd center;
  double radius = 1.0;
};

/// Intersection of halfspaces normals.row(i) . x <= offsets(i).
struct HalfspaceRegion {
  Eigen::MatrixXd normals;
  Eigen::VectorXd offsets;
};

class ConvexRegionSpec {
 public:
  using Shape = std::variant<BoxRegion, BallRegion, HalfspaceRegion>;

  static ConvexRegionSpec box(Eigen::VectorXd lower, Eigen::VectorXd upper);
  static ConvexRegionSpec ball(Eigen::VectorXd center, double radius);
  static ConvexRegionSpec halfspaces(Eigen::MatrixXd normals,
                                     Eigen::VectorXd offsets);

  int dimension() const { return dimension_; }
  const Shape& shape() const { return shape_; }

 private:
  ConvexRegionSpec(Shape shape, int dimension);
  Shape shape_;
  int dimension_ = 0;
};

}  // namespace htopt::problem

#endif
