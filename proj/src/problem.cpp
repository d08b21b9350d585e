#include "htopt/problem.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <stdexcept>
#include <utility>

namespace htopt::problem {

VariablePartition VariablePartition::from_dependent(int n,
                                                    std::vector<int> dependent) {
  if (n <= 0) {
    throw std::invalid_argument("partition requires n > 0");
  }
  std::sort(dependent.begin(), dependent.end());
  if (std::adjacent_find(dependent.begin(), dependent.end()) !=
      dependent.end()) {
    throw std::invalid_argument("duplicate dependent index");
  }
  for (int i : dependent) {
    if (i < 0 || i >= n) {
      throw std::invalid_argument("dependent index " + std::to_string(i) +
                                  " outside [0, " + std::to_string(n) + ")");
    }
  }
  VariablePartition p;
  p.n = n;
  p.dependent = std::move(dependent);
  p.independent.reserve(n - p.dependent.size());
  std::size_t d = 0;
  for (int i = 0; i < n; ++i) {
    if (d < p.dependent.size() && p.dependent[d] == i) {
      ++d;
    } else {
      p.independent.push_back(i);
    }
  }
  return p;
}

Eigen::VectorXd VariablePartition::assemble(const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& z) const {
  if (theta.size() != nf() || z.size() != m()) {
    throw std::invalid_argument("assemble: block dimension mismatch");
  }
  Eigen::VectorXd x(n);
  for (int i = 0; i < nf(); ++i) x(independent[i]) = theta(i);
  for (int i = 0; i < m(); ++i) x(dependent[i]) = z(i);
  return x;
}

Eigen::VectorXd VariablePartition::independent_of(
    const Eigen::VectorXd& x) const {
  Eigen::VectorXd theta(nf());
  for (int i = 0; i < nf(); ++i) theta(i) = x(independent[i]);
  return theta;
}

Eigen::VectorXd VariablePartition::dependent_of(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z(m());
  for (int i = 0; i < m(); ++i) z(i) = x(dependent[i]);
  return z;
}

ScalarField make_quadratic(Eigen::MatrixXd Q, Eigen::VectorXd c) {
  if (Q.rows() != Q.cols() || Q.rows() != c.size()) {
    throw std::invalid_argument("quadratic requires square Q matching c");
  }
  auto Qp = std::make_shared<Eigen::MatrixXd>(std::move(Q));
  auto cp = std::make_shared<Eigen::VectorXd>(std::move(c));
  ScalarField f;
  f.value = [Qp, cp](const Eigen::VectorXd& x) {
    return 0.5 * x.dot(*Qp * x) + cp->dot(x);
  };
  f.gradient = [Qp, cp](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    return *Qp * x + *cp;
  };
  return f;
}

double fd_step(double coordinate) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  return h0 * (1.0 + std::abs(coordinate));
}

Eigen::VectorXd fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = fd_step(x(i));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Eigen::MatrixXd fd_jacobian(const VectorField& f, const Eigen::VectorXd& x) {
  Eigen::MatrixXd J(f.output_dim, x.size());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = fd_step(x(i));
    xp(i) = x(i) + h;
    const Eigen::VectorXd vp = f.value(xp);
    xp(i) = x(i) - h;
    const Eigen::VectorXd vm = f.value(xp);
    xp(i) = x(i);
    J.col(i) = (vp - vm) / (2.0 * h);
  }
  return J;
}

Eigen::VectorXd gradient_of(const ScalarField& f, const Eigen::VectorXd& x) {
  if (f.gradient) return f.gradient(x);
  return fd_gradient(f.value, x);
}

Eigen::MatrixXd jacobian_of(const VectorField& f, const Eigen::VectorXd& x) {
  if (f.jacobian) return f.jacobian(x);
  return fd_jacobian(f, x);
}

int ProblemSpec::equality_count() const {
  if (affine_equality) return static_cast<int>(affine_equality->A.rows());
  if (nonlinear_equality) return nonlinear_equality->output_dim;
  return 0;
}

Eigen::VectorXd residual_equality(const ProblemSpec& spec,
                                  const Eigen::VectorXd& x) {
  if (x.size() != spec.n) {
    throw std::invalid_argument("residual_equality: x has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(spec.n));
  }
  if (spec.affine_equality) {
    return spec.affine_equality->A * x - spec.affine_equality->b;
  }
  if (spec.nonlinear_equality) {
    return spec.nonlinear_equality->value(x);
  }
  return Eigen::VectorXd(0);
}

Eigen::VectorXd residual_inequality(const ProblemSpec& spec,
                                    const Eigen::VectorXd& x) {
  if (!spec.inequality) {
    throw std::logic_error("residual_inequality: problem has no inequality block");
  }
  if (x.size() != spec.n) {
    throw std::invalid_argument("residual_inequality: dimension mismatch");
  }
  return spec.inequality->value(x);
}

namespace {

// Dependent-block singularity gate shared with the completion builder.
bool dependent_block_ok(const Eigen::MatrixXd& A,
                        const VariablePartition& partition) {
  const int m = partition.m();
  if (m == 0) return true;
  Eigen::MatrixXd Az(m, m);
  for (int j = 0; j < m; ++j) Az.col(j) = A.col(partition.dependent[j]);
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(Az);
  const double rcond = lu.rcond();
  return std::isfinite(rcond) && rcond > 1e-12;
}

// Forward and central differences must roughly agree for a C^1 field.
bool fd_consistent(const std::function<double(const Eigen::VectorXd&)>& f,
                   const Eigen::VectorXd& x) {
  const double v = f(x);
  if (!std::isfinite(v)) return true;  // evaluable but non-finite here, skip
  Eigen::VectorXd gc = fd_gradient(f, x);
  Eigen::VectorXd gf(x.size());
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = fd_step(x(i));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i);
    if (!std::isfinite(fp)) return true;
    gf(i) = (fp - v) / h;
  }
  if (!gc.allFinite()) return true;
  const double scale = 1.0 + gc.norm() + std::abs(v);
  return (gf - gc).norm() <= 1e-2 * scale;
}

void probe_differentiability(const ProblemSpec& spec,
                             std::vector<Diagnostic>& out) {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (int s = 0; s < 3; ++s) {
    Eigen::VectorXd x(spec.n);
    for (int i = 0; i < spec.n; ++i) x(i) = dist(rng);
    if (!fd_consistent(spec.objective.value, x)) {
      out.push_back({"objective-not-differentiable",
                     "objective fails the finite-difference consistency probe "
                     "at a sampled point"});
      return;
    }
    for (const auto* field : {spec.nonlinear_equality ? &*spec.nonlinear_equality
                                                      : nullptr,
                              spec.inequality ? &*spec.inequality : nullptr}) {
      if (!field) continue;
      for (int r = 0; r < field->output_dim; ++r) {
        auto component = [field, r](const Eigen::VectorXd& p) {
          return field->value(p)(r);
        };
        if (!fd_consistent(component, x)) {
          out.push_back({"constraint-not-differentiable",
                         "a constraint component fails the finite-difference "
                         "consistency probe at a sampled point"});
          return;
        }
      }
    }
  }
}

}  // namespace

std::vector<Diagnostic> validate(const ProblemSpec& spec) {
  std::vector<Diagnostic> out;
  if (spec.n <= 0) {
    out.push_back({"bad-dimension", "n must be positive"});
    return out;
  }
  if (spec.affine_equality && spec.nonlinear_equality) {
    out.push_back({"equality-ambiguous",
                   "both affine and nonlinear equality blocks present"});
  }
  const int m = spec.equality_count();
  if (m > spec.n) {
    out.push_back({"overdetermined",
                   "m = " + std::to_string(m) + " equality constraints exceed n = " +
                       std::to_string(spec.n) + " variables"});
  }
  if (spec.affine_equality) {
    const auto& eq = *spec.affine_equality;
    if (eq.A.cols() != spec.n) {
      out.push_back({"dimension-mismatch",
                     "equality matrix has " + std::to_string(eq.A.cols()) +
                         " columns, expected " + std::to_string(spec.n)});
    }
    if (eq.b.size() != eq.A.rows()) {
      out.push_back({"dimension-mismatch",
                     "equality right-hand side has " + std::to_string(eq.b.size()) +
                         " entries, expected " + std::to_string(eq.A.rows())});
    }
  }
  const auto& p = spec.partition;
  bool partition_ok = (p.n == spec.n);
  if (!partition_ok) {
    out.push_back({"partition-mismatch", "partition n differs from problem n"});
  }
  if (static_cast<int>(p.dependent.size()) != m && m <= spec.n) {
    partition_ok = false;
    out.push_back({"partition-mismatch",
                   "dependent block has " + std::to_string(p.dependent.size()) +
                       " entries, expected " + std::to_string(m)});
  }
  if (static_cast<int>(p.dependent.size() + p.independent.size()) != p.n) {
    partition_ok = false;
    out.push_back({"partition-mismatch",
                   "dependent and independent blocks do not cover all variables"});
  }
  if (partition_ok && spec.affine_equality && m > 0 && m <= spec.n &&
      spec.affine_equality->A.cols() == spec.n) {
    if (!dependent_block_ok(spec.affine_equality->A, p)) {
      std::string idx;
      for (int i : p.dependent) {
        if (!idx.empty()) idx += ", ";
        idx += "x" + std::to_string(i + 1);
      }
      out.push_back({"singular-dependent-block",
                     "dependent column block {" + idx + "} of the equality "
                     "matrix is singular or near-singular"});
    }
  }
  if (spec.inequality && spec.inequality->output_dim <= 0) {
    out.push_back({"dimension-mismatch", "inequality block has no components"});
  }
  if (spec.smoothness && *spec.smoothness <= 0.0) {
    out.push_back({"bad-metadata", "smoothness bound must be positive"});
  }
  if (spec.strong_convexity && *spec.strong_convexity <= 0.0) {
    out.push_back({"bad-metadata", "strong convexity modulus must be positive"});
  }
  if (out.empty() && spec.objective.value) {
    probe_differentiability(spec, out);
  }
  return out;
}

VariablePartition default_partition(const Eigen::MatrixXd& A) {
  const int m = static_cast<int>(A.rows());
  const int n = static_cast<int>(A.cols());
  if (m > n) {
    throw std::invalid_argument("default_partition: more constraints than variables");
  }
  // Greedy column pivoting (modified Gram-Schmidt): at each step take the
  // unselected column with the largest residual norm. Ties break toward the
  // smaller index, so the choice is deterministic.
  Eigen::MatrixXd residual = A;
  std::vector<bool> taken(n, false);
  std::vector<int> dependent;
  dependent.reserve(m);
  for (int k = 0; k < m; ++k) {
    int best = -1;
    double best_norm = 0.0;
    for (int j = 0; j < n; ++j) {
      if (taken[j]) continue;
      const double nrm = residual.col(j).norm();
      if (nrm > best_norm) {
        best_norm = nrm;
        best = j;
      }
    }
    if (best < 0 || best_norm == 0.0) {
      // Rank-deficient: fall back to the first free columns; validate()
      // reports the singular dependent block.
      for (int j = 0; j < n && static_cast<int>(dependent.size()) < m; ++j) {
        if (!taken[j]) {
          taken[j] = true;
          dependent.push_back(j);
        }
      }
      break;
    }
    taken[best] = true;
    dependent.push_back(best);
    const Eigen::VectorXd q = residual.col(best) / best_norm;
    for (int j = 0; j < n; ++j) {
      if (!taken[j]) residual.col(j) -= q * q.dot(residual.col(j));
    }
  }
  return VariablePartition::from_dependent(n, std::move(dependent));
}

ConvexRegionSpec::ConvexRegionSpec(Shape shape, int dimension)
    : shape_(std::move(shape)), dimension_(dimension) {}

ConvexRegionSpec ConvexRegionSpec::box(Eigen::VectorXd lower,
                                       Eigen::VectorXd upper) {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw std::invalid_argument("box bounds must share a positive dimension");
  }
  if ((lower.array() > upper.array()).any()) {
    throw std::invalid_argument("box requires lower <= upper elementwise");
  }
  const int dim = static_cast<int>(lower.size());
  return ConvexRegionSpec(BoxRegion{std::move(lower), std::move(upper)}, dim);
}

ConvexRegionSpec ConvexRegionSpec::ball(Eigen::VectorXd center, double radius) {
  if (center.size() == 0) {
    throw std::invalid_argument("ball requires a positive dimension");
  }
  if (!(radius > 0.0)) {
    throw std::invalid_argument("ball requires radius > 0");
  }
  const int dim = static_cast<int>(center.size());
  return ConvexRegionSpec(BallRegion{std::move(center), radius}, dim);
}

ConvexRegionSpec ConvexRegionSpec::halfspaces(Eigen::MatrixXd normals,
                                              Eigen::VectorXd offsets) {
  if (normals.rows() == 0 || normals.rows() != offsets.size()) {
    throw std::invalid_argument("halfspace rows must match offsets");
  }
  const int dim = static_cast<int>(normals.cols());
  if (dim == 0) {
    throw std::invalid_argument("halfspaces require a positive dimension");
  }
  return ConvexRegionSpec(HalfspaceRegion{std::move(normals), std::move(offsets)},
                          dim);
}

}  // namespace htopt::problem
