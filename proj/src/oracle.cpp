#include "htopt/oracle.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace htopt::oracle {

OracleResult kkt_solve_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                          const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  const int n = static_cast<int>(Q.rows());
  const int m = static_cast<int>(A.rows());
  if (Q.cols() != n || c.size() != n || A.cols() != n || b.size() != m) {
    throw std::invalid_argument("kkt_solve_qp: dimension mismatch");
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = Q;
  K.topRightCorner(n, m) = A.transpose();
  K.bottomLeftCorner(m, n) = A;
  Eigen::VectorXd rhs(n + m);
  rhs.head(n) = -c;
  rhs.tail(m) = b;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(K);
  if (!lu.isInvertible()) {
    throw OracleError("kkt_solve_qp: singular saddle-point matrix (rank " +
                      std::to_string(lu.rank()) + " of " +
                      std::to_string(n + m) + ")");
  }
  const Eigen::VectorXd sol = lu.solve(rhs);
  const Eigen::VectorXd x = sol.head(n);
  const Eigen::VectorXd lambda = sol.tail(m);

  OracleResult result;
  result.minimizer = x;
  result.optimal_value = 0.5 * x.dot(Q * x) + c.dot(x);
  result.method = "kkt";
  result.certificate = Eigen::Vector2d(
      (Q * x + c + A.transpose() * lambda).lpNorm<Eigen::Infinity>(),
      m > 0 ? (A * x - b).lpNorm<Eigen::Infinity>() : 0.0);
  if (result.certificate.maxCoeff() > 1e-10) {
    throw OracleError("kkt_solve_qp: certificate residual " +
                      std::to_string(result.certificate.maxCoeff()) +
                      " exceeds 1e-10");
  }
  return result;
}

namespace {

// Golden-section scan of a unimodal slice; returns (argmin, bracket width).
std::pair<double, double> golden_section(
    const std::function<double(double)>& f, double lo, double hi) {
  static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-13 * (1.0 + std::abs(a) + std::abs(b));
       ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = f(x2);
    }
  }
  const double mid = 0.5 * (a + b);
  return {mid, b - a};
}

}  // namespace

OracleResult grid_minimize(
    const std::function<double(const Eigen::VectorXd&)>& objective,
    const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
    int points_per_axis) {
  const int d = static_cast<int>(lower.size());
  if (d < 1 || d > 3) {
    throw std::invalid_argument("grid_minimize handles dimensions 1..3");
  }
  if (upper.size() != d || (lower.array() > upper.array()).any()) {
    throw std::invalid_argument("grid_minimize: invalid box");
  }
  if (points_per_axis < 2) {
    throw std::invalid_argument("grid_minimize needs at least 2 points per axis");
  }

  Eigen::VectorXd spacing = (upper - lower) / double(points_per_axis - 1);
  Eigen::VectorXd best_point = lower;
  double best_value = std::numeric_limits<double>::infinity();
  bool found = false;

  std::vector<int> idx(d, 0);
  Eigen::VectorXd x(d);
  for (;;) {
    for (int j = 0; j < d; ++j) x(j) = lower(j) + idx[j] * spacing(j);
    const double v = objective(x);
    if (std::isfinite(v) && v < best_value) {
      best_value = v;
      best_point = x;
      found = true;
    }
    int j = 0;
    while (j < d && ++idx[j] == points_per_axis) {
      idx[j] = 0;
      ++j;
    }
    if (j == d) break;
  }
  if (!found) {
    throw OracleError("grid_minimize: objective non-finite on the whole lattice");
  }

  // One refinement pass: golden-section per axis around the lattice winner.
  Eigen::VectorXd widths(d);
  for (int j = 0; j < d; ++j) {
    const double lo = std::max(lower(j), best_point(j) - spacing(j));
    const double hi = std::min(upper(j), best_point(j) + spacing(j));
    if (hi <= lo) {
      widths(j) = 0.0;
      continue;
    }
    Eigen::VectorXd probe = best_point;
    auto slice = [&](double t) {
      probe(j) = t;
      const double v = objective(probe);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };
    const auto [arg, width] = golden_section(slice, lo, hi);
    probe(j) = arg;
    const double v = objective(probe);
    if (std::isfinite(v) && v <= best_value) {
      best_value = v;
      best_point(j) = arg;
    }
    widths(j) = width;
  }

  OracleResult result;
  result.minimizer = best_point;
  result.optimal_value = best_value;
  result.method = "grid";
  result.certificate = widths;
  return result;
}

namespace {

// The oracle's own gradient path: plain central differences of loss values.
Eigen::VectorXd oracle_fd_gradient(
    const std::function<double(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd p = x;
  for (int i = 0; i < x.size(); ++i) {
    const double h = h0 * (1.0 + std::abs(x(i)));
    p(i) = x(i) + h;
    const double fp = f(p);
    p(i) = x(i) - h;
    const double fm = f(p);
    p(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace

OracleResult reference_minimize(const loss::ReducedLoss& rl,
                                const Eigen::VectorXd& theta0,
                                const tuner::StopRule& stop) {
  auto f = [&rl](const Eigen::VectorXd& t) { return rl.reduced_loss(t); };

  // Local smoothness estimate for the stepsize, from sampled gradient pairs.
  std::mt19937_64 rng(42);
  std::normal_distribution<double> dist(0.0, 1.0);
  double lipschitz = 0.0;
  for (int s = 0; s < 30; ++s) {
    Eigen::VectorXd a(theta0.size()), b(theta0.size());
    for (int i = 0; i < theta0.size(); ++i) {
      a(i) = theta0(i) + dist(rng);
      b(i) = theta0(i) + dist(rng);
    }
    const double d = (a - b).norm();
    if (d < 1e-12) continue;
    const double r = (oracle_fd_gradient(f, a) - oracle_fd_gradient(f, b)).norm() / d;
    if (std::isfinite(r)) lipschitz = std::max(lipschitz, r);
  }
  if (!(lipschitz > 1e-12)) lipschitz = 1.0;
  double step = 1.0 / lipschitz;

  Eigen::VectorXd x = theta0;
  Eigen::VectorXd y = theta0;
  double t = 1.0;
  double fx = f(x);
  Eigen::VectorXd best = x;
  double best_value = fx;

  long k = 0;
  Eigen::VectorXd grad = oracle_fd_gradient(f, x);
  while (grad.norm() > stop.grad_tol && k < stop.max_iters) {
    const Eigen::VectorXd grad_y = oracle_fd_gradient(f, y);
    Eigen::VectorXd x_next = y - step * grad_y;
    double fx_next = f(x_next);
    if (!std::isfinite(fx_next) || fx_next > fx + 1e3 * (1.0 + std::abs(fx))) {
      // Wild overshoot: the smoothness estimate was too optimistic.
      step *= 0.5;
      t = 1.0;
      y = x;
      ++k;
      continue;
    }
    if (fx_next > fx) {
      // Function restart keeps the accelerated scheme monotone enough.
      t = 1.0;
      y = x;
      x_next = x - step * oracle_fd_gradient(f, x);
      fx_next = f(x_next);
    }
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    y = x_next + ((t - 1.0) / t_next) * (x_next - x);
    t = t_next;
    x = x_next;
    fx = fx_next;
    if (fx < best_value) {
      best_value = fx;
      best = x;
    }
    grad = oracle_fd_gradient(f, x);
    ++k;
  }

  const Eigen::VectorXd best_grad = oracle_fd_gradient(f, best);
  OracleResult result;
  result.minimizer = best;
  result.optimal_value = best_value;
  result.method = "reference-descent";
  result.certificate = Eigen::VectorXd::Constant(1, best_grad.norm());
  return result;
}

}  // namespace htopt::oracle
