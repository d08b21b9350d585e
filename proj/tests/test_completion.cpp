#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "htopt/completion.hpp"

using namespace htopt::completion;
using htopt::problem::AffineEquality;
using htopt::problem::VariablePartition;
using htopt::problem::VectorField;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<int>(vals.size()));
  int i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

Eigen::MatrixXd row_matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows.begin()->size());
  Eigen::MatrixXd m(r, c);
  int i = 0;
  for (const auto& row : rows) {
    int j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

VectorField parabola_constraint() {  // x1^2 - x2 = 0
  VectorField h;
  h.output_dim = 1;
  h.value = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, x(0) * x(0) - x(1));
  };
  return h;
}

VectorField cubic_constraint() {  // x1 + x2^3 - 9 = 0
  VectorField h;
  h.output_dim = 1;
  h.value = [](const Eigen::VectorXd& x) {
    return Eigen::VectorXd::Constant(1, x(0) + x(1) * x(1) * x(1) - 9.0);
  };
  return h;
}

// Bisection oracle for the cubic: solves z^3 = 9 - theta.
double cubic_root_oracle(double theta) {
  double lo = -10.0, hi = 10.0;
  const double target = 9.0 - theta;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid * mid * mid < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("affine completion construction") {
  SUBCASE("single constraint") {
    const auto c = build_affine_completion(
        row_matrix({{1, 1}}), vec({2}), VariablePartition::from_dependent(2, {1}));
    CHECK(c.P()(0, 0) == doctest::Approx(-1).epsilon(1e-14));
    CHECK(c.q()(0) == doctest::Approx(2).epsilon(1e-14));
  }
  SUBCASE("decoupled block") {
    const auto c = build_affine_completion(
        row_matrix({{1, 0, 0}, {0, 1, 0}}), vec({3, 4}),
        VariablePartition::from_dependent(3, {0, 1}));
    CHECK(c.P().rows() == 2);
    CHECK(c.P().cols() == 1);
    CHECK(c.P().norm() == doctest::Approx(0));
    CHECK(c.q() == vec({3, 4}));
  }
  SUBCASE("singular dependent column") {
    CHECK_THROWS_AS(
        build_affine_completion(row_matrix({{1, 0}}), vec({1}),
                                VariablePartition::from_dependent(2, {1})),
        CompletionError);
    try {
      build_affine_completion(row_matrix({{1, 0}}), vec({1}),
                              VariablePartition::from_dependent(2, {1}));
    } catch (const CompletionError& e) {
      CHECK(std::string(e.what()).find("x2") != std::string::npos);
    }
  }
}

TEST_CASE("complete places blocks per the partition") {
  SUBCASE("affine") {
    const auto c = build_affine_completion(
        row_matrix({{1, 1}}), vec({2}), VariablePartition::from_dependent(2, {1}));
    CHECK(c.complete(vec({0.5})) == vec({0.5, 1.5}));
  }
  SUBCASE("Newton on the parabola") {
    NewtonCompletion c(parabola_constraint(),
                       VariablePartition::from_dependent(2, {1}));
    const Eigen::VectorXd x = c.complete(vec({2}));
    CHECK(x(0) == doctest::Approx(2));
    CHECK(x(1) == doctest::Approx(4).epsilon(1e-12));
  }
  SUBCASE("Newton on the cubic against a bisection oracle") {
    NewtonCompletion c(cubic_constraint(),
                       VariablePartition::from_dependent(2, {1}), 50, 1e-12,
                       InitialGuess::WarmStart, vec({1}));
    const Eigen::VectorXd x = c.complete(vec({1}));
    CHECK(x(1) == doctest::Approx(cubic_root_oracle(1.0)).epsilon(1e-10));
    CHECK(x(1) == doctest::Approx(2).epsilon(1e-12));
  }
}

TEST_CASE("completion jacobians") {
  SUBCASE("affine returns P exactly") {
    const auto c = build_affine_completion(
        row_matrix({{1, 1}}), vec({2}), VariablePartition::from_dependent(2, {1}));
    const CompletionMap map = c;
    CHECK(completion_jacobian(map, vec({0.3}))(0, 0) == c.P()(0, 0));
    CHECK(completion_jacobian(map, vec({-5}))(0, 0) == c.P()(0, 0));
  }
  SUBCASE("parabola: dp/dtheta = 2 theta, by finite differences of the oracle") {
    NewtonCompletion c(parabola_constraint(),
                       VariablePartition::from_dependent(2, {1}));
    const double J = c.jacobian(vec({3}))(0, 0);
    CHECK(J == doctest::Approx(6).epsilon(1e-7));
    // oracle: p(theta) = theta^2 computed independently
    const double h = 1e-5;
    const double fd = (((3 + h) * (3 + h)) - ((3 - h) * (3 - h))) / (2 * h);
    CHECK(J == doctest::Approx(fd).epsilon(1e-7));
  }
  SUBCASE("cubic: implicit differentiation -h_theta/h_z = -1/12") {
    NewtonCompletion c(cubic_constraint(),
                       VariablePartition::from_dependent(2, {1}), 50, 1e-12,
                       InitialGuess::WarmStart, vec({1}));
    CHECK(c.jacobian(vec({1}))(0, 0) == doctest::Approx(-1.0 / 12.0).epsilon(1e-8));
  }
}

TEST_CASE("feasibility preservation on random points") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> dist(0.0, 1.0);

  const auto affine = build_affine_completion(
      row_matrix({{1, 2, -1}, {0, 1, 1}}), vec({1, 3}),
      VariablePartition::from_dependent(3, {1, 2}));
  const Eigen::MatrixXd A = row_matrix({{1, 2, -1}, {0, 1, 1}});
  const Eigen::VectorXd b = vec({1, 3});
  const double tol_affine = 1e-10 * (1.0 + b.lpNorm<Eigen::Infinity>());

  NewtonCompletion newton(parabola_constraint(),
                          VariablePartition::from_dependent(2, {1}));

  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd theta1 = Eigen::VectorXd::NullaryExpr(
        1, [&](Eigen::Index) { return dist(rng); });
    CHECK((A * affine.complete(theta1) - b).lpNorm<Eigen::Infinity>() <=
          tol_affine);
    const Eigen::VectorXd x = newton.complete(theta1);
    CHECK(std::abs(x(0) * x(0) - x(1)) <= 1e-12);
  }
}

TEST_CASE("jacobian consistency against finite differences of complete") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> dist(0.0, 1.0);
  NewtonCompletion c(cubic_constraint(),
                     VariablePartition::from_dependent(2, {1}), 50, 1e-13,
                     InitialGuess::WarmStart, vec({1}));
  for (int i = 0; i < 10; ++i) {
    const double theta = dist(rng);
    const double J = c.jacobian(Eigen::VectorXd::Constant(1, theta))(0, 0);
    const double h = 1e-6 * (1.0 + std::abs(theta));
    const double zp = c.complete(Eigen::VectorXd::Constant(1, theta + h))(1);
    const double zm = c.complete(Eigen::VectorXd::Constant(1, theta - h))(1);
    const double fd = (zp - zm) / (2.0 * h);
    CHECK(std::abs(J - fd) <= 1e-5 * (1.0 + std::abs(fd)));
  }
}

TEST_CASE("affine determinism is bit exact") {
  const Eigen::MatrixXd A = row_matrix({{1.1, 2.2, 3.3}, {0.4, 5.5, 6.6}});
  const Eigen::VectorXd b = vec({0.7, 0.8});
  const auto part = VariablePartition::from_dependent(3, {0, 2});
  const auto c1 = build_affine_completion(A, b, part);
  const auto c2 = build_affine_completion(A, b, part);
  CHECK(std::memcmp(c1.P().data(), c2.P().data(),
                    sizeof(double) * c1.P().size()) == 0);
  CHECK(std::memcmp(c1.q().data(), c2.q().data(),
                    sizeof(double) * c1.q().size()) == 0);
}

TEST_CASE("Newton failure modes") {
  SUBCASE("no real root") {
    VectorField h;  // x2^2 + 1 = 0 has no solution
    h.output_dim = 1;
    h.value = [](const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(1, x(1) * x(1) + 1.0);
    };
    NewtonCompletion c(h, VariablePartition::from_dependent(2, {1}), 25, 1e-12,
                       InitialGuess::WarmStart, vec({1}));
    CHECK_THROWS_AS(c.complete(vec({0})), CompletionError);
  }
  SUBCASE("dependent Jacobian identically singular") {
    VectorField h;  // h does not involve the dependent variable at all
    h.output_dim = 1;
    h.value = [](const Eigen::VectorXd& x) {
      return Eigen::VectorXd::Constant(1, x(0) - 1.0);
    };
    NewtonCompletion c(h, VariablePartition::from_dependent(2, {1}));
    CHECK_THROWS_AS(c.complete(vec({0})), CompletionError);
  }
  SUBCASE("warm start carries across calls") {
    NewtonCompletion c(cubic_constraint(),
                       VariablePartition::from_dependent(2, {1}), 50, 1e-12,
                       InitialGuess::WarmStart, vec({1}));
    CHECK(c.complete(vec({1}))(1) == doctest::Approx(2).epsilon(1e-12));
    // Nearby theta solves from the cached root in very few steps.
    CHECK(c.complete(vec({1.001}))(1) ==
          doctest::Approx(cubic_root_oracle(1.001)).epsilon(1e-10));
  }
}
