#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "htopt/expr.hpp"

using htopt::expr::BinaryOp;
using htopt::expr::ExpressionTree;
using htopt::expr::Node;
using htopt::expr::NodePtr;
using htopt::expr::parse;
using htopt::expr::ParseFailure;
using htopt::expr::UnaryFn;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<int>(vals.size()));
  int i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("parse and evaluate basics") {
  CHECK(parse("x1^2 + x2^2").evaluate(vec({1, 2})) == doctest::Approx(5).epsilon(1e-15));
  CHECK(parse("log(1 + exp(x1))").evaluate(vec({0})) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(parse("2*x1 - x2").evaluate(vec({3, 1})) == doctest::Approx(5));
  CHECK(std::abs(parse("sin(x1)^2 + cos(x1)^2").evaluate(vec({0.7})) - 1.0) <
        1e-15);
}

TEST_CASE("non-finite values propagate") {
  const double v = parse("x1/x2").evaluate(vec({1, 0}));
  CHECK(std::isinf(v));
  CHECK(v > 0);
  CHECK(std::isnan(parse("log(x1)").evaluate(vec({-1}))));
  CHECK(std::isinf(parse("log(x1)").evaluate(vec({0}))));
}

TEST_CASE("precedence and associativity") {
  CHECK(parse("-x1^2").evaluate(vec({3})) == doctest::Approx(-9));
  CHECK(parse("2^3^2").evaluate(vec({1})) == doctest::Approx(512));  // right assoc
  CHECK(parse("2*-3").evaluate(vec({1})) == doctest::Approx(-6));
  CHECK(parse("x1^-1").evaluate(vec({4})) == doctest::Approx(0.25));
  CHECK(parse("1 - -x1").evaluate(vec({2})) == doctest::Approx(3));
  CHECK(parse("2 + 3 * 4").evaluate(vec({1})) == doctest::Approx(14));
  CHECK(parse("neg(x1) + abs(x2)").evaluate(vec({2, -3})) == doctest::Approx(1));
  CHECK(parse("sqrt(x1)").evaluate(vec({16})) == doctest::Approx(4));
}

TEST_CASE("parse failures carry 1-based offsets") {
  CHECK_THROWS_AS(parse("(x1"), ParseFailure);
  try {
    parse("(x1");
  } catch (const ParseFailure& e) {
    CHECK(e.position() == 4);
  }
  try {
    parse("y1 + 1");
  } catch (const ParseFailure& e) {
    CHECK(e.position() == 1);
  }
  try {
    parse("x1 2");
  } catch (const ParseFailure& e) {
    CHECK(e.position() == 4);
  }
  CHECK_THROWS_AS(parse("x0 + 1"), ParseFailure);
  CHECK_THROWS_AS(parse(""), ParseFailure);
  CHECK_THROWS_AS(parse("foo(x1)"), ParseFailure);
  CHECK_THROWS_AS(parse("sin x1"), ParseFailure);
}

TEST_CASE("variable index out of range at evaluation") {
  const ExpressionTree t = parse("x3 + 1");
  CHECK(t.max_variable_index() == 3);
  CHECK_THROWS_AS(t.evaluate(vec({1, 2})), std::out_of_range);
  CHECK(t.evaluate(vec({0, 0, 5})) == doctest::Approx(6));
}

namespace {

// Random general trees for the print round-trip property.
NodePtr random_tree(std::mt19937_64& rng, int depth) {
  auto node = std::make_shared<Node>();
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 3);
  std::uniform_real_distribution<double> coef(0.0, 4.0);
  std::uniform_int_distribution<int> var(1, 3);
  switch (pick(rng)) {
    case 0:
      node->kind = Node::Kind::Constant;
      node->constant = coef(rng);
      break;
    case 1:
      node->kind = Node::Kind::Variable;
      node->variable = var(rng);
      break;
    case 2: {
      node->kind = Node::Kind::Unary;
      std::uniform_int_distribution<int> fn(0, 6);
      node->fn = static_cast<UnaryFn>(fn(rng));
      node->lhs = random_tree(rng, depth - 1);
      break;
    }
    default: {
      node->kind = Node::Kind::Binary;
      std::uniform_int_distribution<int> op(0, 4);
      node->op = static_cast<BinaryOp>(op(rng));
      node->lhs = random_tree(rng, depth - 1);
      node->rhs = random_tree(rng, depth - 1);
      break;
    }
  }
  return node;
}

// Polynomial trees: +, -, *, integer powers, constants and variables.
NodePtr random_poly(std::mt19937_64& rng, int depth) {
  auto node = std::make_shared<Node>();
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 4);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> var(1, 2);
  switch (pick(rng)) {
    case 0:
      node->kind = Node::Kind::Constant;
      node->constant = coef(rng);
      break;
    case 1:
      node->kind = Node::Kind::Variable;
      node->variable = var(rng);
      break;
    case 2: {
      node->kind = Node::Kind::Binary;
      std::uniform_int_distribution<int> op(0, 2);
      node->op = static_cast<BinaryOp>(op(rng));  // Add, Sub, Mul
      node->lhs = random_poly(rng, depth - 1);
      node->rhs = random_poly(rng, depth - 1);
      break;
    }
    case 3: {
      node->kind = Node::Kind::Binary;
      node->op = BinaryOp::Pow;
      node->lhs = random_poly(rng, depth - 1);
      std::uniform_int_distribution<int> expo(2, 3);
      auto k = std::make_shared<Node>();
      k->kind = Node::Kind::Constant;
      k->constant = expo(rng);
      node->rhs = k;
      break;
    }
    default:
      node->kind = Node::Kind::Unary;
      node->fn = UnaryFn::Neg;
      node->lhs = random_poly(rng, depth - 1);
      break;
  }
  return node;
}

// Value of d(node)/d(x_v) at x, by test-side symbolic differentiation.
double poly_derivative(const Node& node, const Eigen::VectorXd& x, int v) {
  switch (node.kind) {
    case Node::Kind::Constant:
      return 0.0;
    case Node::Kind::Variable:
      return node.variable == v ? 1.0 : 0.0;
    case Node::Kind::Unary:
      return -poly_derivative(*node.lhs, x, v);
    case Node::Kind::Binary: {
      const ExpressionTree lt(node.lhs);
      const ExpressionTree rt(node.rhs);
      const double dl = poly_derivative(*node.lhs, x, v);
      switch (node.op) {
        case BinaryOp::Add:
          return dl + poly_derivative(*node.rhs, x, v);
        case BinaryOp::Sub:
          return dl - poly_derivative(*node.rhs, x, v);
        case BinaryOp::Mul:
          return dl * rt.evaluate(x) +
                 lt.evaluate(x) * poly_derivative(*node.rhs, x, v);
        case BinaryOp::Pow: {
          const double k = node.rhs->constant;
          return k * std::pow(lt.evaluate(x), k - 1.0) * dl;
        }
        default:
          return 0.0;
      }
    }
  }
  return 0.0;
}

}  // namespace

TEST_CASE("canonical print is idempotent under reparsing") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const ExpressionTree t(random_tree(rng, 6));
    const std::string once = t.print();
    const ExpressionTree reparsed = parse(once);
    CHECK(reparsed.print() == once);
    Eigen::VectorXd x = vec({0.3, -1.2, 0.8});
    const double a = t.evaluate(x);
    const double b = reparsed.evaluate(x);
    if (std::isnan(a)) {
      CHECK(std::isnan(b));
    } else {
      CHECK(a == b);
    }
  }
}

TEST_CASE("finite differences match analytic derivatives on polynomial trees") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> point(-1.0, 1.0);
  int checked = 0;
  for (int trial = 0; trial < 400 && checked < 100; ++trial) {
    const NodePtr root = random_poly(rng, 6);
    const ExpressionTree t(root);
    Eigen::VectorXd x = vec({point(rng), point(rng)});
    if (std::abs(t.evaluate(x)) > 1e6) continue;
    for (int v = 1; v <= 2; ++v) {
      const double exact = poly_derivative(*root, x, v);
      if (!std::isfinite(exact) || std::abs(exact) > 1e6) continue;
      const double h = 1e-6 * (1.0 + std::abs(x(v - 1)));
      Eigen::VectorXd xp = x, xm = x;
      xp(v - 1) += h;
      xm(v - 1) -= h;
      const double fd = (t.evaluate(xp) - t.evaluate(xm)) / (2.0 * h);
      CHECK(std::abs(fd - exact) <= 1e-6 * (1.0 + std::abs(exact)));
      ++checked;
    }
  }
  CHECK(checked >= 100);
}
