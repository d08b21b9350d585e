#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>

#include "htopt/geometry.hpp"

using namespace htopt::geometry;
using htopt::problem::ConvexRegionSpec;
using htopt::problem::VariablePartition;

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

// {x1 >= 0, x2 >= 0, x1 + x2 <= 1}
ConvexRegionSpec triangle() {
  return ConvexRegionSpec::halfspaces(
      row_matrix({{-1, 0}, {0, -1}, {1, 1}}), vec({0, 0, 1}));
}

}  // namespace

TEST_CASE("projection onto boxes and balls") {
  const Projector box(ConvexRegionSpec::box(vec({3}), vec({10})));
  CHECK(box.project(vec({2}))(0) == doctest::Approx(3));
  CHECK(box.project(vec({5}))(0) == doctest::Approx(5));
  CHECK(box.project(vec({12}))(0) == doctest::Approx(10));

  const Projector ball(ConvexRegionSpec::ball(vec({0, 0}), 1.0));
  const Eigen::VectorXd p = ball.project(vec({3, 4}));
  CHECK(p(0) == doctest::Approx(0.6).epsilon(1e-14));
  CHECK(p(1) == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(ball.project(vec({0.2, 0.1})) == vec({0.2, 0.1}));
}

TEST_CASE("Dykstra projection onto a halfspace intersection") {
  const Projector tri(triangle());
  const Eigen::VectorXd p = tri.project(vec({2, 2}));
  CHECK(p(0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(p(1) == doctest::Approx(0.5).epsilon(1e-9));

  // Dense-grid argmin oracle over the feasible triangle.
  double best = 1e100;
  Eigen::VectorXd best_w(2);
  const int N = 400;
  for (int i = 0; i <= N; ++i) {
    for (int j = 0; j <= N - i; ++j) {
      const Eigen::VectorXd w = vec({double(i) / N, double(j) / N});
      const double d = (w - vec({2, 2})).squaredNorm();
      if (d < best) {
        best = d;
        best_w = w;
      }
    }
  }
  CHECK((p - best_w).norm() <= 1.0 / N + 1e-9);

  // Interior points stay put.
  CHECK((tri.project(vec({0.2, 0.2})) - vec({0.2, 0.2})).norm() <= 1e-10);
}

TEST_CASE("membership tests") {
  const Projector box(ConvexRegionSpec::box(vec({3}), vec({10})));
  CHECK(box.contains(vec({5}), 1e-9));
  CHECK(box.contains(vec({2.9999999999}), 1e-9));
  CHECK_FALSE(box.contains(vec({2.9}), 1e-9));

  const Projector ball(ConvexRegionSpec::ball(vec({0, 0}), 1.0));
  CHECK_FALSE(ball.contains(vec({2, 0}), 1e-9));
  CHECK(ball.contains(vec({0.6, 0.8}), 1e-9));
}

TEST_CASE("projection properties over random points") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> dist(0.0, 2.0);
  const Projector projs[] = {
      Projector(ConvexRegionSpec::box(vec({-1, 0}), vec({2, 0.5}))),
      Projector(ConvexRegionSpec::ball(vec({1, -1}), 1.5)),
      Projector(triangle())};

  for (const auto& pr : projs) {
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd u = Eigen::VectorXd::NullaryExpr(
          2, [&](Eigen::Index) { return dist(rng); });
      const Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(
          2, [&](Eigen::Index) { return dist(rng); });
      const Eigen::VectorXd pu = pr.project(u);
      const Eigen::VectorXd pv = pr.project(v);
      // idempotence
      CHECK((pr.project(pu) - pu).norm() <= 1e-12 * (1.0 + pu.norm()));
      // containment
      CHECK(pr.contains(pu, 1e-9));
      // nonexpansiveness
      CHECK((pu - pv).norm() <= (u - v).norm() + 1e-12);
      // optimality against random feasible points
      std::mt19937_64 rng2(100 + i);
      for (int j = 0; j < 100; ++j) {
        const Eigen::VectorXd w = sample_point(pr.region(), rng2);
        CHECK((u - pu).norm() <= (u - w).norm() + 1e-12);
      }
    }
  }
}

TEST_CASE("region sampling stays inside") {
  std::mt19937_64 rng(23);
  const ConvexRegionSpec regions[] = {
      ConvexRegionSpec::box(vec({-2, 1}), vec({-1, 4})),
      ConvexRegionSpec::ball(vec({3, 3}), 0.5), triangle()};
  for (const auto& region : regions) {
    const Projector pr(region);
    for (int i = 0; i < 200; ++i) {
      CHECK(pr.contains(sample_point(region, rng), 1e-9));
    }
  }
}

TEST_CASE("Dykstra reports non-convergence on an empty intersection") {
  // x <= -1 and x >= 1 cannot both hold; the sweep never settles.
  const Projector pr(ConvexRegionSpec::halfspaces(
      row_matrix({{1}, {-1}}), vec({-1, -1})));
  CHECK_THROWS_AS(pr.project(vec({0})), ProjectionError);
  try {
    pr.project(vec({0}));
  } catch (const ProjectionError& e) {
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("independent slice of x-space regions") {
  const auto part = VariablePartition::from_dependent(3, {1});
  const auto box = ConvexRegionSpec::box(vec({0, 1, 2}), vec({10, 11, 12}));
  const auto sliced = slice_independent(box, part);
  REQUIRE(sliced.dimension() == 2);
  const auto& shape = std::get<htopt::problem::BoxRegion>(sliced.shape());
  CHECK(shape.lower == vec({0, 2}));
  CHECK(shape.upper == vec({10, 12}));

  const auto ball = ConvexRegionSpec::ball(vec({1, 2, 3}), 2.0);
  const auto sliced_ball = slice_independent(ball, part);
  const auto& bshape = std::get<htopt::problem::BallRegion>(sliced_ball.shape());
  CHECK(bshape.center == vec({1, 3}));
  CHECK(bshape.radius == doctest::Approx(2.0));

  CHECK_THROWS_AS(slice_independent(triangle(),
                                    VariablePartition::from_dependent(2, {0})),
                  std::invalid_argument);
}
