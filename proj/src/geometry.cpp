#include "htopt/geometry.hpp"

#include <cmath>
#include <utility>

namespace htopt::geometry {

using problem::BallRegion;
using problem::BoxRegion;
using problem::ConvexRegionSpec;
using problem::HalfspaceRegion;

Projector::Projector(ConvexRegionSpec region) : region_(std::move(region)) {
  if (const auto* hs = std::get_if<HalfspaceRegion>(&region_.shape())) {
    const int rows = static_cast<int>(hs->normals.rows());
    unit_normals_ = hs->normals;
    unit_offsets_ = hs->offsets;
    for (int i = 0; i < rows; ++i) {
      const double nrm = unit_normals_.row(i).norm();
      if (nrm == 0.0) {
        throw std::invalid_argument("halfspace normal must be nonzero");
      }
      unit_normals_.row(i) /= nrm;
      unit_offsets_(i) /= nrm;
    }
  }
}

Eigen::VectorXd Projector::project(const Eigen::VectorXd& v) const {
  if (v.size() != region_.dimension()) {
    throw std::invalid_argument("project: vector dimension mismatch");
  }
  if (const auto* box = std::get_if<BoxRegion>(&region_.shape())) {
    return v.cwiseMax(box->lower).cwiseMin(box->upper);
  }
  if (const auto* ball = std::get_if<BallRegion>(&region_.shape())) {
    const Eigen::VectorXd d = v - ball->center;
    const double dist = d.norm();
    if (dist <= ball->radius) return v;
    return ball->center + (ball->radius / dist) * d;
  }
  // Dykstra's scheme over the halfspace family. Unlike plain alternating
  // projections, the correction vectors steer the limit to the Euclidean
  // projection onto the intersection.
  const int rows = static_cast<int>(unit_normals_.rows());
  const int dim = region_.dimension();
  Eigen::VectorXd x = v;
  Eigen::MatrixXd corrections = Eigen::MatrixXd::Zero(rows, dim);
  // Per-sweep movement threshold well below the advertised 1e-12 accuracy,
  // since the residual error is a small multiple of the last movement.
  const double tol = 1e-14;
  const int max_sweeps = 10000;
  const double scale = 1.0 + v.norm();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double moved = 0.0;
    for (int i = 0; i < rows; ++i) {
      const Eigen::VectorXd y = x + corrections.row(i).transpose();
      const double excess = unit_normals_.row(i).dot(y) - unit_offsets_(i);
      Eigen::VectorXd projected = y;
      if (excess > 0.0) {
        projected -= excess * unit_normals_.row(i).transpose();
      }
      corrections.row(i) = (y - projected).transpose();
      moved = std::max(moved, (x - projected).lpNorm<Eigen::Infinity>());
      x = projected;
    }
    if (moved <= tol * scale) {
      return x;
    }
  }
  double residual = 0.0;
  for (int i = 0; i < rows; ++i) {
    residual = std::max(residual, unit_normals_.row(i).dot(x) - unit_offsets_(i));
  }
  throw ProjectionError("Dykstra projection did not converge in 10000 sweeps "
                        "(constraint residual " + std::to_string(residual) + ")");
}

bool Projector::contains(const Eigen::VectorXd& v, double tol) const {
  if (v.size() != region_.dimension()) {
    throw std::invalid_argument("contains: vector dimension mismatch");
  }
  if (const auto* box = std::get_if<BoxRegion>(&region_.shape())) {
    return (v.array() >= box->lower.array() - tol).all() &&
           (v.array() <= box->upper.array() + tol).all();
  }
  if (const auto* ball = std::get_if<BallRegion>(&region_.shape())) {
    return (v - ball->center).norm() <= ball->radius + tol;
  }
  for (int i = 0; i < unit_normals_.rows(); ++i) {
    if (unit_normals_.row(i).dot(v) > unit_offsets_(i) + tol) return false;
  }
  return true;
}

ConvexRegionSpec slice_independent(const ConvexRegionSpec& region_n,
                                   const problem::VariablePartition& partition) {
  if (region_n.dimension() != partition.n) {
    throw std::invalid_argument("slice_independent: region dimension differs "
                                "from partition n");
  }
  const int nf = partition.nf();
  if (const auto* box = std::get_if<BoxRegion>(&region_n.shape())) {
    Eigen::VectorXd lower(nf), upper(nf);
    for (int i = 0; i < nf; ++i) {
      lower(i) = box->lower(partition.independent[i]);
      upper(i) = box->upper(partition.independent[i]);
    }
    return ConvexRegionSpec::box(std::move(lower), std::move(upper));
  }
  if (const auto* ball = std::get_if<BallRegion>(&region_n.shape())) {
    // The shadow of a ball keeps the radius around the sliced center.
    Eigen::VectorXd center(nf);
    for (int i = 0; i < nf; ++i) center(i) = ball->center(partition.independent[i]);
    return ConvexRegionSpec::ball(std::move(center), ball->radius);
  }
  throw std::invalid_argument("slice_independent: halfspace intersections "
                              "cannot be sliced exactly; supply the region in "
                              "independent coordinates instead");
}

Eigen::VectorXd sample_point(const ConvexRegionSpec& region,
                             std::mt19937_64& rng) {
  const int dim = region.dimension();
  if (const auto* box = std::get_if<BoxRegion>(&region.shape())) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd x(dim);
    for (int i = 0; i < dim; ++i) {
      x(i) = box->lower(i) + u(rng) * (box->upper(i) - box->lower(i));
    }
    return x;
  }
  if (const auto* ball = std::get_if<BallRegion>(&region.shape())) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd d(dim);
    for (int i = 0; i < dim; ++i) d(i) = n(rng);
    const double nrm = d.norm();
    if (nrm == 0.0) return ball->center;
    const double r = ball->radius * std::pow(u(rng), 1.0 / dim);
    return ball->center + (r / nrm) * d;
  }
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x(i) = n(rng);
  return Projector(region).project(x);
}

}  // namespace htopt::geometry
