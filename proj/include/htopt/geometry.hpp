#ifndef HTOPT_GEOMETRY_HPP
#define HTOPT_GEOMETRY_HPP

#include <Eigen/Core>

#include <random>
#include <stdexcept>

#include "htopt/problem.hpp"

namespace htopt::geometry {

class ProjectionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Euclidean projection onto a convex region. Boxes clamp, balls scale
/// radially, halfspace intersections run Dykstra's alternating scheme
/// (tolerance 1e-12, at most 1e4 sweeps). Immutable and reentrant.
class Projector {
 public:
  explicit Projector(problem::ConvexRegionSpec region);

  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
  bool contains(const Eigen::VectorXd& v, double tol) const;
  const problem::ConvexRegionSpec& region() const { return region_; }

 private:
  problem::ConvexRegionSpec region_;
  Eigen::MatrixXd unit_normals_;   // halfspace rows scaled to unit norm
  Eigen::VectorXd unit_offsets_;
};

/// Theta-slice of a region in x-space under a partition: the set of
/// independent blocks of region members. Exact for boxes and balls;
/// halfspace intersections are rejected (their shadow needs variable
/// elimination, which this library does not do).
problem::ConvexRegionSpec slice_independent(
    const problem::ConvexRegionSpec& region_n,
    const problem::VariablePartition& partition);

/// Deterministic sample inside the region: uniform for boxes, uniform in
/// volume for balls, Gaussian-then-project for halfspace intersections.
Eigen::VectorXd sample_point(const problem::ConvexRegionSpec& region,
                             std::mt19937_64& rng);

}  // namespace htopt::geometry

#endif
