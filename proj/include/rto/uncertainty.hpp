#pragma once

#include <vector>

#include <Eigen/Dense>

#include "rto/materials.hpp"

namespace rto {

/// Closed convex bounded parameter set U containing the nominal value.
///   interval:   lower <= q <= upper componentwise
///   ellipsoid:  { center + R v : |v| <= 1 },  R with full column rank
class UncertaintySet {
 public:
  enum class Kind { interval, ellipsoid };

  /// Throws ConfigError unless lower <= nominal <= upper.
  static UncertaintySet interval(Params lower, Params upper, Params nominal);
  static UncertaintySet singleton(Params nominal);
  /// Throws ConfigError for a rank-deficient shape matrix.
  static UncertaintySet ellipsoid(Params center, Eigen::MatrixXd shape);

  Kind kind() const { return kind_; }
  int dimension() const { return static_cast<int>(nominal_.size()); }
  const Params& nominal() const { return nominal_; }
  const Params& lower() const { return lower_; }
  const Params& upper() const { return upper_; }
  const Eigen::MatrixXd& shape() const { return shape_; }
  bool is_singleton() const;

  bool contains(const Params& q, double tol = 1e-12) const;
  /// Euclidean projection onto the set.
  Params project(const Params& q) const;

  /// Boundary starting points: the two extreme corners of a box, or
  /// center +- each column of R.
  std::vector<Params> boundary_points() const;
  /// Tensor grid with `per_axis` points per interval axis (axes with zero
  /// width get one point). Throws UsageError for ellipsoids and for more
  /// than 1e5 points.
  std::vector<Params> grid(int per_axis) const;

 private:
  Params project_ellipsoid(const Params& q) const;

  Kind kind_ = Kind::interval;
  Params nominal_;
  Params lower_, upper_;
  Eigen::MatrixXd shape_;
  // Eigen decomposition of R^T R and the scaled-identity radius (0 if not).
  Eigen::MatrixXd gram_vectors_;
  Eigen::VectorXd gram_values_;
  double ball_radius_ = 0.0;
};

}  // namespace rto
