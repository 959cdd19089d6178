#include "rto/uncertainty.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "rto/errors.hpp"

namespace rto {

UncertaintySet UncertaintySet::interval(Params lower, Params upper, Params nominal) {
  if (lower.size() != upper.size() || lower.size() != nominal.size())
    throw ConfigError("uncertainty interval: bound and nominal sizes differ");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]) || !(lower[i] <= upper[i]))
      throw ConfigError("uncertainty interval: need finite lower <= upper in entry " + std::to_string(i));
    if (!(lower[i] <= nominal[i] && nominal[i] <= upper[i]))
      throw ConfigError("uncertainty interval: nominal value outside the bounds in entry " + std::to_string(i));
  }
  UncertaintySet s;
  s.kind_ = Kind::interval;
  s.lower_ = std::move(lower);
  s.upper_ = std::move(upper);
  s.nominal_ = std::move(nominal);
  return s;
}

UncertaintySet UncertaintySet::singleton(Params nominal) { return interval(nominal, nominal, nominal); }

UncertaintySet UncertaintySet::ellipsoid(Params center, Eigen::MatrixXd shape) {
  if (shape.rows() != center.size() || shape.cols() < 1 || shape.cols() > shape.rows())
    throw ConfigError("uncertainty ellipsoid: shape matrix must be m x r with 1 <= r <= m = dim(center)");
  if (!center.allFinite() || !shape.allFinite()) throw ConfigError("uncertainty ellipsoid: non-finite entries");
  UncertaintySet s;
  s.kind_ = Kind::ellipsoid;
  s.nominal_ = std::move(center);
  s.shape_ = std::move(shape);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s.shape_.transpose() * s.shape_);
  s.gram_values_ = eig.eigenvalues();
  s.gram_vectors_ = eig.eigenvectors();
  if (!(s.gram_values_.minCoeff() > 1e-14 * s.gram_values_.maxCoeff()) || !(s.gram_values_.maxCoeff() > 0.0))
    throw ConfigError("uncertainty ellipsoid: shape matrix is rank deficient");
  const Eigen::Index m = s.shape_.rows();
  if (s.shape_.cols() == m) {
    const double r = s.shape_(0, 0);
    if ((s.shape_ - r * Eigen::MatrixXd::Identity(m, m)).norm() <= 1e-14 * std::abs(r)) s.ball_radius_ = std::abs(r);
  }
  return s;
}

bool UncertaintySet::is_singleton() const { return kind_ == Kind::interval && lower_ == upper_; }

bool UncertaintySet::contains(const Params& q, double tol) const {
  if (q.size() != dimension()) return false;
  return (project(q) - q).norm() <= tol * (1.0 + q.norm());
}

Params UncertaintySet::project(const Params& q) const {
  if (q.size() != dimension())
    throw UsageError("project: parameter has " + std::to_string(q.size()) + " entries, set has " +
                     std::to_string(dimension()));
  if (kind_ == Kind::interval) return q.cwiseMax(lower_).cwiseMin(upper_);
  return project_ellipsoid(q);
}

Params UncertaintySet::project_ellipsoid(const Params& q) const {
  const Params d = q - nominal_;
  if (ball_radius_ > 0.0) {
    const double n = d.norm();
    return n <= ball_radius_ ? q : Params(nominal_ + d * (ball_radius_ / n));
  }
  // min |R v - d| s.t. |v| <= 1: (R^T R + lambda I) v = R^T d with |v| = 1
  // when the least-squares solution is outside the unit ball.
  const Eigen::VectorXd b = gram_vectors_.transpose() * (shape_.transpose() * d);
  auto coeffs = [&](double lambda) { return Eigen::VectorXd(b.array() / (gram_values_.array() + lambda)); };
  Eigen::VectorXd w = coeffs(0.0);
  double lambda = 0.0;
  if (w.norm() > 1.0) {
    // Newton on 1/|w(lambda)| - 1, concave and increasing: monotone from the left.
    for (int it = 0; it < 200; ++it) {
      const double n = w.norm();
      if (std::abs(n - 1.0) <= 1e-12) break;
      const double dn = (b.array().square() / (gram_values_.array() + lambda).cube()).sum() / (n * n * n);
      const double step = (1.0 / n - 1.0) / dn;
      lambda = std::max(0.0, lambda - step);
      w = coeffs(lambda);
    }
    w /= std::max(1.0, w.norm());
  }
  return nominal_ + shape_ * (gram_vectors_ * w);
}

std::vector<Params> UncertaintySet::boundary_points() const {
  std::vector<Params> pts;
  if (kind_ == Kind::interval) {
    pts.push_back(lower_);
    if (upper_ != lower_) pts.push_back(upper_);
    return pts;
  }
  for (Eigen::Index j = 0; j < shape_.cols(); ++j) {
    pts.push_back(nominal_ + shape_.col(j));
    pts.push_back(nominal_ - shape_.col(j));
  }
  return pts;
}

std::vector<Params> UncertaintySet::grid(int per_axis) const {
  if (kind_ != Kind::interval) throw UsageError("grid: only interval sets have a tensor grid");
  if (per_axis < 2) throw UsageError("grid: need at least two points per axis");
  std::vector<int> counts(dimension());
  double total = 1.0;
  for (int i = 0; i < dimension(); ++i) {
    counts[i] = lower_[i] == upper_[i] ? 1 : per_axis;
    total *= counts[i];
  }
  if (total > 1e5) throw UsageError("grid: more than 1e5 points");
  std::vector<Params> pts;
  std::vector<int> idx(dimension(), 0);
  for (long k = 0; k < static_cast<long>(total); ++k) {
    Params q(dimension());
    for (int i = 0; i < dimension(); ++i)
      q[i] = idx[i] == counts[i] - 1 ? upper_[i] : lower_[i] + (upper_[i] - lower_[i]) * idx[i] / (counts[i] - 1);
    pts.push_back(std::move(q));
    for (int i = 0; i < dimension(); ++i) {
      if (++idx[i] < counts[i]) break;
      idx[i] = 0;
    }
  }
  return pts;
}

}  // namespace rto
