#pragma once

#include <vector>

#include "rto/fem.hpp"

namespace rto {

/// P1 space restricted to the design elements, with natural (Neumann)
/// boundary. Nodal fields on D are indexed by local node number.
class DesignDomain {
 public:
  DesignDomain(const Mesh& mesh, std::vector<int> elements);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_elements() const { return static_cast<int>(elements_.size()); }
  /// Global node id of each local node.
  const std::vector<int>& nodes() const { return nodes_; }
  const std::vector<int>& elements() const { return elements_; }
  /// Local vertex ids of design element i.
  const std::array<int, 3>& triangle(int i) const { return local_[i]; }
  double area(int i) const { return area_[i]; }
  const SparseMatrix& mass() const { return mass_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  /// Mean longest-edge length over the design elements.
  double mean_size() const { return mean_size_; }

  double inner(const Vector& a, const Vector& b) const;
  double norm(const Vector& a) const;
  /// Value of the P1 interpolant at each element centroid.
  Vector centroid_values(const Vector& nodal) const;
  /// int_D g phi_i for a piecewise constant g.
  Vector load(const Vector& element_values) const;
  double integral(const Vector& nodal) const;
  double integral_of_elements(const Vector& element_values) const;
  /// L2(D) projection of a piecewise constant field onto P1.
  Vector project(const Vector& element_values) const;
  /// Global nodal vector with the design values placed at their nodes.
  Vector scatter(const Vector& nodal, int global_size) const;

 private:
  std::vector<int> elements_;
  std::vector<int> nodes_;
  std::vector<std::array<int, 3>> local_;
  std::vector<double> area_;
  SparseMatrix mass_;
  SparseMatrix stiffness_;
  double mean_size_ = 0.0;
};

}  // namespace rto
