#include "rto/design_domain.hpp"

#include <algorithm>
#include <map>

#include "rto/errors.hpp"

namespace rto {

DesignDomain::DesignDomain(const Mesh& mesh, std::vector<int> elements) : elements_(std::move(elements)) {
  if (elements_.empty()) throw ConfigError("design domain has no elements");
  std::map<int, int> local_of;
  for (int e : elements_)
    for (int v : mesh.triangles[e]) local_of.emplace(v, 0);
  for (auto& [global, local] : local_of) {
    local = static_cast<int>(nodes_.size());
    nodes_.push_back(global);
  }
  const int n = num_nodes();
  std::vector<Eigen::Triplet<double>> m, k;
  double size_sum = 0.0;
  for (int e : elements_) {
    const auto& t = mesh.triangles[e];
    local_.push_back({local_of[t[0]], local_of[t[1]], local_of[t[2]]});
    const double a = mesh.signed_area(e);
    area_.push_back(a);
    size_sum += mesh.diameter(e);
    const Vec2 &p0 = mesh.vertices[t[0]], &p1 = mesh.vertices[t[1]], &p2 = mesh.vertices[t[2]];
    Eigen::Matrix<double, 2, 3> grad;
    grad << p1.y() - p2.y(), p2.y() - p0.y(), p0.y() - p1.y(), p2.x() - p1.x(), p0.x() - p2.x(), p1.x() - p0.x();
    grad /= 2.0 * a;
    const Eigen::Matrix3d ke = a * grad.transpose() * grad;
    const auto& l = local_.back();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        m.emplace_back(l[i], l[j], a / 12.0 * (i == j ? 2.0 : 1.0));
        k.emplace_back(l[i], l[j], ke(i, j));
      }
  }
  mass_.resize(n, n);
  mass_.setFromTriplets(m.begin(), m.end());
  stiffness_.resize(n, n);
  stiffness_.setFromTriplets(k.begin(), k.end());
  mean_size_ = size_sum / num_elements();
}

double DesignDomain::inner(const Vector& a, const Vector& b) const { return a.dot(mass_ * b); }

double DesignDomain::norm(const Vector& a) const { return std::sqrt(std::max(0.0, inner(a, a))); }

Vector DesignDomain::centroid_values(const Vector& nodal) const {
  Vector out(num_elements());
  for (int i = 0; i < num_elements(); ++i) {
    const auto& t = local_[i];
    out[i] = (nodal[t[0]] + nodal[t[1]] + nodal[t[2]]) / 3.0;
  }
  return out;
}

Vector DesignDomain::load(const Vector& element_values) const {
  Vector out = Vector::Zero(num_nodes());
  for (int i = 0; i < num_elements(); ++i)
    for (int v : local_[i]) out[v] += element_values[i] * area_[i] / 3.0;
  return out;
}

double DesignDomain::integral(const Vector& nodal) const {
  double sum = 0.0;
  for (int i = 0; i < num_elements(); ++i) {
    const auto& t = local_[i];
    sum += area_[i] * (nodal[t[0]] + nodal[t[1]] + nodal[t[2]]) / 3.0;
  }
  return sum;
}

double DesignDomain::integral_of_elements(const Vector& element_values) const {
  double sum = 0.0;
  for (int i = 0; i < num_elements(); ++i) sum += area_[i] * element_values[i];
  return sum;
}

Vector DesignDomain::project(const Vector& element_values) const {
  return solve_spd(mass_, load(element_values));
}

Vector DesignDomain::scatter(const Vector& nodal, int global_size) const {
  Vector out = Vector::Zero(global_size);
  for (int i = 0; i < num_nodes(); ++i) out[nodes_[i]] = nodal[i];
  return out;
}

}  // namespace rto
