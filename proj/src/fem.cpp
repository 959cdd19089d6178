#include "rto/fem.hpp"

#include <algorithm>
#include <map>

#include <Eigen/SparseCholesky>

#include "rto/errors.hpp"

namespace rto {

DofMap build_dof_map(const Mesh& mesh) {
  const int n = mesh.num_nodes();
  DofMap map;
  map.dof.assign(n, 0);
  map.sign.assign(n, 1.0);
  std::vector<int> master_of(n, -1);
  std::vector<double> pair_sign(n, 1.0);
  for (int v : mesh.dirichlet_nodes()) map.dof[v] = -1;
  for (const auto& pair : mesh.pairs) {
    if (pair.master == pair.slave) {
      // u = sign * u forces zero when the sign is -1.
      if (pair.sign < 0.0) map.dof[pair.master] = -1;
      continue;
    }
    master_of[pair.slave] = pair.master;
    pair_sign[pair.slave] = pair.sign;
  }
  for (int v = 0; v < n; ++v) {
    if (master_of[v] >= 0) {
      // A pinned master pins its slave too.
      if (map.dof[master_of[v]] < 0) map.dof[v] = -1;
      continue;
    }
    if (map.dof[v] >= 0) map.dof[v] = map.size++;
  }
  for (int v = 0; v < n; ++v) {
    if (master_of[v] < 0 || map.dof[v] < 0) continue;
    map.dof[v] = map.dof[master_of[v]];
    map.sign[v] = pair_sign[v];
  }
  return map;
}

std::vector<FluxSample> element_curl(const Vector& field, const Mesh& mesh) {
  std::vector<FluxSample> out;
  out.reserve(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.triangles[e];
    const Vec2& p0 = mesh.vertices[t[0]];
    const Vec2 d1 = mesh.vertices[t[1]] - p0, d2 = mesh.vertices[t[2]] - p0;
    const double det = d1.x() * d2.y() - d1.y() * d2.x();
    const double f1 = field[t[1]] - field[t[0]], f2 = field[t[2]] - field[t[0]];
    const double gx = (f1 * d2.y() - f2 * d1.y()) / det;
    const double gy = (f2 * d1.x() - f1 * d2.x()) / det;
    out.push_back({e, Vec2(gy, -gx)});
  }
  return out;
}

FemSpace::FemSpace(Mesh mesh) : mesh_(std::move(mesh)), dofs_(build_dof_map(mesh_)) {
  const int ne = mesh_.num_elements();
  area_.resize(ne);
  curl_.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const auto& t = mesh_.triangles[e];
    const Vec2& p0 = mesh_.vertices[t[0]];
    const Vec2& p1 = mesh_.vertices[t[1]];
    const Vec2& p2 = mesh_.vertices[t[2]];
    const double det = (p1 - p0).x() * (p2 - p0).y() - (p1 - p0).y() * (p2 - p0).x();
    area_[e] = 0.5 * det;
    // Gradients of the barycentric coordinates.
    Eigen::Matrix<double, 2, 3> grad;
    grad << p1.y() - p2.y(), p2.y() - p0.y(), p0.y() - p1.y(),
            p2.x() - p1.x(), p0.x() - p2.x(), p1.x() - p0.x();
    grad /= det;
    curl_[e].row(0) = grad.row(1);
    curl_[e].row(1) = -grad.row(0);
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(9 * static_cast<std::size_t>(ne));
  for (int e = 0; e < ne; ++e) {
    for (int a : mesh_.triangles[e])
      for (int b : mesh_.triangles[e])
        if (dofs_.dof[a] >= 0 && dofs_.dof[b] >= 0) triplets.emplace_back(dofs_.dof[a], dofs_.dof[b], 1.0);
  }
  pattern_.resize(dofs_.size, dofs_.size);
  pattern_.setFromTriplets(triplets.begin(), triplets.end());
  pattern_.makeCompressed();

  slots_.resize(ne);
  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  for (int e = 0; e < ne; ++e) {
    const auto& t = mesh_.triangles[e];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const int r = dofs_.dof[t[i]], c = dofs_.dof[t[j]];
        if (r < 0 || c < 0) {
          slots_[e][3 * i + j] = -1;
          continue;
        }
        const int* pos = std::lower_bound(inner + outer[c], inner + outer[c + 1], r);
        slots_[e][3 * i + j] = static_cast<int>(pos - inner);
      }
    }
  }
}

Vec2 FemSpace::curl(const Vector& nodal, int e) const {
  const auto& t = mesh_.triangles[e];
  return curl_[e] * Eigen::Vector3d(nodal[t[0]], nodal[t[1]], nodal[t[2]]);
}

Vector FemSpace::expand(const Vector& reduced) const {
  Vector nodal = Vector::Zero(num_nodes());
  for (int v = 0; v < num_nodes(); ++v)
    if (dofs_.dof[v] >= 0) nodal[v] = dofs_.sign[v] * reduced[dofs_.dof[v]];
  return nodal;
}

Vector FemSpace::restrict_values(const Vector& nodal) const {
  Vector reduced = Vector::Zero(num_dofs());
  for (int v = num_nodes() - 1; v >= 0; --v)
    if (dofs_.dof[v] >= 0 && dofs_.sign[v] > 0.0) reduced[dofs_.dof[v]] = nodal[v];
  return reduced;
}

Vector FemSpace::reduce(const Vector& nodal_load) const {
  Vector reduced = Vector::Zero(num_dofs());
  for (int v = 0; v < num_nodes(); ++v)
    if (dofs_.dof[v] >= 0) reduced[dofs_.dof[v]] += dofs_.sign[v] * nodal_load[v];
  return reduced;
}

SparseMatrix FemSpace::assemble(const std::function<Mat2(int)>& coefficient) const {
  SparseMatrix matrix = pattern_;
  std::fill(matrix.valuePtr(), matrix.valuePtr() + matrix.nonZeros(), 0.0);
  double* values = matrix.valuePtr();
  for (int e = 0; e < num_elements(); ++e) {
    const Eigen::Matrix3d local = area_[e] * curl_[e].transpose() * coefficient(e) * curl_[e];
    const auto& t = mesh_.triangles[e];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const int slot = slots_[e][3 * i + j];
        if (slot >= 0) values[slot] += dofs_.sign[t[i]] * dofs_.sign[t[j]] * local(i, j);
      }
  }
  return matrix;
}

Vector FemSpace::load(const Vector& element_density) const {
  Vector nodal = Vector::Zero(num_nodes());
  for (int e = 0; e < num_elements(); ++e) {
    if (element_density[e] == 0.0) continue;
    const double share = element_density[e] * area_[e] / 3.0;
    for (int v : mesh_.triangles[e]) nodal[v] += share;
  }
  return nodal;
}

Vector residual(const FemSpace& space, const MaterialField& field, const Vector& nodal_load, const Vector& u) {
  Vector nodal = -nodal_load;
  for (int e = 0; e < space.num_elements(); ++e) {
    const Vec2 h = field.h(e, space.curl(u, e));
    const Eigen::Vector3d local = space.area(e) * space.curl_matrix(e).transpose() * h;
    const auto& t = space.mesh().triangles[e];
    for (int i = 0; i < 3; ++i) nodal[t[i]] += local[i];
  }
  return space.reduce(nodal);
}

SparseMatrix jacobian(const FemSpace& space, const MaterialField& field, const Vector& u) {
  return space.assemble([&](int e) { return field.dh_db(e, space.curl(u, e)); });
}

Vector solve_spd(const SparseMatrix& matrix, const Vector& rhs) {
  if (matrix.rows() == 0) return Vector::Zero(0);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(matrix);
  if (ldlt.info() != Eigen::Success) throw SolverError("sparse factorization failed");
  const Vector d = ldlt.vectorD();
  const double scale = d.cwiseAbs().maxCoeff();
  if (!(d.minCoeff() > 1e-14 * scale)) throw SolverError("singular or indefinite system matrix");
  Vector x = ldlt.solve(rhs);
  if (!x.allFinite()) throw SolverError("linear solve produced non-finite values");
  return x;
}

std::pair<Vector, NewtonResult> newton_iterate(const NonlinearSystem& system, Vector x, double reference,
                                               const NewtonOptions& options) {
  NewtonResult result;
  Vector r = system.residual(x);
  double norm = r.norm();
  const double target = options.rel_tol * reference + options.abs_tol;
  result.residuals.push_back(norm);

  for (int it = 0; it < options.max_iter; ++it) {
    if (norm <= target) {
      result.iterations = it;
      return {std::move(x), std::move(result)};
    }
    const Vector dx = solve_spd(system.jacobian(x), -r);
    double step = 1.0;
    for (;;) {
      Vector x_try = x + step * dx;
      Vector r_try = system.residual(x_try);
      const double norm_try = r_try.norm();
      if (norm_try < norm) {
        x = std::move(x_try);
        r = std::move(r_try);
        norm = norm_try;
        break;
      }
      step *= 0.5;
      if (step < options.min_step) {
        // No decrease possible: accept only if already at the roundoff floor.
        if (norm <= 1e-8 * reference + options.abs_tol) {
          result.iterations = it;
          return {std::move(x), std::move(result)};
        }
        throw SolverError("damped Newton: no residual decrease down to the minimum step", norm);
      }
    }
    result.residuals.push_back(norm);
  }
  if (norm <= target) {
    result.iterations = options.max_iter;
    return {std::move(x), std::move(result)};
  }
  throw SolverError("Newton did not converge within the iteration limit", norm);
}

NewtonResult newton_solve(const FemSpace& space, const MaterialField& field, const Vector& nodal_load,
                          const Vector& guess, const NewtonOptions& options) {
  const NonlinearSystem system{
      [&](const Vector& x) { return residual(space, field, nodal_load, space.expand(x)); },
      [&](const Vector& x) { return jacobian(space, field, space.expand(x)); }};
  const double reference = residual(space, field, nodal_load, Vector::Zero(space.num_nodes())).norm();
  auto [x, result] = newton_iterate(system, space.restrict_values(guess), reference, options);
  result.u = space.expand(x);
  return result;
}

Vector adjoint_solve(const FemSpace& space, const MaterialField& field, const Vector& state, const Vector& nodal_rhs) {
  const Vector rhs = space.reduce(nodal_rhs);
  if (rhs.isZero(0.0)) return Vector::Zero(space.num_nodes());
  return space.expand(solve_spd(jacobian(space, field, state), rhs));
}

}  // namespace rto
