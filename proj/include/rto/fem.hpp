#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "rto/materials.hpp"
#include "rto/mesh.hpp"

namespace rto {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using CurlMatrix = Eigen::Matrix<double, 2, 3>;

/// Maps nodes to unknowns. Dirichlet nodes (and nodes paired with
/// themselves) get dof -1; antiperiodic slaves share the master's dof with
/// sign -1.
struct DofMap {
  std::vector<int> dof;
  std::vector<double> sign;
  int size = 0;
};

DofMap build_dof_map(const Mesh& mesh);

struct FluxSample {
  int element;
  Vec2 b;
};

/// curl of the P1 interpolant, one sample per element.
std::vector<FluxSample> element_curl(const Vector& field, const Mesh& mesh);

/// P1 space on a mesh: element geometry, constraint elimination and a fixed
/// sparsity pattern for the reduced system.
class FemSpace {
 public:
  explicit FemSpace(Mesh mesh);

  const Mesh& mesh() const { return mesh_; }
  const DofMap& dofs() const { return dofs_; }
  int num_dofs() const { return dofs_.size; }
  int num_nodes() const { return mesh_.num_nodes(); }
  int num_elements() const { return mesh_.num_elements(); }
  double area(int e) const { return area_[e]; }
  /// Maps the three vertex values of element e to its curl.
  const CurlMatrix& curl_matrix(int e) const { return curl_[e]; }

  Vec2 curl(const Vector& nodal, int e) const;
  Vector expand(const Vector& reduced) const;
  /// Reduced coordinates of a nodal field that satisfies the constraints.
  Vector restrict_values(const Vector& nodal) const;
  /// Transpose of `expand`: sums nodal load entries into the unknowns.
  Vector reduce(const Vector& nodal_load) const;

  /// Reduced matrix of sum_e area_e C_e^T A_e C_e.
  SparseMatrix assemble(const std::function<Mat2(int)>& coefficient) const;
  /// Nodal load of a piecewise constant density (one value per element).
  Vector load(const Vector& element_density) const;

 private:
  Mesh mesh_;
  DofMap dofs_;
  std::vector<double> area_;
  std::vector<CurlMatrix> curl_;
  SparseMatrix pattern_;
  std::vector<std::array<int, 9>> slots_;
};

struct NewtonOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  int max_iter = 50;
  double min_step = std::ldexp(1.0, -20);
};

struct NewtonResult {
  Vector u;
  std::vector<double> residuals;
  int iterations = 0;
};

/// Reduced residual sum_e area_e C_e^T h_e(C_e u) - load.
Vector residual(const FemSpace& space, const MaterialField& field, const Vector& nodal_load, const Vector& u);
/// Reduced Jacobian of `residual`.
SparseMatrix jacobian(const FemSpace& space, const MaterialField& field, const Vector& u);

/// Reduced residual and Jacobian of a nonlinear system in reduced unknowns.
struct NonlinearSystem {
  std::function<Vector(const Vector&)> residual;
  std::function<SparseMatrix(const Vector&)> jacobian;
};

/// Damped Newton in reduced unknowns: full steps halved until the residual
/// norm decreases. Converged when the norm is at most
/// rel_tol * reference + abs_tol.
std::pair<Vector, NewtonResult> newton_iterate(const NonlinearSystem& system, Vector x, double reference,
                                               const NewtonOptions& options);

/// Damped Newton for the quasilinear problem. Converged when the reduced
/// residual norm drops to rel_tol times the residual at zero plus abs_tol.
NewtonResult newton_solve(const FemSpace& space, const MaterialField& field, const Vector& nodal_load,
                          const Vector& guess, const NewtonOptions& options = {});

/// Solves J(u)^T p = reduce(rhs) and returns p as a nodal field.
Vector adjoint_solve(const FemSpace& space, const MaterialField& field, const Vector& state, const Vector& nodal_rhs);

/// Direct solve of a reduced SPD system; throws SolverError if singular.
Vector solve_spd(const SparseMatrix& matrix, const Vector& rhs);

}  // namespace rto
