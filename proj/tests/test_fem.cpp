#include <gtest/gtest.h>

#include <cmath>

#include "rto/errors.hpp"
#include "rto/fem.hpp"

using namespace rto;

namespace {

constexpr double kPi = std::numbers::pi;

MaterialField uniform_field(const Mesh& mesh, const MaterialLaw& law) {
  MaterialField field;
  field.laws = {law};
  field.element_law.assign(mesh.num_elements(), 0);
  return field;
}

Vector nodal_function(const Mesh& mesh, const std::function<double(const Vec2&)>& f) {
  Vector out(mesh.num_nodes());
  for (int v = 0; v < mesh.num_nodes(); ++v) out[v] = f(mesh.vertices[v]);
  return out;
}

// H1 seminorm of u_h - u with a three-point edge-midpoint rule per element.
double h1_error(const FemSpace& space, const Vector& uh, const std::function<Vec2(const Vec2&)>& grad) {
  double sum = 0.0;
  const Mesh& mesh = space.mesh();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Vec2 c = space.curl(uh, e);
    const Vec2 gh(-c.y(), c.x());
    const auto& t = mesh.triangles[e];
    for (int k = 0; k < 3; ++k) {
      const Vec2 mid = 0.5 * (mesh.vertices[t[k]] + mesh.vertices[t[(k + 1) % 3]]);
      sum += space.area(e) / 3.0 * (gh - grad(mid)).squaredNorm();
    }
  }
  return std::sqrt(sum);
}

PolarLayout ring_layout(double sector, int base) {
  PolarLayout layout;
  layout.sector_angle = sector;
  for (int i = 1; i <= 12; ++i) {
    layout.radii.push_back(0.1 * i);
    layout.divisions.push_back(i < 4 ? base : 2 * base);
  }
  return layout;
}

}  // namespace

TEST(ElementCurl, LinearFields) {
  const Mesh mesh = build_square_mesh(3);
  struct Case {
    std::function<double(const Vec2&)> f;
    Vec2 expected;
  };
  const Case cases[] = {{[](const Vec2& p) { return p.x(); }, Vec2(0, -1)},
                        {[](const Vec2& p) { return p.y(); }, Vec2(1, 0)},
                        {[](const Vec2& p) { return 3 * p.x() + 2 * p.y(); }, Vec2(2, -3)}};
  for (const Case& c : cases) {
    for (const FluxSample& s : element_curl(nodal_function(mesh, c.f), mesh))
      EXPECT_LE((s.b - c.expected).norm(), 1e-12);
  }
}

TEST(ElementCurl, AgreesWithSpace) {
  const Mesh mesh = build_benchmark_mesh(GeometryConfig{.target_nodes = 600});
  const FemSpace space(mesh);
  const Vector f = nodal_function(mesh, [](const Vec2& p) { return std::sin(40 * p.x()) * p.y(); });
  for (const FluxSample& s : element_curl(f, mesh)) EXPECT_LE((s.b - space.curl(f, s.element)).norm(), 1e-9);
}

TEST(DofMap, EliminatesDirichletAndSlaves) {
  const Mesh mesh = build_polar_mesh(ring_layout(kPi / 4, 4));
  const DofMap map = build_dof_map(mesh);
  for (int v : mesh.dirichlet_nodes()) EXPECT_EQ(map.dof[v], -1);
  for (const auto& pair : mesh.pairs) {
    EXPECT_EQ(map.dof[pair.master], map.dof[pair.slave]);
    if (map.dof[pair.master] >= 0) EXPECT_EQ(map.sign[pair.slave], -1.0);
  }
  EXPECT_EQ(map.dof[0], -1);
}

TEST(Newton, ZeroSourceGivesZero) {
  const Mesh mesh = build_square_mesh(6);
  const FemSpace space(mesh);
  const NewtonResult r = newton_solve(space, uniform_field(mesh, MaterialLaw::linear(1.0)), Vector::Zero(mesh.num_nodes()),
                                      Vector::Zero(mesh.num_nodes()));
  EXPECT_TRUE(r.u.isZero(0.0));
}

TEST(Newton, ManufacturedSolutionConvergesInH1) {
  auto exact_grad = [](const Vec2& p) {
    return Vec2(kPi * std::cos(kPi * p.x()) * std::sin(kPi * p.y()), kPi * std::sin(kPi * p.x()) * std::cos(kPi * p.y()));
  };
  std::vector<double> errors;
  for (int cells : {8, 16, 32}) {
    const Mesh mesh = build_square_mesh(cells);
    const FemSpace space(mesh);
    const Vector density = [&] {
      Vector d(mesh.num_elements());
      for (int e = 0; e < mesh.num_elements(); ++e) {
        const Vec2 c = mesh.centroid(e);
        d[e] = 2 * kPi * kPi * std::sin(kPi * c.x()) * std::sin(kPi * c.y());
      }
      return d;
    }();
    const NewtonResult r = newton_solve(space, uniform_field(mesh, MaterialLaw::linear(1.0)), space.load(density),
                                        Vector::Zero(mesh.num_nodes()));
    errors.push_back(h1_error(space, r.u, exact_grad));
  }
  for (std::size_t i = 1; i < errors.size(); ++i) EXPECT_GE(std::log2(errors[i - 1] / errors[i]), 0.9);
}

TEST(Newton, NonlinearIronConvergesMonotonically) {
  const Mesh mesh = build_square_mesh(16, 0.1);
  const FemSpace space(mesh);
  const MaterialField field = uniform_field(mesh, MaterialLaw::iron());
  // Strong enough to drive the centre into saturation.
  const Vector density = Vector::Constant(mesh.num_elements(), 2e8);
  NewtonOptions options;
  options.rel_tol = 1e-8;
  options.max_iter = 30;
  const NewtonResult r = newton_solve(space, field, space.load(density), Vector::Zero(mesh.num_nodes()), options);
  double peak = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) peak = std::max(peak, space.curl(r.u, e).norm());
  EXPECT_GT(peak, 2.2);
  EXPECT_LE(r.iterations, 30);
  for (std::size_t i = 1; i < r.residuals.size(); ++i) EXPECT_LT(r.residuals[i], r.residuals[i - 1]);
  EXPECT_LE(r.residuals.back(), 1e-8 * r.residuals.front() + 1e-12);
}

TEST(Newton, IterationLimitRaisesSolverError) {
  const Mesh mesh = build_square_mesh(8, 0.1);
  const FemSpace space(mesh);
  NewtonOptions options;
  options.max_iter = 1;
  options.rel_tol = 1e-14;
  const Vector density = Vector::Constant(mesh.num_elements(), 2e8);
  try {
    newton_solve(space, uniform_field(mesh, MaterialLaw::iron()), space.load(density), Vector::Zero(mesh.num_nodes()),
                 options);
    FAIL() << "expected SolverError";
  } catch (const SolverError& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(Newton, SingularSystemRaisesSolverError) {
  // No Dirichlet data: the pure Neumann problem is singular.
  Mesh mesh = build_square_mesh(4);
  mesh.boundary.clear();
  const FemSpace space(mesh);
  const Vector density = Vector::Constant(mesh.num_elements(), 1.0);
  EXPECT_THROW(newton_solve(space, uniform_field(mesh, MaterialLaw::linear(1.0)), space.load(density),
                            Vector::Zero(mesh.num_nodes())),
               SolverError);
}

TEST(Jacobian, SymmetricAtSaturatedState) {
  const Mesh mesh = build_polar_mesh(ring_layout(kPi / 4, 4));
  const FemSpace space(mesh);
  const MaterialField field = uniform_field(mesh, MaterialLaw::iron());
  const Vector u = space.expand(space.restrict_values(nodal_function(mesh, [](const Vec2& p) { return 3 * p.x() * p.y(); })));
  const SparseMatrix j = jacobian(space, field, u);
  const SparseMatrix jt = j.transpose();
  EXPECT_LE((j - jt).norm(), 1e-12 * j.norm());
}

TEST(Antiperiodic, SectorMatchesFullDisk) {
  const int poles = 8;
  auto density_at = [&](const Vec2& c) {
    const double theta = std::atan2(c.y(), c.x()) + (c.y() < 0 ? 2 * kPi : 0.0);
    const int pole = static_cast<int>(std::floor(theta / (2 * kPi / poles)));
    const double local = theta - pole * 2 * kPi / poles;
    const double value = local < kPi / 8 && c.norm() > 0.4 && c.norm() < 0.8 ? 1e6 : 0.0;
    return pole % 2 == 0 ? value : -value;
  };
  auto solve = [&](const Mesh& mesh, const MaterialLaw& law) {
    const FemSpace space(mesh);
    Vector d(mesh.num_elements());
    for (int e = 0; e < mesh.num_elements(); ++e) d[e] = density_at(mesh.centroid(e));
    return newton_solve(space, uniform_field(mesh, law), space.load(d), Vector::Zero(mesh.num_nodes())).u;
  };
  const Mesh sector = build_polar_mesh(ring_layout(2 * kPi / poles, 4));
  const Mesh disk = build_polar_mesh(ring_layout(2 * kPi, 4 * poles));
  for (const MaterialLaw& law : {MaterialLaw::linear(1000.0), MaterialLaw::iron()}) {
    const Vector us = solve(sector, law), ud = solve(disk, law);
    double scale = ud.cwiseAbs().maxCoeff(), worst = 0.0;
    for (int v = 0; v < sector.num_nodes(); ++v) {
      int match = -1;
      for (int w = 0; w < disk.num_nodes(); ++w)
        if ((disk.vertices[w] - sector.vertices[v]).norm() < 1e-12) match = w;
      ASSERT_GE(match, 0);
      worst = std::max(worst, std::abs(us[v] - ud[match]));
    }
    EXPECT_LE(worst, 1e-8 * scale);
    for (const auto& pair : sector.pairs) EXPECT_EQ(us[pair.slave], -us[pair.master]);
  }
}

TEST(Adjoint, ZeroRightHandSide) {
  const Mesh mesh = build_square_mesh(4);
  const FemSpace space(mesh);
  const Vector p = adjoint_solve(space, uniform_field(mesh, MaterialLaw::linear(1.0)), Vector::Zero(mesh.num_nodes()),
                                 Vector::Zero(mesh.num_nodes()));
  EXPECT_TRUE(p.isZero(0.0));
}

namespace {

// Quadratic output functional on the upper half of the square and its
// nodal gradient.
double output(const FemSpace& space, const Vector& u) {
  double value = 0.0;
  for (int e = 0; e < space.num_elements(); ++e)
    if (space.mesh().centroid(e).y() > 0.05) value += space.area(e) * space.curl(u, e).squaredNorm();
  return value;
}

Vector output_gradient(const FemSpace& space, const Vector& u) {
  Vector g = Vector::Zero(space.num_nodes());
  for (int e = 0; e < space.num_elements(); ++e) {
    if (space.mesh().centroid(e).y() <= 0.05) continue;
    const Eigen::Vector3d local = 2 * space.area(e) * space.curl_matrix(e).transpose() * space.curl(u, e);
    const auto& t = space.mesh().triangles[e];
    for (int i = 0; i < 3; ++i) g[t[i]] += local[i];
  }
  return g;
}

double adjoint_fd_error(const MaterialLaw& law, double density_scale, double step) {
  const Mesh mesh = build_square_mesh(10, 0.1);
  const FemSpace space(mesh);
  const MaterialField field = uniform_field(mesh, law);
  Vector base(mesh.num_elements()), direction(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const Vec2 c = mesh.centroid(e);
    base[e] = density_scale * (1.0 + c.x() * 10);
    direction[e] = density_scale * std::cos(30 * c.y());
  }
  auto j_of = [&](double t) {
    const Vector u = newton_solve(space, field, space.load(base + t * direction), Vector::Zero(mesh.num_nodes()),
                                  {.rel_tol = 1e-14, .abs_tol = 0.0})
                         .u;
    return output(space, u);
  };
  const Vector u = newton_solve(space, field, space.load(base), Vector::Zero(mesh.num_nodes()), {.rel_tol = 1e-14, .abs_tol = 0.0}).u;
  const Vector p = adjoint_solve(space, field, u, output_gradient(space, u));
  const double adjoint = p.dot(space.load(direction));
  const double fd = (j_of(step) - j_of(-step)) / (2 * step);
  return std::abs(adjoint - fd) / std::abs(fd);
}

}  // namespace

TEST(Adjoint, LinearDirectionalDerivativeMatchesFD) {
  EXPECT_LE(adjoint_fd_error(MaterialLaw::linear(1000.0), 1e6, 1e-3), 1e-5);
}

TEST(Adjoint, NonlinearDirectionalDerivativeMatchesFD) {
  double best = 1.0;
  for (double step : {1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4}) best = std::min(best, adjoint_fd_error(MaterialLaw::iron(), 2e8, step));
  EXPECT_LE(best, 1e-4);
}
