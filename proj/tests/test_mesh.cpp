#include <gtest/gtest.h>

#include <map>
#include <set>
#include <sstream>

#include "rto/errors.hpp"
#include "rto/mesh.hpp"

using namespace rto;

namespace {

// Every interior edge must be shared by two triangles, every other edge must
// carry a boundary tag.
void expect_conforming(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : mesh.triangles)
    for (int k = 0; k < 3; ++k) {
      int a = t[k], b = t[(k + 1) % 3];
      if (a > b) std::swap(a, b);
      ++count[{a, b}];
    }
  std::set<std::pair<int, int>> tagged;
  for (const auto& e : mesh.boundary) tagged.insert({std::min(e.nodes[0], e.nodes[1]), std::max(e.nodes[0], e.nodes[1])});
  for (const auto& [edge, n] : count) {
    ASSERT_LE(n, 2);
    if (n == 1) EXPECT_TRUE(tagged.count(edge)) << edge.first << "-" << edge.second;
  }
  for (const auto& edge : tagged) EXPECT_EQ(count[edge], 1);
}

double total_area(const Mesh& mesh) {
  double a = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) a += mesh.signed_area(e);
  return a;
}

}  // namespace

TEST(BenchmarkMesh, NodeCountAndLabels) {
  GeometryConfig config;
  const Mesh mesh = build_benchmark_mesh(config);
  EXPECT_GE(mesh.num_nodes(), 2000);
  EXPECT_LE(mesh.num_nodes(), 8000);
  std::set<Region> seen(mesh.regions.begin(), mesh.regions.end());
  EXPECT_EQ(static_cast<int>(seen.size()), kRegionCount);
  EXPECT_NO_THROW(validate(mesh));
  expect_conforming(mesh);
}

TEST(BenchmarkMesh, PairingIsPoleRotation) {
  const Mesh mesh = build_benchmark_mesh(GeometryConfig{});
  const double c = std::cos(mesh.sector_angle), s = std::sin(mesh.sector_angle);
  ASSERT_FALSE(mesh.pairs.empty());
  for (const auto& pair : mesh.pairs) {
    EXPECT_EQ(pair.sign, -1.0);
    const Vec2& m = mesh.vertices[pair.master];
    const Vec2 rotated(c * m.x() - s * m.y(), s * m.x() + c * m.y());
    EXPECT_LE((rotated - mesh.vertices[pair.slave]).norm(), 1e-9);
  }
}

TEST(BenchmarkMesh, SectorAreaMatches) {
  GeometryConfig config;
  const Mesh mesh = build_benchmark_mesh(config);
  const double exact = 0.5 * config.sector_angle * config.stator_outer_radius * config.stator_outer_radius;
  EXPECT_NEAR(total_area(mesh), exact, 2e-3 * exact);
}

TEST(BenchmarkMesh, DegenerateGeometryRejected) {
  GeometryConfig config;
  config.air_gap_outer_radius = config.design_outer_radius;
  EXPECT_THROW(build_benchmark_mesh(config), ConfigError);
  GeometryConfig shrunk;
  shrunk.shaft_radius = 0.06;
  EXPECT_THROW(build_benchmark_mesh(shrunk), ConfigError);
}

TEST(BenchmarkMesh, TargetControlsSize) {
  GeometryConfig config;
  config.target_nodes = 1000;
  const Mesh small = build_benchmark_mesh(config);
  EXPECT_GE(small.num_nodes(), 500);
  EXPECT_LE(small.num_nodes(), 2000);
}

TEST(PolarMesh, FullDiskHasNoPairs) {
  PolarLayout layout;
  layout.radii = {0.5, 1.0, 1.5, 2.0};
  layout.divisions = {8, 16, 16, 32};
  const Mesh mesh = build_polar_mesh(layout);
  EXPECT_TRUE(mesh.pairs.empty());
  EXPECT_NO_THROW(validate(mesh));
  expect_conforming(mesh);
  EXPECT_EQ(mesh.dirichlet_nodes().size(), 32u);
}

TEST(PolarMesh, RejectsBadDivisions) {
  PolarLayout layout;
  layout.radii = {1.0, 2.0};
  layout.divisions = {8, 24};
  EXPECT_THROW(build_polar_mesh(layout), ConfigError);
}

TEST(Validate, DetectsInvertedElement) {
  Mesh mesh = build_square_mesh(2);
  std::swap(mesh.triangles[0][1], mesh.triangles[0][2]);
  EXPECT_THROW(validate(mesh), ConfigError);
}

TEST(Validate, DetectsBrokenPairing) {
  Mesh mesh = build_benchmark_mesh(GeometryConfig{.target_nodes = 800});
  mesh.pairs.pop_back();
  EXPECT_THROW(validate(mesh), ConfigError);
}

TEST(Refinement, StaysConformingAndPreservesArea) {
  const Mesh mesh = build_benchmark_mesh(GeometryConfig{.target_nodes = 1500});
  const Vec2 center(0.035 * std::cos(0.4), 0.035 * std::sin(0.4));
  double h = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) h = std::max(h, mesh.diameter(e));
  const RefinedMesh refined = refine_around(mesh, center, 0.004, 0.0003);
  EXPECT_NO_THROW(validate(refined.mesh));
  expect_conforming(refined.mesh);
  EXPECT_NEAR(total_area(refined.mesh), total_area(mesh), 1e-12);
  ASSERT_EQ(refined.origin.size(), refined.mesh.triangles.size());
  for (int e = 0; e < refined.mesh.num_elements(); ++e) {
    EXPECT_EQ(refined.mesh.regions[e], mesh.regions[refined.origin[e]]);
    if ((refined.mesh.centroid(e) - center).norm() < 0.004) EXPECT_LE(refined.mesh.diameter(e), 0.0003);
  }
  EXPECT_GT(refined.mesh.num_elements(), mesh.num_elements());
}

TEST(Refinement, SplitsDirichletEdges) {
  const Mesh mesh = build_square_mesh(4);
  const RefinedMesh refined = refine_around(mesh, Vec2(0.0, 0.5), 0.2, 0.05);
  EXPECT_NO_THROW(validate(refined.mesh));
  expect_conforming(refined.mesh);
  EXPECT_GT(refined.mesh.dirichlet_nodes().size(), mesh.dirichlet_nodes().size());
}

TEST(Serialization, RoundTrip) {
  const Mesh mesh = build_benchmark_mesh(GeometryConfig{.target_nodes = 800});
  std::stringstream buffer;
  write_mesh(buffer, mesh);
  const Mesh back = read_mesh(buffer);
  ASSERT_EQ(back.num_nodes(), mesh.num_nodes());
  ASSERT_EQ(back.num_elements(), mesh.num_elements());
  EXPECT_EQ(back.triangles, mesh.triangles);
  EXPECT_EQ(back.regions, mesh.regions);
  EXPECT_EQ(back.pairs.size(), mesh.pairs.size());
  EXPECT_EQ(back.sector_angle, mesh.sector_angle);
  for (int v = 0; v < mesh.num_nodes(); ++v) EXPECT_EQ(back.vertices[v], mesh.vertices[v]);
}

TEST(Serialization, RejectsWrongVersion) {
  std::stringstream buffer("RTOMESH0\nsector_angle 1\n");
  EXPECT_THROW(read_mesh(buffer), ConfigError);
}
