#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace rto {

using Vec2 = Eigen::Vector2d;

enum class Region : std::uint8_t {
  design,
  stator_iron,
  magnet1,
  magnet2,
  coil_A,
  coil_B,
  coil_C,
  air_gap,
  shaft,
};
inline constexpr int kRegionCount = 9;

enum class BoundaryTag : std::uint8_t {
  outer_dirichlet,
  antiperiodic_master,
  antiperiodic_slave,
};

std::string_view to_string(Region region);
std::string_view to_string(BoundaryTag tag);
Region region_from_string(std::string_view name);
BoundaryTag boundary_tag_from_string(std::string_view name);

struct BoundaryEdge {
  std::array<int, 2> nodes;
  BoundaryTag tag;
};

/// Slave node value equals `sign` times master node value.
struct PeriodicPair {
  int master;
  int slave;
  double sign = -1.0;
};

/// Conforming triangulation with region labels and boundary metadata.
/// Coordinates are in meters. `sector_angle` is the rotation that maps the
/// master boundary onto the slave boundary (2*pi for meshes without pairing).
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Region> regions;
  std::vector<BoundaryEdge> boundary;
  std::vector<PeriodicPair> pairs;
  double sector_angle = 2.0 * std::numbers::pi;

  int num_nodes() const { return static_cast<int>(vertices.size()); }
  int num_elements() const { return static_cast<int>(triangles.size()); }

  double signed_area(int element) const;
  Vec2 centroid(int element) const;
  /// Longest edge length of an element.
  double diameter(int element) const;
  /// Nodes on an `outer_dirichlet` edge.
  std::vector<int> dirichlet_nodes() const;
};

/// Throws ConfigError when a structural invariant is violated: non-positive
/// element area, label count mismatch, or an antiperiodic pairing that is not
/// a bijection consistent with rotation by `sector_angle`.
void validate(const Mesh& mesh, double pairing_tolerance = 1e-9);

// --- structured polar meshes -------------------------------------------------

/// Rings of nodes around a center node. Adjacent rings must have equal
/// division counts or differ by a factor of two.
struct PolarLayout {
  double sector_angle = 2.0 * std::numbers::pi;
  std::vector<double> radii;
  std::vector<int> divisions;
};

/// Full disks get an outer Dirichlet ring. Sectors additionally tag the
/// straight edges as antiperiodic master (angle 0) and slave (sector angle),
/// with the center node paired to itself.
Mesh build_polar_mesh(const PolarLayout& layout);

/// Dimensions of the one-pole benchmark. Lengths in meters, angles in radians.
struct GeometryConfig {
  double sector_angle = std::numbers::pi / 4.0;
  double shaft_radius = 0.020;
  double design_outer_radius = 0.050;
  double air_gap_outer_radius = 0.051;
  double stator_outer_radius = 0.080;

  double magnet_inner_radius = 0.040;
  double magnet_outer_radius = 0.045;
  // Angular extents of the two magnet pockets, measured from the master edge.
  std::array<double, 2> magnet1_angles{3.75 * std::numbers::pi / 180.0, 18.75 * std::numbers::pi / 180.0};
  std::array<double, 2> magnet2_angles{26.25 * std::numbers::pi / 180.0, 41.25 * std::numbers::pi / 180.0};

  double coil_inner_radius = 0.053;
  double coil_outer_radius = 0.068;
  double coil_half_width = 5.0 * std::numbers::pi / 180.0;
  // Slot centers in angular order; slots are assigned to coil_A, coil_B, coil_C.
  std::array<double, 3> coil_centers{7.5 * std::numbers::pi / 180.0, 22.5 * std::numbers::pi / 180.0,
                                     37.5 * std::numbers::pi / 180.0};

  int air_gap_layers = 3;
  int target_nodes = 4000;
};

/// Throws ConfigError for degenerate or inconsistent dimensions.
void validate(const GeometryConfig& config);

/// Structured polar mesh of one pole with all nine region labels.
Mesh build_benchmark_mesh(const GeometryConfig& config);

/// Region of a point of the benchmark geometry (polar classification).
Region classify_benchmark_point(const GeometryConfig& config, const Vec2& point);

// --- auxiliary meshes ---------------------------------------------------------

/// Uniform triangulation of the square [x0, x0+size] x [y0, y0+size] with
/// `cells` subdivisions per side; all boundary edges are Dirichlet.
Mesh build_square_mesh(int cells, double size = 1.0, Vec2 origin = Vec2::Zero());

/// Relabels every element from its centroid.
void assign_regions(Mesh& mesh, const std::function<Region(const Vec2&)>& classify);

// --- local refinement ---------------------------------------------------------

struct RefinedMesh {
  Mesh mesh;
  /// Element of the input mesh each refined element descends from.
  std::vector<int> origin;
};

/// Longest-edge (Rivara) bisection of every element within `radius` of
/// `center` until its diameter is at most `target_size`. The result stays
/// conforming; outer Dirichlet edges are split in place. Refinement that
/// would split an antiperiodic edge throws UsageError.
RefinedMesh refine_around(const Mesh& mesh, const Vec2& center, double radius, double target_size);

// --- serialization ("RTOMESH1") -------------------------------------------------

inline constexpr std::string_view kMeshFormatVersion = "RTOMESH1";

void write_mesh(std::ostream& out, const Mesh& mesh);
Mesh read_mesh(std::istream& in);
void save_mesh(const std::string& path, const Mesh& mesh);
Mesh load_mesh(const std::string& path);

}  // namespace rto
