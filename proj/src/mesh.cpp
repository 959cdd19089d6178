#include "rto/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "rto/errors.hpp"

namespace rto {
namespace {

constexpr std::array<std::string_view, kRegionCount> kRegionNames{
    "design", "stator_iron", "magnet1", "magnet2", "coil_A", "coil_B", "coil_C", "air_gap", "shaft"};
constexpr std::array<std::string_view, 3> kTagNames{"outer_dirichlet", "antiperiodic_master",
                                                    "antiperiodic_slave"};

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

double polar_angle(const Vec2& p) {
  double theta = std::atan2(p.y(), p.x());
  // Points of the sector sit in [0, 2pi); tiny negative angles come from
  // roundoff on the master edge.
  if (theta < -1e-12) theta += 2.0 * std::numbers::pi;
  return std::max(theta, 0.0);
}

void orient_ccw(Mesh& mesh) {
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (mesh.signed_area(e) < 0.0) std::swap(mesh.triangles[e][1], mesh.triangles[e][2]);
  }
}

}  // namespace

std::string_view to_string(Region region) { return kRegionNames[static_cast<int>(region)]; }
std::string_view to_string(BoundaryTag tag) { return kTagNames[static_cast<int>(tag)]; }

Region region_from_string(std::string_view name) {
  for (int i = 0; i < kRegionCount; ++i)
    if (kRegionNames[i] == name) return static_cast<Region>(i);
  throw ConfigError("unknown region label '" + std::string(name) + "'");
}

BoundaryTag boundary_tag_from_string(std::string_view name) {
  for (int i = 0; i < 3; ++i)
    if (kTagNames[i] == name) return static_cast<BoundaryTag>(i);
  throw ConfigError("unknown boundary tag '" + std::string(name) + "'");
}

double Mesh::signed_area(int element) const {
  const auto& t = triangles[element];
  const Vec2 d1 = vertices[t[1]] - vertices[t[0]];
  const Vec2 d2 = vertices[t[2]] - vertices[t[0]];
  return 0.5 * (d1.x() * d2.y() - d1.y() * d2.x());
}

Vec2 Mesh::centroid(int element) const {
  const auto& t = triangles[element];
  return (vertices[t[0]] + vertices[t[1]] + vertices[t[2]]) / 3.0;
}

double Mesh::diameter(int element) const {
  const auto& t = triangles[element];
  double d = 0.0;
  for (int k = 0; k < 3; ++k) d = std::max(d, (vertices[t[k]] - vertices[t[(k + 1) % 3]]).norm());
  return d;
}

std::vector<int> Mesh::dirichlet_nodes() const {
  std::set<int> nodes;
  for (const auto& edge : boundary)
    if (edge.tag == BoundaryTag::outer_dirichlet) nodes.insert(edge.nodes.begin(), edge.nodes.end());
  return {nodes.begin(), nodes.end()};
}

void validate(const Mesh& mesh, double pairing_tolerance) {
  if (mesh.regions.size() != mesh.triangles.size())
    throw ConfigError("mesh: region label count does not match element count");
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int v : mesh.triangles[e])
      if (v < 0 || v >= mesh.num_nodes()) throw ConfigError("mesh: element references missing vertex");
    if (!(mesh.signed_area(e) > 0.0))
      throw ConfigError("mesh: element " + std::to_string(e) + " has non-positive area");
  }

  std::set<int> master_nodes, slave_nodes;
  for (const auto& edge : mesh.boundary) {
    if (edge.tag == BoundaryTag::antiperiodic_master) master_nodes.insert(edge.nodes.begin(), edge.nodes.end());
    if (edge.tag == BoundaryTag::antiperiodic_slave) slave_nodes.insert(edge.nodes.begin(), edge.nodes.end());
  }
  std::set<int> seen_master, seen_slave;
  const double c = std::cos(mesh.sector_angle), s = std::sin(mesh.sector_angle);
  for (const auto& pair : mesh.pairs) {
    if (!master_nodes.count(pair.master) || !slave_nodes.count(pair.slave))
      throw ConfigError("mesh: antiperiodic pair references a node off the tagged boundaries");
    if (!seen_master.insert(pair.master).second || !seen_slave.insert(pair.slave).second)
      throw ConfigError("mesh: antiperiodic pairing is not one-to-one");
    const Vec2& m = mesh.vertices[pair.master];
    const Vec2 rotated(c * m.x() - s * m.y(), s * m.x() + c * m.y());
    if ((rotated - mesh.vertices[pair.slave]).norm() > pairing_tolerance)
      throw ConfigError("mesh: antiperiodic pair is not related by the pole rotation");
  }
  if (seen_master != master_nodes || seen_slave != slave_nodes)
    throw ConfigError("mesh: antiperiodic pairing does not cover the tagged boundaries");
}

// --- polar meshes -------------------------------------------------------------

Mesh build_polar_mesh(const PolarLayout& layout) {
  const std::size_t rings = layout.radii.size();
  if (rings == 0 || layout.divisions.size() != rings) throw ConfigError("polar mesh: ring data mismatch");
  const bool full = std::abs(layout.sector_angle - 2.0 * std::numbers::pi) < 1e-12;
  if (!(layout.sector_angle > 0.0) || layout.sector_angle > 2.0 * std::numbers::pi + 1e-12)
    throw ConfigError("polar mesh: sector angle out of range");
  for (std::size_t i = 0; i < rings; ++i) {
    if (layout.divisions[i] < (full ? 3 : 1)) throw ConfigError("polar mesh: too few divisions");
    if (i == 0 ? !(layout.radii[0] > 0.0) : !(layout.radii[i] > layout.radii[i - 1]))
      throw ConfigError("polar mesh: radii must be positive and strictly increasing");
    if (i > 0) {
      const int a = layout.divisions[i - 1], b = layout.divisions[i];
      if (a != b && a != 2 * b && b != 2 * a) throw ConfigError("polar mesh: adjacent ring divisions must match or double");
    }
  }

  Mesh mesh;
  mesh.sector_angle = layout.sector_angle;
  mesh.vertices.emplace_back(0.0, 0.0);
  std::vector<int> offset(rings);
  for (std::size_t i = 0; i < rings; ++i) {
    offset[i] = mesh.num_nodes();
    const int m = layout.divisions[i];
    const int count = full ? m : m + 1;
    for (int j = 0; j < count; ++j) {
      // The last node of a sector sits exactly on the rotated image of the first.
      const double theta = (!full && j == m) ? layout.sector_angle : layout.sector_angle * j / m;
      mesh.vertices.emplace_back(layout.radii[i] * std::cos(theta), layout.radii[i] * std::sin(theta));
    }
  }
  if (!full) {
    // Make the slave nodes exact rotations of the master nodes.
    const double c = std::cos(layout.sector_angle), s = std::sin(layout.sector_angle);
    for (std::size_t i = 0; i < rings; ++i) {
      const Vec2 m = mesh.vertices[offset[i]];
      mesh.vertices[offset[i] + layout.divisions[i]] = Vec2(c * m.x() - s * m.y(), s * m.x() + c * m.y());
    }
  }

  auto node = [&](std::size_t ring, int j) {
    const int m = layout.divisions[ring];
    return offset[ring] + (full ? ((j % m) + m) % m : j);
  };

  for (int j = 0; j < layout.divisions[0]; ++j) mesh.triangles.push_back({0, node(0, j), node(0, j + 1)});
  for (std::size_t i = 0; i + 1 < rings; ++i) {
    const int mi = layout.divisions[i], mo = layout.divisions[i + 1];
    if (mi == mo) {
      for (int j = 0; j < mi; ++j) {
        const int a = node(i, j), b = node(i, j + 1), c = node(i + 1, j + 1), d = node(i + 1, j);
        if (j % 2 == 0) {
          mesh.triangles.push_back({a, d, c});
          mesh.triangles.push_back({a, c, b});
        } else {
          mesh.triangles.push_back({a, d, b});
          mesh.triangles.push_back({d, c, b});
        }
      }
    } else if (mo == 2 * mi) {
      for (int j = 0; j < mi; ++j) {
        const int a0 = node(i, j), a1 = node(i, j + 1);
        const int b0 = node(i + 1, 2 * j), b1 = node(i + 1, 2 * j + 1), b2 = node(i + 1, 2 * j + 2);
        mesh.triangles.push_back({a0, b0, b1});
        mesh.triangles.push_back({a0, b1, a1});
        mesh.triangles.push_back({a1, b1, b2});
      }
    } else {
      for (int j = 0; j < mo; ++j) {
        const int c0 = node(i + 1, j), c1 = node(i + 1, j + 1);
        const int a0 = node(i, 2 * j), a1 = node(i, 2 * j + 1), a2 = node(i, 2 * j + 2);
        mesh.triangles.push_back({c0, a0, a1});
        mesh.triangles.push_back({c0, a1, c1});
        mesh.triangles.push_back({c1, a1, a2});
      }
    }
  }
  orient_ccw(mesh);
  mesh.regions.assign(mesh.triangles.size(), Region::design);

  const std::size_t last = rings - 1;
  for (int j = 0; j < layout.divisions[last]; ++j)
    mesh.boundary.push_back({{node(last, j), node(last, j + 1)}, BoundaryTag::outer_dirichlet});
  if (!full) {
    int prev_master = 0, prev_slave = 0;
    mesh.pairs.push_back({0, 0, -1.0});
    for (std::size_t i = 0; i < rings; ++i) {
      const int master = node(i, 0), slave = node(i, layout.divisions[i]);
      mesh.boundary.push_back({{prev_master, master}, BoundaryTag::antiperiodic_master});
      mesh.boundary.push_back({{prev_slave, slave}, BoundaryTag::antiperiodic_slave});
      mesh.pairs.push_back({master, slave, -1.0});
      prev_master = master;
      prev_slave = slave;
    }
  }
  return mesh;
}

void validate(const GeometryConfig& g) {
  if (!(g.sector_angle > 0.0 && g.sector_angle < 2.0 * std::numbers::pi))
    throw ConfigError("geometry: sector angle must lie in (0, 2pi)");
  if (!(g.shaft_radius > 0.0 && g.shaft_radius < g.design_outer_radius &&
        g.design_outer_radius < g.air_gap_outer_radius && g.air_gap_outer_radius < g.stator_outer_radius))
    throw ConfigError("geometry: radii must increase strictly (shaft < design < air gap < stator outer)");
  if (!(g.magnet_inner_radius > g.shaft_radius && g.magnet_inner_radius < g.magnet_outer_radius &&
        g.magnet_outer_radius < g.design_outer_radius))
    throw ConfigError("geometry: magnet pockets must lie inside the design annulus");
  for (const auto& range : {g.magnet1_angles, g.magnet2_angles})
    if (!(range[0] >= 0.0 && range[0] < range[1] && range[1] <= g.sector_angle))
      throw ConfigError("geometry: magnet angular extent outside the pole sector");
  if (!(g.coil_inner_radius > g.air_gap_outer_radius && g.coil_inner_radius < g.coil_outer_radius &&
        g.coil_outer_radius < g.stator_outer_radius))
    throw ConfigError("geometry: coil slots must lie inside the stator");
  for (double center : g.coil_centers)
    if (!(center - g.coil_half_width >= 0.0 && center + g.coil_half_width <= g.sector_angle))
      throw ConfigError("geometry: coil slot outside the pole sector");
  if (g.air_gap_layers < 2) throw ConfigError("geometry: the air gap needs at least two element layers");
  if (g.target_nodes <= 0) throw ConfigError("geometry: target node count must be positive");
}

Region classify_benchmark_point(const GeometryConfig& g, const Vec2& p) {
  const double r = p.norm();
  const double theta = polar_angle(p);
  auto within = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
  if (r < g.shaft_radius) return Region::shaft;
  if (r < g.design_outer_radius) {
    if (within(r, g.magnet_inner_radius, g.magnet_outer_radius)) {
      if (within(theta, g.magnet1_angles[0], g.magnet1_angles[1])) return Region::magnet1;
      if (within(theta, g.magnet2_angles[0], g.magnet2_angles[1])) return Region::magnet2;
    }
    return Region::design;
  }
  if (r < g.air_gap_outer_radius) return Region::air_gap;
  if (within(r, g.coil_inner_radius, g.coil_outer_radius)) {
    constexpr std::array<Region, 3> coils{Region::coil_A, Region::coil_B, Region::coil_C};
    for (int i = 0; i < 3; ++i)
      if (std::abs(theta - g.coil_centers[i]) <= g.coil_half_width) return coils[i];
  }
  return Region::stator_iron;
}

Mesh build_benchmark_mesh(const GeometryConfig& g) {
  validate(g);
  const double area = 0.5 * g.sector_angle * g.stator_outer_radius * g.stator_outer_radius;
  const double h = std::sqrt(area / g.target_nodes);

  std::vector<double> keys{0.0,
                           g.shaft_radius,
                           g.magnet_inner_radius,
                           g.magnet_outer_radius,
                           g.design_outer_radius,
                           g.air_gap_outer_radius,
                           g.coil_inner_radius,
                           g.coil_outer_radius,
                           g.stator_outer_radius};
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

  std::vector<double> radii;
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    const double a = keys[i], b = keys[i + 1];
    const bool gap = a == g.design_outer_radius;
    const int layers = gap ? g.air_gap_layers : std::max(1, static_cast<int>(std::lround((b - a) / h)));
    for (int l = 1; l <= layers; ++l) radii.push_back(l == layers ? b : a + (b - a) * l / layers);
  }

  // Angular counts are 9 * 2^k so that slot edges at multiples of 5 degrees
  // (for the default 45 degree pole) fall on grid lines.
  constexpr int kBase = 9;
  auto level_for = [&](double r) {
    const double ideal = g.sector_angle * r / h;
    return std::max(0, static_cast<int>(std::lround(std::log2(ideal / kBase))));
  };
  std::vector<int> level(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) level[i] = level_for(radii[i]);
  const int gap_level = level_for(0.5 * (g.design_outer_radius + g.air_gap_outer_radius));
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (radii[i] >= g.design_outer_radius - 1e-12 && radii[i] <= g.air_gap_outer_radius + 1e-12) level[i] = gap_level;
  for (std::size_t i = 1; i < radii.size(); ++i) level[i] = std::clamp(level[i], level[i - 1] - 1, level[i - 1] + 1);

  PolarLayout layout;
  layout.sector_angle = g.sector_angle;
  layout.radii = radii;
  for (int l : level) layout.divisions.push_back(kBase << l);

  Mesh mesh = build_polar_mesh(layout);
  assign_regions(mesh, [&](const Vec2& p) { return classify_benchmark_point(g, p); });
  return mesh;
}

Mesh build_square_mesh(int cells, double size, Vec2 origin) {
  if (cells < 1 || !(size > 0.0)) throw ConfigError("square mesh: need at least one cell and positive size");
  Mesh mesh;
  const int n = cells + 1;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) mesh.vertices.emplace_back(origin.x() + size * i / cells, origin.y() + size * j / cells);
  auto id = [n](int i, int j) { return j * n + i; };
  for (int j = 0; j < cells; ++j) {
    for (int i = 0; i < cells; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      } else {
        mesh.triangles.push_back({a, b, d});
        mesh.triangles.push_back({b, c, d});
      }
    }
  }
  for (int i = 0; i < cells; ++i) {
    mesh.boundary.push_back({{id(i, 0), id(i + 1, 0)}, BoundaryTag::outer_dirichlet});
    mesh.boundary.push_back({{id(cells, i), id(cells, i + 1)}, BoundaryTag::outer_dirichlet});
    mesh.boundary.push_back({{id(i + 1, cells), id(i, cells)}, BoundaryTag::outer_dirichlet});
    mesh.boundary.push_back({{id(0, i + 1), id(0, i)}, BoundaryTag::outer_dirichlet});
  }
  mesh.regions.assign(mesh.triangles.size(), Region::design);
  return mesh;
}

void assign_regions(Mesh& mesh, const std::function<Region(const Vec2&)>& classify) {
  mesh.regions.resize(mesh.triangles.size());
  for (int e = 0; e < mesh.num_elements(); ++e) mesh.regions[e] = classify(mesh.centroid(e));
}

// --- longest-edge refinement -----------------------------------------------------

namespace {

class Bisector {
 public:
  explicit Bisector(const Mesh& mesh) : mesh_(mesh), alive_(mesh.triangles.size(), true) {
    origin_.resize(mesh.triangles.size());
    for (int e = 0; e < mesh.num_elements(); ++e) {
      origin_[e] = e;
      link(e);
    }
    for (const auto& edge : mesh.boundary) boundary_[edge_key(edge.nodes[0], edge.nodes[1])] = edge.tag;
  }

  bool alive(int t) const { return alive_[t]; }
  int size() const { return static_cast<int>(alive_.size()); }
  const Mesh& mesh() const { return mesh_; }

  void refine(int t) {
    for (int guard = 0; guard < 10000; ++guard) {
      if (!alive_[t]) return;
      const int k = longest_edge(t);
      const auto [a, b] = edge_nodes(t, k);
      const std::uint64_t key = edge_key(a, b);
      const int other = neighbor(t, key);
      if (other < 0) {
        split_boundary(a, b);
        bisect(t, k);
        return;
      }
      const int ko = longest_edge(other);
      const auto [oa, ob] = edge_nodes(other, ko);
      if (edge_key(oa, ob) == key) {
        bisect(t, k);
        bisect(other, ko);
        return;
      }
      refine(other);
    }
    throw SolverError("mesh refinement did not terminate");
  }

  RefinedMesh finish() {
    RefinedMesh out;
    out.mesh.vertices = mesh_.vertices;
    out.mesh.pairs = mesh_.pairs;
    out.mesh.sector_angle = mesh_.sector_angle;
    for (int t = 0; t < size(); ++t) {
      if (!alive_[t]) continue;
      out.mesh.triangles.push_back(mesh_.triangles[t]);
      out.mesh.regions.push_back(mesh_.regions[t]);
      out.origin.push_back(origin_[t]);
    }
    for (const auto& [key, tag] : boundary_) {
      out.mesh.boundary.push_back({{static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffu)}, tag});
    }
    return out;
  }

 private:
  std::pair<int, int> edge_nodes(int t, int k) const {
    const auto& tri = mesh_.triangles[t];
    return {tri[(k + 1) % 3], tri[(k + 2) % 3]};
  }

  // Total order on edges: length first, then node key, so ties resolve the
  // same way from both sides of an edge.
  int longest_edge(int t) const {
    int best = 0;
    double best_len = -1.0;
    std::uint64_t best_key = 0;
    for (int k = 0; k < 3; ++k) {
      const auto [a, b] = edge_nodes(t, k);
      const double len = (mesh_.vertices[a] - mesh_.vertices[b]).squaredNorm();
      const std::uint64_t key = edge_key(a, b);
      if (len > best_len || (len == best_len && key > best_key)) {
        best = k;
        best_len = len;
        best_key = key;
      }
    }
    return best;
  }

  int neighbor(int t, std::uint64_t key) const {
    const auto it = edges_.find(key);
    if (it == edges_.end()) return -1;
    for (int s : it->second)
      if (s != t) return s;
    return -1;
  }

  void link(int t) {
    for (int k = 0; k < 3; ++k) {
      const auto [a, b] = edge_nodes(t, k);
      edges_[edge_key(a, b)].push_back(t);
    }
  }

  void unlink(int t) {
    for (int k = 0; k < 3; ++k) {
      const auto [a, b] = edge_nodes(t, k);
      auto it = edges_.find(edge_key(a, b));
      auto& list = it->second;
      list.erase(std::remove(list.begin(), list.end(), t), list.end());
      if (list.empty()) edges_.erase(it);
    }
  }

  int midpoint(int a, int b) {
    const std::uint64_t key = edge_key(a, b);
    if (const auto it = midpoints_.find(key); it != midpoints_.end()) return it->second;
    mesh_.vertices.push_back(0.5 * (mesh_.vertices[a] + mesh_.vertices[b]));
    const int m = mesh_.num_nodes() - 1;
    midpoints_[key] = m;
    return m;
  }

  void split_boundary(int a, int b) {
    const auto it = boundary_.find(edge_key(a, b));
    if (it == boundary_.end()) throw SolverError("mesh refinement: open edge without a boundary tag");
    if (it->second != BoundaryTag::outer_dirichlet)
      throw UsageError("mesh refinement reached an antiperiodic boundary edge");
    const int m = midpoint(a, b);
    const BoundaryTag tag = it->second;
    boundary_.erase(it);
    boundary_[edge_key(a, m)] = tag;
    boundary_[edge_key(m, b)] = tag;
  }

  void bisect(int t, int k) {
    const auto tri = mesh_.triangles[t];
    const int c = tri[k], a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
    const int m = midpoint(a, b);
    unlink(t);
    alive_[t] = false;
    for (const std::array<int, 3>& child : {std::array<int, 3>{c, a, m}, std::array<int, 3>{c, m, b}}) {
      mesh_.triangles.push_back(child);
      mesh_.regions.push_back(mesh_.regions[t]);
      alive_.push_back(true);
      origin_.push_back(origin_[t]);
      link(static_cast<int>(mesh_.triangles.size()) - 1);
    }
  }

  Mesh mesh_;
  std::vector<bool> alive_;
  std::vector<int> origin_;
  std::unordered_map<std::uint64_t, std::vector<int>> edges_;
  std::unordered_map<std::uint64_t, int> midpoints_;
  std::map<std::uint64_t, BoundaryTag> boundary_;
};

}  // namespace

RefinedMesh refine_around(const Mesh& mesh, const Vec2& center, double radius, double target_size) {
  if (!(target_size > 0.0) || !(radius >= 0.0)) throw UsageError("refine_around: need positive sizes");
  Bisector bisector(mesh);
  for (int pass = 0; pass < 64; ++pass) {
    std::vector<int> marked;
    for (int t = 0; t < bisector.size(); ++t) {
      if (!bisector.alive(t)) continue;
      const Mesh& m = bisector.mesh();
      const auto& tri = m.triangles[t];
      const Vec2 c = (m.vertices[tri[0]] + m.vertices[tri[1]] + m.vertices[tri[2]]) / 3.0;
      double diam = 0.0;
      for (int k = 0; k < 3; ++k) diam = std::max(diam, (m.vertices[tri[k]] - m.vertices[tri[(k + 1) % 3]]).norm());
      if (diam > target_size && (c - center).norm() <= radius + diam) marked.push_back(t);
    }
    if (marked.empty()) return bisector.finish();
    for (int t : marked) bisector.refine(t);
  }
  throw SolverError("refine_around: refinement did not reach the target size");
}

// --- serialization -----------------------------------------------------------------

void write_mesh(std::ostream& out, const Mesh& mesh) {
  out << kMeshFormatVersion << '\n' << std::setprecision(17);
  out << "sector_angle " << mesh.sector_angle << '\n';
  out << "vertices " << mesh.num_nodes() << '\n';
  for (const auto& v : mesh.vertices) out << v.x() << ' ' << v.y() << '\n';
  out << "triangles " << mesh.num_elements() << '\n';
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.triangles[e];
    out << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << to_string(mesh.regions[e]) << '\n';
  }
  out << "boundary_edges " << mesh.boundary.size() << '\n';
  for (const auto& edge : mesh.boundary)
    out << edge.nodes[0] << ' ' << edge.nodes[1] << ' ' << to_string(edge.tag) << '\n';
  out << "pairs " << mesh.pairs.size() << '\n';
  for (const auto& pair : mesh.pairs) out << pair.master << ' ' << pair.slave << ' ' << pair.sign << '\n';
}

namespace {

std::size_t expect_section(std::istream& in, const std::string& name) {
  std::string word;
  std::size_t count = 0;
  if (!(in >> word >> count) || word != name) throw ConfigError("mesh file: expected section '" + name + "'");
  return count;
}

}  // namespace

Mesh read_mesh(std::istream& in) {
  std::string version;
  if (!(in >> version) || version != kMeshFormatVersion)
    throw ConfigError("mesh file: unsupported version '" + version + "'");
  Mesh mesh;
  std::string word;
  if (!(in >> word >> mesh.sector_angle) || word != "sector_angle") throw ConfigError("mesh file: missing sector_angle");
  mesh.vertices.resize(expect_section(in, "vertices"));
  for (auto& v : mesh.vertices)
    if (!(in >> v.x() >> v.y())) throw ConfigError("mesh file: truncated vertex list");
  const std::size_t elements = expect_section(in, "triangles");
  mesh.triangles.resize(elements);
  mesh.regions.resize(elements);
  for (std::size_t e = 0; e < elements; ++e) {
    auto& t = mesh.triangles[e];
    if (!(in >> t[0] >> t[1] >> t[2] >> word)) throw ConfigError("mesh file: truncated triangle list");
    mesh.regions[e] = region_from_string(word);
  }
  mesh.boundary.resize(expect_section(in, "boundary_edges"));
  for (auto& edge : mesh.boundary) {
    if (!(in >> edge.nodes[0] >> edge.nodes[1] >> word)) throw ConfigError("mesh file: truncated boundary list");
    edge.tag = boundary_tag_from_string(word);
  }
  mesh.pairs.resize(expect_section(in, "pairs"));
  for (auto& pair : mesh.pairs)
    if (!(in >> pair.master >> pair.slave >> pair.sign)) throw ConfigError("mesh file: truncated pair list");
  validate(mesh);
  return mesh;
}

void save_mesh(const std::string& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write mesh file '" + path + "'");
  write_mesh(out, mesh);
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open mesh file '" + path + "'");
  return read_mesh(in);
}

}  // namespace rto
