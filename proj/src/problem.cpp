#include "rto/problem.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include <spdlog/spdlog.h>

#include "rto/errors.hpp"
#include "rto/parallel.hpp"

namespace rto {

namespace {

void scatter(const FemSpace& space, int e, const Vec2& covector, double weight, Vector& nodal) {
  const Eigen::Vector3d local = weight * space.curl_matrix(e).transpose() * covector;
  const auto& t = space.mesh().triangles[e];
  for (int i = 0; i < 3; ++i) nodal[t[i]] += local[i];
}

bool contains(const Mesh& mesh, int e, const Vec2& p, double tol) {
  const auto& t = mesh.triangles[e];
  const Vec2 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
  const double area = 2.0 * mesh.signed_area(e);
  const double l0 = ((b - p).x() * (c - p).y() - (b - p).y() * (c - p).x()) / area;
  const double l1 = ((c - p).x() * (a - p).y() - (c - p).y() * (a - p).x()) / area;
  const double l2 = 1.0 - l0 - l1;
  return l0 >= -tol && l1 >= -tol && l2 >= -tol;
}

}  // namespace

double OutputFunctional::value(const FemSpace& space, const Vector& u) const {
  double total = 0.0;
  for (const auto& q : quadratic) {
    const Vec2 b = space.curl(u, q.element);
    total += q.weight * b.dot(q.a) * b.dot(q.b);
  }
  for (const auto& l : linear) total += l.weight * space.curl(u, l.element).dot(l.d);
  return total;
}

Vector OutputFunctional::gradient(const FemSpace& space, const Vector& u) const {
  Vector g = Vector::Zero(space.num_nodes());
  for (const auto& q : quadratic) {
    const Vec2 b = space.curl(u, q.element);
    scatter(space, q.element, b.dot(q.b) * q.a + b.dot(q.a) * q.b, q.weight, g);
  }
  for (const auto& l : linear) scatter(space, l.element, l.d, l.weight, g);
  return g;
}

OutputFunctional torque_functional(const FemSpace& space, double radius, int points, double nu0, bool require_air_gap) {
  if (points < 2) throw ConfigError("torque: need at least two quadrature intervals");
  const Mesh& mesh = space.mesh();
  const double sector = mesh.sector_angle;
  const bool full = std::abs(sector - 2.0 * std::numbers::pi) < 1e-12;
  const double sectors = 2.0 * std::numbers::pi / sector;
  std::vector<int> candidates;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (require_air_gap && mesh.regions[e] != Region::air_gap) continue;
    double rmin = 1e300, rmax = 0.0;
    for (int v : mesh.triangles[e]) {
      rmin = std::min(rmin, mesh.vertices[v].norm());
      rmax = std::max(rmax, mesh.vertices[v].norm());
    }
    // Chords bulge inward, so allow the element's full diameter.
    if (rmin <= radius && rmax + mesh.diameter(e) >= radius) candidates.push_back(e);
  }

  OutputFunctional out;
  const int count = full ? points : points + 1;
  for (int i = 0; i < count; ++i) {
    const double theta = sector * i / points;
    double w = sector / points;
    if (!full && (i == 0 || i == points)) w *= 0.5;
    const Vec2 n(std::cos(theta), std::sin(theta));
    const Vec2 t(-n.y(), n.x());
    const Vec2 p = radius * n;
    int found = -1;
    for (int e : candidates)
      if (contains(mesh, e, p, 1e-10)) {
        found = e;
        break;
      }
    if (found < 0) throw ConfigError("torque circle leaves the air gap at angle " + std::to_string(theta));
    out.quadratic.push_back({found, sectors * nu0 * radius * radius * w, n, t});
  }
  return out;
}

Vector SourceModel::density(int n, const Params& q) const {
  const double shift = load_angle_binding >= 0 ? q[load_angle_binding] : load_angle;
  const double scale = scale_binding >= 0 ? q[scale_binding] : 1.0;
  Vector out = Vector::Zero(amplitude.size());
  for (int e = 0; e < amplitude.size(); ++e)
    if (amplitude[e] != 0.0) out[e] = scale * amplitude[e] * std::sin(angles[n] + phase[e] + shift);
  return out;
}

Vector SourceModel::density_dq(int n, const Params& q, int entry) const {
  const double shift = load_angle_binding >= 0 ? q[load_angle_binding] : load_angle;
  const double scale = scale_binding >= 0 ? q[scale_binding] : 1.0;
  Vector out = Vector::Zero(amplitude.size());
  if (entry == load_angle_binding) {
    for (int e = 0; e < amplitude.size(); ++e)
      if (amplitude[e] != 0.0) out[e] += scale * amplitude[e] * std::cos(angles[n] + phase[e] + shift);
  }
  if (entry == scale_binding) {
    for (int e = 0; e < amplitude.size(); ++e)
      if (amplitude[e] != 0.0) out[e] += amplitude[e] * std::sin(angles[n] + phase[e] + shift);
  }
  return out;
}

void validate(const DesignProblem& p) {
  if (!p.space) throw ConfigError("design problem without a finite-element space");
  const int ne = p.space->num_elements();
  if (static_cast<int>(p.element_law.size()) != ne) throw ConfigError("design problem: law table size mismatch");
  if (p.design_iron_law.size() != p.design_elements.size())
    throw ConfigError("design problem: iron law list does not match the design elements");
  const int nl = static_cast<int>(p.laws.size());
  auto check_law = [nl](int i) {
    if (i < 0 || i >= nl) throw ConfigError("design problem: law index out of range");
  };
  check_law(p.design_air_law);
  for (int i : p.design_iron_law) check_law(i);
  std::vector<char> is_design(ne, 0);
  for (int e : p.design_elements) {
    if (e < 0 || e >= ne || is_design[e]) throw ConfigError("design problem: bad design element list");
    is_design[e] = 1;
  }
  for (int e = 0; e < ne; ++e) {
    if (is_design[e] != (p.element_law[e] < 0)) throw ConfigError("design problem: design marking is inconsistent");
    if (!is_design[e]) check_law(p.element_law[e]);
  }
  for (const auto& law : p.laws)
    if (law.kf_binding >= p.nominal_q.size()) throw ConfigError("design problem: law binds a missing parameter");
  if (p.source.load_angle_binding >= p.nominal_q.size() || p.source.scale_binding >= p.nominal_q.size())
    throw ConfigError("design problem: source binds a missing parameter");
  if (p.num_positions < 1 || static_cast<int>(p.source.angles.size()) != p.num_positions)
    throw ConfigError("design problem: position count mismatch");
  if (!p.magnet_rotation.empty() && static_cast<int>(p.magnet_rotation.size()) != p.num_positions)
    throw ConfigError("design problem: magnet rotation list does not match the positions");
  if (p.source.amplitude.size() != ne || p.source.phase.size() != ne)
    throw ConfigError("design problem: source size mismatch");
}

MaterialField material_field(const DesignProblem& problem, const Design& design, const Params& q, int position) {
  if (static_cast<int>(design.size()) != problem.num_design()) throw UsageError("design size does not match the problem");
  MaterialField field;
  field.laws = problem.laws;
  if (!problem.magnet_rotation.empty()) {
    for (auto& law : field.laws)
      if (law.kind == LawKind::magnet) law.phi += problem.magnet_rotation[position];
  }
  field.element_law = problem.element_law;
  for (int i = 0; i < problem.num_design(); ++i)
    field.element_law[problem.design_elements[i]] = design[i] ? problem.design_iron_law[i] : problem.design_air_law;
  field.q = q;
  return field;
}

StateSet solve_states(const DesignProblem& problem, const Design& design, const Params& q) {
  const int n = problem.num_positions;
  StateSet out;
  out.states.resize(n);
  out.outputs.resize(n);
  const FemSpace& space = *problem.space;
  parallel_for(n, [&](int k) {
    const MaterialField field = material_field(problem, design, q, k);
    const Vector load = space.load(problem.source.density(k, q));
    try {
      out.states[k] = newton_solve(space, field, load, Vector::Zero(space.num_nodes()), problem.newton).u;
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " (position " + std::to_string(k) + ")", e.residual());
    }
    out.outputs[k] = problem.output.value(space, out.states[k]);
  });
  double sum = 0.0;
  for (double t : out.outputs) sum += t;
  out.value = -sum / n;
  return out;
}

double objective(const DesignProblem& problem, const Design& design, const Params& q) {
  return solve_states(problem, design, q).value;
}

std::vector<Vector> solve_adjoints(const DesignProblem& problem, const Design& design, const Params& q,
                                   const StateSet& states) {
  const int n = problem.num_positions;
  std::vector<Vector> out(n);
  const FemSpace& space = *problem.space;
  parallel_for(n, [&](int k) {
    const MaterialField field = material_field(problem, design, q, k);
    const Vector rhs = problem.output.gradient(space, states.states[k]) / n;
    out[k] = adjoint_solve(space, field, states.states[k], rhs);
  });
  return out;
}

Params grad_q(const DesignProblem& problem, const Design& design, const Params& q, const StateSet& states,
              const std::vector<Vector>& adjoints) {
  const FemSpace& space = *problem.space;
  Params g = Params::Zero(q.size());
  if (q.size() == 0) return g;
  static std::atomic<bool> warned{false};
  for (int i = 0; i < q.size(); ++i) {
    bool bound = i == problem.source.load_angle_binding || i == problem.source.scale_binding;
    for (const MaterialLaw& law : problem.laws) bound = bound || law.kf_binding == i;
    if (!bound && !warned.exchange(true)) spdlog::warn("parameter entry {} binds nothing; its gradient is zero", i);
  }
  for (int k = 0; k < problem.num_positions; ++k) {
    const MaterialField field = material_field(problem, design, q, k);
    const Vector& u = states.states[k];
    const Vector& p = adjoints[k];
    for (int e = 0; e < space.num_elements(); ++e) {
      const MaterialLaw& law = field.law(e);
      if (law.kind != LawKind::iron || law.kf_binding < 0) continue;
      const auto dq = eval_dh_dq(law, space.curl(u, e), q);
      g += space.area(e) * dq.transpose() * space.curl(p, e);
    }
    for (int i = 0; i < q.size(); ++i) {
      if (i != problem.source.load_angle_binding && i != problem.source.scale_binding) continue;
      g[i] -= space.load(problem.source.density_dq(k, q, i)).dot(p);
    }
  }
  return g;
}

double td_saturation(const DesignProblem& problem, int design_index, bool iron, const Params& q) {
  const MaterialLaw& law = problem.laws[problem.design_iron_law[design_index]];
  if (law.kf_binding < 0) return law.kf;
  if (!iron && problem.nominal_in_air) return problem.nominal_q[law.kf_binding];
  return q[law.kf_binding];
}

}  // namespace rto
