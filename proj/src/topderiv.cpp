#include "rto/topderiv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <utility>

#include <Eigen/LU>

#include <spdlog/spdlog.h>

#include "rto/errors.hpp"
#include "rto/parallel.hpp"

namespace rto {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int two_adic(int m) {
  int k = 0;
  while (m % 2 == 0) {
    m /= 2;
    ++k;
  }
  return k;
}

PolarLayout exterior_layout(double radius, int m) {
  PolarLayout layout;
  const double h = kTwoPi / m;
  const int rings_in = static_cast<int>(std::ceil(1.0 / h));
  const int max_halvings = two_adic(m);
  for (int i = 1; i <= rings_in; ++i) {
    const double r = static_cast<double>(i) / rings_in;
    int k = std::min(max_halvings, static_cast<int>(std::floor(std::log2(1.0 / r))));
    while (k > 0 && m / (1 << k) < 8) --k;
    layout.radii.push_back(i == rings_in ? 1.0 : r);
    layout.divisions.push_back(m >> k);
  }
  const int rings_out = static_cast<int>(std::ceil(std::log(radius) / std::log1p(h)));
  const double ratio = std::pow(radius, 1.0 / rings_out);
  for (int j = 1; j <= rings_out; ++j) {
    layout.radii.push_back(j == rings_out ? radius : std::pow(ratio, j));
    layout.divisions.push_back(m);
  }
  return layout;
}

long layout_nodes(const PolarLayout& layout) {
  long n = 1;
  for (int d : layout.divisions) n += d;
  return n;
}

MaterialField exterior_field(const ExteriorDomain& domain, const ExteriorProblem& problem) {
  MaterialField field;
  field.laws = {problem.inside, problem.outside};
  field.element_law.resize(domain.inside.size());
  for (std::size_t e = 0; e < domain.inside.size(); ++e) field.element_law[e] = domain.inside[e] ? 0 : 1;
  return field;
}

double lerp_row(const std::vector<double>& x, const std::vector<double>& y, double at) {
  const auto it = std::upper_bound(x.begin(), x.end(), at);
  if (it == x.begin()) return y.front();
  if (it == x.end()) return y.back();
  const std::size_t i = static_cast<std::size_t>(it - x.begin());
  const double w = (at - x[i - 1]) / (x[i] - x[i - 1]);
  return (1.0 - w) * y[i - 1] + w * y[i];
}

void check_increasing(const std::vector<double>& v, const char* what) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) throw ConfigError(std::string(what) + " samples must be strictly increasing");
}

}  // namespace

std::string_view to_string(TDDirection direction) {
  return direction == TDDirection::iron_to_air ? "iron_to_air" : "air_to_iron";
}

TDDirection td_direction_from_string(std::string_view name) {
  if (name == "iron_to_air") return TDDirection::iron_to_air;
  if (name == "air_to_iron") return TDDirection::air_to_iron;
  throw ConfigError("unknown transition direction '" + std::string(name) + "'");
}

std::string_view to_string(Truncation truncation) {
  return truncation == Truncation::dirichlet ? "dirichlet" : "far_field";
}

Truncation truncation_from_string(std::string_view name) {
  if (name == "dirichlet") return Truncation::dirichlet;
  if (name == "far_field") return Truncation::far_field;
  throw ConfigError("unknown truncation '" + std::string(name) + "' (expected dirichlet or far_field)");
}

std::string ExteriorDomain::fingerprint() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "ball(radius=%.17g,nodes=%d,elements=%d,%s)", config.radius, space->num_nodes(),
                space->num_elements(), std::string(to_string(config.truncation)).c_str());
  return buf;
}

ExteriorDomain build_exterior_domain(const ExteriorConfig& config) {
  if (!(config.radius > 1.0)) throw ConfigError("exterior: truncation radius must exceed the inclusion radius 1");
  if (config.target_nodes < 100) throw ConfigError("exterior: target node count too small");
  int m = 16;
  while (layout_nodes(exterior_layout(config.radius, m)) < config.target_nodes) m += 8;

  Mesh mesh = build_polar_mesh(exterior_layout(config.radius, m));
  ExteriorDomain domain;
  domain.config = config;
  domain.inside.resize(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    domain.inside[e] = mesh.centroid(e).norm() < 1.0;
    mesh.regions[e] = domain.inside[e] ? Region::design : Region::air_gap;
    if (domain.inside[e]) domain.inclusion_area += mesh.signed_area(e);
  }
  std::vector<BoundaryEdge> circle;
  if (config.truncation == Truncation::far_field) circle = std::exchange(mesh.boundary, {});
  auto space = std::make_shared<FemSpace>(std::move(mesh));
  if (!circle.empty()) {
    const DofMap& dofs = space->dofs();
    std::vector<Eigen::Triplet<double>> entries;
    for (const auto& edge : circle) {
      const auto [a, b] = edge.nodes;
      const double len = (space->mesh().vertices[a] - space->mesh().vertices[b]).norm();
      const int da = dofs.dof[a], db = dofs.dof[b];
      const double w = len / (6.0 * config.radius);
      entries.emplace_back(da, da, 2.0 * w);
      entries.emplace_back(db, db, 2.0 * w);
      entries.emplace_back(da, db, w);
      entries.emplace_back(db, da, w);
    }
    domain.boundary_mass.resize(space->num_dofs(), space->num_dofs());
    domain.boundary_mass.setFromTriplets(entries.begin(), entries.end());
  }
  domain.space = std::move(space);
  return domain;
}

ExteriorProblem exterior_problem(TDDirection direction, const MaterialLaw& iron, const MaterialLaw& air,
                                 const Vec2& u) {
  if (direction == TDDirection::iron_to_air) return {air, iron, u};
  return {iron, air, u};
}

NewtonResult solve_exterior(const ExteriorDomain& domain, const ExteriorProblem& problem,
                            const NewtonOptions& options) {
  if (!problem.u.allFinite()) throw UsageError("solve_exterior: far field must be finite");
  const FemSpace& space = *domain.space;
  const MaterialField field = exterior_field(domain, problem);
  const Vec2 u = problem.u;
  const Vec2 jump = eval_h(problem.inside, u) - eval_h(problem.outside, u);

  Vector contrast = Vector::Zero(space.num_nodes());
  for (int e = 0; e < space.num_elements(); ++e) {
    if (!domain.inside[e]) continue;
    const Eigen::Vector3d local = space.area(e) * space.curl_matrix(e).transpose() * jump;
    const auto& t = space.mesh().triangles[e];
    for (int i = 0; i < 3; ++i) contrast[t[i]] += local[i];
  }
  std::vector<Vec2> h_base(space.num_elements());
  for (int e = 0; e < space.num_elements(); ++e) h_base[e] = field.h(e, u);
  const bool robin = domain.boundary_mass.nonZeros() > 0;
  const double nu_eff = robin ? std::sqrt(std::abs(eval_dh_db(problem.outside, u).determinant())) : 0.0;

  const NonlinearSystem system{
      [&](const Vector& x) {
        const Vector k = space.expand(x);
        Vector nodal = contrast;
        for (int e = 0; e < space.num_elements(); ++e) {
          const Vec2 dh = field.h(e, space.curl(k, e) + u) - h_base[e];
          const Eigen::Vector3d local = space.area(e) * space.curl_matrix(e).transpose() * dh;
          const auto& t = space.mesh().triangles[e];
          for (int i = 0; i < 3; ++i) nodal[t[i]] += local[i];
        }
        Vector r = space.reduce(nodal);
        if (robin) r += nu_eff * (domain.boundary_mass * x);
        return r;
      },
      [&](const Vector& x) {
        const Vector k = space.expand(x);
        SparseMatrix jac = space.assemble([&](int e) { return field.dh_db(e, space.curl(k, e) + u); });
        if (robin) jac += nu_eff * domain.boundary_mass;
        return jac;
      }};
  const double reference = space.reduce(contrast).norm();
  auto [x, result] = newton_iterate(system, Vector::Zero(space.num_dofs()), reference, options);
  result.u = space.expand(x);
  return result;
}

Vec2 td_vector(const ExteriorDomain& domain, const ExteriorProblem& problem, const Vector& corrector) {
  const FemSpace& space = *domain.space;
  const MaterialField field = exterior_field(domain, problem);
  const Vec2 u = problem.u;
  const Mat2 dh_in = eval_dh_db(problem.inside, u), dh_out = eval_dh_db(problem.outside, u);
  const Vec2 h_in = eval_h(problem.inside, u), h_out = eval_h(problem.outside, u);
  Vec2 remainder = Vec2::Zero(), contrast = Vec2::Zero();
  for (int e = 0; e < space.num_elements(); ++e) {
    const Vec2 ck = space.curl(corrector, e);
    const Vec2 h0 = domain.inside[e] ? h_in : h_out;
    const Mat2& dh0 = domain.inside[e] ? dh_in : dh_out;
    remainder += space.area(e) * (field.h(e, ck + u) - h0 - dh0 * ck);
    if (domain.inside[e]) contrast += space.area(e) * (dh_in - dh_out) * ck;
  }
  return (remainder + contrast) / domain.inclusion_area + (h_in - h_out);
}

double linear_corrector(double nu_in, double nu_out, const Vec2& u, const Vec2& xi) {
  const double c = (nu_in - nu_out) / (nu_in + nu_out);
  const double v_dot_xi = -u.y() * xi.x() + u.x() * xi.y();
  const double r2 = xi.squaredNorm();
  return r2 < 1.0 ? -c * v_dot_xi : -c * v_dot_xi / r2;
}

double linear_td_slope(double nu_in, double nu_out) { return 2.0 * nu_out * (nu_in - nu_out) / (nu_in + nu_out); }

std::vector<double> uniform_samples(double lo, double hi, int count) {
  if (count < 2 || !(hi > lo)) throw ConfigError("uniform samples: need at least two points on a proper interval");
  std::vector<double> out(count);
  for (int i = 0; i < count; ++i) out[i] = i + 1 == count ? hi : lo + (hi - lo) * i / (count - 1);
  return out;
}

Vec2 sample_td_point(TDDirection direction, const MaterialLaw& iron, const MaterialLaw& air,
                     const ExteriorDomain& domain, double t, double q, const NewtonOptions& options) {
  MaterialLaw fe = iron;
  if (q > 0.0) {
    if (iron.kind != LawKind::iron) throw ConfigError("saturation samples need the saturating iron law");
    fe = iron.with_saturation(q);
  } else if (fe.kind == LawKind::iron) {
    fe = iron.with_saturation(iron.kf);
  }
  const ExteriorProblem problem = exterior_problem(direction, fe, air, Vec2(t, 0.0));
  const NewtonResult solved = solve_exterior(domain, problem, options);
  return td_vector(domain, problem, solved.u);
}

TDTable sample_td(TDDirection direction, const MaterialLaw& iron, const MaterialLaw& air,
                  const ExteriorDomain& domain, const std::vector<double>& t, const std::vector<double>& q,
                  const NewtonOptions& options) {
  if (t.size() < 2) throw ConfigError("TD table: need at least two flux samples");
  if (t.front() != 0.0) throw ConfigError("TD table: the first flux sample must be 0");
  check_increasing(t, "flux");
  check_increasing(q, "saturation");
  for (double v : q)
    if (!(v > 0.0)) throw ConfigError("TD table: saturation samples must be positive");

  TDTable table;
  table.direction = direction;
  table.iron_fingerprint = fingerprint(iron);
  table.air_fingerprint = fingerprint(air);
  table.exterior_fingerprint = domain.fingerprint();
  table.t = t;
  table.q = q;
  const int rows = q.empty() ? 1 : static_cast<int>(q.size());
  const int cols = static_cast<int>(t.size());
  table.f1.assign(rows, std::vector<double>(cols));
  table.f2.assign(rows, std::vector<double>(cols));
  parallel_for(rows * cols, [&](int index) {
    const int l = index / cols, k = index % cols;
    try {
      const Vec2 f = sample_td_point(direction, iron, air, domain, t[k], q.empty() ? 0.0 : q[l], options);
      table.f1[l][k] = f.x();
      table.f2[l][k] = f.y();
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " (sample k=" + std::to_string(k) + ", l=" + std::to_string(l) + ")",
                        e.residual());
    }
  });
  return table;
}

void check_table(const TDTable& table, TDDirection direction, const MaterialLaw& iron, const MaterialLaw& air) {
  if (table.direction != direction)
    throw ConfigError("TD table direction is " + std::string(to_string(table.direction)) + ", expected " +
                      std::string(to_string(direction)));
  if (table.iron_fingerprint != fingerprint(iron) || table.air_fingerprint != fingerprint(air))
    throw ConfigError("TD table was sampled for different material laws (" + table.iron_fingerprint + ", " +
                      table.air_fingerprint + ")");
}

void write_table(std::ostream& out, const TDTable& table) {
  char buf[32];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  out << kTableFormatVersion << '\n';
  out << "direction " << to_string(table.direction) << '\n';
  out << "iron " << table.iron_fingerprint << '\n';
  out << "air " << table.air_fingerprint << '\n';
  out << "exterior " << table.exterior_fingerprint << '\n';
  out << "t " << table.t.size();
  for (double v : table.t) out << ' ' << num(v);
  out << "\nq " << table.q.size();
  for (double v : table.q) out << ' ' << num(v);
  out << '\n';
  for (const auto* values : {&table.f1, &table.f2}) {
    out << (values == &table.f1 ? "f1" : "f2") << ' ' << values->size() << '\n';
    for (const auto& row : *values) {
      for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << num(row[k]);
      out << '\n';
    }
  }
}

TDTable read_table(std::istream& in) {
  auto fail = [](const std::string& what) { return ConfigError("TD table: " + what); };
  std::string line;
  if (!std::getline(in, line) || line != kTableFormatVersion) throw fail("missing RTOTD1 header");
  auto field = [&](const std::string& key) {
    if (!std::getline(in, line) || line.rfind(key + ' ', 0) != 0) throw fail("expected '" + key + "' line");
    return line.substr(key.size() + 1);
  };
  auto numbers = [&](const std::string& key) {
    std::istringstream s(field(key));
    std::size_t n = 0;
    if (!(s >> n)) throw fail("bad count for '" + key + "'");
    std::vector<double> v(n);
    for (auto& x : v)
      if (!(s >> x)) throw fail("short list for '" + key + "'");
    return v;
  };
  TDTable table;
  table.direction = td_direction_from_string(field("direction"));
  table.iron_fingerprint = field("iron");
  table.air_fingerprint = field("air");
  table.exterior_fingerprint = field("exterior");
  table.t = numbers("t");
  table.q = numbers("q");
  const std::size_t rows = table.q.empty() ? 1 : table.q.size();
  for (auto* values : {&table.f1, &table.f2}) {
    const std::string key = values == &table.f1 ? "f1" : "f2";
    std::size_t n = 0;
    if (!(std::istringstream(field(key)) >> n) || n != rows) throw fail("row count mismatch for '" + key + "'");
    values->assign(rows, std::vector<double>(table.t.size()));
    for (auto& row : *values) {
      if (!std::getline(in, line)) throw fail("truncated values");
      std::istringstream s(line);
      for (auto& x : row)
        if (!(s >> x) || !std::isfinite(x)) throw fail("bad value row");
    }
  }
  if (table.t.size() < 2 || table.t.front() != 0.0) throw fail("flux samples must start at 0");
  check_increasing(table.t, "flux");
  check_increasing(table.q, "saturation");
  return table;
}

void save_table(const std::string& path, const TDTable& table) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_table(out, table);
  if (!out) throw ConfigError("write failed for " + path);
}

TDTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  return read_table(in);
}

TableTD::TableTD(TDTable table) : table_(std::move(table)) {
  if (table_.t.size() < 2 || table_.f1.empty()) throw UsageError("TableTD: empty table");
  if (table_.t.size() >= 4) {
    for (std::size_t l = 0; l < table_.f1.size(); ++l) {
      f1_.emplace_back(std::vector<double>(table_.t), std::vector<double>(table_.f1[l]));
      f2_.emplace_back(std::vector<double>(table_.t), std::vector<double>(table_.f2[l]));
    }
  }
}

Vec2 TableTD::row_components(std::size_t row, double t) const {
  if (f1_.empty()) return {lerp_row(table_.t, table_.f1[row], t), lerp_row(table_.t, table_.f2[row], t)};
  return {f1_[row](t), f2_[row](t)};
}

Vec2 TableTD::components(double t, double saturation) const {
  if (t > table_.t.back()) {
    if (!warned_.exchange(true))
      spdlog::warn("flux magnitude {:.4g} T beyond the sampled range {:.4g} T; clamping", t, table_.t.back());
    t = table_.t.back();
  }
  if (table_.q.size() < 2) return row_components(0, t);
  const auto& q = table_.q;
  if (saturation <= q.front()) return row_components(0, t);
  if (saturation >= q.back()) return row_components(q.size() - 1, t);
  const std::size_t i = static_cast<std::size_t>(std::upper_bound(q.begin(), q.end(), saturation) - q.begin());
  const double w = (saturation - q[i - 1]) / (q[i] - q[i - 1]);
  return (1.0 - w) * row_components(i - 1, t) + w * row_components(i, t);
}

double TableTD::value(const Vec2& u, const Vec2& p, double saturation) const {
  const double t = u.norm();
  if (t == 0.0) return 0.0;
  const Vec2 f = components(t, saturation);
  const double c = u.x() / t, s = u.y() / t;
  return (c * f.x() - s * f.y()) * p.x() + (s * f.x() + c * f.y()) * p.y();
}

LinearTD::LinearTD(TDDirection direction, double nu_iron, double nu_air)
    : slope_(direction == TDDirection::iron_to_air ? linear_td_slope(nu_air, nu_iron)
                                                   : linear_td_slope(nu_iron, nu_air)) {}

double LinearTD::value(const Vec2& u, const Vec2& p, double) const { return slope_ * u.dot(p); }

TDModel linear_td_model(const DesignProblem& problem) {
  auto linear_nu = [](const MaterialLaw& law) {
    if (law.kind != LawKind::air && law.kind != LawKind::linear)
      throw ConfigError("closed-form TD needs linear design laws");
    return law.nu;
  };
  const double nu_air = linear_nu(problem.laws[problem.design_air_law]);
  const double nu_iron = linear_nu(problem.laws[problem.design_iron_law.front()]);
  for (int law : problem.design_iron_law)
    if (linear_nu(problem.laws[law]) != nu_iron) throw ConfigError("closed-form TD needs a single iron law");
  return {std::make_shared<LinearTD>(TDDirection::iron_to_air, nu_iron, nu_air),
          std::make_shared<LinearTD>(TDDirection::air_to_iron, nu_iron, nu_air)};
}

Vector generalized_td_field(const DesignProblem& problem, const Design& design, const Params& q,
                            const StateSet& states, const std::vector<Vector>& adjoints, const TDModel& model) {
  if (!model.iron_to_air || !model.air_to_iron) throw UsageError("generalized TD: both directions are required");
  if (static_cast<int>(design.size()) != problem.num_design()) throw UsageError("generalized TD: design size mismatch");
  if (states.states.size() != adjoints.size()) throw UsageError("generalized TD: state/adjoint count mismatch");
  const FemSpace& space = *problem.space;
  Vector g = Vector::Zero(problem.num_design());
  for (int i = 0; i < problem.num_design(); ++i) {
    const int e = problem.design_elements[i];
    const bool iron = design[i] != 0;
    const double k = td_saturation(problem, i, iron, q);
    const TDEvaluator& td = iron ? *model.iron_to_air : *model.air_to_iron;
    double sum = 0.0;
    for (std::size_t n = 0; n < adjoints.size(); ++n)
      sum += td.value(space.curl(states.states[n], e), space.curl(adjoints[n], e), k);
    g[i] = iron ? sum : -sum;
  }
  return g;
}

Vector smooth_td(const DesignDomain& domain, const Vector& element_values, double eps) {
  if (!(eps > 0.0)) throw ConfigError("smoothing parameter must be positive");
  const SparseMatrix system = eps * domain.stiffness() + domain.mass();
  return solve_spd(system, domain.load(element_values));
}

double default_smoothing(const DesignDomain& domain) { return std::pow(2.0 * domain.mean_size(), 2); }

}  // namespace rto
