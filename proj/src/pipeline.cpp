#include "rto/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "rto/errors.hpp"

namespace rto {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

bool saturation_bound(const DesignProblem& problem) {
  for (int law : problem.design_iron_law)
    if (problem.laws[law].kf_binding >= 0) return true;
  return false;
}

bool linear_design_laws(const DesignProblem& problem) {
  auto linear = [](const MaterialLaw& l) { return l.kind == LawKind::air || l.kind == LawKind::linear; };
  if (!linear(problem.laws[problem.design_air_law])) return false;
  for (int law : problem.design_iron_law)
    if (!linear(problem.laws[law])) return false;
  return true;
}

Design design_of(const DesignProblem& problem, const Vector& psi) {
  const DesignDomain domain(problem.mesh(), problem.design_elements);
  if (psi.size() != domain.num_nodes()) throw UsageError("level set does not match the design domain");
  return design_from_levelset(domain, psi);
}

}  // namespace

std::string resolve_output_path(const std::string& path) {
  const char* root = std::getenv("RTO_OUTPUT_ROOT");
  if (!root || !*root || fs::path(path).is_absolute()) return path;
  return (fs::path(root) / path).string();
}

DesignProblem build_problem(const RunConfig& config) {
  return config.problem == ProblemKind::machine ? build_machine_problem(config.machine)
                                                : build_toy_problem(config.toy);
}

ProblemBuilder problem_builder(const RunConfig& config) {
  if (config.problem == ProblemKind::machine)
    return [c = config.machine](Mesh mesh) { return build_machine_problem(c, std::move(mesh)); };
  return [c = config.toy](Mesh mesh) { return build_toy_problem(c, std::move(mesh)); };
}

UncertaintySet build_uncertainty_set(const RunConfig& config) {
  return config.problem == ProblemKind::machine ? scenario_uncertainty_set(config.machine)
                                                : toy_uncertainty_set(config.toy);
}

// --- tables -----------------------------------------------------------------------

std::string table_path(const std::string& directory, TDDirection direction) {
  return (fs::path(directory) / ("td_" + std::string(to_string(direction)) + ".rtotd")).string();
}

PrecomputeReport precompute_tables(const RunConfig& config, const std::string& directory) {
  validate(config);
  const DesignProblem problem = build_problem(config);
  const MaterialLaw& iron = problem.laws[problem.design_iron_law.front()];
  const MaterialLaw& air = problem.laws[problem.design_air_law];
  const std::vector<double> t = uniform_samples(0.0, config.tables.t_max, config.tables.samples);
  std::vector<double> q;
  if (saturation_bound(problem) && config.machine.kf_spread > 0.0) {
    const double kf = config.machine.materials.kf;
    q = uniform_samples(kf * (1.0 - config.machine.kf_spread), kf * (1.0 + config.machine.kf_spread),
                        config.tables.q_samples);
  }
  const ExteriorDomain domain = build_exterior_domain(config.exterior);
  fs::create_directories(directory);

  PrecomputeReport report;
  const bool linear = linear_design_laws(problem);
  if (linear) report.linear_slope_deviation = report.linear_f2_ratio = 0.0;
  for (TDDirection dir : {TDDirection::iron_to_air, TDDirection::air_to_iron}) {
    spdlog::info("sampling {} at {} abscissae x {} q values", to_string(dir), t.size(), std::max<std::size_t>(1, q.size()));
    const TDTable table = sample_td(dir, iron, air, domain, t, q);
    const std::string path = table_path(directory, dir);
    save_table(path, table);
    report.files.push_back(path);
    if (!linear) continue;
    const double slope = LinearTD(dir, iron.nu, air.nu).slope();
    double f1max = 0.0, f2max = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) {
      report.linear_slope_deviation =
          std::max(report.linear_slope_deviation, std::abs(table.f1[0][k] / t[k] - slope) / std::abs(slope));
      f1max = std::max(f1max, std::abs(table.f1[0][k]));
      f2max = std::max(f2max, std::abs(table.f2[0][k]));
    }
    report.linear_f2_ratio = std::max(report.linear_f2_ratio, f2max / f1max);
  }
  return report;
}

TDModel load_td_model(const RunConfig& config, const DesignProblem& problem, const std::string& directory) {
  if (linear_design_laws(problem)) return linear_td_model(problem);
  const MaterialLaw& iron = problem.laws[problem.design_iron_law.front()];
  const MaterialLaw& air = problem.laws[problem.design_air_law];
  const std::string exterior = build_exterior_domain(config.exterior).fingerprint();
  TDModel model;
  for (TDDirection dir : {TDDirection::iron_to_air, TDDirection::air_to_iron}) {
    const std::string path = table_path(directory, dir);
    if (!fs::exists(path)) throw ConfigError("missing TD table " + path + " (run precompute-td first)");
    TDTable table = load_table(path);
    check_table(table, dir, iron, air);
    if (table.exterior_fingerprint != exterior)
      throw ConfigError("TD table " + path + " was sampled on a different exterior domain");
    auto evaluator = std::make_shared<TableTD>(std::move(table));
    (dir == TDDirection::iron_to_air ? model.iron_to_air : model.air_to_iron) = std::move(evaluator);
  }
  return model;
}

// --- runs -------------------------------------------------------------------------

std::string_view to_string(RunMode mode) { return mode == RunMode::nominal ? "nominal" : "robust"; }

RunMode run_mode_from_string(std::string_view name) {
  if (name == "nominal") return RunMode::nominal;
  if (name == "robust") return RunMode::robust;
  throw ConfigError("unknown mode '" + std::string(name) + "' (nominal, robust)");
}

Vector initial_levelset(const RunConfig& config, const DesignDomain& domain, const Mesh&) {
  switch (config.initial) {
    case InitialGuess::iron:
      return constant_levelset(domain, 1.0);
    case InitialGuess::air:
      return constant_levelset(domain, -1.0);
    case InitialGuess::random:
      return random_levelset(domain, config.seed);
    case InitialGuess::file:
      return normalize(domain, load_levelset(config.initial_file, domain));
  }
  return constant_levelset(domain, 1.0);
}

namespace {

void write_summary(const fs::path& path, const RunConfig& config, const RunSummary& s) {
  nlohmann::json j;
  j["format"] = kSummaryVersion;
  j["problem"] = to_string(config.problem);
  if (config.problem == ProblemKind::machine) j["scenario"] = to_string(config.machine.scenario);
  j["seed"] = config.seed;
  j["status"] = s.status;
  j["iterations"] = s.iterations;
  j["nominal_value"] = s.nominal_value;
  j["worst_case_value"] = s.worst_case_value;
  j["worst_case_q"] = std::vector<double>(s.worst_case_q.data(), s.worst_case_q.data() + s.worst_case_q.size());
  if (!s.error.empty()) j["error"] = s.error;
  open_output(path) << j.dump(2) << '\n';
}

void render_file(const fs::path& path, const DesignProblem& problem, const DesignDomain& domain, const Vector& psi) {
  std::ofstream out = open_output(path);
  write_svg(out, problem, domain, psi);
}

}  // namespace

RunSummary run_optimize(const RunConfig& config, RunMode mode, const std::string& directory) {
  validate(config);
  const fs::path dir(directory);
  fs::create_directories(dir);
  {
    std::ofstream echo = open_output(dir / "config.ini");
    write_run_config(echo, config);
  }

  const DesignProblem problem = build_problem(config);
  const TDModel model = load_td_model(config, problem, resolve_output_path(config.table_directory));
  const UncertaintySet set = build_uncertainty_set(config);
  const DesignDomain domain(problem.mesh(), problem.design_elements);
  const Vector psi0 = initial_levelset(config, domain, problem.mesh());

  std::ofstream csv = open_output(dir / "iterations.csv");
  csv << "# " << kIterationLogVersion << '\n' << "k,value,theta_deg,step,accepted,trials";
  for (int i = 0; i < problem.nominal_q.size(); ++i) csv << ",q" << i;
  csv << ",wall_seconds\n";
  const IterationCallback callback = [&](const IterationRecord& r, const Vector& psi) {
    csv << r.k << ',' << num(r.value) << ',' << num(r.theta * 180.0 / std::numbers::pi) << ',' << num(r.step) << ','
        << (r.accepted ? 1 : 0) << ',' << r.trials;
    for (int i = 0; i < r.q.size(); ++i) csv << ',' << num(r.q[i]);
    csv << ',' << num(r.wall_seconds) << '\n' << std::flush;
    if (config.snapshot_interval > 0 && r.k % config.snapshot_interval == 0) {
      char name[32];
      std::snprintf(name, sizeof name, "design_%04d.svg", r.k);
      render_file(dir / name, problem, domain, psi);
    }
  };

  RunSummary summary;
  OptimizationResult result;
  try {
    result = mode == RunMode::nominal ? optimize_nominal(problem, model, psi0, config.levelset, callback)
                                      : optimize_robust(problem, model, set, psi0, config.levelset, config.inner, callback);
  } catch (const SolverError& e) {
    summary.status = "solver_failure";
    summary.error = e.what();
    write_summary(dir / "summary.json", config, summary);
    throw;
  }
  save_levelset((dir / "final.rtols").string(), domain, result.psi);
  render_file(dir / "final.svg", problem, domain, result.psi);

  summary.status = std::string(to_string(result.status));
  summary.iterations = static_cast<int>(result.history.size());
  if (mode == RunMode::nominal) {
    summary.nominal_value = result.evaluation.value;
    const DesignParameterObjective objective(problem, result.design);
    const WorstCaseResult wc = inner_maximize(objective, set, default_starts(set), config.inner);
    summary.worst_case_value = wc.best.value;
    summary.worst_case_q = wc.best.q;
  } else {
    summary.worst_case_value = result.evaluation.value;
    summary.worst_case_q = result.evaluation.q;
    summary.nominal_value =
        set.is_singleton() ? result.evaluation.value : objective(problem, result.design, problem.nominal_q);
  }
  write_summary(dir / "summary.json", config, summary);
  return summary;
}

RunSummary read_summary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("corrupt summary " + path + ": " + e.what());
  }
  if (j.value("format", std::string()) != kSummaryVersion) throw ConfigError("summary " + path + ": wrong format version");
  RunSummary s;
  s.status = j.at("status").get<std::string>();
  s.iterations = j.at("iterations").get<int>();
  s.nominal_value = j.at("nominal_value").get<double>();
  s.worst_case_value = j.at("worst_case_value").get<double>();
  const auto q = j.at("worst_case_q").get<std::vector<double>>();
  s.worst_case_q = Eigen::Map<const Params>(q.data(), static_cast<Eigen::Index>(q.size()));
  s.error = j.value("error", std::string());
  return s;
}

std::vector<double> read_accepted_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::string line;
  if (!std::getline(in, line) || line != "# " + std::string(kIterationLogVersion))
    throw ConfigError("iteration log " + path + ": wrong format version");
  std::getline(in, line);
  std::vector<double> values;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string k, value, theta, step, accepted;
    std::getline(row, k, ',');
    std::getline(row, value, ',');
    std::getline(row, theta, ',');
    std::getline(row, step, ',');
    std::getline(row, accepted, ',');
    if (accepted == "1") values.push_back(std::stod(value));
  }
  return values;
}

// --- audits -------------------------------------------------------------------------

void audit_sweep(const RunConfig& config, const Vector& psi, std::ostream& csv) {
  const DesignProblem problem = build_problem(config);
  const UncertaintySet set = build_uncertainty_set(config);
  if (set.is_singleton()) throw ConfigError("sweep: the scenario has no uncertain parameter");
  const Design design = design_of(problem, psi);
  const std::vector<Params> grid = set.grid(config.sweep_points);
  const std::vector<double> values = sweep_objective(problem, design, grid);

  csv << "# " << kAuditVersion << " sweep\n";
  for (int i = 0; i < set.dimension(); ++i) csv << 'q' << i << ',';
  csv << "J\n";
  std::size_t arg = 0;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (int i = 0; i < set.dimension(); ++i) csv << num(grid[r][i]) << ',';
    csv << num(values[r]) << '\n';
    if (values[r] > values[arg]) arg = r;
  }
  const DesignParameterObjective objective(problem, design);
  const WorstCaseResult wc = inner_maximize(objective, set, default_starts(set), config.inner);
  csv << "# grid_max row " << arg << " J " << num(values[arg]) << '\n';
  csv << "# inner_max J " << num(wc.best.value) << " q";
  for (int i = 0; i < wc.best.q.size(); ++i) csv << ' ' << num(wc.best.q[i]);
  csv << " evaluations " << wc.evaluations << '\n';
}

void audit_fdcheck(const RunConfig& config, const Vector& psi, std::ostream& csv) {
  const DesignProblem problem = build_problem(config);
  if (problem.nominal_q.size() == 0) throw ConfigError("fdcheck: the scenario has no parameter");
  const std::vector<FdCheckRow> rows = fd_check(problem, design_of(problem, psi), problem.nominal_q, config.fd_step);
  csv << "# " << kAuditVersion << " fdcheck\n" << "entry,q,step,gradient,fd,rel_error\n";
  for (const FdCheckRow& r : rows)
    csv << r.entry << ',' << num(r.q) << ',' << num(r.step) << ',' << num(r.gradient) << ',' << num(r.fd) << ','
        << num(r.rel_error) << '\n';
}

void audit_tdcheck(const RunConfig& config, const Vector& psi, std::ostream& csv) {
  const DesignProblem problem = build_problem(config);
  const TDModel model = load_td_model(config, problem, resolve_output_path(config.table_directory));
  const Design design = design_of(problem, psi);
  const double h = mean_design_size(problem);
  const std::vector<int> picks =
      sample_candidates(td_check_candidates(problem, design, 4.0 * h, 7.0 * h), config.td_elements, config.seed);
  if (picks.empty()) throw ConfigError("tdcheck: no design element has a homogeneous disk of radius 4h");
  const std::vector<TdCheckRow> rows =
      td_check(problem_builder(config), problem, design, problem.nominal_q, model, picks, {4.0 * h, 2.0 * h, h});
  csv << "# " << kAuditVersion << " tdcheck h " << num(h) << '\n'
      << "design_index,iron,radius,area,quotient,td,rel_error\n";
  for (const TdCheckRow& r : rows)
    csv << r.design_index << ',' << (r.iron ? 1 : 0) << ',' << num(r.radius) << ',' << num(r.area) << ','
        << num(r.quotient) << ',' << num(r.td) << ',' << num(r.rel_error) << '\n';
}

// --- renders ----------------------------------------------------------------------------

namespace {

const char* region_color(Region r) {
  switch (r) {
    case Region::design:
      return "#ffffff";
    case Region::stator_iron:
      return "#9a9a9a";
    case Region::magnet1:
      return "#c0392b";
    case Region::magnet2:
      return "#2e86c1";
    case Region::coil_A:
      return "#d4a017";
    case Region::coil_B:
      return "#b87333";
    case Region::coil_C:
      return "#8e6e53";
    case Region::air_gap:
      return "#eef4fa";
    case Region::shaft:
      return "#dddddd";
  }
  return "#ffffff";
}

}  // namespace

void write_svg(std::ostream& out, const DesignProblem& problem, const DesignDomain& domain, const Vector& psi) {
  const Mesh& mesh = problem.mesh();
  const Design design = design_from_levelset(domain, psi);
  std::vector<int> index_of(mesh.num_elements(), -1);
  for (int i = 0; i < problem.num_design(); ++i) index_of[problem.design_elements[i]] = i;

  double x0 = std::numeric_limits<double>::infinity(), y0 = x0, x1 = -x0, y1 = -x0;
  for (const Vec2& v : mesh.vertices) {
    x0 = std::min(x0, v.x());
    y0 = std::min(y0, v.y());
    x1 = std::max(x1, v.x());
    y1 = std::max(y1, v.y());
  }
  const double width = 800.0;
  const double scale = width / std::max(x1 - x0, 1e-300);
  const double height = (y1 - y0) * scale;
  char buf[128];
  auto point = [&](const Vec2& v) {
    std::snprintf(buf, sizeof buf, "%.2f,%.2f", (v.x() - x0) * scale, (y1 - v.y()) * scale);
    return std::string(buf);
  };

  std::snprintf(buf, sizeof buf, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\">\n", width,
                height);
  out << buf;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const int i = index_of[e];
    const char* fill = i >= 0 ? (design[i] ? "#4d4d4d" : "#ffffff") : region_color(mesh.regions[e]);
    const auto& t = mesh.triangles[e];
    out << "<polygon points=\"" << point(mesh.vertices[t[0]]) << ' ' << point(mesh.vertices[t[1]]) << ' '
        << point(mesh.vertices[t[2]]) << "\" fill=\"" << fill << "\" stroke=\"" << fill
        << "\" stroke-width=\"0.3\"/>\n";
  }
  // Zero contour of the P1 level set, one segment per crossed element.
  out << "<g stroke=\"#e31a1c\" stroke-width=\"1.5\" fill=\"none\">\n";
  for (int i = 0; i < domain.num_elements(); ++i) {
    const auto& local = domain.triangle(i);
    std::vector<Vec2> cut;
    for (int k = 0; k < 3; ++k) {
      const int a = local[k], b = local[(k + 1) % 3];
      const double pa = psi[a], pb = psi[b];
      if ((pa > 0.0) == (pb > 0.0)) continue;
      const double s = pa / (pa - pb);
      const Vec2& va = mesh.vertices[domain.nodes()[a]];
      const Vec2& vb = mesh.vertices[domain.nodes()[b]];
      cut.push_back(va + s * (vb - va));
    }
    if (cut.size() == 2) out << "<polyline points=\"" << point(cut[0]) << ' ' << point(cut[1]) << "\"/>\n";
  }
  out << "</g>\n</svg>\n";
}

}  // namespace rto
