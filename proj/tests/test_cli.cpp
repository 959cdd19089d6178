#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rto/errors.hpp"
#include "rto/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rto;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("rto_test_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in);
}

RunConfig toy(bool uncertain) {
  RunConfig c;
  c.problem = ProblemKind::toy;
  c.toy.uncertain_scale = uncertain;
  c.snapshot_interval = 0;
  return c;
}

// Iteration log without the wall-clock column.
std::string strip_wall(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(RTO_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Config, DefaultsFollowTheParameterTable) {
  const RunConfig c = parse("");
  EXPECT_EQ(c.tables.t_max, 5.0);
  EXPECT_EQ(c.tables.samples, 50);
  EXPECT_EQ(c.tables.q_samples, 10);
  EXPECT_NEAR(c.levelset.angle_tol, 2.0 * std::numbers::pi / 180.0, 1e-15);
  EXPECT_EQ(c.levelset.s_min, 0.05);
  EXPECT_EQ(c.levelset.s_max, 1.0);
  EXPECT_EQ(c.levelset.gamma, 0.5);
  EXPECT_EQ(c.levelset.delta, 1.5);
  EXPECT_EQ(c.inner.gamma_tau, 0.5);
  EXPECT_EQ(c.inner.delta_tau, 1.5);
  EXPECT_EQ(c.inner.eps_tau, 1e-3);
  EXPECT_EQ(c.inner.tau_min, 1e-3);
  EXPECT_EQ(c.inner.tau_max, 1.0);
}

TEST(Config, TypedKeys) {
  const RunConfig c = parse(
      "[run]\nproblem = toy\nseed = 7\n[scenario]\nname = ang\nangle_lower_deg = -10\n"
      "[geometry]\ncoil_centers_deg = 5 20 35\n[algorithm]\ninitial = random\n[exterior]\ntruncation = dirichlet\n");
  EXPECT_EQ(c.problem, ProblemKind::toy);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.machine.scenario, ScenarioKind::ang);
  EXPECT_NEAR(c.machine.angle_lower, -10.0 * std::numbers::pi / 180.0, 1e-15);
  EXPECT_NEAR(c.machine.geometry.coil_centers[2], 35.0 * std::numbers::pi / 180.0, 1e-15);
  EXPECT_EQ(c.initial, InitialGuess::random);
  EXPECT_EQ(c.exterior.truncation, Truncation::dirichlet);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse("[algorithm]\nsamples = 1\n"), ConfigError);
  EXPECT_THROW(parse("[algorithm]\nsampels = 10\n"), ConfigError);
  EXPECT_THROW(parse("[nowhere]\nx = 1\n"), ConfigError);
  EXPECT_THROW(parse("[algorithm]\nk_max = ten\n"), ConfigError);
  EXPECT_THROW(parse("[algorithm]\ns_min = 2\n"), ConfigError);
  EXPECT_THROW(parse("[scenario]\nname = robust\n"), ConfigError);
  EXPECT_THROW(parse("[geometry]\ncoil_centers_deg = 5 20\n"), ConfigError);
  EXPECT_THROW(parse("[algorithm]\ninitial = file\n"), ConfigError);
  EXPECT_THROW(parse("[materials]\nlinear_iron = maybe\n"), ConfigError);
  EXPECT_THROW(parse("[geometry]\nshaft_radius = 0.06\n"), ConfigError);
  EXPECT_THROW(parse("seed = 1\n"), ConfigError);
}

TEST(Config, WriteThenParseIsStable) {
  RunConfig c = parse("[run]\nseed = 3\n[scenario]\nname = scal\n[algorithm]\nsufficient_increase = 0.2\n");
  std::ostringstream first;
  write_run_config(first, c);
  std::ostringstream second;
  write_run_config(second, parse(first.str()));
  EXPECT_EQ(first.str(), second.str());
}

TEST(Paths, OutputRootOverride) {
  ::unsetenv("RTO_OUTPUT_ROOT");
  EXPECT_EQ(resolve_output_path("runs/a"), "runs/a");
  ::setenv("RTO_OUTPUT_ROOT", "/tmp/root", 1);
  EXPECT_EQ(resolve_output_path("runs/a"), "/tmp/root/runs/a");
  EXPECT_EQ(resolve_output_path("/abs/a"), "/abs/a");
  ::unsetenv("RTO_OUTPUT_ROOT");
}

TEST(Precompute, LinearTablesAuditAndDeterminism) {
  RunConfig c = toy(false);
  c.toy.nu_iron = 0.01;
  c.exterior.target_nodes = 6000;
  c.tables.samples = 6;
  const fs::path a = scratch("tables_a"), b = scratch("tables_b");
  const PrecomputeReport ra = precompute_tables(c, a.string());
  const PrecomputeReport rb = precompute_tables(c, b.string());
  ASSERT_EQ(ra.files.size(), 2u);
  EXPECT_LE(ra.linear_slope_deviation, 0.02);
  EXPECT_LE(ra.linear_f2_ratio, 0.02);
  for (std::size_t i = 0; i < ra.files.size(); ++i) EXPECT_EQ(slurp(ra.files[i]), slurp(rb.files[i]));
  c.tables.samples = 1;
  EXPECT_THROW(precompute_tables(c, a.string()), ConfigError);
}

TEST(Precompute, NonlinearLawsNeedMatchingTables) {
  RunConfig c;
  c.machine.geometry.target_nodes = 1500;
  const DesignProblem p = build_problem(c);
  const fs::path dir = scratch("tables_missing");
  EXPECT_THROW(load_td_model(c, p, dir.string()), ConfigError);
  // A table sampled for other laws is stale.
  TDTable t;
  t.direction = TDDirection::iron_to_air;
  t.iron_fingerprint = "iron(other)";
  t.air_fingerprint = fingerprint(p.laws[p.design_air_law]);
  t.t = {0.0, 1.0};
  t.f1 = {{0.0, 1.0}};
  t.f2 = {{0.0, 0.0}};
  save_table(table_path(dir.string(), TDDirection::iron_to_air), t);
  t.direction = TDDirection::air_to_iron;
  save_table(table_path(dir.string(), TDDirection::air_to_iron), t);
  EXPECT_THROW(load_td_model(c, p, dir.string()), ConfigError);
}

TEST(Optimize, SingletonRobustSummaryEqualsNominal) {
  const RunConfig c = toy(false);
  const fs::path n = scratch("nominal"), r = scratch("robust");
  run_optimize(c, RunMode::nominal, n.string());
  run_optimize(c, RunMode::robust, r.string());
  EXPECT_EQ(slurp(n / "summary.json"), slurp(r / "summary.json"));
  EXPECT_EQ(strip_wall(slurp(n / "iterations.csv")), strip_wall(slurp(r / "iterations.csv")));
  EXPECT_EQ(slurp(n / "final.rtols"), slurp(r / "final.rtols"));
}

TEST(Optimize, RerunIsBitwiseIdentical) {
  RunConfig c = toy(true);
  c.initial = InitialGuess::random;
  c.seed = 11;
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  run_optimize(c, RunMode::robust, a.string());
  run_optimize(c, RunMode::robust, b.string());
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_EQ(strip_wall(slurp(a / "iterations.csv")), strip_wall(slurp(b / "iterations.csv")));
}

TEST(Optimize, ToyArtifactsAndInvariants) {
  RunConfig c = toy(true);
  c.snapshot_interval = 2;
  const fs::path dir = scratch("toy_robust");
  const RunSummary s = run_optimize(c, RunMode::robust, dir.string());
  EXPECT_EQ(s.status, "converged");
  EXPECT_TRUE(fs::exists(dir / "final.svg"));
  EXPECT_TRUE(fs::exists(dir / "design_0000.svg"));
  EXPECT_TRUE(fs::exists(dir / "config.ini"));
  const std::vector<double> values = read_accepted_values((dir / "iterations.csv").string());
  ASSERT_GE(values.size(), 2u);
  for (std::size_t i = 1; i < values.size(); ++i) EXPECT_LE(values[i], values[i - 1]);
  const RunSummary back = read_summary((dir / "summary.json").string());
  EXPECT_EQ(back.iterations, s.iterations);
  EXPECT_EQ(back.worst_case_value, s.worst_case_value);
  // Worst case of a negative objective under a source scale is the smallest scale.
  ASSERT_EQ(back.worst_case_q.size(), 1);
  EXPECT_EQ(back.worst_case_q[0], c.toy.scale_lower);

  // The final design holds iron in the upper half of the square.
  const DesignProblem p = build_problem(c);
  const DesignDomain domain(p.mesh(), p.design_elements);
  const Design d = design_from_levelset(domain, load_levelset((dir / "final.rtols").string(), domain));
  int upper = 0, upper_iron = 0;
  for (int i = 0; i < p.num_design(); ++i)
    if (toy_upper_half(p.mesh().centroid(p.design_elements[i]))) {
      ++upper;
      upper_iron += d[i];
    }
  EXPECT_GT(2 * upper_iron, upper);
}

TEST(Optimize, VersionedFilesAreChecked) {
  const fs::path dir = scratch("versions");
  std::ofstream(dir / "bad.csv") << "# RTOITER0\nk,value\n";
  EXPECT_THROW(read_accepted_values((dir / "bad.csv").string()), ConfigError);
  std::ofstream(dir / "bad.json") << "{\"format\": \"RTOSUM0\"}";
  EXPECT_THROW(read_summary((dir / "bad.json").string()), ConfigError);
}

TEST(Audit, SweepFdcheckAndTdcheckOnTheToy) {
  const RunConfig c = toy(true);
  const DesignProblem p = build_problem(c);
  const DesignDomain domain(p.mesh(), p.design_elements);
  const Vector psi = indicator_levelset(domain, p.mesh(), toy_upper_half);

  std::ostringstream sweep;
  audit_sweep(c, psi, sweep);
  std::istringstream in(sweep.str());
  std::string line;
  int rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line, "# RTOAUDIT1 sweep");
  std::getline(in, line);
  EXPECT_EQ(line, "q0,J");
  while (std::getline(in, line) && line[0] != '#') ++rows;
  EXPECT_EQ(rows, 31);
  EXPECT_NE(sweep.str().find("# inner_max"), std::string::npos);

  std::ostringstream fd;
  audit_fdcheck(c, psi, fd);
  std::istringstream fin(fd.str());
  std::getline(fin, line);
  std::getline(fin, line);
  std::getline(fin, line);
  EXPECT_LE(std::stod(line.substr(line.rfind(',') + 1)), 1e-4);

  RunConfig t = c;
  t.td_elements = 2;
  t.toy.cells = 80;
  const DesignProblem fine = build_problem(t);
  const DesignDomain fine_domain(fine.mesh(), fine.design_elements);
  std::ostringstream td;
  audit_tdcheck(t, indicator_levelset(fine_domain, fine.mesh(), toy_upper_half), td);
  std::istringstream tin(td.str());
  rows = 0;
  std::getline(tin, line);
  std::getline(tin, line);
  EXPECT_EQ(line, "design_index,iron,radius,area,quotient,td,rel_error");
  while (std::getline(tin, line)) ++rows;
  EXPECT_EQ(rows, 6);
}

TEST(Render, SvgHasElementsAndContour) {
  const RunConfig c = toy(false);
  const DesignProblem p = build_problem(c);
  const DesignDomain domain(p.mesh(), p.design_elements);
  std::ostringstream svg;
  write_svg(svg, p, domain, indicator_levelset(domain, p.mesh(), toy_upper_half));
  const std::string s = svg.str();
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("<polygon"), std::string::npos);
  EXPECT_NE(s.find("<polyline"), std::string::npos);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
}

TEST(Binary, ExitCodes) {
  const fs::path dir = scratch("binary");
  std::ofstream(dir / "bad.ini") << "[algorithm]\nsamples = 1\n";
  std::ofstream(dir / "toy.ini") << "[run]\nproblem = toy\n[output]\nsnapshot_interval = 0\ndirectory = "
                                 << (dir / "run").string() << '\n';
  std::ofstream(dir / "stall.ini") << "[run]\nproblem = toy\n[toy]\nnu_iron = 0.01\n[algorithm]\nk_max = 200\n"
                                   << "[output]\nsnapshot_interval = 0\ndirectory = " << (dir / "stall").string()
                                   << '\n';
  std::ofstream(dir / "machine.ini") << "[geometry]\ntarget_nodes = 1500\n[output]\ntables = "
                                     << (dir / "none").string() << "\ndirectory = " << (dir / "m").string() << '\n';
  EXPECT_EQ(run_cli("optimize -c " + (dir / "bad.ini").string()), 2);
  EXPECT_EQ(run_cli("optimize -c " + (dir / "machine.ini").string()), 2);
  EXPECT_EQ(run_cli("--threads 1 optimize -c " + (dir / "toy.ini").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "summary.json"));
  EXPECT_EQ(run_cli("optimize -c " + (dir / "stall.ini").string()), 4);
  EXPECT_EQ(run_cli("render -c " + (dir / "toy.ini").string() + " -d " + (dir / "run" / "final.rtols").string() +
                    " -o " + (dir / "x.svg").string()),
            0);
  EXPECT_TRUE(fs::exists(dir / "x.svg"));
}
