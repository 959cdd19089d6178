#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "rto/errors.hpp"
#include "rto/parallel.hpp"
#include "rto/pipeline.hpp"

namespace fs = std::filesystem;
using namespace rto;

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, solver_failure = 3, stalled = 4 };

Vector design_levelset(const RunConfig& config, const std::string& path) {
  const DesignProblem problem = build_problem(config);
  const DesignDomain domain(problem.mesh(), problem.design_elements);
  return path.empty() ? initial_levelset(config, domain, problem.mesh()) : load_levelset(path, domain);
}

int run_precompute(const RunConfig& config, std::string out) {
  if (out.empty()) out = resolve_output_path(config.table_directory);
  const PrecomputeReport r = precompute_tables(config, out);
  for (const std::string& f : r.files) std::cout << "wrote " << f << '\n';
  if (r.linear_slope_deviation >= 0.0) {
    std::cout << "linear slope audit: max relative deviation " << r.linear_slope_deviation << ", max |f2|/|f1| "
              << r.linear_f2_ratio << '\n';
  }
  return ok;
}

int run_opt(const RunConfig& config, const std::string& mode, std::string out) {
  if (out.empty()) out = resolve_output_path(config.output_directory);
  const RunSummary s = run_optimize(config, run_mode_from_string(mode), out);
  std::cout << "status " << s.status << ", iterations " << s.iterations << ", J " << s.nominal_value
            << ", worst case " << s.worst_case_value << '\n';
  return s.status == "stalled" ? stalled : ok;
}

int run_audit(const RunConfig& config, const std::string& kind, const std::string& design, std::string out) {
  const Vector psi = design_levelset(config, design);
  if (out.empty()) out = (fs::path(resolve_output_path(config.output_directory)) / ("audit_" + kind + ".csv")).string();
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  std::ofstream csv(out);
  if (!csv) throw ConfigError("cannot write " + out);
  if (kind == "sweep") audit_sweep(config, psi, csv);
  else if (kind == "fdcheck") audit_fdcheck(config, psi, csv);
  else audit_tdcheck(config, psi, csv);
  std::cout << "wrote " << out << '\n';
  return ok;
}

int run_render(const RunConfig& config, const std::string& design, std::string out) {
  const DesignProblem problem = build_problem(config);
  const DesignDomain domain(problem.mesh(), problem.design_elements);
  const Vector psi = design.empty() ? initial_levelset(config, domain, problem.mesh()) : load_levelset(design, domain);
  if (out.empty()) out = (fs::path(resolve_output_path(config.output_directory)) / "render.svg").string();
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  std::ofstream svg(out);
  if (!svg) throw ConfigError("cannot write " + out);
  write_svg(svg, problem, domain, psi);
  std::cout << "wrote " << out << '\n';
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust level-set topology optimization of a magnetostatic machine model"};
  app.require_subcommand(1);
  int threads = 0;
  std::string level = "info";
  app.add_option("--threads", threads, "Cap on worker threads (0: hardware concurrency)")->check(CLI::NonNegativeNumber);
  app.add_option("--log-level", level, "trace, debug, info, warn, error, off");

  std::string config_path, out, mode = "nominal", kind, design;
  auto* pre = app.add_subcommand("precompute-td", "Sample the TD tables of the configured laws");
  auto* opt = app.add_subcommand("optimize", "Run the level-set optimizer");
  auto* aud = app.add_subcommand("audit", "Write a sweep, gradient or TD check as CSV");
  auto* ren = app.add_subcommand("render", "Render a design as SVG");
  for (auto* sub : {pre, opt, aud, ren}) {
    sub->add_option("-c,--config", config_path, "Run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", out, "Output directory or file");
  }
  opt->add_option("--mode", mode, "nominal or robust")->check(CLI::IsMember({"nominal", "robust"}));
  aud->add_option("--kind", kind, "sweep, fdcheck or tdcheck")->required()->check(CLI::IsMember({"sweep", "fdcheck", "tdcheck"}));
  for (auto* sub : {aud, ren}) sub->add_option("-d,--design", design, "Level-set file (default: initial guess)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : config_error;
  }
  spdlog::set_level(spdlog::level::from_str(level));
  if (threads > 0) set_thread_count(threads);

  try {
    const RunConfig config = load_run_config(config_path);
    if (*pre) return run_precompute(config, out);
    if (*opt) return run_opt(config, mode, out);
    if (*aud) return run_audit(config, kind, design, out);
    return run_render(config, design, out);
  } catch (const ConfigError& e) {
    spdlog::error("configuration error: {}", e.what());
    return config_error;
  } catch (const UsageError& e) {
    spdlog::error("invalid input: {}", e.what());
    return config_error;
  } catch (const SolverError& e) {
    spdlog::error("solver failure: {}", e.what());
    return solver_failure;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return failure;
  }
}
