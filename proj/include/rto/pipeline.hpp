#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "rto/audit.hpp"
#include "rto/config.hpp"

namespace rto {

/// Resolves relative artifact paths against $RTO_OUTPUT_ROOT when it is set.
std::string resolve_output_path(const std::string& path);

DesignProblem build_problem(const RunConfig& config);
ProblemBuilder problem_builder(const RunConfig& config);
UncertaintySet build_uncertainty_set(const RunConfig& config);

// --- offline tables -------------------------------------------------------------

std::string table_path(const std::string& directory, TDDirection direction);

struct PrecomputeReport {
  std::vector<std::string> files;
  /// Max |f1/t - slope| / |slope| over t > 0 and max |f2| / max |f1| for
  /// linear design laws; negative otherwise.
  double linear_slope_deviation = -1.0;
  double linear_f2_ratio = -1.0;
};

/// Samples both directions (in q as well when a saturation entry is bound)
/// and writes them to `directory`.
PrecomputeReport precompute_tables(const RunConfig& config, const std::string& directory);

/// Closed form for linear design laws, otherwise the fingerprint-checked
/// tables from `directory` (ConfigError when missing or stale).
TDModel load_td_model(const RunConfig& config, const DesignProblem& problem, const std::string& directory);

// --- optimization runs ------------------------------------------------------------

enum class RunMode { nominal, robust };
std::string_view to_string(RunMode mode);
RunMode run_mode_from_string(std::string_view name);

Vector initial_levelset(const RunConfig& config, const DesignDomain& domain, const Mesh& mesh);

struct RunSummary {
  std::string status;
  int iterations = 0;
  /// J at the nominal parameter of the final design.
  double nominal_value = 0.0;
  /// max over U of J for the final design, and its maximizer.
  double worst_case_value = 0.0;
  Params worst_case_q;
  std::string error;
};

inline constexpr std::string_view kIterationLogVersion = "RTOITER1";
inline constexpr std::string_view kSummaryVersion = "RTOSUM1";
inline constexpr std::string_view kAuditVersion = "RTOAUDIT1";

/// Writes iterations.csv, final.rtols, design renders and summary.json into
/// `directory`. SolverError is rethrown after the partial artifacts and a
/// failed summary are written.
RunSummary run_optimize(const RunConfig& config, RunMode mode, const std::string& directory);

/// Loads summary.json (version-checked).
RunSummary read_summary(const std::string& path);

/// Accepted-row objective values of an iteration log (version-checked).
std::vector<double> read_accepted_values(const std::string& path);

// --- audits ---------------------------------------------------------------------

/// q grid of U against J, then one row per inner-maximizer result as a comment.
void audit_sweep(const RunConfig& config, const Vector& psi, std::ostream& csv);
void audit_fdcheck(const RunConfig& config, const Vector& psi, std::ostream& csv);
void audit_tdcheck(const RunConfig& config, const Vector& psi, std::ostream& csv);

// --- renders ------------------------------------------------------------------------

/// Elements colored by region and design material, with the psi = 0 contour.
void write_svg(std::ostream& out, const DesignProblem& problem, const DesignDomain& domain, const Vector& psi);

}  // namespace rto
