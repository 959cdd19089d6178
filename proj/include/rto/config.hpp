#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

#include "rto/levelset.hpp"
#include "rto/machine.hpp"
#include "rto/robust.hpp"
#include "rto/topderiv.hpp"

namespace rto {

enum class ProblemKind { machine, toy };

std::string_view to_string(ProblemKind kind);
ProblemKind problem_kind_from_string(std::string_view name);

/// Offline TD sampling.
struct TableConfig {
  double t_max = 5.0;
  int samples = 50;
  /// q samples per bound saturation entry (material scenarios only).
  int q_samples = 10;
};

enum class InitialGuess { iron, air, random, file };

struct RunConfig {
  ProblemKind problem = ProblemKind::machine;
  std::uint64_t seed = 0;

  MachineConfig machine;
  ToyConfig toy;
  ExteriorConfig exterior;
  TableConfig tables;
  LevelSetParams levelset;
  InnerParams inner;

  InitialGuess initial = InitialGuess::iron;
  std::string initial_file;

  /// Points per axis of audit sweeps.
  int sweep_points = 31;
  /// Relative step of the gradient audit.
  double fd_step = 1e-6;
  /// Design elements sampled by the TD audit.
  int td_elements = 5;

  std::string output_directory = "runs/default";
  std::string table_directory = "tables";
  /// Render every n-th iteration; 0 renders only the final design.
  int snapshot_interval = 10;
};

/// Parses the sectioned key = value format. Unknown sections or keys, and
/// values that do not parse as their key's type, throw ConfigError.
RunConfig parse_run_config(std::istream& in);
RunConfig load_run_config(const std::string& path);

/// Range checks of every block; throws ConfigError.
void validate(const RunConfig& config);

/// Writes every key with its effective value in the format parse_run_config reads.
void write_run_config(std::ostream& out, const RunConfig& config);

}  // namespace rto
