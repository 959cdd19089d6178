#pragma once

#include <array>
#include <string>

#include "rto/mesh.hpp"
#include "rto/problem.hpp"
#include "rto/uncertainty.hpp"

namespace rto {

enum class ScenarioKind { nom, ang, scal, dist };

std::string_view to_string(ScenarioKind kind);
ScenarioKind scenario_from_string(std::string_view name);

struct MachineConfig {
  GeometryConfig geometry;
  MaterialConstants materials;
  ScenarioKind scenario = ScenarioKind::nom;

  double j_hat = 23.7e6;
  double phi0 = 6.0 * std::numbers::pi / 180.0;
  int positions = 11;
  /// Mechanical angle covered by the positions: alpha^n = period * n / N.
  double position_period = 15.0 * std::numbers::pi / 180.0;
  int pole_pairs = 4;
  /// Rotate the magnet directions with alpha^n (frozen-rotor variant).
  bool rotate_magnets = false;
  /// Replace the saturating iron law by h = nuf b (no parameter binding).
  bool linear_iron = false;

  /// 0 selects the middle of the air gap.
  double torque_radius = 0.0;
  int torque_points = 1440;

  /// Angular slices of the design annulus, each with its own saturation
  /// entry in the region-wise scenario; the stator gets the last entry.
  int dist_rotor_regions = 8;

  /// Load-angle interval (rad).
  double angle_lower = -9.0 * std::numbers::pi / 180.0;
  double angle_upper = 21.0 * std::numbers::pi / 180.0;
  /// Saturation interval K_f (1 -+ spread).
  double kf_spread = 0.2;
};

/// Per-phase densities before the coil sign pattern (A+, B-, C+).
struct SourceDensity {
  double a;
  double b;
  double c;
};

SourceDensity source_at(const MachineConfig& config, int position, const Params& q);

/// Parameter vector size of the scenario (0 for nom).
int parameter_count(const MachineConfig& config);
Params nominal_parameters(const MachineConfig& config);
/// Interval set of the scenario (a singleton of dimension 0 for nom).
UncertaintySet scenario_uncertainty_set(const MachineConfig& config);

/// Region-wise scenario: sub-region index of a design point.
int dist_region(const MachineConfig& config, const Vec2& point);

/// Benchmark problem on the given mesh (defaults to build_benchmark_mesh).
DesignProblem build_machine_problem(const MachineConfig& config);
DesignProblem build_machine_problem(const MachineConfig& config, Mesh mesh);

/// Auxiliary two-region problem on the unit square: a coil on the left, a
/// square design region in the middle and observation regions upper right
/// (weight -1) and lower right (weight +1). Linear laws only.
struct ToyConfig {
  int cells = 40;
  double nu_air = 1.0;
  double nu_iron = 0.5;
  double source = 100.0;
  int positions = 1;
  /// Bind q[0] as a multiplier of the source (nominal 1).
  bool uncertain_scale = false;
  double scale_lower = 0.8;
  double scale_upper = 1.2;
};

DesignProblem build_toy_problem(const ToyConfig& config);
/// Same problem on a mesh of the unit square that already carries the labels.
DesignProblem build_toy_problem(const ToyConfig& config, Mesh mesh);
/// [scale_lower, scale_upper] around 1 with uncertain_scale, else a singleton.
UncertaintySet toy_uncertainty_set(const ToyConfig& config);
/// Upper (true) or lower half of the toy design square.
bool toy_upper_half(const Vec2& point);

}  // namespace rto
