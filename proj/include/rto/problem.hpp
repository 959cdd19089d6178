#pragma once

#include <memory>
#include <vector>

#include "rto/fem.hpp"
#include "rto/materials.hpp"

namespace rto {

/// Output functional of the state, evaluated from element curls B = curl u:
///   sum_i w_i (B_e(i) . a_i)(B_e(i) . b_i) + sum_j w_j (B_e(j) . d_j)
struct OutputFunctional {
  struct Quadratic {
    int element;
    double weight;
    Vec2 a;
    Vec2 b;
  };
  struct Linear {
    int element;
    double weight;
    Vec2 d;
  };
  std::vector<Quadratic> quadratic;
  std::vector<Linear> linear;

  double value(const FemSpace& space, const Vector& u) const;
  /// Nodal gradient with respect to u.
  Vector gradient(const FemSpace& space, const Vector& u) const;
};

/// Maxwell-stress torque (1/mu0) int_S B_r B_t r dS on the circle of the given
/// radius, trapezoidal rule with `points` intervals over the mesh sector,
/// multiplied by the number of sectors in a full turn. Throws ConfigError if
/// a quadrature point falls outside the mesh or, when `require_air_gap`, in
/// an element not labeled air_gap.
OutputFunctional torque_functional(const FemSpace& space, double radius, int points, double nu0,
                                   bool require_air_gap = true);

/// Element source densities per position:
///   j_e(n, q) = scale(q) * amplitude_e * sin(angle_n + phase_e + load_angle(q))
/// where load_angle(q) = q[load_angle_binding] if bound, else `load_angle`,
/// and scale(q) = q[scale_binding] if bound, else 1.
struct SourceModel {
  Vector amplitude;
  Vector phase;
  std::vector<double> angles;
  double load_angle = 0.0;
  int load_angle_binding = -1;
  int scale_binding = -1;

  Vector density(int n, const Params& q) const;
  /// Derivative of `density` with respect to q[entry].
  Vector density_dq(int n, const Params& q, int entry) const;
};

/// Iron/air indicator per design element (index into design_elements).
using Design = std::vector<char>;

/// A quasilinear magnetostatic design problem:
///   J(Omega, q) = -(1/N) sum_n T(u^n),  u^n solves the state equation with
///   the laws selected by the design and the source of position n.
struct DesignProblem {
  std::shared_ptr<const FemSpace> space;
  std::vector<MaterialLaw> laws;
  /// Law per element; -1 on design elements.
  std::vector<int> element_law;
  std::vector<int> design_elements;
  /// Law used where a design element is iron.
  std::vector<int> design_iron_law;
  int design_air_law = -1;
  /// Magnet direction offsets per position (empty: magnets fixed).
  std::vector<double> magnet_rotation;
  SourceModel source;
  OutputFunctional output;
  int num_positions = 1;
  Params nominal_q;
  /// Air design elements evaluate the air-to-iron derivative with the
  /// nominal parameter instead of q (region-wise material uncertainty).
  bool nominal_in_air = false;
  NewtonOptions newton;

  const Mesh& mesh() const { return space->mesh(); }
  int num_design() const { return static_cast<int>(design_elements.size()); }
};

/// Checks sizes and indices; throws ConfigError.
void validate(const DesignProblem& problem);

MaterialField material_field(const DesignProblem& problem, const Design& design, const Params& q, int position);

struct StateSet {
  double value = 0.0;
  std::vector<double> outputs;
  std::vector<Vector> states;
};

/// Solves all positions (in parallel when enabled) from a zero initial guess.
/// Solver failures are rethrown with the position index in the message.
StateSet solve_states(const DesignProblem& problem, const Design& design, const Params& q);

double objective(const DesignProblem& problem, const Design& design, const Params& q);

/// p^n solving the linearized system with right-hand side (1/N) dT/du(u^n).
std::vector<Vector> solve_adjoints(const DesignProblem& problem, const Design& design, const Params& q,
                                   const StateSet& states);

/// sum_n [ int d_q h . curl p^n - int d_q j p^n ]
Params grad_q(const DesignProblem& problem, const Design& design, const Params& q, const StateSet& states,
              const std::vector<Vector>& adjoints);

/// Saturation constant the iron side of the perturbation uses at design
/// element i (nominal value on air elements when `nominal_in_air`).
double td_saturation(const DesignProblem& problem, int design_index, bool iron, const Params& q);

}  // namespace rto
