#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "rto/design_domain.hpp"
#include "rto/problem.hpp"
#include "rto/topderiv.hpp"

namespace rto {

// --- level-set primitives ----------------------------------------------------------
// A level-set field is a nodal vector on a DesignDomain; psi > 0 marks iron.

/// Scales to unit L2(D) norm. Throws UsageError for the zero field.
Vector normalize(const DesignDomain& domain, const Vector& raw);

/// arccos((psi, g) / |g|) for unit psi. Throws UsageError for g = 0.
double angle_between(const DesignDomain& domain, const Vector& psi, const Vector& g);

/// Spherical interpolation from psi towards g/|g| by the fraction s of theta.
/// theta = 0 returns psi; s = 1 returns g/|g|; theta = pi throws UsageError.
Vector slerp_update(const DesignDomain& domain, const Vector& psi, const Vector& g, double s, double theta);

/// Element is iron iff psi at its centroid is positive.
Design design_from_levelset(const DesignDomain& domain, const Vector& psi);

/// Share of elements with |psi(centroid)| > deadband whose sign matches g's.
double optimality_fraction(const DesignDomain& domain, const Vector& psi, const Vector& g, double deadband = 1e-8);

/// Sign condition of local optimality on every element outside the deadband.
bool check_optimality(const DesignDomain& domain, const Vector& psi, const Vector& g, double deadband = 1e-8);

/// Normalized constant field; sign +1 is the all-iron start.
Vector constant_levelset(const DesignDomain& domain, double sign = 1.0);

/// Normalized field with independent uniform nodal values in [-1, 1].
Vector random_levelset(const DesignDomain& domain, std::uint64_t seed);

/// Normalized field that is +1 where `iron` holds at a node and -1 elsewhere.
Vector indicator_levelset(const DesignDomain& domain, const Mesh& mesh, const std::function<bool(const Vec2&)>& iron);

inline constexpr std::string_view kLevelSetFormatVersion = "RTOLS1";
void write_levelset(std::ostream& out, const DesignDomain& domain, const Vector& psi);
/// Throws ConfigError when the file does not match the domain's nodes.
Vector read_levelset(std::istream& in, const DesignDomain& domain);
void save_levelset(const std::string& path, const DesignDomain& domain, const Vector& psi);
Vector load_levelset(const std::string& path, const DesignDomain& domain);

// --- outer loop ---------------------------------------------------------------------

struct LevelSetParams {
  int k_max = 100;
  double angle_tol = 2.0 * std::numbers::pi / 180.0;
  double s_min = 0.05;
  double s_max = 1.0;
  /// Step shrink factor after a rejected trial.
  double gamma = 0.5;
  /// Step growth factor after an accepted trial.
  double delta = 1.5;
  /// Smoothing length^2; 0 selects default_smoothing.
  double smoothing = 0.0;
};

/// Throws ConfigError for parameters outside their documented ranges.
void validate(const LevelSetParams& params);

/// Objective seen by the outer loop together with what the TD needs.
struct OuterEvaluation {
  double value = 0.0;
  Params q;
  StateSet states;
  int inner_iterations = 0;
};

/// Nominal J(Omega, q_hat) or a worst case over an uncertainty set.
class OuterObjective {
 public:
  virtual ~OuterObjective() = default;
  /// `current` is the evaluation of the accepted design (null at the start).
  virtual OuterEvaluation evaluate(const Design& design, const OuterEvaluation* current) = 0;
  /// Generalized TD per design element at the evaluation's parameter.
  virtual Vector td_field(const Design& design, const OuterEvaluation& at) = 0;
};

class NominalObjective final : public OuterObjective {
 public:
  NominalObjective(const DesignProblem& problem, TDModel model) : problem_(problem), model_(std::move(model)) {}
  OuterEvaluation evaluate(const Design& design, const OuterEvaluation* current) override;
  Vector td_field(const Design& design, const OuterEvaluation& at) override;

 private:
  const DesignProblem& problem_;
  TDModel model_;
};

enum class OptimizationStatus { converged, max_iterations, stalled };
std::string_view to_string(OptimizationStatus status);

/// One outer iteration: the accepted iterate k with its value, the angle to
/// its smoothed TD, the step that was accepted from it (or last tried), and
/// whether a step was accepted.
struct IterationRecord {
  int k = 0;
  double value = 0.0;
  double theta = 0.0;
  double step = 0.0;
  bool accepted = false;
  int trials = 0;
  double wall_seconds = 0.0;
  Params q;
};

struct OptimizationResult {
  OptimizationStatus status = OptimizationStatus::max_iterations;
  Vector psi;
  Design design;
  OuterEvaluation evaluation;
  /// Smoothed TD at the final iterate (nodal on the design domain).
  Vector g;
  std::vector<IterationRecord> history;
};

/// Called after every iteration with the level set it produced.
using IterationCallback = std::function<void(const IterationRecord&, const Vector& psi)>;

/// Level-set descent: smoothed generalized TD, angle test, spherical update
/// with a step that persists across iterations (shrunk by gamma on rejection,
/// grown by delta on acceptance). A trial that leaves the design unchanged
/// grows the step instead; if it happens at s_max the sign condition holds
/// and the run counts as converged. A rejection at s_min stalls the run.
OptimizationResult run_levelset(const DesignDomain& domain, OuterObjective& objective, const Vector& psi0,
                                const LevelSetParams& params, const IterationCallback& callback = {});

OptimizationResult optimize_nominal(const DesignProblem& problem, const TDModel& model, const Vector& psi0,
                                    const LevelSetParams& params, const IterationCallback& callback = {});

}  // namespace rto
