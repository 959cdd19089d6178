#pragma once

#include <memory>
#include <vector>

#include "rto/levelset.hpp"
#include "rto/uncertainty.hpp"

namespace rto {

// --- inner maximization -----------------------------------------------------------

/// q -> J(Omega, q) for a fixed design, with its parameter gradient.
/// Implementations must allow concurrent calls.
class ParameterObjective {
 public:
  struct Point {
    Params q;
    double value = 0.0;
    /// States behind `value` (null for analytic objectives).
    std::shared_ptr<const StateSet> states;
  };
  virtual ~ParameterObjective() = default;
  virtual Point evaluate(const Params& q) const = 0;
  virtual Params gradient(const Point& at) const = 0;
};

/// J(Omega, q) of a design problem: states at q, gradient from the adjoints.
class DesignParameterObjective final : public ParameterObjective {
 public:
  DesignParameterObjective(const DesignProblem& problem, Design design)
      : problem_(problem), design_(std::move(design)) {}
  Point evaluate(const Params& q) const override;
  Params gradient(const Point& at) const override;

 private:
  const DesignProblem& problem_;
  Design design_;
};

struct InnerParams {
  int l_max = 100;
  double eps_tau = 1e-3;
  double tau_min = 1e-3;
  double tau_max = 1.0;
  double gamma_tau = 0.5;
  double delta_tau = 1.5;
  /// Sufficient-increase constant, in (0, 1/2).
  double gamma = 0.1;
};

/// Throws ConfigError for parameters outside their documented ranges.
void validate(const InnerParams& params);

/// One trial of the projected-gradient ascent.
struct InnerStep {
  int l = 0;
  Params from;
  double from_value = 0.0;
  Params to;
  double to_value = 0.0;
  double tau = 0.0;
  bool accepted = false;
};

struct StartResult {
  Params start;
  ParameterObjective::Point best;
  int iterations = 0;
  /// The first evaluation failed; `best` is unset.
  bool failed = false;
  /// A later solve failed; `best` is the last accepted point.
  bool aborted = false;
  std::vector<InnerStep> steps;
};

struct WorstCaseResult {
  ParameterObjective::Point best;
  int iterations = 0;
  int evaluations = 0;
  /// Index into `starts` of the winning start.
  int winner = -1;
  std::vector<StartResult> starts;
};

/// Projected-gradient ascent q <- P_U(q + tau grad J) from every start
/// (duplicates removed), with backtracking on the sufficient-increase test
///   J(q+) - J(q) >= gamma / tau |q+ - q|^2.
/// Stops a start when the accepted step is shorter than eps_tau, after l_max
/// iterations, or when no step passes at tau_min. Starts run concurrently.
/// A PDE failure stops a start with a warning, keeping its last accepted
/// point; SolverError is thrown when every start fails at its first point.
/// A singleton set returns its nominal value after one evaluation. Starts
/// must lie in U (UsageError otherwise).
WorstCaseResult inner_maximize(const ParameterObjective& objective, const UncertaintySet& set,
                               const std::vector<Params>& starts, const InnerParams& params = {});

/// Boundary points of U, the nominal value and optionally a previous q*.
std::vector<Params> default_starts(const UncertaintySet& set, const Params* previous = nullptr);

/// J(Omega, q) on the grid of U, in grid order (parallel over points).
std::vector<double> sweep_objective(const DesignProblem& problem, const Design& design,
                                    const std::vector<Params>& grid);

// --- robust outer loop --------------------------------------------------------------

/// Throws UsageError when q binds a material law but the TD model cannot
/// interpolate in q (closed forms or tables with a single q row).
void check_model_for_parameters(const DesignProblem& problem, const TDModel& model);

/// Worst-case function phi(Omega) = max_U J(Omega, q) and its TD, which is
/// the generalized TD at q*. The inner solver warm-starts from the previous
/// q* and is retried once from the boundary points if it fails.
class RobustObjective final : public OuterObjective {
 public:
  RobustObjective(const DesignProblem& problem, TDModel model, UncertaintySet set, InnerParams inner = {});
  OuterEvaluation evaluate(const Design& design, const OuterEvaluation* current) override;
  Vector td_field(const Design& design, const OuterEvaluation& at) override;

  const UncertaintySet& set() const { return set_; }
  /// Result of the most recent inner solve.
  const WorstCaseResult& last_worst_case() const { return last_; }

 private:
  const DesignProblem& problem_;
  TDModel model_;
  UncertaintySet set_;
  InnerParams inner_;
  WorstCaseResult last_;
};

OptimizationResult optimize_robust(const DesignProblem& problem, const TDModel& model, const UncertaintySet& set,
                                   const Vector& psi0, const LevelSetParams& params, const InnerParams& inner = {},
                                   const IterationCallback& callback = {});

}  // namespace rto
