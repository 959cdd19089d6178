#include "rto/robust.hpp"

#include <cmath>
#include <limits>
#include <string>

#include <spdlog/spdlog.h>

#include "rto/errors.hpp"
#include "rto/parallel.hpp"

namespace rto {

ParameterObjective::Point DesignParameterObjective::evaluate(const Params& q) const {
  auto states = std::make_shared<StateSet>(solve_states(problem_, design_, q));
  Point p;
  p.q = q;
  p.value = states->value;
  p.states = std::move(states);
  return p;
}

Params DesignParameterObjective::gradient(const Point& at) const {
  if (!at.states) throw UsageError("gradient: point carries no states");
  const auto adjoints = solve_adjoints(problem_, design_, at.q, *at.states);
  return grad_q(problem_, design_, at.q, *at.states, adjoints);
}

void validate(const InnerParams& p) {
  if (p.l_max < 0) throw ConfigError("l_max must be non-negative");
  if (!(p.eps_tau > 0.0)) throw ConfigError("eps_tau must be positive");
  if (!(p.tau_min > 0.0 && p.tau_min < p.tau_max && std::isfinite(p.tau_max)))
    throw ConfigError("need 0 < tau_min < tau_max < inf");
  if (!(p.gamma_tau > 0.0 && p.gamma_tau < 1.0)) throw ConfigError("gamma_tau must lie in (0, 1)");
  if (!(p.delta_tau >= 1.0)) throw ConfigError("delta_tau must be at least 1");
  if (!(p.gamma > 0.0 && p.gamma < 0.5)) throw ConfigError("sufficient-increase gamma must lie in (0, 1/2)");
}

namespace {

StartResult ascend(const ParameterObjective& objective, const UncertaintySet& set, const Params& start,
                   const InnerParams& params, int& evaluations) {
  StartResult r;
  r.start = start;
  r.best = objective.evaluate(start);
  ++evaluations;
  double tau = params.tau_max;
  try {
    for (int l = 0; l < params.l_max; ++l) {
      const Params g = objective.gradient(r.best);
      ++r.iterations;
      bool done = false;
      for (;;) {
        InnerStep step;
        step.l = l;
        step.from = r.best.q;
        step.from_value = r.best.value;
        step.tau = tau;
        step.to = set.project(r.best.q + tau * g);
        const double dist = (step.to - step.from).norm();
        if (dist == 0.0) {
          done = true;
          break;
        }
        ParameterObjective::Point trial = objective.evaluate(step.to);
        ++evaluations;
        step.to_value = trial.value;
        step.accepted = trial.value - r.best.value >= params.gamma / tau * dist * dist;
        r.steps.push_back(step);
        if (step.accepted) {
          r.best = std::move(trial);
          tau = std::min(params.tau_max, params.delta_tau * tau);
          done = dist < params.eps_tau;
          break;
        }
        if (tau <= params.tau_min) {
          done = true;
          break;
        }
        tau = std::max(params.tau_min, params.gamma_tau * tau);
      }
      if (done) break;
    }
  } catch (const SolverError& e) {
    spdlog::warn("inner start stopped after {} iterations: {}", r.iterations, e.what());
    r.aborted = true;
  }
  return r;
}

}  // namespace

WorstCaseResult inner_maximize(const ParameterObjective& objective, const UncertaintySet& set,
                               const std::vector<Params>& starts, const InnerParams& params) {
  validate(params);
  WorstCaseResult result;
  if (set.is_singleton()) {
    StartResult s;
    s.start = set.nominal();
    s.best = objective.evaluate(set.nominal());
    result.best = s.best;
    result.evaluations = 1;
    result.winner = 0;
    result.starts.push_back(std::move(s));
    return result;
  }
  std::vector<Params> unique;
  for (const Params& q : starts) {
    if (!set.contains(q)) throw UsageError("inner_maximize: start point outside the uncertainty set");
    bool seen = false;
    for (const Params& u : unique) seen = seen || (u - q).norm() <= 1e-12 * (1.0 + q.norm());
    if (!seen) unique.push_back(q);
  }
  if (unique.empty()) throw UsageError("inner_maximize: no start points");

  result.starts.resize(unique.size());
  std::vector<int> evaluations(unique.size(), 0);
  parallel_for(static_cast<int>(unique.size()), [&](int i) {
    try {
      result.starts[i] = ascend(objective, set, unique[i], params, evaluations[i]);
    } catch (const SolverError& e) {
      spdlog::warn("inner start {} aborted: {}", i, e.what());
      result.starts[i].start = unique[i];
      result.starts[i].failed = true;
    }
  });
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < unique.size(); ++i) {
    const StartResult& s = result.starts[i];
    result.evaluations += evaluations[i];
    result.iterations += s.iterations;
    if (!s.failed && s.best.value > best) {
      best = s.best.value;
      result.winner = static_cast<int>(i);
    }
  }
  if (result.winner < 0) throw SolverError("inner_maximize: every start failed");
  result.best = result.starts[result.winner].best;
  return result;
}

std::vector<Params> default_starts(const UncertaintySet& set, const Params* previous) {
  std::vector<Params> starts = set.boundary_points();
  starts.push_back(set.nominal());
  if (previous && previous->size() == set.dimension()) starts.push_back(set.project(*previous));
  return starts;
}

std::vector<double> sweep_objective(const DesignProblem& problem, const Design& design,
                                    const std::vector<Params>& grid) {
  std::vector<double> values(grid.size());
  parallel_for(static_cast<int>(grid.size()), [&](int i) { values[i] = objective(problem, design, grid[i]); });
  return values;
}

void check_model_for_parameters(const DesignProblem& problem, const TDModel& model) {
  bool bound = false;
  for (int law : problem.design_iron_law) bound = bound || problem.laws[law].kf_binding >= 0;
  if (!bound) return;
  for (const auto* ev : {model.iron_to_air.get(), model.air_to_iron.get()}) {
    const auto* table = dynamic_cast<const TableTD*>(ev);
    if (!table || table->table().q.size() < 2)
      throw UsageError("the parameter binds a material law: TD tables need samples in q");
  }
}

RobustObjective::RobustObjective(const DesignProblem& problem, TDModel model, UncertaintySet set, InnerParams inner)
    : problem_(problem), model_(std::move(model)), set_(std::move(set)), inner_(inner) {
  validate(inner_);
  if (set_.dimension() != problem_.nominal_q.size())
    throw ConfigError("uncertainty set has dimension " + std::to_string(set_.dimension()) + ", problem has " +
                      std::to_string(problem_.nominal_q.size()) + " parameters");
  if (!set_.is_singleton()) check_model_for_parameters(problem_, model_);
}

OuterEvaluation RobustObjective::evaluate(const Design& design, const OuterEvaluation* current) {
  const DesignParameterObjective objective(problem_, design);
  try {
    last_ = inner_maximize(objective, set_, default_starts(set_, current ? &current->q : nullptr), inner_);
  } catch (const SolverError& e) {
    spdlog::warn("inner maximization failed ({}); retrying from the boundary points", e.what());
    last_ = inner_maximize(objective, set_, set_.boundary_points(), inner_);
  }
  OuterEvaluation ev;
  ev.value = last_.best.value;
  ev.q = last_.best.q;
  ev.states = *last_.best.states;
  ev.inner_iterations = last_.iterations;
  return ev;
}

Vector RobustObjective::td_field(const Design& design, const OuterEvaluation& at) {
  const auto adjoints = solve_adjoints(problem_, design, at.q, at.states);
  return generalized_td_field(problem_, design, at.q, at.states, adjoints, model_);
}

OptimizationResult optimize_robust(const DesignProblem& problem, const TDModel& model, const UncertaintySet& set,
                                   const Vector& psi0, const LevelSetParams& params, const InnerParams& inner,
                                   const IterationCallback& callback) {
  const DesignDomain domain(problem.mesh(), problem.design_elements);
  RobustObjective objective(problem, model, set, inner);
  return run_levelset(domain, objective, psi0, params, callback);
}

}  // namespace rto
