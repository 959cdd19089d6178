#include "rto/levelset.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "rto/errors.hpp"

namespace rto {

Vector normalize(const DesignDomain& domain, const Vector& raw) {
  const double n = domain.norm(raw);
  if (!(n > 0.0) || !std::isfinite(n)) throw UsageError("normalize: level-set field is zero or not finite");
  return raw / n;
}

double angle_between(const DesignDomain& domain, const Vector& psi, const Vector& g) {
  const double n = domain.norm(g);
  if (!(n > 0.0)) throw UsageError("angle_between: zero direction field");
  return std::acos(std::clamp(domain.inner(psi, g) / n, -1.0, 1.0));
}

Vector slerp_update(const DesignDomain& domain, const Vector& psi, const Vector& g, double s, double theta) {
  if (!(s > 0.0 && s <= 1.0)) throw UsageError("slerp_update: step must lie in (0, 1]");
  if (theta == 0.0) return psi;
  const Vector dir = g / domain.norm(g);
  if (s == 1.0) return dir;
  const double sin_theta = std::sin(theta);
  if (!(theta < std::numbers::pi) || std::abs(sin_theta) < 1e-14)
    throw UsageError("slerp_update: antipodal fields leave the direction undefined");
  return (std::sin((1.0 - s) * theta) * psi + std::sin(s * theta) * dir) / sin_theta;
}

Design design_from_levelset(const DesignDomain& domain, const Vector& psi) {
  const Vector c = domain.centroid_values(psi);
  Design design(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) design[i] = c[i] > 0.0;
  return design;
}

double optimality_fraction(const DesignDomain& domain, const Vector& psi, const Vector& g, double deadband) {
  const Vector pc = domain.centroid_values(psi), gc = domain.centroid_values(g);
  int counted = 0, agree = 0;
  for (Eigen::Index i = 0; i < pc.size(); ++i) {
    if (std::abs(pc[i]) <= deadband) continue;
    ++counted;
    if ((pc[i] > 0.0) == (gc[i] > 0.0) && gc[i] != 0.0) ++agree;
  }
  return counted == 0 ? 1.0 : static_cast<double>(agree) / counted;
}

bool check_optimality(const DesignDomain& domain, const Vector& psi, const Vector& g, double deadband) {
  return optimality_fraction(domain, psi, g, deadband) == 1.0;
}

Vector constant_levelset(const DesignDomain& domain, double sign) {
  return normalize(domain, Vector::Constant(domain.num_nodes(), sign >= 0.0 ? 1.0 : -1.0));
}

Vector random_levelset(const DesignDomain& domain, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Vector v(domain.num_nodes());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = dist(rng);
  return normalize(domain, v);
}

Vector indicator_levelset(const DesignDomain& domain, const Mesh& mesh, const std::function<bool(const Vec2&)>& iron) {
  Vector v(domain.num_nodes());
  for (int i = 0; i < domain.num_nodes(); ++i) v[i] = iron(mesh.vertices[domain.nodes()[i]]) ? 1.0 : -1.0;
  return normalize(domain, v);
}

void write_levelset(std::ostream& out, const DesignDomain& domain, const Vector& psi) {
  if (psi.size() != domain.num_nodes()) throw UsageError("write_levelset: size mismatch");
  char buf[64];
  out << kLevelSetFormatVersion << '\n' << "nodes " << domain.num_nodes() << '\n';
  for (int i = 0; i < domain.num_nodes(); ++i) {
    std::snprintf(buf, sizeof buf, "%d %.17g\n", domain.nodes()[i], psi[i]);
    out << buf;
  }
}

Vector read_levelset(std::istream& in, const DesignDomain& domain) {
  std::string line;
  if (!std::getline(in, line) || line != kLevelSetFormatVersion) throw ConfigError("level-set file: missing RTOLS1 header");
  std::string key;
  int n = 0;
  if (!(in >> key >> n) || key != "nodes") throw ConfigError("level-set file: expected node count");
  if (n != domain.num_nodes())
    throw ConfigError("level-set file has " + std::to_string(n) + " nodes, design domain has " +
                      std::to_string(domain.num_nodes()));
  Vector psi(n);
  for (int i = 0; i < n; ++i) {
    int id = 0;
    if (!(in >> id >> psi[i]) || !std::isfinite(psi[i])) throw ConfigError("level-set file: bad value row");
    if (id != domain.nodes()[i]) throw ConfigError("level-set file: node ids do not match the mesh");
  }
  return psi;
}

void save_levelset(const std::string& path, const DesignDomain& domain, const Vector& psi) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  write_levelset(out, domain, psi);
}

Vector load_levelset(const std::string& path, const DesignDomain& domain) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  return read_levelset(in, domain);
}

void validate(const LevelSetParams& p) {
  if (p.k_max < 0) throw ConfigError("k_max must be non-negative");
  if (!(p.angle_tol > 0.0 && p.angle_tol < std::numbers::pi)) throw ConfigError("angle tolerance must lie in (0, pi)");
  if (!(p.s_min > 0.0 && p.s_min < p.s_max && p.s_max <= 1.0)) throw ConfigError("need 0 < s_min < s_max <= 1");
  if (!(p.gamma > 0.0 && p.gamma < 1.0)) throw ConfigError("gamma must lie in (0, 1)");
  if (!(p.delta >= 1.0)) throw ConfigError("delta must be at least 1");
  if (p.smoothing < 0.0) throw ConfigError("smoothing must be non-negative");
}

OuterEvaluation NominalObjective::evaluate(const Design& design, const OuterEvaluation*) {
  OuterEvaluation ev;
  ev.q = problem_.nominal_q;
  ev.states = solve_states(problem_, design, ev.q);
  ev.value = ev.states.value;
  return ev;
}

Vector NominalObjective::td_field(const Design& design, const OuterEvaluation& at) {
  const auto adjoints = solve_adjoints(problem_, design, at.q, at.states);
  return generalized_td_field(problem_, design, at.q, at.states, adjoints, model_);
}

std::string_view to_string(OptimizationStatus status) {
  switch (status) {
    case OptimizationStatus::converged:
      return "converged";
    case OptimizationStatus::max_iterations:
      return "max_iterations";
    case OptimizationStatus::stalled:
      return "stalled";
  }
  return "unknown";
}

OptimizationResult run_levelset(const DesignDomain& domain, OuterObjective& objective, const Vector& psi0,
                                const LevelSetParams& params, const IterationCallback& callback) {
  validate(params);
  if (psi0.size() != domain.num_nodes()) throw UsageError("run_levelset: initial level set has the wrong size");
  const auto start = std::chrono::steady_clock::now();
  const double eps = params.smoothing > 0.0 ? params.smoothing : default_smoothing(domain);
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  auto check_unit = [&](const Vector& psi) {
    if (std::abs(domain.norm(psi) - 1.0) > 1e-10) throw SolverError("level-set iterate lost its unit norm");
  };

  OptimizationResult result;
  result.psi = normalize(domain, psi0);
  result.design = design_from_levelset(domain, result.psi);
  result.evaluation = objective.evaluate(result.design, nullptr);
  double s = params.s_max;

  for (int k = 0;; ++k) {
    check_unit(result.psi);
    IterationRecord rec;
    rec.k = k;
    rec.value = result.evaluation.value;
    rec.q = result.evaluation.q;
    result.g = smooth_td(domain, objective.td_field(result.design, result.evaluation), eps);
    auto finish = [&](OptimizationStatus status) {
      rec.wall_seconds = elapsed();
      result.history.push_back(rec);
      if (callback) callback(rec, result.psi);
      result.status = status;
      return result;
    };
    if (!(domain.norm(result.g) > 0.0)) return finish(OptimizationStatus::converged);
    const double theta = angle_between(domain, result.psi, result.g);
    rec.theta = theta;
    spdlog::info("iteration {}: J = {:.10g}, theta = {:.3f} deg, s = {:.4g}", k, rec.value, theta * 180.0 / std::numbers::pi, s);
    if (theta < params.angle_tol) return finish(OptimizationStatus::converged);
    if (k >= params.k_max) return finish(OptimizationStatus::max_iterations);

    double s_lo = 0.0, s_hi = std::numeric_limits<double>::infinity();
    std::optional<OptimizationStatus> stop;
    for (;;) {
      rec.step = s;
      ++rec.trials;
      Vector trial = slerp_update(domain, result.psi, result.g, s, theta);
      Design design = design_from_levelset(domain, trial);
      if (design == result.design) {
        s_lo = s;
        if (s >= params.s_max) {
          stop = OptimizationStatus::converged;
          break;
        }
        s = std::isfinite(s_hi) ? 0.5 * (s_lo + s_hi) : std::min(params.s_max, params.delta * s);
        continue;
      }
      OuterEvaluation ev = objective.evaluate(design, &result.evaluation);
      if (ev.value < result.evaluation.value) {
        rec.accepted = true;
        result.psi = std::move(trial);
        result.design = std::move(design);
        result.evaluation = std::move(ev);
        s = std::min(params.s_max, params.delta * s);
        break;
      }
      spdlog::debug("  rejected s = {:.4g}: J = {:.10g}", s, ev.value);
      s_hi = s;
      if (s <= params.s_min || s_hi - s_lo < 0.5 * params.s_min) {
        stop = OptimizationStatus::stalled;
        break;
      }
      s = s_lo > 0.0 ? 0.5 * (s_lo + s_hi) : std::max(params.s_min, params.gamma * s);
    }
    if (stop) {
      if (*stop == OptimizationStatus::stalled) spdlog::warn("line search exhausted at iteration {}", k);
      return finish(*stop);
    }
    rec.wall_seconds = elapsed();
    result.history.push_back(rec);
    if (callback) callback(rec, result.psi);
  }
}

OptimizationResult optimize_nominal(const DesignProblem& problem, const TDModel& model, const Vector& psi0,
                                    const LevelSetParams& params, const IterationCallback& callback) {
  const DesignDomain domain(problem.mesh(), problem.design_elements);
  NominalObjective objective(problem, model);
  return run_levelset(domain, objective, psi0, params, callback);
}

}  // namespace rto
