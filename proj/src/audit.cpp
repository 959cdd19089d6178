#include "rto/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "rto/errors.hpp"

namespace rto {

std::vector<FdCheckRow> fd_check(const DesignProblem& problem, const Design& design, const Params& q, double h) {
  if (!(h > 0.0)) throw UsageError("fd_check: step must be positive");
  const StateSet states = solve_states(problem, design, q);
  const Params g = grad_q(problem, design, q, states, solve_adjoints(problem, design, q, states));
  std::vector<FdCheckRow> rows;
  for (int i = 0; i < q.size(); ++i) {
    FdCheckRow r;
    r.entry = i;
    r.q = q[i];
    r.step = h * std::max(1.0, std::abs(q[i]));
    Params qp = q, qm = q;
    qp[i] += r.step;
    qm[i] -= r.step;
    r.gradient = g[i];
    r.fd = (objective(problem, design, qp) - objective(problem, design, qm)) / (2.0 * r.step);
    r.rel_error = std::abs(r.gradient - r.fd) / std::max(std::abs(r.fd), std::numeric_limits<double>::min());
    rows.push_back(r);
  }
  return rows;
}

double mean_design_size(const DesignProblem& problem) {
  if (problem.num_design() == 0) throw UsageError("mean_design_size: no design elements");
  double sum = 0.0;
  for (int e : problem.design_elements) sum += problem.mesh().diameter(e);
  return sum / problem.num_design();
}

namespace {

double edge_distance(const Mesh& mesh, const Vec2& c) {
  if (std::abs(mesh.sector_angle - 2.0 * std::numbers::pi) < 1e-12) return std::numeric_limits<double>::infinity();
  const Vec2 slave(std::cos(mesh.sector_angle), std::sin(mesh.sector_angle));
  return std::min(std::abs(c.y()), std::abs(slave.x() * c.y() - slave.y() * c.x()));
}

// Every element whose centroid lies within `radius` of c is a design element
// of material `iron`.
bool homogeneous_disk(const DesignProblem& problem, const std::vector<int>& index_of, const Design& design,
                      const Vec2& c, double radius, bool iron) {
  const Mesh& mesh = problem.mesh();
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if ((mesh.centroid(e) - c).norm() > radius + 0.5 * mesh.diameter(e)) continue;
    const int i = index_of[e];
    if (i < 0 || (design[i] != 0) != iron) return false;
  }
  return true;
}

std::vector<int> design_index_map(const DesignProblem& problem) {
  std::vector<int> index_of(problem.mesh().num_elements(), -1);
  for (int i = 0; i < problem.num_design(); ++i) index_of[problem.design_elements[i]] = i;
  return index_of;
}

}  // namespace

std::vector<int> td_check_candidates(const DesignProblem& problem, const Design& design, double radius,
                                     double margin) {
  if (static_cast<int>(design.size()) != problem.num_design()) throw UsageError("td_check_candidates: design size");
  const std::vector<int> index_of = design_index_map(problem);
  std::vector<int> out;
  for (int i = 0; i < problem.num_design(); ++i) {
    const Vec2 c = problem.mesh().centroid(problem.design_elements[i]);
    if (edge_distance(problem.mesh(), c) < margin) continue;
    if (homogeneous_disk(problem, index_of, design, c, radius, design[i] != 0)) out.push_back(i);
  }
  return out;
}

std::vector<int> sample_candidates(std::vector<int> candidates, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  if (static_cast<int>(candidates.size()) > count) candidates.resize(count);
  return candidates;
}

std::vector<TdCheckRow> td_check(const ProblemBuilder& build, const DesignProblem& problem, const Design& design,
                                 const Params& q, const TDModel& model, const std::vector<int>& design_indices,
                                 const std::vector<double>& radii, double refinement) {
  if (radii.empty() || !(refinement >= 1.0)) throw UsageError("td_check: need radii and refinement >= 1");
  const double rmin = *std::min_element(radii.begin(), radii.end());
  const double rmax = *std::max_element(radii.begin(), radii.end());
  if (!(rmin > 0.0)) throw UsageError("td_check: radii must be positive");
  const std::vector<int> index_of = design_index_map(problem);

  std::vector<TdCheckRow> rows;
  for (int i : design_indices) {
    if (i < 0 || i >= problem.num_design()) throw UsageError("td_check: design index out of range");
    const Vec2 center = problem.mesh().centroid(problem.design_elements[i]);
    const bool iron = design[i] != 0;
    RefinedMesh refined = refine_around(problem.mesh(), center, 1.25 * rmax, rmin / refinement);
    const std::vector<int> origin = std::move(refined.origin);
    const DesignProblem fine = build(std::move(refined.mesh));

    Design d(fine.num_design());
    for (int k = 0; k < fine.num_design(); ++k) {
      const int coarse = index_of[origin[fine.design_elements[k]]];
      if (coarse < 0) throw UsageError("td_check: refined design element outside the coarse design");
      d[k] = design[coarse];
    }
    const std::vector<int> fine_index = design_index_map(fine);

    const StateSet states = solve_states(fine, d, q);
    const Vector g = generalized_td_field(fine, d, q, states, solve_adjoints(fine, d, q, states), model);
    int nearest = 0;
    for (int k = 1; k < fine.num_design(); ++k)
      if ((fine.mesh().centroid(fine.design_elements[k]) - center).norm() <
          (fine.mesh().centroid(fine.design_elements[nearest]) - center).norm())
        nearest = k;
    const double td = iron ? g[nearest] : -g[nearest];

    for (double radius : radii) {
      Design flipped = d;
      TdCheckRow r;
      r.design_index = i;
      r.iron = iron;
      r.radius = radius;
      for (int e = 0; e < fine.mesh().num_elements(); ++e) {
        if ((fine.mesh().centroid(e) - center).norm() >= radius) continue;
        const int k = fine_index[e];
        if (k < 0 || (d[k] != 0) != iron) throw UsageError("td_check: disk is not a single design material");
        flipped[k] = !iron;
        r.area += std::abs(fine.mesh().signed_area(e));
      }
      r.quotient = (objective(fine, flipped, q) - states.value) / r.area;
      r.td = td;
      r.rel_error = std::abs(r.quotient - td) / std::max(std::abs(td), std::numeric_limits<double>::min());
      rows.push_back(r);
    }
  }
  return rows;
}

}  // namespace rto
