#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "rto/problem.hpp"
#include "rto/topderiv.hpp"

namespace rto {

// --- parameter gradient ------------------------------------------------------------

struct FdCheckRow {
  int entry = 0;
  double q = 0.0;
  double step = 0.0;
  double gradient = 0.0;
  double fd = 0.0;
  /// |gradient - fd| / max(|fd|, tiny).
  double rel_error = 0.0;
};

/// Adjoint grad_q J against central differences with step h (scaled by
/// max(1, |q_i|)) for every entry of q.
std::vector<FdCheckRow> fd_check(const DesignProblem& problem, const Design& design, const Params& q, double h);

// --- topological derivative ---------------------------------------------------------

/// Rebuilds a problem of the same kind on another mesh.
using ProblemBuilder = std::function<DesignProblem(Mesh)>;

struct TdCheckRow {
  /// Index into design_elements of the coarse problem.
  int design_index = 0;
  bool iron = false;
  double radius = 0.0;
  /// Area of the flipped elements.
  double area = 0.0;
  /// (J(Omega_eps) - J(Omega)) / area.
  double quotient = 0.0;
  /// TD of the element's transition at the disk center.
  double td = 0.0;
  double rel_error = 0.0;
};

/// Design elements whose disk of the given radius covers only design elements
/// of one material and stays `margin` away from the sector edges.
std::vector<int> td_check_candidates(const DesignProblem& problem, const Design& design, double radius,
                                     double margin);

/// Picks `count` candidates with a seeded shuffle (all if fewer exist).
std::vector<int> sample_candidates(std::vector<int> candidates, int count, std::uint64_t seed);

/// Flips the disks of the given radii around each element's centroid on a
/// mesh refined to min(radii) / refinement inside max(radii), and compares the
/// difference quotient with the TD on that mesh. Rows are ordered by element,
/// then by radius as given. Throws UsageError when a disk leaves the design
/// region or crosses a material interface.
std::vector<TdCheckRow> td_check(const ProblemBuilder& build, const DesignProblem& problem, const Design& design,
                                 const Params& q, const TDModel& model, const std::vector<int>& design_indices,
                                 const std::vector<double>& radii, double refinement = 8.0);

/// Mean design element diameter.
double mean_design_size(const DesignProblem& problem);

}  // namespace rto
