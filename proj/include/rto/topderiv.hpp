#pragma once

#include <atomic>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/special_functions/fpclassify.hpp>  // pchip.hpp uses isnan unqualified
#include <boost/math/interpolators/pchip.hpp>

#include "rto/design_domain.hpp"
#include "rto/fem.hpp"
#include "rto/problem.hpp"

namespace rto {

/// Material transition of a topological perturbation.
enum class TDDirection { iron_to_air, air_to_iron };

std::string_view to_string(TDDirection direction);
TDDirection td_direction_from_string(std::string_view name);

// --- exterior corrector problem ------------------------------------------------

/// Condition on the truncation circle |xi| = R.
///   dirichlet:  K = 0
///   far_field:  n . A grad K = -(nu_eff / R) K, nu_eff = sqrt(det dh_out(U));
///               exact for the 1/r decay of the isotropic linear corrector.
enum class Truncation { dirichlet, far_field };

std::string_view to_string(Truncation truncation);
Truncation truncation_from_string(std::string_view name);

/// Truncated ball around the unit inclusion, dimensionless coordinates.
struct ExteriorConfig {
  double radius = 128.0;
  int target_nodes = 60000;
  Truncation truncation = Truncation::far_field;
};

/// Polar mesh of the truncated ball: uniform rings inside the unit disk,
/// geometric grading outside, homogeneous Dirichlet data on the outer ring.
struct ExteriorDomain {
  ExteriorConfig config;
  std::shared_ptr<const FemSpace> space;
  /// Element lies in the inclusion (centroid inside the unit circle).
  std::vector<char> inside;
  /// Discrete inclusion area.
  double inclusion_area = 0.0;
  /// Reduced boundary mass on the truncation circle divided by R (far_field
  /// only; empty otherwise).
  SparseMatrix boundary_mass;

  /// Text key of the domain parameters, stored with sampled tables.
  std::string fingerprint() const;
};

ExteriorDomain build_exterior_domain(const ExteriorConfig& config);

/// Inclusion law inside the unit ball, background law outside, far field U.
struct ExteriorProblem {
  MaterialLaw inside;
  MaterialLaw outside;
  Vec2 u = Vec2::Zero();
};

/// Inside/outside laws of a transition: iron_to_air puts air in the inclusion.
ExteriorProblem exterior_problem(TDDirection direction, const MaterialLaw& iron, const MaterialLaw& air, const Vec2& u);

/// Corrector K_U as a nodal field. Throws SolverError if Newton fails.
NewtonResult solve_exterior(const ExteriorDomain& domain, const ExteriorProblem& problem,
                            const NewtonOptions& options = {});

/// Vector F with TD(U, P) = F . P for a solved corrector.
Vec2 td_vector(const ExteriorDomain& domain, const ExteriorProblem& problem, const Vector& corrector);

/// Corrector of two linear laws in curl form:
///   inside  -c V.xi,   outside  -c V.xi / |xi|^2,
///   V = (-U_y, U_x),  c = (nu_in - nu_out) / (nu_in + nu_out).
double linear_corrector(double nu_in, double nu_out, const Vec2& u, const Vec2& xi);

/// TD(U, P) / (U . P) for two linear laws.
double linear_td_slope(double nu_in, double nu_out);

// --- offline table -------------------------------------------------------------

/// Samples f1(t, q), f2(t, q) of one transition direction. Without q
/// samples the iron law's own saturation constant is used.
struct TDTable {
  TDDirection direction = TDDirection::iron_to_air;
  std::string iron_fingerprint;
  std::string air_fingerprint;
  std::string exterior_fingerprint;
  std::vector<double> t;
  std::vector<double> q;
  /// f1[l][k] at (t[k], q[l]); a single row when q is empty.
  std::vector<std::vector<double>> f1;
  std::vector<std::vector<double>> f2;
};

/// Evenly spaced abscissae 0 = t_1 < ... < t_count = t_max.
std::vector<double> uniform_samples(double lo, double hi, int count);

/// One sample: solves the exterior problem for U = t e0 with the iron
/// saturation constant replaced by `q` when q > 0.
Vec2 sample_td_point(TDDirection direction, const MaterialLaw& iron, const MaterialLaw& air,
                     const ExteriorDomain& domain, double t, double q, const NewtonOptions& options = {});

/// All samples, in parallel over (k, l). Solver errors are rethrown with the
/// sample indices attached.
TDTable sample_td(TDDirection direction, const MaterialLaw& iron, const MaterialLaw& air,
                  const ExteriorDomain& domain, const std::vector<double>& t, const std::vector<double>& q = {},
                  const NewtonOptions& options = {});

/// Throws ConfigError when the table does not belong to these laws.
void check_table(const TDTable& table, TDDirection direction, const MaterialLaw& iron, const MaterialLaw& air);

inline constexpr std::string_view kTableFormatVersion = "RTOTD1";
void write_table(std::ostream& out, const TDTable& table);
TDTable read_table(std::istream& in);
void save_table(const std::string& path, const TDTable& table);
TDTable load_table(const std::string& path);

// --- online evaluation ----------------------------------------------------------

/// Pointwise TD of one direction: TD(U, P; K) with K the iron saturation.
class TDEvaluator {
 public:
  virtual ~TDEvaluator() = default;
  virtual double value(const Vec2& u, const Vec2& p, double saturation) const = 0;
};

/// Monotone cubic in t (linear below four samples), piecewise linear and
/// clamped in q. |U| beyond the last abscissa is clamped with one warning.
class TableTD final : public TDEvaluator {
 public:
  explicit TableTD(TDTable table);
  const TDTable& table() const { return table_; }
  /// (f1, f2) at |U| = t.
  Vec2 components(double t, double saturation) const;
  double value(const Vec2& u, const Vec2& p, double saturation) const override;

 private:
  Vec2 row_components(std::size_t row, double t) const;

  TDTable table_;
  std::vector<boost::math::interpolators::pchip<std::vector<double>>> f1_, f2_;
  mutable std::atomic<bool> warned_{false};
};

/// Closed form for two linear laws.
class LinearTD final : public TDEvaluator {
 public:
  LinearTD(TDDirection direction, double nu_iron, double nu_air);
  double slope() const { return slope_; }
  double value(const Vec2& u, const Vec2& p, double) const override;

 private:
  double slope_;
};

/// Direction tables (or closed forms) of a problem.
struct TDModel {
  std::shared_ptr<const TDEvaluator> iron_to_air;
  std::shared_ptr<const TDEvaluator> air_to_iron;
};

/// Closed-form model when every design law is linear; throws ConfigError
/// otherwise.
TDModel linear_td_model(const DesignProblem& problem);

/// Signed TD per design element (index into design_elements):
///   iron: + sum_n TD^{f->a}(U_n, P_n),  air: - sum_n TD^{a->f}(U_n, P_n)
Vector generalized_td_field(const DesignProblem& problem, const Design& design, const Params& q,
                            const StateSet& states, const std::vector<Vector>& adjoints, const TDModel& model);

/// Solves (-eps Lap + I) g~ = g on the design domain with natural boundary
/// conditions; returns nodal values on the domain. eps must be positive.
Vector smooth_td(const DesignDomain& domain, const Vector& element_values, double eps);

/// Default smoothing length^2: (2 h)^2 with h the mean design element size.
double default_smoothing(const DesignDomain& domain);

}  // namespace rto
