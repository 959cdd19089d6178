#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <numbers>

#include "rto/errors.hpp"
#include "rto/machine.hpp"

using namespace rto;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

MachineConfig coarse(ScenarioKind scenario = ScenarioKind::nom, int positions = 1) {
  MachineConfig c;
  c.geometry.target_nodes = 1500;
  c.positions = positions;
  c.scenario = scenario;
  return c;
}

double torque_scale(const MachineConfig& c) {
  return c.materials.nu0 * c.materials.br * c.materials.br * std::pow(c.geometry.design_outer_radius, 2);
}

// Central difference of J in q[entry], relative error against grad_q.
double grad_check(const MachineConfig& c, double h) {
  const DesignProblem p = build_machine_problem(c);
  Design d(p.num_design());
  for (int i = 0; i < p.num_design(); ++i) d[i] = p.mesh().centroid(p.design_elements[i]).norm() > 0.035;
  const Params q = p.nominal_q;
  const StateSet s = solve_states(p, d, q);
  const Params g = grad_q(p, d, q, s, solve_adjoints(p, d, q, s));
  Params qp = q, qm = q;
  qp[0] += h;
  qm[0] -= h;
  const double fd = (objective(p, d, qp) - objective(p, d, qm)) / (2.0 * h);
  return std::abs(g[0] - fd) / std::abs(fd);
}

}  // namespace

TEST(Source, NominalPhases) {
  const MachineConfig c;
  const SourceDensity s = source_at(c, 0, Params());
  EXPECT_NEAR(s.a, 23.7e6 * std::sin(6.0 * kDeg), 1e-6);
  EXPECT_NEAR(s.b, 23.7e6 * std::sin(126.0 * kDeg), 1e-6);
  EXPECT_NEAR(s.c, 23.7e6 * std::sin(246.0 * kDeg), 1e-6);
}

TEST(Source, LoadAngleReplacesPhase) {
  MachineConfig c;
  c.scenario = ScenarioKind::ang;
  const SourceDensity s = source_at(c, 0, Params::Constant(1, -9.0 * kDeg));
  EXPECT_NEAR(s.a, 23.7e6 * std::sin(-9.0 * kDeg), 1e-6);
  EXPECT_NEAR(s.b, 23.7e6 * std::sin(111.0 * kDeg), 1e-6);
  EXPECT_NEAR(s.c, 23.7e6 * std::sin(231.0 * kDeg), 1e-6);
}

TEST(Source, ThreePhaseSumVanishes) {
  const MachineConfig c;
  for (int n = 0; n < c.positions; ++n) {
    const SourceDensity s = source_at(c, n, Params());
    EXPECT_LE(std::abs(s.a + s.b + s.c), 1e-9 * c.j_hat);
  }
  EXPECT_THROW(source_at(c, c.positions, Params()), UsageError);
}

TEST(Source, ElementDensitiesFollowTheCoilPattern) {
  const MachineConfig c = coarse(ScenarioKind::nom, 3);
  const DesignProblem p = build_machine_problem(c);
  for (int n = 0; n < 3; ++n) {
    const Vector j = p.source.density(n, p.nominal_q);
    const SourceDensity s = source_at(c, n, p.nominal_q);
    for (int e = 0; e < p.mesh().num_elements(); ++e) {
      const Region r = p.mesh().regions[e];
      const double expected = r == Region::coil_A ? s.a : r == Region::coil_B ? -s.b : r == Region::coil_C ? s.c : 0.0;
      EXPECT_NEAR(j[e], expected, 1e-6) << e;
    }
  }
}

TEST(Torque, ZeroField) {
  const DesignProblem p = build_machine_problem(coarse());
  EXPECT_EQ(p.output.value(*p.space, Vector::Zero(p.space->num_nodes())), 0.0);
}

TEST(Torque, UniformFieldOnTheSector) {
  const MachineConfig c = coarse();
  const DesignProblem p = build_machine_problem(c);
  const double alpha = p.mesh().sector_angle;
  const double r = 0.5 * (c.geometry.design_outer_radius + c.geometry.air_gap_outer_radius);
  const double b = 1.3;
  auto torque = [&](double beta) {
    Vector u(p.space->num_nodes());
    for (int v = 0; v < u.size(); ++v)
      u[v] = b * (std::cos(beta) * p.mesh().vertices[v].x() + std::sin(beta) * p.mesh().vertices[v].y());
    return p.output.value(*p.space, u);
  };
  // B_r B_theta = -(b^2/2) sin 2(theta - beta); symmetric about alpha/2 it integrates to zero.
  const double scale = c.materials.nu0 * b * b * r * r;
  EXPECT_LE(std::abs(torque(0.5 * alpha)), 1e-9 * scale);
  const double exact = (2.0 * std::numbers::pi / alpha) * scale * 0.25 * (1.0 - std::cos(2.0 * alpha));
  EXPECT_NEAR(std::abs(torque(0.0)), exact, 1e-3 * exact);
}

TEST(Torque, CircleOutsideAirGapIsRejected) {
  MachineConfig c = coarse();
  c.torque_radius = 0.060;
  EXPECT_THROW(build_machine_problem(c), ConfigError);
}

TEST(Torque, QuadratureDoublingIsConverged) {
  const MachineConfig c = coarse();
  const DesignProblem p = build_machine_problem(c);
  const StateSet s = solve_states(p, Design(p.num_design(), 1), p.nominal_q);
  const double r = 0.5 * (c.geometry.design_outer_radius + c.geometry.air_gap_outer_radius);
  const double t1 = torque_functional(*p.space, r, c.torque_points, c.materials.nu0).value(*p.space, s.states[0]);
  const double t2 = torque_functional(*p.space, r, 2 * c.torque_points, c.materials.nu0).value(*p.space, s.states[0]);
  EXPECT_LE(std::abs(t2 - t1), 0.005 * std::abs(t1));
}

TEST(Objective, NoSourcesGiveZero) {
  MachineConfig c = coarse();
  c.j_hat = 0.0;
  c.materials.br = 0.0;
  const DesignProblem p = build_machine_problem(c);
  EXPECT_EQ(objective(p, Design(p.num_design(), 0), p.nominal_q), 0.0);
}

TEST(Objective, AllIronProducesPositiveTorque) {
  const MachineConfig c;
  const DesignProblem p = build_machine_problem(c);
  const double j = objective(p, Design(p.num_design(), 1), p.nominal_q);
  EXPECT_LT(j, 0.0);
}

TEST(Objective, InvariantUnderPositionRelabeling) {
  const MachineConfig c = coarse(ScenarioKind::nom, 4);
  DesignProblem p = build_machine_problem(c);
  const Design d(p.num_design(), 1);
  const double j = objective(p, d, p.nominal_q);
  std::reverse(p.source.angles.begin(), p.source.angles.end());
  EXPECT_NEAR(objective(p, d, p.nominal_q), j, 1e-12 * std::abs(j));
}

TEST(Objective, PositionAverageOfStaticFields) {
  MachineConfig c = coarse(ScenarioKind::nom, 1);
  c.materials.br = 0.0;
  c.position_period = 0.0;
  const DesignProblem p1 = build_machine_problem(c);
  c.positions = 5;
  const DesignProblem p5 = build_machine_problem(c);
  const Design d(p1.num_design(), 1);
  const double j1 = objective(p1, d, p1.nominal_q);
  EXPECT_NE(j1, 0.0);
  EXPECT_NEAR(objective(p5, d, p5.nominal_q), j1, 1e-10 * std::abs(j1));
}

TEST(Objective, LinearRegimeScalesQuadratically) {
  MachineConfig c = coarse();
  c.linear_iron = true;
  const DesignProblem p = build_machine_problem(c);
  const Design d(p.num_design(), 1);
  const double t1 = objective(p, d, p.nominal_q);
  c.j_hat *= 2.0;
  c.materials.br *= 2.0;
  const DesignProblem p2 = build_machine_problem(c);
  EXPECT_NEAR(objective(p2, d, p2.nominal_q), 4.0 * t1, 0.01 * std::abs(4.0 * t1));
  EXPECT_GT(std::abs(t1), 1e-6 * torque_scale(c));
}

TEST(Scenario, ParameterBindings) {
  EXPECT_EQ(parameter_count(coarse()), 0);
  EXPECT_EQ(parameter_count(coarse(ScenarioKind::ang)), 1);
  EXPECT_EQ(parameter_count(coarse(ScenarioKind::scal)), 1);
  MachineConfig dist = coarse(ScenarioKind::dist);
  EXPECT_EQ(parameter_count(dist), dist.dist_rotor_regions + 1);
  const DesignProblem p = build_machine_problem(dist);
  EXPECT_TRUE(p.nominal_in_air);
  std::vector<int> seen(dist.dist_rotor_regions, 0);
  for (int i = 0; i < p.num_design(); ++i) ++seen[p.laws[p.design_iron_law[i]].kf_binding];
  for (int n : seen) EXPECT_GT(n, 0);
  EXPECT_EQ(scenario_from_string("scal"), ScenarioKind::scal);
  EXPECT_THROW(scenario_from_string("robust"), ConfigError);
  MachineConfig bad = coarse(ScenarioKind::scal);
  bad.linear_iron = true;
  EXPECT_THROW(build_machine_problem(bad), ConfigError);
}

TEST(Gradient, LoadAngleMatchesFiniteDifferences) {
  EXPECT_LE(grad_check(coarse(ScenarioKind::ang, 2), 1e-4), 1e-4);
}

TEST(Gradient, SaturationMatchesFiniteDifferences) {
  EXPECT_LE(grad_check(coarse(ScenarioKind::scal, 2), 1e-4), 1e-4);
}

TEST(Gradient, UnboundParameterHasZeroGradient) {
  DesignProblem p = build_toy_problem({});
  p.nominal_q = Params::Constant(1, 0.7);
  const Design d(p.num_design(), 1);
  const StateSet s = solve_states(p, d, p.nominal_q);
  const Params g = grad_q(p, d, p.nominal_q, s, solve_adjoints(p, d, p.nominal_q, s));
  ASSERT_EQ(g.size(), 1);
  EXPECT_EQ(g[0], 0.0);
}
