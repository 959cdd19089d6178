#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "rto/errors.hpp"
#include "rto/levelset.hpp"
#include "rto/machine.hpp"

using namespace rto;

namespace {

const DesignProblem& toy() {
  static const DesignProblem p = build_toy_problem({});
  return p;
}

const DesignDomain& toy_domain() {
  static const DesignDomain d(toy().mesh(), toy().design_elements);
  return d;
}

Vector random_field(const DesignDomain& d, unsigned seed) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> n;
  Vector v(d.num_nodes());
  for (auto& x : v) x = n(rng);
  return v;
}

// Smoothed generalized TD of the design induced by psi.
Vector smoothed_td(const DesignProblem& p, const DesignDomain& d, const Vector& psi) {
  NominalObjective obj(p, linear_td_model(p));
  const Design design = design_from_levelset(d, psi);
  const OuterEvaluation ev = obj.evaluate(design, nullptr);
  return smooth_td(d, obj.td_field(design, ev), default_smoothing(d));
}

// Objective with a prescribed value and TD, for driving the loop directly.
class ScriptedObjective final : public OuterObjective {
 public:
  ScriptedObjective(std::function<double(const Design&)> value, Vector td)
      : value_(std::move(value)), td_(std::move(td)) {}
  OuterEvaluation evaluate(const Design& design, const OuterEvaluation*) override {
    ++evaluations;
    OuterEvaluation ev;
    ev.value = value_(design);
    return ev;
  }
  Vector td_field(const Design&, const OuterEvaluation&) override { return td_; }
  int evaluations = 0;

 private:
  std::function<double(const Design&)> value_;
  Vector td_;
};

int count_iron(const Design& d) { return static_cast<int>(std::count(d.begin(), d.end(), 1)); }

}  // namespace

TEST(Primitives, NormalizeIsIdempotent) {
  const auto& d = toy_domain();
  const Vector v = normalize(d, random_field(d, 1));
  EXPECT_NEAR(d.norm(v), 1.0, 1e-14);
  EXPECT_LT((normalize(d, v) - v).norm(), 1e-14);
  EXPECT_THROW(normalize(d, Vector::Zero(d.num_nodes())), UsageError);
}

TEST(Primitives, AngleKnownValues) {
  const auto& d = toy_domain();
  const Vector psi = normalize(d, random_field(d, 2));
  Vector w = random_field(d, 3);
  w -= d.inner(w, psi) * psi;
  EXPECT_NEAR(angle_between(d, psi, psi), 0.0, 2e-8);
  EXPECT_NEAR(angle_between(d, psi, -psi), std::numbers::pi, 2e-8);
  EXPECT_NEAR(angle_between(d, psi, w), std::numbers::pi / 2.0, 1e-12);
  const Vector g = random_field(d, 4);
  EXPECT_NEAR(angle_between(d, psi, g), angle_between(d, psi, 37.5 * g), 1e-12);
  EXPECT_THROW(angle_between(d, psi, Vector::Zero(d.num_nodes())), UsageError);
}

TEST(Primitives, SlerpStaysOnSphereInSpan) {
  const auto& d = toy_domain();
  const Vector psi = normalize(d, random_field(d, 5));
  const Vector g = random_field(d, 6);
  const Vector gu = g / d.norm(g);
  const double theta = angle_between(d, psi, g);
  EXPECT_LT((slerp_update(d, psi, g, 1.0, theta) - gu).norm(), 1e-12);
  EXPECT_EQ(slerp_update(d, psi, g, 0.3, 0.0), psi);
  Vector perp = gu - d.inner(gu, psi) * psi;
  perp /= d.norm(perp);
  for (double s : {1e-6, 0.05, 0.25, 0.5, 0.75, 0.999}) {
    const Vector x = slerp_update(d, psi, g, s, theta);
    EXPECT_NEAR(d.norm(x), 1.0, 1e-12) << s;
    EXPECT_NEAR(angle_between(d, psi, x), s * theta, 1e-9) << s;
    const Vector residual = x - d.inner(x, psi) * psi - d.inner(x, perp) * perp;
    EXPECT_LT(d.norm(residual), 1e-12) << s;
  }
  EXPECT_LT(d.norm(slerp_update(d, psi, g, 1e-9, theta) - psi), 1e-8);
  EXPECT_THROW(slerp_update(d, psi, g, 0.0, theta), UsageError);
  EXPECT_THROW(slerp_update(d, psi, g, 1.5, theta), UsageError);
  EXPECT_THROW(slerp_update(d, psi, -psi, 0.5, std::numbers::pi), UsageError);
}

TEST(Primitives, DesignFollowsCentroidSign) {
  const auto& d = toy_domain();
  const Vector psi = random_field(d, 7);
  const Vector c = d.centroid_values(psi);
  const Design design = design_from_levelset(d, psi);
  for (int i = 0; i < d.num_elements(); ++i) EXPECT_EQ(design[i] != 0, c[i] > 0.0);
  EXPECT_EQ(count_iron(design_from_levelset(d, constant_levelset(d))), d.num_elements());
  EXPECT_EQ(count_iron(design_from_levelset(d, constant_levelset(d, -1.0))), 0);
}

TEST(Primitives, OptimalitySignCondition) {
  const auto& d = toy_domain();
  const Vector psi = normalize(d, random_field(d, 8));
  EXPECT_TRUE(check_optimality(d, psi, 3.0 * psi));
  EXPECT_DOUBLE_EQ(optimality_fraction(d, psi, -psi), 0.0);
  EXPECT_FALSE(check_optimality(d, psi, -psi));
  // Elements inside the dead-band are not counted.
  EXPECT_DOUBLE_EQ(optimality_fraction(d, Vector::Zero(d.num_nodes()), psi), 1.0);
}

TEST(Primitives, FixedPointOfSlerpSatisfiesSignCondition) {
  const auto& d = toy_domain();
  const Vector psi = normalize(d, random_field(d, 9));
  const Vector g = 2.0 * psi;
  const double theta = angle_between(d, psi, g);
  EXPECT_LT(theta, 2.0 * std::numbers::pi / 180.0);
  EXPECT_LT(d.norm(slerp_update(d, psi, g, 0.5, theta) - psi), 1e-7);
  EXPECT_TRUE(check_optimality(d, psi, g));
}

TEST(Primitives, StartFields) {
  const auto& d = toy_domain();
  EXPECT_NEAR(d.norm(random_levelset(d, 11)), 1.0, 1e-14);
  EXPECT_EQ(random_levelset(d, 11), random_levelset(d, 11));
  EXPECT_NE(random_levelset(d, 11), random_levelset(d, 12));
  const Vector up = indicator_levelset(d, toy().mesh(), toy_upper_half);
  const Design design = design_from_levelset(d, up);
  for (int i = 0; i < d.num_elements(); ++i) {
    const Vec2 c = toy().mesh().centroid(d.elements()[i]);
    if (std::abs(c.y() - 0.5) > 0.02) EXPECT_EQ(design[i] != 0, toy_upper_half(c));
  }
}

TEST(LevelSetIo, RoundTrip) {
  const auto& d = toy_domain();
  const Vector psi = random_levelset(d, 13);
  std::stringstream ss;
  write_levelset(ss, d, psi);
  EXPECT_EQ(read_levelset(ss, d), psi);
}

TEST(LevelSetIo, RejectsMismatch) {
  const auto& d = toy_domain();
  std::stringstream ss;
  write_levelset(ss, d, random_levelset(d, 14));
  std::string text = ss.str();
  std::stringstream bad_header("RTOLS0\n" + text.substr(text.find('\n') + 1));
  EXPECT_THROW(read_levelset(bad_header, d), ConfigError);
  const DesignDomain other(build_toy_problem({.cells = 10}).mesh(), build_toy_problem({.cells = 10}).design_elements);
  std::stringstream again(text);
  EXPECT_THROW(read_levelset(again, other), ConfigError);
  std::string swapped = text;
  swapped.replace(swapped.find('\n', swapped.find("nodes")) + 1, 1, "x");
  std::stringstream broken(swapped);
  EXPECT_THROW(read_levelset(broken, d), ConfigError);
}

TEST(Params, Validation) {
  EXPECT_NO_THROW(validate(LevelSetParams{}));
  LevelSetParams p;
  p.s_min = 2.0;
  EXPECT_THROW(validate(p), ConfigError);
  p = {};
  p.gamma = 1.0;
  EXPECT_THROW(validate(p), ConfigError);
  p = {};
  p.delta = 0.5;
  EXPECT_THROW(validate(p), ConfigError);
  p = {};
  p.angle_tol = 0.0;
  EXPECT_THROW(validate(p), ConfigError);
}

TEST(Loop, ZeroDerivativeConvergesImmediately) {
  const auto& d = toy_domain();
  ScriptedObjective obj([](const Design&) { return 1.0; }, Vector::Zero(d.num_elements()));
  const auto r = run_levelset(d, obj, constant_levelset(d), {});
  EXPECT_EQ(r.status, OptimizationStatus::converged);
  EXPECT_EQ(r.history.size(), 1u);
}

TEST(Loop, NoDecreaseStalls) {
  const auto& d = toy_domain();
  Vector td(d.num_elements());
  for (int i = 0; i < d.num_elements(); ++i) td[i] = toy_upper_half(toy().mesh().centroid(d.elements()[i])) ? 1.0 : -1.0;
  ScriptedObjective obj([](const Design&) { return 1.0; }, td);
  const Vector psi0 = constant_levelset(d);
  const auto r = run_levelset(d, obj, psi0, {});
  EXPECT_EQ(r.status, OptimizationStatus::stalled);
  EXPECT_LT(d.norm(r.psi - psi0), 1e-14);
  EXPECT_EQ(count_iron(r.design), d.num_elements());
  EXPECT_FALSE(r.history.back().accepted);
  EXPECT_GE(r.history.back().trials, 2);
}

TEST(Loop, IterationLimit) {
  const auto& d = toy_domain();
  ScriptedObjective obj([](const Design& x) { return -count_iron(x); }, Vector::Ones(d.num_elements()));
  LevelSetParams p;
  p.k_max = 0;
  const auto r = run_levelset(d, obj, constant_levelset(d, -1.0), p);
  EXPECT_EQ(r.status, OptimizationStatus::max_iterations);
  EXPECT_EQ(obj.evaluations, 1);
}

TEST(Loop, RejectsWrongSize) {
  const auto& d = toy_domain();
  ScriptedObjective obj([](const Design&) { return 0.0; }, Vector::Ones(d.num_elements()));
  EXPECT_THROW(run_levelset(d, obj, Vector::Ones(3), {}), UsageError);
}

TEST(Toy, FixedPointStartStopsAtOnce) {
  const auto& p = toy();
  const auto& d = toy_domain();
  const auto seed = optimize_nominal(p, linear_td_model(p), constant_levelset(d), {});
  Vector psi = normalize(d, seed.g);
  bool fixed = false;
  for (int j = 0; j < 20 && !fixed; ++j) {
    const Vector next = normalize(d, smoothed_td(p, d, psi));
    fixed = design_from_levelset(d, next) == design_from_levelset(d, psi);
    psi = next;
  }
  ASSERT_TRUE(fixed);
  const auto r = optimize_nominal(p, linear_td_model(p), psi, {});
  EXPECT_EQ(r.status, OptimizationStatus::converged);
  EXPECT_LE(r.history.back().k, 1);
  EXPECT_LT(r.history.back().theta, 2.0 * std::numbers::pi / 180.0);
  EXPECT_TRUE(check_optimality(d, r.psi, r.g));
}

TEST(Toy, BruteForceFavorsUpperHalf) {
  const auto& p = toy();
  const auto& d = toy_domain();
  double best = std::numeric_limits<double>::infinity();
  int best_mask = -1;
  for (int mask = 0; mask < 4; ++mask) {
    Design x(d.num_elements());
    for (int i = 0; i < d.num_elements(); ++i)
      x[i] = (toy_upper_half(p.mesh().centroid(d.elements()[i])) ? mask & 1 : mask & 2) != 0;
    const double j = objective(p, x, p.nominal_q);
    if (j < best) best = j, best_mask = mask;
  }
  EXPECT_EQ(best_mask, 1);
}

class ToyStarts : public ::testing::TestWithParam<int> {};

TEST_P(ToyStarts, ConvergesToUpperHalfWithInvariants) {
  const auto& p = toy();
  const auto& d = toy_domain();
  const int start = GetParam();
  const Vector psi0 = start == 0 ? constant_levelset(d) : start == 1 ? constant_levelset(d, -1.0) : random_levelset(d, 7);
  std::vector<double> norms;
  const auto r = optimize_nominal(p, linear_td_model(p), psi0, {},
                                  [&](const IterationRecord&, const Vector& psi) { norms.push_back(d.norm(psi)); });
  for (double n : norms) EXPECT_NEAR(n, 1.0, 1e-10);
  for (std::size_t k = 1; k < r.history.size(); ++k) {
    EXPECT_TRUE(r.history[k - 1].accepted);
    EXPECT_LT(r.history[k].value, r.history[k - 1].value);
  }
  EXPECT_EQ(r.status, OptimizationStatus::converged);
  EXPECT_GE(optimality_fraction(d, r.psi, r.g), 0.99);
  int upper = 0, upper_iron = 0, lower = 0, lower_iron = 0;
  for (int i = 0; i < d.num_elements(); ++i) {
    const bool up = toy_upper_half(p.mesh().centroid(d.elements()[i]));
    (up ? upper : lower)++;
    if (r.design[i]) (up ? upper_iron : lower_iron)++;
  }
  EXPECT_GT(2 * upper_iron, upper);
  EXPECT_LT(2 * lower_iron, lower);
}

INSTANTIATE_TEST_SUITE_P(Starts, ToyStarts, ::testing::Values(0, 1, 2));
