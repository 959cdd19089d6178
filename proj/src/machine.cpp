#include "rto/machine.hpp"

#include <cmath>

#include "rto/errors.hpp"

namespace rto {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::array<std::string_view, 4> kScenarioNames{"nom", "ang", "scal", "dist"};

bool inside(const Vec2& p, double x0, double x1, double y0, double y1) {
  return p.x() > x0 && p.x() < x1 && p.y() > y0 && p.y() < y1;
}
}  // namespace

std::string_view to_string(ScenarioKind kind) { return kScenarioNames[static_cast<int>(kind)]; }

ScenarioKind scenario_from_string(std::string_view name) {
  for (int i = 0; i < 4; ++i)
    if (kScenarioNames[i] == name) return static_cast<ScenarioKind>(i);
  throw ConfigError("unknown scenario '" + std::string(name) + "' (expected nom, ang, scal or dist)");
}

SourceDensity source_at(const MachineConfig& config, int position, const Params& q) {
  if (position < 0 || position >= config.positions) throw UsageError("source_at: position index out of range");
  const double alpha = config.position_period * position / config.positions;
  const double phase = config.scenario == ScenarioKind::ang ? q[0] : config.phi0;
  const double angle = config.pole_pairs * alpha + phase;
  return {config.j_hat * std::sin(angle), config.j_hat * std::sin(angle + kTwoPi / 3.0),
          config.j_hat * std::sin(angle + 2.0 * kTwoPi / 3.0)};
}

int parameter_count(const MachineConfig& config) {
  switch (config.scenario) {
    case ScenarioKind::nom:
      return 0;
    case ScenarioKind::ang:
    case ScenarioKind::scal:
      return 1;
    case ScenarioKind::dist:
      return config.dist_rotor_regions + 1;
  }
  return 0;
}

Params nominal_parameters(const MachineConfig& config) {
  if (config.scenario == ScenarioKind::ang) return Params::Constant(1, config.phi0);
  return Params::Constant(parameter_count(config), config.materials.kf);
}

UncertaintySet scenario_uncertainty_set(const MachineConfig& config) {
  const Params q = nominal_parameters(config);
  if (config.scenario == ScenarioKind::ang)
    return UncertaintySet::interval(Params::Constant(1, config.angle_lower), Params::Constant(1, config.angle_upper), q);
  if (!(config.kf_spread >= 0.0 && config.kf_spread < 1.0)) throw ConfigError("kf_spread must lie in [0, 1)");
  return UncertaintySet::interval(q * (1.0 - config.kf_spread), q * (1.0 + config.kf_spread), q);
}

int dist_region(const MachineConfig& config, const Vec2& point) {
  double theta = std::atan2(point.y(), point.x());
  if (theta < 0.0) theta += kTwoPi;
  const int slice = static_cast<int>(std::floor(theta / config.geometry.sector_angle * config.dist_rotor_regions));
  return std::clamp(slice, 0, config.dist_rotor_regions - 1);
}

DesignProblem build_machine_problem(const MachineConfig& config) {
  return build_machine_problem(config, build_benchmark_mesh(config.geometry));
}

DesignProblem build_machine_problem(const MachineConfig& config, Mesh mesh) {
  if (config.positions < 1) throw ConfigError("machine: need at least one rotor position");
  if (config.dist_rotor_regions < 1) throw ConfigError("machine: need at least one rotor sub-region");
  if (config.linear_iron && (config.scenario == ScenarioKind::scal || config.scenario == ScenarioKind::dist))
    throw ConfigError("machine: material scenarios need the saturating iron law");
  validate(mesh);

  DesignProblem p;
  const MaterialConstants& mc = config.materials;
  p.nominal_q = nominal_parameters(config);
  p.num_positions = config.positions;
  p.nominal_in_air = config.scenario == ScenarioKind::dist;

  auto iron_law = [&](int binding) {
    return config.linear_iron ? MaterialLaw::linear(mc.nuf) : MaterialLaw::iron(mc, binding);
  };
  const int stator_binding = config.scenario == ScenarioKind::scal   ? 0
                             : config.scenario == ScenarioKind::dist ? config.dist_rotor_regions
                                                                     : -1;
  p.laws.push_back(MaterialLaw::air(mc));                 // 0
  p.laws.push_back(iron_law(stator_binding));             // 1
  p.laws.push_back(MaterialLaw::magnet(mc.phi1, mc));     // 2
  p.laws.push_back(MaterialLaw::magnet(mc.phi2, mc));     // 3
  const int first_rotor_law = static_cast<int>(p.laws.size());
  if (config.scenario == ScenarioKind::dist) {
    for (int i = 0; i < config.dist_rotor_regions; ++i) p.laws.push_back(iron_law(i));
  } else {
    p.laws.push_back(iron_law(config.scenario == ScenarioKind::scal ? 0 : -1));
  }
  p.design_air_law = 0;

  const int ne = mesh.num_elements();
  p.element_law.assign(ne, 0);
  p.source.amplitude = Vector::Zero(ne);
  p.source.phase = Vector::Zero(ne);
  for (int e = 0; e < ne; ++e) {
    switch (mesh.regions[e]) {
      case Region::design:
        p.element_law[e] = -1;
        p.design_elements.push_back(e);
        p.design_iron_law.push_back(config.scenario == ScenarioKind::dist
                                        ? first_rotor_law + dist_region(config, mesh.centroid(e))
                                        : first_rotor_law);
        break;
      case Region::stator_iron:
        p.element_law[e] = 1;
        break;
      case Region::magnet1:
        p.element_law[e] = 2;
        break;
      case Region::magnet2:
        p.element_law[e] = 3;
        break;
      case Region::coil_A:
        p.source.amplitude[e] = config.j_hat;
        break;
      case Region::coil_B:
        p.source.amplitude[e] = -config.j_hat;
        p.source.phase[e] = kTwoPi / 3.0;
        break;
      case Region::coil_C:
        p.source.amplitude[e] = config.j_hat;
        p.source.phase[e] = 2.0 * kTwoPi / 3.0;
        break;
      case Region::air_gap:
      case Region::shaft:
        break;
    }
  }
  for (int n = 0; n < config.positions; ++n) {
    const double alpha = config.position_period * n / config.positions;
    p.source.angles.push_back(config.pole_pairs * alpha);
    if (config.rotate_magnets) p.magnet_rotation.push_back(alpha);
  }
  p.source.load_angle = config.phi0;
  if (config.scenario == ScenarioKind::ang) p.source.load_angle_binding = 0;

  auto space = std::make_shared<FemSpace>(std::move(mesh));
  const double radius = config.torque_radius > 0.0
                            ? config.torque_radius
                            : 0.5 * (config.geometry.design_outer_radius + config.geometry.air_gap_outer_radius);
  p.output = torque_functional(*space, radius, config.torque_points, mc.nu0, true);
  p.space = std::move(space);
  validate(p);
  return p;
}

UncertaintySet toy_uncertainty_set(const ToyConfig& config) {
  if (!config.uncertain_scale) return UncertaintySet::singleton(Params());
  return UncertaintySet::interval(Params::Constant(1, config.scale_lower), Params::Constant(1, config.scale_upper),
                                  Params::Ones(1));
}

bool toy_upper_half(const Vec2& point) { return point.y() > 0.5; }

DesignProblem build_toy_problem(const ToyConfig& config) {
  Mesh mesh = build_square_mesh(config.cells);
  assign_regions(mesh, [](const Vec2& c) {
    if (inside(c, 0.3, 0.7, 0.3, 0.7)) return Region::design;
    if (inside(c, 0.05, 0.25, 0.35, 0.65)) return Region::coil_A;
    return Region::air_gap;
  });
  return build_toy_problem(config, std::move(mesh));
}

DesignProblem build_toy_problem(const ToyConfig& config, Mesh mesh) {
  validate(mesh);
  DesignProblem p;
  p.laws = {MaterialLaw::linear(config.nu_air), MaterialLaw::linear(config.nu_iron)};
  p.design_air_law = 0;
  p.num_positions = config.positions;
  const int ne = mesh.num_elements();
  p.element_law.assign(ne, 0);
  p.source.amplitude = Vector::Zero(ne);
  p.source.phase = Vector::Constant(ne, std::numbers::pi / 2.0);
  for (int n = 0; n < config.positions; ++n) p.source.angles.push_back(0.0);
  if (config.uncertain_scale) {
    p.nominal_q = Params::Ones(1);
    p.source.scale_binding = 0;
  }
  for (int e = 0; e < ne; ++e) {
    const Vec2 c = mesh.centroid(e);
    if (mesh.regions[e] == Region::design) {
      p.element_law[e] = -1;
      p.design_elements.push_back(e);
      p.design_iron_law.push_back(1);
    } else if (mesh.regions[e] == Region::coil_A) {
      p.source.amplitude[e] = config.source;
    } else if (inside(c, 0.75, 0.95, 0.55, 0.85) || inside(c, 0.75, 0.95, 0.15, 0.45)) {
      const double w = (c.y() > 0.5 ? -1.0 : 1.0) * mesh.signed_area(e);
      p.output.quadratic.push_back({e, w, Vec2::UnitX(), Vec2::UnitX()});
      p.output.quadratic.push_back({e, w, Vec2::UnitY(), Vec2::UnitY()});
    }
  }
  p.space = std::make_shared<FemSpace>(std::move(mesh));
  validate(p);
  return p;
}

}  // namespace rto
