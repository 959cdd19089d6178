#include "rto/config.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <vector>

#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "rto/errors.hpp"

namespace rto {

std::string_view to_string(ProblemKind kind) { return kind == ProblemKind::machine ? "machine" : "toy"; }

ProblemKind problem_kind_from_string(std::string_view name) {
  if (name == "machine") return ProblemKind::machine;
  if (name == "toy") return ProblemKind::toy;
  throw ConfigError("unknown problem '" + std::string(name) + "' (machine, toy)");
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string_view initial_name(InitialGuess g) {
  switch (g) {
    case InitialGuess::iron:
      return "iron";
    case InitialGuess::air:
      return "air";
    case InitialGuess::random:
      return "random";
    case InitialGuess::file:
      return "file";
  }
  return "iron";
}

InitialGuess initial_from_string(std::string_view name) {
  for (InitialGuess g : {InitialGuess::iron, InitialGuess::air, InitialGuess::random, InitialGuess::file})
    if (name == initial_name(g)) return g;
  throw ConfigError("unknown initial guess '" + std::string(name) + "' (iron, air, random, file)");
}

std::string format(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T parse_value(const std::string& key, const std::string& text) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw boost::bad_lexical_cast();
    } else {
      return boost::lexical_cast<T>(text);
    }
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError("key '" + key + "': cannot parse '" + text + "'");
  }
}

struct Key {
  std::string section;
  std::string name;
  std::function<void(const std::string&)> read;
  std::function<std::string()> write;
};

class Schema {
 public:
  explicit Schema(RunConfig& c) { bind_all(c); }

  const Key* find(const std::string& section, const std::string& name) const {
    for (const Key& k : keys_)
      if (k.section == section && k.name == name) return &k;
    return nullptr;
  }
  const std::vector<Key>& keys() const { return keys_; }

 private:
  template <class T>
  void value(const std::string& section, const std::string& name, T& target) {
    const std::string full = section + "." + name;
    keys_.push_back({section, name, [&target, full](const std::string& s) { target = parse_value<T>(full, s); },
                     [&target] {
                       if constexpr (std::is_same_v<T, bool>) return std::string(target ? "true" : "false");
                       else if constexpr (std::is_floating_point_v<T>) return format(target);
                       else return std::to_string(target);
                     }});
  }

  void degrees(const std::string& section, const std::string& name, double& target) {
    const std::string full = section + "." + name;
    keys_.push_back({section, name, [&target, full](const std::string& s) { target = parse_value<double>(full, s) * kDeg; },
                     [&target] { return format(target / kDeg); }});
  }

  template <std::size_t N>
  void degree_list(const std::string& section, const std::string& name, std::array<double, N>& target) {
    const std::string full = section + "." + name;
    keys_.push_back({section, name,
                     [&target, full](const std::string& s) {
                       std::istringstream in(s);
                       std::string item;
                       std::size_t i = 0;
                       while (in >> item) {
                         if (i == N) throw ConfigError("key '" + full + "': expected " + std::to_string(N) + " values");
                         target[i++] = parse_value<double>(full, item) * kDeg;
                       }
                       if (i != N) throw ConfigError("key '" + full + "': expected " + std::to_string(N) + " values");
                     },
                     [&target] {
                       std::string s;
                       for (std::size_t i = 0; i < N; ++i) s += (i ? " " : "") + format(target[i] / kDeg);
                       return s;
                     }});
  }

  void text(const std::string& section, const std::string& name, std::string& target) {
    keys_.push_back({section, name, [&target](const std::string& s) { target = s; }, [&target] { return target; }});
  }

  template <class E>
  void choice(const std::string& section, const std::string& name, E& target, E (*from)(std::string_view),
              std::string_view (*to)(E)) {
    keys_.push_back({section, name, [&target, from](const std::string& s) { target = from(s); },
                     [&target, to] { return std::string(to(target)); }});
  }

  void bind_all(RunConfig& c) {
    choice<ProblemKind>("run", "problem", c.problem, problem_kind_from_string, to_string);
    value("run", "seed", c.seed);

    GeometryConfig& g = c.machine.geometry;
    degrees("geometry", "sector_angle_deg", g.sector_angle);
    value("geometry", "shaft_radius", g.shaft_radius);
    value("geometry", "design_outer_radius", g.design_outer_radius);
    value("geometry", "air_gap_outer_radius", g.air_gap_outer_radius);
    value("geometry", "stator_outer_radius", g.stator_outer_radius);
    value("geometry", "magnet_inner_radius", g.magnet_inner_radius);
    value("geometry", "magnet_outer_radius", g.magnet_outer_radius);
    degree_list("geometry", "magnet1_angles_deg", g.magnet1_angles);
    degree_list("geometry", "magnet2_angles_deg", g.magnet2_angles);
    value("geometry", "coil_inner_radius", g.coil_inner_radius);
    value("geometry", "coil_outer_radius", g.coil_outer_radius);
    degrees("geometry", "coil_half_width_deg", g.coil_half_width);
    degree_list("geometry", "coil_centers_deg", g.coil_centers);
    value("geometry", "air_gap_layers", g.air_gap_layers);
    value("geometry", "target_nodes", g.target_nodes);

    MaterialConstants& m = c.machine.materials;
    value("materials", "nu0", m.nu0);
    value("materials", "nuf", m.nuf);
    value("materials", "kf", m.kf);
    value("materials", "nf", m.nf);
    value("materials", "num", m.num);
    value("materials", "br", m.br);
    degrees("materials", "phi1_deg", m.phi1);
    degrees("materials", "phi2_deg", m.phi2);
    value("materials", "linear_iron", c.machine.linear_iron);

    MachineConfig& s = c.machine;
    choice<ScenarioKind>("scenario", "name", s.scenario, scenario_from_string, to_string);
    value("scenario", "positions", s.positions);
    value("scenario", "j_hat", s.j_hat);
    degrees("scenario", "phi0_deg", s.phi0);
    degrees("scenario", "position_period_deg", s.position_period);
    value("scenario", "pole_pairs", s.pole_pairs);
    value("scenario", "rotate_magnets", s.rotate_magnets);
    degrees("scenario", "angle_lower_deg", s.angle_lower);
    degrees("scenario", "angle_upper_deg", s.angle_upper);
    value("scenario", "kf_spread", s.kf_spread);
    value("scenario", "dist_rotor_regions", s.dist_rotor_regions);
    value("scenario", "torque_radius", s.torque_radius);
    value("scenario", "torque_points", s.torque_points);

    ToyConfig& t = c.toy;
    value("toy", "cells", t.cells);
    value("toy", "nu_air", t.nu_air);
    value("toy", "nu_iron", t.nu_iron);
    value("toy", "source", t.source);
    value("toy", "positions", t.positions);
    value("toy", "uncertain_scale", t.uncertain_scale);
    value("toy", "scale_lower", t.scale_lower);
    value("toy", "scale_upper", t.scale_upper);

    LevelSetParams& l = c.levelset;
    value("algorithm", "k_max", l.k_max);
    degrees("algorithm", "angle_tol_deg", l.angle_tol);
    value("algorithm", "s_min", l.s_min);
    value("algorithm", "s_max", l.s_max);
    value("algorithm", "gamma", l.gamma);
    value("algorithm", "delta", l.delta);
    value("algorithm", "smoothing", l.smoothing);
    InnerParams& in = c.inner;
    value("algorithm", "l_max", in.l_max);
    value("algorithm", "eps_tau", in.eps_tau);
    value("algorithm", "tau_min", in.tau_min);
    value("algorithm", "tau_max", in.tau_max);
    value("algorithm", "gamma_tau", in.gamma_tau);
    value("algorithm", "delta_tau", in.delta_tau);
    value("algorithm", "sufficient_increase", in.gamma);
    value("algorithm", "t_max", c.tables.t_max);
    value("algorithm", "samples", c.tables.samples);
    value("algorithm", "q_samples", c.tables.q_samples);
    choice<InitialGuess>("algorithm", "initial", c.initial, initial_from_string, initial_name);
    text("algorithm", "initial_file", c.initial_file);
    value("algorithm", "sweep_points", c.sweep_points);
    value("algorithm", "fd_step", c.fd_step);
    value("algorithm", "td_elements", c.td_elements);

    value("exterior", "radius", c.exterior.radius);
    value("exterior", "target_nodes", c.exterior.target_nodes);
    choice<Truncation>("exterior", "truncation", c.exterior.truncation, truncation_from_string, to_string);

    text("output", "directory", c.output_directory);
    text("output", "tables", c.table_directory);
    value("output", "snapshot_interval", c.snapshot_interval);
  }

  std::vector<Key> keys_;
};

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  RunConfig config;
  Schema schema(config);
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("config: key '" + section + "' outside a section");
    for (const auto& [name, value] : body) {
      const Key* key = schema.find(section, name);
      if (!key) throw ConfigError("config: unknown key '" + section + "." + name + "'");
      key->read(value.get_value<std::string>());
    }
  }
  validate(config);
  return config;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return parse_run_config(in);
}

void validate(const RunConfig& c) {
  if (c.problem == ProblemKind::machine) {
    validate(c.machine.geometry);
    if (c.machine.positions < 1) throw ConfigError("scenario.positions must be at least 1");
    if (!(c.machine.angle_lower <= c.machine.phi0 && c.machine.phi0 <= c.machine.angle_upper))
      throw ConfigError("scenario: phi0 must lie in [angle_lower, angle_upper]");
    if (!(c.machine.kf_spread >= 0.0 && c.machine.kf_spread < 1.0))
      throw ConfigError("scenario.kf_spread must lie in [0, 1)");
    if (c.machine.torque_points < 2) throw ConfigError("scenario.torque_points must be at least 2");
  } else {
    if (c.toy.cells < 10) throw ConfigError("toy.cells must be at least 10");
    if (!(c.toy.nu_air > 0.0 && c.toy.nu_iron > 0.0)) throw ConfigError("toy: reluctivities must be positive");
    if (c.toy.positions < 1) throw ConfigError("toy.positions must be at least 1");
    if (!(c.toy.scale_lower <= 1.0 && 1.0 <= c.toy.scale_upper))
      throw ConfigError("toy: scale interval must contain 1");
  }
  validate(c.levelset);
  validate(c.inner);
  if (c.levelset.k_max > 100000 || c.inner.l_max > 100000) throw ConfigError("algorithm: k_max, l_max too large");
  if (c.tables.samples < 2) throw ConfigError("algorithm.samples must be at least 2");
  if (c.tables.q_samples < 2) throw ConfigError("algorithm.q_samples must be at least 2");
  if (!(c.tables.t_max > 0.0)) throw ConfigError("algorithm.t_max must be positive");
  if (c.initial == InitialGuess::file && c.initial_file.empty())
    throw ConfigError("algorithm.initial = file needs algorithm.initial_file");
  if (c.sweep_points < 2) throw ConfigError("algorithm.sweep_points must be at least 2");
  if (!(c.fd_step > 0.0 && c.fd_step < 1.0)) throw ConfigError("algorithm.fd_step must lie in (0, 1)");
  if (c.td_elements < 1) throw ConfigError("algorithm.td_elements must be at least 1");
  if (!(c.exterior.radius > 1.0) || c.exterior.target_nodes < 100)
    throw ConfigError("exterior: need radius > 1 and at least 100 nodes");
  if (c.output_directory.empty()) throw ConfigError("output.directory must not be empty");
  if (c.snapshot_interval < 0) throw ConfigError("output.snapshot_interval must be non-negative");
}

void write_run_config(std::ostream& out, const RunConfig& config) {
  RunConfig copy = config;
  const Schema schema(copy);
  std::string section;
  for (const Key& k : schema.keys()) {
    if (k.section != section) {
      out << (section.empty() ? "" : "\n") << '[' << k.section << "]\n";
      section = k.section;
    }
    out << k.name << " = " << k.write() << '\n';
  }
}

}  // namespace rto
