#pragma once

#include "plateflow/mesh.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace plateflow::config {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Physics {
  double nu = 1.0;
  std::string force = "none";  // none | kirchhoff | berger | von_karman
  double kirchhoff_kappa = 0.0;
  double kirchhoff_q = 2.0;
  double kirchhoff_r = 0.0;
  double kirchhoff_mu = 0.0;
  std::vector<double> kirchhoff_poly{0.0, -1.0, 0.0, 1.0};
  double berger_kappa = 1.0;
  double berger_gamma = 0.0;
  int vk_nodes = 16;
  double vk_prestress = 0.0;
  double fluid_load = 0.0;
  double plate_load = 0.0;
  double load_frequency = 0.0;  // > 0 modulates both loads by cos(ωt)
};

struct Integration {
  double dt = 1e-3;
  double T = 1.0;
  int stride = 10;
  std::string initial = "random";  // random | zero
  double amplitude = 1.0;
};

struct Probes {
  std::uint64_t seed = 1;
  int ensemble = 10;
  int lyapunov_states = 100;
  int starts = 8;
  int pairs = 10;
  double decay_T = 20.0;
  double lyapunov_T = 2.0;
  double attract_T = 50.0;
  double qs_T = 5.0;
  double radius = 1.0;
  double m_cap = 1e4;
  double berger_kappa = 1.0;
  double berger_gamma = 2.0;
  double fluid_load = 5.0;
  double plate_load = 2.0;
};

struct ExperimentConfig {
  mesh::GeometryConfig geometry;
  int m = 12;
  int n = 8;
  Physics physics;
  Integration integration;
  Probes probes;
  std::string out_dir = "out";
};

namespace detail {

template <class T>
T convert(const std::string& key, const std::string& raw) {
  std::istringstream is(raw);
  T v{};
  is >> v;
  std::string rest;
  if (is.fail() || (is >> rest)) throw ConfigError("invalid value '" + raw + "' for " + key);
  return v;
}

template <>
inline std::string convert<std::string>(const std::string&, const std::string& raw) {
  return raw;
}

inline std::vector<double> convert_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(convert<double>(key, item));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

class Reader {
 public:
  explicit Reader(const boost::property_tree::ptree& tree) : tree_(tree) {}

  template <class T>
  void get(const std::string& section, const std::string& name, T& target) {
    const std::string key = section + "." + name;
    known_.insert(key);
    if (auto v = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'))) {
      target = convert<T>(key, *v);
    }
  }

  void get_list(const std::string& section, const std::string& name, std::vector<double>& target) {
    const std::string key = section + "." + name;
    known_.insert(key);
    if (auto v = tree_.get_optional<std::string>(boost::property_tree::ptree::path_type(key, '.'))) target = convert_list(key, *v);
  }

  void reject_unknown() const {
    std::set<std::string> sections;
    for (const auto& k : known_) sections.insert(k.substr(0, k.find('.')));
    for (const auto& [section, body] : tree_) {
      if (!body.data().empty()) throw ConfigError("unknown key '" + section + "' outside any section");
      if (!sections.count(section)) throw ConfigError("unknown section '" + section + "'");
      for (const auto& [name, value] : body) {
        const std::string key = section + "." + name;
        if (!known_.count(key)) throw ConfigError("unknown key '" + key + "'");
      }
    }
  }

 private:
  const boost::property_tree::ptree& tree_;
  std::set<std::string> known_;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace detail

inline void validate(const ExperimentConfig& c) {
  using detail::require;
  require(c.geometry.lx > 0.0, "geometry.lx must be positive");
  require(c.geometry.lz > 0.0, "geometry.lz must be positive");
  require(c.geometry.nx >= 4, "geometry.nx must be at least 4");
  require(c.geometry.nz >= 4, "geometry.nz must be at least 4");
  require(c.m >= 0, "modes.m must be nonnegative");
  require(c.n >= 0, "modes.n must be nonnegative");
  require(c.m + c.n >= 1, "modes.m + modes.n must be at least 1");
  const auto& p = c.physics;
  require(p.nu > 0.0, "physics.nu must be positive");
  static const std::set<std::string> models{"none", "kirchhoff", "berger", "von_karman"};
  require(models.count(p.force) > 0, "physics.force must be one of none, kirchhoff, berger, von_karman");
  require(p.kirchhoff_kappa >= 0.0, "physics.kirchhoff_kappa must be nonnegative");
  require(p.kirchhoff_r >= 0.0, "physics.kirchhoff_r must be nonnegative");
  require(p.kirchhoff_q > p.kirchhoff_r, "physics.kirchhoff_q must exceed physics.kirchhoff_r");
  require(p.kirchhoff_mu >= 0.0, "physics.kirchhoff_mu must be nonnegative");
  require(p.berger_kappa >= 0.0, "physics.berger_kappa must be nonnegative");
  require(p.vk_nodes >= 4, "physics.vk_nodes must be at least 4");
  require(p.load_frequency >= 0.0, "physics.load_frequency must be nonnegative");
  const auto& i = c.integration;
  require(i.dt > 0.0, "integration.dt must be positive");
  require(i.T >= 0.0, "integration.T must be nonnegative");
  require(i.stride >= 1, "integration.stride must be at least 1");
  require(i.initial == "random" || i.initial == "zero", "integration.initial must be random or zero");
  require(i.amplitude >= 0.0, "integration.amplitude must be nonnegative");
  const auto& q = c.probes;
  require(q.ensemble >= 1, "probes.ensemble must be at least 1");
  require(q.lyapunov_states >= 1, "probes.lyapunov_states must be at least 1");
  require(q.starts >= 1, "probes.starts must be at least 1");
  require(q.pairs >= 1, "probes.pairs must be at least 1");
  require(q.decay_T > 0.0, "probes.decay_T must be positive");
  require(q.lyapunov_T > 0.0, "probes.lyapunov_T must be positive");
  require(q.attract_T > 0.0, "probes.attract_T must be positive");
  require(q.qs_T > 0.0, "probes.qs_T must be positive");
  require(q.radius > 0.0, "probes.radius must be positive");
  require(q.m_cap > 0.0, "probes.m_cap must be positive");
  require(q.berger_kappa >= 0.0, "probes.berger_kappa must be nonnegative");
  require(!c.out_dir.empty(), "output.dir must not be empty");
}

inline ExperimentConfig parse_config_tree(const boost::property_tree::ptree& tree) {
  ExperimentConfig c;
  detail::Reader r(tree);
  r.get("geometry", "lx", c.geometry.lx);
  r.get("geometry", "lz", c.geometry.lz);
  r.get("geometry", "nx", c.geometry.nx);
  r.get("geometry", "nz", c.geometry.nz);
  r.get("modes", "m", c.m);
  r.get("modes", "n", c.n);
  auto& p = c.physics;
  r.get("physics", "nu", p.nu);
  r.get("physics", "force", p.force);
  r.get("physics", "kirchhoff_kappa", p.kirchhoff_kappa);
  r.get("physics", "kirchhoff_q", p.kirchhoff_q);
  r.get("physics", "kirchhoff_r", p.kirchhoff_r);
  r.get("physics", "kirchhoff_mu", p.kirchhoff_mu);
  r.get_list("physics", "kirchhoff_poly", p.kirchhoff_poly);
  r.get("physics", "berger_kappa", p.berger_kappa);
  r.get("physics", "berger_gamma", p.berger_gamma);
  r.get("physics", "vk_nodes", p.vk_nodes);
  r.get("physics", "vk_prestress", p.vk_prestress);
  r.get("physics", "fluid_load", p.fluid_load);
  r.get("physics", "plate_load", p.plate_load);
  r.get("physics", "load_frequency", p.load_frequency);
  auto& i = c.integration;
  r.get("integration", "dt", i.dt);
  r.get("integration", "T", i.T);
  r.get("integration", "stride", i.stride);
  r.get("integration", "initial", i.initial);
  r.get("integration", "amplitude", i.amplitude);
  auto& q = c.probes;
  r.get("probes", "seed", q.seed);
  r.get("probes", "ensemble", q.ensemble);
  r.get("probes", "lyapunov_states", q.lyapunov_states);
  r.get("probes", "starts", q.starts);
  r.get("probes", "pairs", q.pairs);
  r.get("probes", "decay_T", q.decay_T);
  r.get("probes", "lyapunov_T", q.lyapunov_T);
  r.get("probes", "attract_T", q.attract_T);
  r.get("probes", "qs_T", q.qs_T);
  r.get("probes", "radius", q.radius);
  r.get("probes", "m_cap", q.m_cap);
  r.get("probes", "berger_kappa", q.berger_kappa);
  r.get("probes", "berger_gamma", q.berger_gamma);
  r.get("probes", "fluid_load", q.fluid_load);
  r.get("probes", "plate_load", q.plate_load);
  r.get("output", "dir", c.out_dir);
  r.reject_unknown();
  validate(c);
  return c;
}

inline ExperimentConfig parse_config_string(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream is(text);
  try {
    boost::property_tree::ini_parser::read_ini(is, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("parse error at line " + std::to_string(e.line()) + ": " + e.message());
  }
  return parse_config_tree(tree);
}

inline ExperimentConfig parse_config(const std::string& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    if (e.line() == 0) throw ConfigError("cannot read config " + path + ": " + e.message());
    throw ConfigError(path + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return parse_config_tree(tree);
}

}  // namespace plateflow::config
