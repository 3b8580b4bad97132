#include "dctps/line.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace dctps {

namespace {

using nlohmann::json;

Vector vector_field(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) {
    Vector v(1);
    v << fallback;
    return v;
  }
  const json& f = j.at(key);
  if (f.is_number()) {
    Vector v(1);
    v << f.get<double>();
    return v;
  }
  if (f.is_array()) {
    Vector v(static_cast<Eigen::Index>(f.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!f[static_cast<std::size_t>(i)].is_number())
        throw ConfigError("field '" + key + "' has a non-numeric entry");
      v(i) = f[static_cast<std::size_t>(i)].get<double>();
    }
    return v;
  }
  throw ConfigError("field '" + key + "' must be a number or an array");
}

double scalar_field(const json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError("field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

Vector broadcast(const Vector& v, Eigen::Index n, const std::string& field) {
  if (v.size() == n) return v;
  if (v.size() == 1) return Vector::Constant(n, v(0));
  throw ConfigError("field '" + field + "' has length " + std::to_string(v.size()) +
                    ", expected 1 or " + std::to_string(n));
}

}  // namespace

LineConfig LineConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }

  LineConfig c;
  if (j.contains("tss_positions_km")) {
    c.tss_positions_km = vector_field(j, "tss_positions_km", 0.0);
  } else if (j.contains("n_tss")) {
    const int n = j.at("n_tss").get<int>();
    const double length = scalar_field(j, "line_length_km", 0.0);
    if (n < 2) throw ConfigError("field 'n_tss' must be at least 2");
    if (length <= 0.0)
      throw ConfigError("field 'line_length_km' must be positive when positions are generated");
    c.tss_positions_km = Vector::LinSpaced(n, 0.0, length);
  } else {
    throw ConfigError("config must provide 'tss_positions_km' or 'n_tss' + 'line_length_km'");
  }
  c.rho_catenary_ohm_km = vector_field(j, "rho_catenary_ohm_km", c.rho_catenary_ohm_km(0));
  c.rho_rail_ohm_km = vector_field(j, "rho_rail_ohm_km", c.rho_rail_ohm_km(0));
  c.p_lim_mw = vector_field(j, "p_lim_mw", c.p_lim_mw(0));
  c.p_aux_mw = vector_field(j, "p_aux_mw", c.p_aux_mw(0));
  c.u_tss_max_kv = scalar_field(j, "u_tss_max_kv", c.u_tss_max_kv);
  c.u_tss_min_kv = scalar_field(j, "u_tss_min_kv", c.u_tss_min_kv);
  c.u_veh_max_braking_kv = scalar_field(j, "u_veh_max_braking_kv", c.u_veh_max_braking_kv);
  c.u_veh_max_kv = scalar_field(j, "u_veh_max_kv", c.u_veh_max_kv);
  c.u_veh_min_kv = scalar_field(j, "u_veh_min_kv", c.u_veh_min_kv);
  c.vsc_efficiency = scalar_field(j, "vsc_efficiency", c.vsc_efficiency);
  c.line_length_km = scalar_field(j, "line_length_km", c.line_length_km);
  c.p_veh_tract_max_mw = scalar_field(j, "p_veh_tract_max_mw", c.p_veh_tract_max_mw);
  c.p_veh_regen_max_mw = scalar_field(j, "p_veh_regen_max_mw", c.p_veh_regen_max_mw);
  if (j.contains("name")) c.name = j.at("name").get<std::string>();
  return c;
}

LineConfig LineConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

LineConfig uniform_line_config(int n_tss, double length_km) {
  LineConfig c;
  c.tss_positions_km = Vector::LinSpaced(n_tss, 0.0, length_km);
  c.line_length_km = length_km;
  return c;
}

LineModel build_line(const LineConfig& config) {
  const Eigen::Index n = config.tss_positions_km.size();
  if (n < 2) throw ConfigError("tss_positions_km: need at least 2 substations");

  LineModel m;
  m.positions_km = config.tss_positions_km;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (!(m.positions_km(i) < m.positions_km(i + 1)))
      throw ConfigError("tss_positions_km: positions not strictly increasing at index " +
                        std::to_string(i + 1));
  }
  m.length_km = config.line_length_km > 0.0 ? config.line_length_km : m.positions_km(n - 1);
  if (m.positions_km(0) < 0.0 || m.positions_km(n - 1) > m.length_km)
    throw ConfigError("tss_positions_km: positions must lie within [0, line_length_km]");

  m.rho_catenary_ohm_km = broadcast(config.rho_catenary_ohm_km, n - 1, "rho_catenary_ohm_km");
  m.rho_rail_ohm_km = broadcast(config.rho_rail_ohm_km, n - 1, "rho_rail_ohm_km");
  if ((m.rho_catenary_ohm_km.array() <= 0.0).any())
    throw ConfigError("rho_catenary_ohm_km: resistivity must be positive");
  if ((m.rho_rail_ohm_km.array() <= 0.0).any())
    throw ConfigError("rho_rail_ohm_km: resistivity must be positive");
  m.rho_lumped_ohm_km = m.rho_catenary_ohm_km + m.rho_rail_ohm_km;

  m.p_lim_mw = broadcast(config.p_lim_mw, n, "p_lim_mw");
  if ((m.p_lim_mw.array() <= 0.0).any()) throw ConfigError("p_lim_mw: limits must be positive");
  m.p_aux_mw = broadcast(config.p_aux_mw, n, "p_aux_mw");
  if ((m.p_aux_mw.array() < 0.0).any()) throw ConfigError("p_aux_mw: loads must be nonnegative");

  m.u_tss_max_kv = config.u_tss_max_kv;
  m.u_tss_min_kv = config.u_tss_min_kv;
  m.u_veh_max_braking_kv = config.u_veh_max_braking_kv;
  m.u_veh_max_kv = config.u_veh_max_kv;
  m.u_veh_min_kv = config.u_veh_min_kv;
  if (!(m.u_veh_min_kv < m.u_tss_min_kv && m.u_tss_min_kv <= m.u_tss_max_kv &&
        m.u_tss_max_kv < m.u_veh_max_kv && m.u_veh_max_kv <= m.u_veh_max_braking_kv))
    throw ConfigError(
        "voltage window inverted: require u_veh_min < u_tss_min <= u_tss_max < "
        "u_veh_max <= u_veh_max_braking");

  m.vsc_efficiency = config.vsc_efficiency;
  if (m.vsc_efficiency <= 0.0 || m.vsc_efficiency > 1.0)
    throw ConfigError("vsc_efficiency: must lie in (0, 1]");

  m.p_veh_tract_max_mw = config.p_veh_tract_max_mw;
  m.p_veh_regen_max_mw = config.p_veh_regen_max_mw;
  if (m.p_veh_tract_max_mw <= 0.0 || m.p_veh_regen_max_mw < 0.0)
    throw ConfigError("vehicle power envelope: p_veh_tract_max_mw must be positive and "
                      "p_veh_regen_max_mw nonnegative");
  m.name = config.name;
  return m;
}

int LineModel::segment_of(double x_km) const {
  const Eigen::Index n = positions_km.size();
  if (x_km <= positions_km(0)) return 0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    if (x_km < positions_km(i + 1)) return static_cast<int>(i);
  }
  return static_cast<int>(n - 2);
}

}  // namespace dctps
