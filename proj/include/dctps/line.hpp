// Static line description: substation geometry, resistivities, limits.
#pragma once

#include <string>

#include "dctps/types.hpp"

namespace dctps {

/// Raw line description as parsed from a config file. Resistivity and limit
/// entries may be given as a single value (broadcast to every segment or
/// substation) or as full-length vectors.
struct LineConfig {
  Vector tss_positions_km;                                // strictly increasing, length N >= 2
  Vector rho_catenary_ohm_km = Vector::Constant(1, 0.0078);  // length N-1 or 1
  Vector rho_rail_ohm_km = Vector::Constant(1, 0.02);        // length N-1 or 1
  Vector p_lim_mw = Vector::Constant(1, 11.0);               // length N or 1
  Vector p_aux_mw = Vector::Constant(1, 0.0);                // length N or 1
  double u_tss_max_kv = 0.88;
  double u_tss_min_kv = 0.65;
  double u_veh_max_braking_kv = 0.95;
  double u_veh_max_kv = 0.90;
  double u_veh_min_kv = 0.50;
  double vsc_efficiency = 1.0;
  double line_length_km = 0.0;  // 0 -> last substation position
  double p_veh_tract_max_mw = 6.04;
  double p_veh_regen_max_mw = 9.58;
  std::string name = "synthetic";

  static LineConfig from_json_file(const std::string& path);
  static LineConfig from_json_text(const std::string& text);
};

/// Validated line model. The per-segment series resistivity is the lumped sum
/// of catenary and rail resistivity; the solver only ever consumes the sum,
/// the split is kept for reporting.
struct LineModel {
  Vector positions_km;         // N
  Vector rho_catenary_ohm_km;  // N-1
  Vector rho_rail_ohm_km;      // N-1
  Vector rho_lumped_ohm_km;    // N-1
  Vector p_lim_mw;             // N
  Vector p_aux_mw;             // N
  double u_tss_max_kv = 0.88;
  double u_tss_min_kv = 0.65;
  double u_veh_max_braking_kv = 0.95;
  double u_veh_max_kv = 0.90;
  double u_veh_min_kv = 0.50;
  double vsc_efficiency = 1.0;
  double length_km = 0.0;
  double p_veh_tract_max_mw = 6.04;
  double p_veh_regen_max_mw = 9.58;
  std::string name = "synthetic";

  int n_tss() const { return static_cast<int>(positions_km.size()); }

  /// Index of the inter-TSS segment containing x, clamped to the first/last
  /// segment for positions outside the substation span.
  int segment_of(double x_km) const;

  /// Vehicle voltage cap: braking vehicles get the raised limit.
  double vehicle_voltage_cap_kv(double power_mw) const {
    return power_mw < 0.0 ? u_veh_max_braking_kv : u_veh_max_kv;
  }
};

/// Validates a config and resolves broadcasts. Throws ConfigError naming the
/// offending field.
LineModel build_line(const LineConfig& config);

/// Config with n equally spaced substations over the given length and
/// default electrical parameters.
LineConfig uniform_line_config(int n_tss, double length_km);

}  // namespace dctps
