// Snapshot power flow: linear solves with fixed substation voltages and the
// constant-power vehicle fixed point built on top of them.
#pragma once

#include <Eigen/Cholesky>

#include "dctps/snapshot.hpp"
#include "dctps/types.hpp"

namespace dctps {

struct PowerFlowOptions {
  double power_tol_mw = 1e-3;       // per-vehicle |U*I - P| stop threshold (1 kW)
  int max_iterations = 50;
  double voltage_ceiling_kv = 1.9;  // collapse guard, ~2x the braking limit
};

struct PowerFlowSolution {
  Vector node_voltage_kv;     // all chain nodes, network order
  Vector tss_voltage_kv;      // N
  Vector tss_current_ka;      // N, + sourcing into the DC network
  Vector tss_power_mw;        // N, elementwise U*I
  Vector vehicle_voltage_kv;  // M
  Vector vehicle_current_ka;  // M, + drawing from the network
  Vector vehicle_power_mw;    // M, achieved U*I
  double total_loss_mw = 0.0;
  bool converged = true;
  int iterations = 0;
  double max_power_mismatch_mw = 0.0;
};

/// Linear network solver with the substation voltages as boundary values.
/// The vehicle-block factorisation is computed once per snapshot, so repeated
/// solves (fixed-point iterations, lattice scans, subsystem splits) are cheap.
class FixedVoltageSolver {
 public:
  explicit FixedVoltageSolver(ChainNetwork net);

  const ChainNetwork& network() const { return net_; }
  int n_tss() const { return net_.n_tss; }
  int n_vehicles() const { return net_.n_vehicles; }

  /// Solves with the given vehicle current draws (injections are -i_draw).
  /// Fills vehicle voltages and substation currents; hot path, no allocation
  /// beyond the outputs.
  void solve_reduced(const Vector& u_tss_kv, const Vector& i_draw_ka,
                     Vector& u_vehicle_kv, Vector& i_tss_ka) const;

  /// Full solution assembly (node voltages, powers, ohmic loss).
  PowerFlowSolution solve(const Vector& u_tss_kv, const Vector& i_draw_ka) const;

  /// No-load seed: distance-weighted interpolation of the neighbouring
  /// substation voltages, clamped beyond the substation span.
  Vector interpolate_vehicle_voltages(const Vector& u_tss_kv) const;

  const Matrix& tss_block() const { return l_tt_; }
  const Matrix& tss_vehicle_block() const { return l_tf_; }
  const Matrix& vehicle_block() const { return l_ff_; }
  const Eigen::LDLT<Matrix>& vehicle_factor() const { return vehicle_factor_; }

 private:
  ChainNetwork net_;
  Matrix l_tt_, l_tf_, l_ft_, l_ff_;
  Eigen::LDLT<Matrix> vehicle_factor_;
};

PowerFlowSolution solve_fixed(const FixedVoltageSolver& solver, const Vector& u_tss_kv,
                              const Vector& i_draw_ka);

/// Constant-power iteration i^(k+1) = P / U^(k) seeded from the interpolated
/// no-load voltage. Throws InfeasibleError on voltage collapse or when the
/// power mismatch grows five iterations in a row.
PowerFlowSolution solve_constant_power(const FixedVoltageSolver& solver, const Vector& u_tss_kv,
                                       const Vector& p_vehicle_mw,
                                       const PowerFlowOptions& options = {});

/// Charged power: only energy taken from the AC utility counts.
double objective_mw(const Vector& p_tss_mw, const Vector& p_aux_mw);

/// AC-side substation power: P/eta when supplying, P*eta when absorbing.
Vector apply_vsc_efficiency(const Vector& p_tss_mw, double efficiency);

}  // namespace dctps
