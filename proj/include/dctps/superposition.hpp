// Decomposition of a solved snapshot into natural-distribution and
// coordinated-control subsystems, with the associated loss identities.
#pragma once

#include <vector>

#include "dctps/powerflow.hpp"
#include "dctps/structural.hpp"
#include "dctps/types.hpp"

namespace dctps {

/// Common/differential-mode split of the substation state. The last
/// substation's voltage serves as the common mode, so the differential mode
/// vanishes there; any other reference would only shift the differential
/// vector by a constant without changing branch quantities.
struct Decomposition {
  double u_cm_kv = 0.0;  // common-mode voltage (last substation)
  Vector u_dm_kv;        // N, last entry exactly 0
  Vector u_b_cc_kv;      // N-1 branch voltages of the coordinated subsystem
  Vector u_c_cc_kv;      // N-1 catenary share of the branch voltage
  Vector u_r_cc_kv;      // N-1 rail share
  Vector i_c_cc_ka;      // N-1 branch currents (catenary == rail return)
  Vector i_s_cc_ka;      // N coordinated-control substation currents, zero sum
  Vector i_s_nd_ka;      // N natural-distribution substation currents
};

Decomposition decompose(const StructuralMatrices& mats, const Vector& u_tss_kv,
                        const Vector& i_tss_ka);

/// Branch-form coordinated-control loss; cross-checked against the quadratic
/// form in the substation currents before returning.
double cc_loss_mw(const Decomposition& dec, const StructuralMatrices& mats);

/// The two circuits whose superposition reproduces the original snapshot:
/// uniform common-mode voltage with the vehicle injections, and the
/// differential-mode voltages alone.
struct SubsystemSolutions {
  PowerFlowSolution natural;
  PowerFlowSolution coordinated;
};

SubsystemSolutions solve_subsystems(const FixedVoltageSolver& solver, const Vector& u_tss_kv,
                                    const Vector& i_draw_ka);

/// Piecewise-constant catenary current along the line for one instant,
/// split into natural-distribution and coordinated-control components.
/// The current is exactly constant between consecutive on-path nodes.
struct CurrentProfile {
  Vector breaks_km;        // K+1 interval edges covering [0, L]
  Vector total_ka;         // K
  Vector natural_ka;       // K
  Vector coordinated_ka;   // K
  double loss_total_mw = 0.0;
  double loss_natural_mw = 0.0;
  double loss_coordinated_mw = 0.0;
  double loss_cross_mw = 0.0;  // 2 sum r * i_nd * i_cc over branches

  double total_at(double x_km) const { return sample(total_ka, x_km); }
  double natural_at(double x_km) const { return sample(natural_ka, x_km); }
  double coordinated_at(double x_km) const { return sample(coordinated_ka, x_km); }

 private:
  double sample(const Vector& series, double x_km) const;
};

CurrentProfile current_profile(const FixedVoltageSolver& solver, const Vector& u_tss_kv,
                               const Vector& i_draw_ka);

/// Time statistics of the natural-distribution current at fixed locations.
struct NdStatistics {
  Vector sample_km;
  Vector mean_ka;
  Vector rms_ka;
  double mean_total_loss_mw = 0.0;
  double mean_natural_loss_mw = 0.0;
  double mean_coordinated_loss_mw = 0.0;
  double mean_cross_loss_mw = 0.0;
};

NdStatistics nd_profile_statistics(const std::vector<CurrentProfile>& series,
                                   const Vector& sample_km);

/// Midpoints of the inter-substation segments, the default sampling grid.
Vector segment_midpoints(const LineModel& line);

}  // namespace dctps
