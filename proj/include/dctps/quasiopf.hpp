// Quasi-optimal power flow: direct mapping from load information to
// near-optimal substation voltage orders via proximity-principle support
// allocation, with saturation handling and regeneration curtailment.
#pragma once

#include <vector>

#include "dctps/powerflow.hpp"
#include "dctps/structural.hpp"
#include "dctps/superposition.hpp"
#include "dctps/types.hpp"

namespace dctps {

enum class TssClass { Neutral, TractionLimited, RegenLimited };

/// Per-substation classification against the current limits derived from the
/// power limits at the previous iterate's voltage.
struct TssTarget {
  TssClass cls = TssClass::Neutral;
  double i_lim_ka = 0.0;        // upper current bound (supply side)
  double i_aux_ka = 0.0;        // auxiliary-load current; -i_aux is the no-export bound
  double i_cc_target_ka = 0.0;  // requested coordinated current, 0 for neutral
};

/// Voltage orders and the coordinated currents that realise them.
struct ControlOrder {
  Vector i_s_cc_star_ka;   // N, zero sum
  Vector i_c_cc_star_ka;   // N-1
  Vector u_b_cc_star_kv;   // N-1
  Vector u_dm_star_kv;     // N
  double u_cm_star_kv = 0.0;
  Vector u_s_star_kv;      // N
  Vector curtailment_mw;   // N, regeneration released to the AC side
  double lambda = 1.0;     // regeneration scaling kept by the relaxation
  int outer_iterations = 0;
};

struct QuasiOpfOptions {
  PowerFlowOptions power_flow;
  double outer_tol_kv = 1e-4;      // 0.1 V on consecutive voltage orders
  int max_outer_iterations = 10;
  double limit_margin_mw = 5e-4;   // kept inside the power limits when converting
                                   // them to current bounds, so the verified flow
                                   // lands on the feasible side
  double lambda_tol = 1e-3;        // curtailment bisection width
  double power_slack_mw = 1e-6;    // accepted overshoot when verifying P <= p_lim
  double voltage_slack_kv = 1e-9;  // accepted overshoot on voltage windows
};

/// Current limits and coordinated-current targets per substation. The margin
/// shrinks both power bounds before the division so that verified powers stay
/// strictly inside them; pass 0 for the textbook conversion.
std::vector<TssTarget> classify_targets(const Vector& i_s_nd_ka, const Vector& u_tss_kv,
                                        const LineModel& line, double limit_margin_mw = 0.0);

/// Proximity-principle allocation: every maximal block of limited substations
/// receives its targets, the two flanking neutral substations supply the
/// balance split inversely to the path resistances, blocks touching a line
/// end lean on their single flank. Throws InfeasibleError when no neutral
/// substation exists.
Vector allocate_support(const std::vector<TssTarget>& targets, const StructuralMatrices& mats);

/// Caps supporters that would leave their own current band, reclassifies them
/// as limited at the cap and re-runs the allocation until every substation
/// respects its band.
Vector resolve_saturation(Vector i_s_cc_star_ka, std::vector<TssTarget> targets,
                          const StructuralMatrices& mats, const Vector& i_s_nd_ka);

/// Voltage orders from the coordinated currents: branch voltages, suffix
/// integration, and the common mode that pins the highest order at the
/// voltage ceiling.
ControlOrder voltage_references(const Vector& i_s_cc_star_ka, const StructuralMatrices& mats,
                                const LineModel& line);

/// Largest uniform scaling of the regeneration targets whose voltage orders
/// and verified flow satisfy every voltage window; records the released
/// regeneration per substation. The verified flow at the returned order is
/// written to verified_out.
ControlOrder relax_regeneration(const std::vector<TssTarget>& targets,
                                const Vector& i_s_nd_ka, const Vector& u_class_kv,
                                const StructuralMatrices& mats, const LineModel& line,
                                const FixedVoltageSolver& solver, const Vector& p_vehicle_mw,
                                const QuasiOpfOptions& options,
                                PowerFlowSolution& verified_out);

struct QuasiOpfResult {
  ControlOrder order;
  PowerFlowSolution verified;
  double objective_mw = 0.0;
  double loss_mw = 0.0;
  int outer_iterations = 0;
  bool converged = false;
};

QuasiOpfResult quasi_opf(const LineModel& line, const Snapshot& snap,
                         const QuasiOpfOptions& options = {});

/// Overload reusing prebuilt per-snapshot plumbing.
QuasiOpfResult quasi_opf(const LineModel& line, const StructuralMatrices& mats,
                         const FixedVoltageSolver& solver, const Vector& p_vehicle_mw,
                         const QuasiOpfOptions& options = {});

}  // namespace dctps
