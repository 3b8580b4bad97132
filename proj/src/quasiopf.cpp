#include "dctps/quasiopf.hpp"

#include <algorithm>
#include <cmath>

namespace dctps {

std::vector<TssTarget> classify_targets(const Vector& i_s_nd_ka, const Vector& u_tss_kv,
                                        const LineModel& line, double limit_margin_mw) {
  const int n = line.n_tss();
  if (i_s_nd_ka.size() != n || u_tss_kv.size() != n)
    throw ConfigError("classify_targets: vector lengths do not match the substation count");
  std::vector<TssTarget> targets(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (u_tss_kv(i) <= 0.0)
      throw ConfigError("classify_targets: nonpositive substation voltage");
    TssTarget& t = targets[static_cast<std::size_t>(i)];
    t.i_lim_ka = (line.p_lim_mw(i) - limit_margin_mw) / u_tss_kv(i);
    t.i_aux_ka = (line.p_aux_mw(i) - limit_margin_mw) / u_tss_kv(i);
    if (i_s_nd_ka(i) > t.i_lim_ka) {
      t.cls = TssClass::TractionLimited;
      t.i_cc_target_ka = t.i_lim_ka - i_s_nd_ka(i);
    } else if (i_s_nd_ka(i) < -t.i_aux_ka) {
      t.cls = TssClass::RegenLimited;
      t.i_cc_target_ka = -t.i_aux_ka - i_s_nd_ka(i);
    }
  }
  return targets;
}

Vector allocate_support(const std::vector<TssTarget>& targets, const StructuralMatrices& mats) {
  const int n = static_cast<int>(targets.size());
  const Vector& r = mats.branch_resistance_ohm;
  Vector alloc = Vector::Zero(n);

  bool any_needy = false;
  bool any_neutral = false;
  for (const TssTarget& t : targets) {
    (t.cls == TssClass::Neutral ? any_neutral : any_needy) = true;
  }
  if (!any_needy) return alloc;
  if (!any_neutral)
    throw InfeasibleError("every substation is at a limit; no supportive substation available");

  int i = 0;
  while (i < n) {
    if (targets[static_cast<std::size_t>(i)].cls == TssClass::Neutral) {
      ++i;
      continue;
    }
    const int a = i;
    int b = i;
    while (b + 1 < n && targets[static_cast<std::size_t>(b + 1)].cls != TssClass::Neutral) ++b;

    double block_sum = 0.0;
    for (int j = a; j <= b; ++j) {
      const double t = targets[static_cast<std::size_t>(j)].i_cc_target_ka;
      alloc(j) = t;
      block_sum += t;
    }

    const bool has_left = a > 0;
    const bool has_right = b + 1 < n;
    if (has_left && has_right) {
      // Left flank share: each target splits inversely to the path
      // resistance toward the two flanks.
      double denom = 0.0;
      for (int k = a - 1; k <= b; ++k) denom += r(k);
      double weighted = 0.0;
      double suffix = r(b);  // resistance from substation j to the right flank
      for (int j = b; j >= a; --j) {
        weighted += targets[static_cast<std::size_t>(j)].i_cc_target_ka * suffix;
        if (j > a) suffix += r(j - 1);
      }
      const double share_left = -weighted / denom;
      alloc(a - 1) += share_left;
      alloc(b + 1) += -block_sum - share_left;
    } else if (has_right) {
      alloc(b + 1) += -block_sum;
    } else {
      alloc(a - 1) += -block_sum;
    }
    i = b + 1;
  }
  return alloc;
}

Vector resolve_saturation(Vector i_s_cc_star_ka, std::vector<TssTarget> targets,
                          const StructuralMatrices& mats, const Vector& i_s_nd_ka) {
  const int n = static_cast<int>(targets.size());
  constexpr double kTol = 1e-12;
  for (int round = 0; round <= n; ++round) {
    bool violated = false;
    for (int i = 0; i < n; ++i) {
      TssTarget& t = targets[static_cast<std::size_t>(i)];
      if (t.cls != TssClass::Neutral) continue;
      const double post = i_s_nd_ka(i) + i_s_cc_star_ka(i);
      if (post > t.i_lim_ka + kTol) {
        t.cls = TssClass::TractionLimited;
        t.i_cc_target_ka = t.i_lim_ka - i_s_nd_ka(i);
        violated = true;
      } else if (post < -t.i_aux_ka - kTol) {
        t.cls = TssClass::RegenLimited;
        t.i_cc_target_ka = -t.i_aux_ka - i_s_nd_ka(i);
        violated = true;
      }
    }
    if (!violated) return i_s_cc_star_ka;
    i_s_cc_star_ka = allocate_support(targets, mats);
  }
  throw std::logic_error("saturation resolution did not settle within N rounds");
}

ControlOrder voltage_references(const Vector& i_s_cc_star_ka, const StructuralMatrices& mats,
                                const LineModel& line) {
  const int n = mats.n_tss();
  const double scale = std::max(i_s_cc_star_ka.cwiseAbs().maxCoeff(), 1.0);
  if (std::abs(i_s_cc_star_ka.sum()) > 1e-9 * scale)
    throw std::invalid_argument("voltage_references: coordinated currents must sum to zero");

  ControlOrder order;
  order.i_s_cc_star_ka = i_s_cc_star_ka;
  order.i_c_cc_star_ka.noalias() = mats.accumulation * i_s_cc_star_ka;
  order.u_b_cc_star_kv = mats.branch_resistance_ohm.cwiseProduct(order.i_c_cc_star_ka);
  order.u_dm_star_kv.noalias() = mats.integration * order.u_b_cc_star_kv;
  order.u_cm_star_kv = line.u_tss_max_kv - order.u_dm_star_kv.maxCoeff();
  order.u_s_star_kv = order.u_dm_star_kv.array() + order.u_cm_star_kv;
  order.curtailment_mw = Vector::Zero(n);
  return order;
}

namespace {

// Voltage-window feasibility of an order: substation floor by construction of
// the common mode, vehicle windows from a verification flow. Power limits are
// left to the outer loop; the relaxation only steers voltages.
bool order_voltages_feasible(const ControlOrder& order, const LineModel& line,
                             const FixedVoltageSolver& solver, const Vector& p_vehicle_mw,
                             const QuasiOpfOptions& options, PowerFlowSolution& flow_out) {
  if (order.u_s_star_kv.minCoeff() < line.u_tss_min_kv - options.voltage_slack_kv) return false;
  try {
    flow_out = solve_constant_power(solver, order.u_s_star_kv, p_vehicle_mw, options.power_flow);
  } catch (const InfeasibleError&) {
    return false;
  }
  if (!flow_out.converged) return false;
  for (int j = 0; j < solver.n_vehicles(); ++j) {
    const double cap = line.vehicle_voltage_cap_kv(p_vehicle_mw(j));
    if (flow_out.vehicle_voltage_kv(j) > cap + options.voltage_slack_kv) return false;
    if (flow_out.vehicle_voltage_kv(j) < line.u_veh_min_kv - options.voltage_slack_kv)
      return false;
  }
  return true;
}

}  // namespace

ControlOrder relax_regeneration(const std::vector<TssTarget>& targets, const Vector& i_s_nd_ka,
                                const Vector& u_class_kv, const StructuralMatrices& mats,
                                const LineModel& line, const FixedVoltageSolver& solver,
                                const Vector& p_vehicle_mw, const QuasiOpfOptions& options,
                                PowerFlowSolution& verified_out) {
  // A saturation cascade that runs out of supporters means the scaled
  // targets cannot be honoured either, so it fails the probe like a voltage
  // violation would.
  const auto probe = [&](double lambda, ControlOrder& order_out,
                         PowerFlowSolution& flow_out) -> bool {
    std::vector<TssTarget> scaled = targets;
    for (TssTarget& t : scaled)
      if (t.cls == TssClass::RegenLimited) t.i_cc_target_ka *= lambda;
    try {
      Vector alloc = allocate_support(scaled, mats);
      alloc = resolve_saturation(std::move(alloc), scaled, mats, i_s_nd_ka);
      order_out = voltage_references(alloc, mats, line);
    } catch (const InfeasibleError&) {
      return false;
    }
    order_out.lambda = lambda;
    return order_voltages_feasible(order_out, line, solver, p_vehicle_mw, options, flow_out);
  };

  ControlOrder order;
  if (probe(1.0, order, verified_out)) return order;

  bool any_regen = false;
  for (const TssTarget& t : targets) any_regen |= (t.cls == TssClass::RegenLimited);

  PowerFlowSolution lo_flow;
  ControlOrder lo_order;
  if (!any_regen || !probe(0.0, lo_order, lo_flow))
    throw InfeasibleError(
        "voltage windows unsatisfiable even with all regeneration released");

  double lo = 0.0;
  double hi = 1.0;
  while (hi - lo > options.lambda_tol) {
    const double mid = 0.5 * (lo + hi);
    PowerFlowSolution mid_flow;
    ControlOrder mid_order;
    if (probe(mid, mid_order, mid_flow)) {
      lo = mid;
      lo_order = std::move(mid_order);
      lo_flow = std::move(mid_flow);
    } else {
      hi = mid;
    }
  }

  for (int i = 0; i < static_cast<int>(targets.size()); ++i) {
    const TssTarget& t = targets[static_cast<std::size_t>(i)];
    if (t.cls == TssClass::RegenLimited)
      lo_order.curtailment_mw(i) =
          (1.0 - lo_order.lambda) * std::abs(t.i_cc_target_ka) * u_class_kv(i);
  }
  verified_out = lo_flow;
  return lo_order;
}

QuasiOpfResult quasi_opf(const LineModel& line, const StructuralMatrices& mats,
                         const FixedVoltageSolver& solver, const Vector& p_vehicle_mw,
                         const QuasiOpfOptions& options) {
  const int n = line.n_tss();
  Vector u_cmd = Vector::Constant(n, line.u_tss_max_kv);
  PowerFlowSolution sol = solve_constant_power(solver, u_cmd, p_vehicle_mw, options.power_flow);

  QuasiOpfResult result;
  int k = 0;
  while (true) {
    const Decomposition dec = decompose(mats, u_cmd, sol.tss_current_ka);
    const std::vector<TssTarget> targets =
        classify_targets(dec.i_s_nd_ka, u_cmd, line, options.limit_margin_mw);

    PowerFlowSolution verified;
    ControlOrder cand = relax_regeneration(targets, dec.i_s_nd_ka, u_cmd, mats, line, solver,
                                           p_vehicle_mw, options, verified);
    ++k;
    const double delta = (cand.u_s_star_kv - u_cmd).cwiseAbs().maxCoeff();
    u_cmd = cand.u_s_star_kv;
    cand.outer_iterations = k;
    result.order = std::move(cand);
    sol = std::move(verified);

    if (delta < options.outer_tol_kv) {
      const double worst = (sol.tss_power_mw - line.p_lim_mw).maxCoeff();
      if (worst <= options.power_slack_mw || k >= options.max_outer_iterations) {
        result.converged = true;
        break;
      }
      // A limited substation drifted past its cap between iterates; polish.
    } else if (k >= options.max_outer_iterations) {
      result.converged = false;
      break;
    }
    if (k >= options.max_outer_iterations) {
      result.converged = delta < options.outer_tol_kv;
      break;
    }
  }

  result.verified = std::move(sol);
  result.outer_iterations = k;
  result.objective_mw =
      objective_mw(apply_vsc_efficiency(result.verified.tss_power_mw, line.vsc_efficiency),
                   line.p_aux_mw);
  result.loss_mw = result.verified.total_loss_mw;
  return result;
}

QuasiOpfResult quasi_opf(const LineModel& line, const Snapshot& snap,
                         const QuasiOpfOptions& options) {
  const StructuralMatrices mats = structural_matrices(line);
  const FixedVoltageSolver solver(assemble_snapshot(line, snap));
  return quasi_opf(line, mats, solver, solver.network().vehicle_power_mw, options);
}

}  // namespace dctps
