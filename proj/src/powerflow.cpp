#include "dctps/powerflow.hpp"

#include <algorithm>
#include <cmath>

namespace dctps {

FixedVoltageSolver::FixedVoltageSolver(ChainNetwork net) : net_(std::move(net)) {
  const int n = net_.n_tss;
  const int m = net_.n_vehicles;
  l_tt_.resize(n, n);
  l_tf_.resize(n, m);
  l_ft_.resize(m, n);
  l_ff_.resize(m, m);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k)
      l_tt_(i, k) = net_.conductance(net_.tss_node[static_cast<std::size_t>(i)],
                                     net_.tss_node[static_cast<std::size_t>(k)]);
    for (int j = 0; j < m; ++j) {
      l_tf_(i, j) = net_.conductance(net_.tss_node[static_cast<std::size_t>(i)],
                                     net_.vehicle_node[static_cast<std::size_t>(j)]);
      l_ft_(j, i) = l_tf_(i, j);
    }
  }
  for (int j = 0; j < m; ++j)
    for (int k = 0; k < m; ++k)
      l_ff_(j, k) = net_.conductance(net_.vehicle_node[static_cast<std::size_t>(j)],
                                     net_.vehicle_node[static_cast<std::size_t>(k)]);
  if (m > 0) {
    vehicle_factor_.compute(l_ff_);
    if (vehicle_factor_.info() != Eigen::Success)
      throw ConfigError("singular vehicle block in the chain network");
  }
}

void FixedVoltageSolver::solve_reduced(const Vector& u_tss_kv, const Vector& i_draw_ka,
                                       Vector& u_vehicle_kv, Vector& i_tss_ka) const {
  const int m = net_.n_vehicles;
  if (m > 0) {
    u_vehicle_kv.noalias() = -(l_ft_ * u_tss_kv);
    u_vehicle_kv -= i_draw_ka;
    vehicle_factor_.solveInPlace(u_vehicle_kv);
    i_tss_ka.noalias() = l_tt_ * u_tss_kv;
    i_tss_ka.noalias() += l_tf_ * u_vehicle_kv;
  } else {
    u_vehicle_kv.resize(0);
    i_tss_ka.noalias() = l_tt_ * u_tss_kv;
  }
}

PowerFlowSolution FixedVoltageSolver::solve(const Vector& u_tss_kv,
                                            const Vector& i_draw_ka) const {
  const int n = net_.n_tss;
  const int m = net_.n_vehicles;
  PowerFlowSolution out;
  out.tss_voltage_kv = u_tss_kv;
  out.vehicle_current_ka = i_draw_ka;
  solve_reduced(u_tss_kv, i_draw_ka, out.vehicle_voltage_kv, out.tss_current_ka);
  out.tss_power_mw = u_tss_kv.cwiseProduct(out.tss_current_ka);
  out.vehicle_power_mw = out.vehicle_voltage_kv.cwiseProduct(i_draw_ka);

  out.node_voltage_kv.resize(n + m);
  for (int i = 0; i < n; ++i)
    out.node_voltage_kv(net_.tss_node[static_cast<std::size_t>(i)]) = u_tss_kv(i);
  for (int j = 0; j < m; ++j)
    out.node_voltage_kv(net_.vehicle_node[static_cast<std::size_t>(j)]) =
        out.vehicle_voltage_kv(j);

  double loss = 0.0;
  for (const Branch& br : net_.branches) {
    const double du = out.node_voltage_kv(br.a) - out.node_voltage_kv(br.b);
    loss += du * du / br.resistance_ohm;
  }
  out.total_loss_mw = loss;
  out.iterations = 1;
  return out;
}

Vector FixedVoltageSolver::interpolate_vehicle_voltages(const Vector& u_tss_kv) const {
  const int m = net_.n_vehicles;
  const Vector& pos = net_.vehicle_position_km;
  Vector u(m);
  const int n = net_.n_tss;
  for (int j = 0; j < m; ++j) {
    const double x = pos(j);
    int i = 0;
    while (i + 1 < n &&
           net_.nodes[static_cast<std::size_t>(net_.tss_node[static_cast<std::size_t>(i + 1)])]
                   .position_km <= x)
      ++i;
    const double xa =
        net_.nodes[static_cast<std::size_t>(net_.tss_node[static_cast<std::size_t>(i)])].position_km;
    if (x <= xa || i + 1 >= n) {
      u(j) = u_tss_kv(std::min(i, n - 1));
      continue;
    }
    const double xb =
        net_.nodes[static_cast<std::size_t>(net_.tss_node[static_cast<std::size_t>(i + 1)])]
            .position_km;
    const double w = (x - xa) / (xb - xa);
    u(j) = (1.0 - w) * u_tss_kv(i) + w * u_tss_kv(i + 1);
  }
  return u;
}

PowerFlowSolution solve_fixed(const FixedVoltageSolver& solver, const Vector& u_tss_kv,
                              const Vector& i_draw_ka) {
  return solver.solve(u_tss_kv, i_draw_ka);
}

PowerFlowSolution solve_constant_power(const FixedVoltageSolver& solver, const Vector& u_tss_kv,
                                       const Vector& p_vehicle_mw,
                                       const PowerFlowOptions& options) {
  const int m = solver.n_vehicles();
  Vector u_veh = solver.interpolate_vehicle_voltages(u_tss_kv);
  Vector i_draw = Vector::Zero(m);
  Vector i_tss(solver.n_tss());
  Vector u_next(m);

  double mismatch = 0.0;
  double prev_mismatch = std::numeric_limits<double>::infinity();
  int growth_streak = 0;
  int iterations = 0;
  bool converged = false;

  for (int k = 1; k <= options.max_iterations; ++k) {
    for (int j = 0; j < m; ++j) {
      if (u_veh(j) <= 1e-6)
        throw InfeasibleError("vehicle voltage collapsed during the constant-power iteration");
      i_draw(j) = p_vehicle_mw(j) / u_veh(j);
    }
    solver.solve_reduced(u_tss_kv, i_draw, u_next, i_tss);

    mismatch = 0.0;
    for (int j = 0; j < m; ++j) {
      if (u_next(j) <= 0.0 || u_next(j) >= options.voltage_ceiling_kv)
        throw InfeasibleError("vehicle voltage left the admissible band; load not transferable");
      mismatch = std::max(mismatch, std::abs(u_next(j) * i_draw(j) - p_vehicle_mw(j)));
    }
    u_veh = u_next;
    iterations = k;
    if (mismatch < options.power_tol_mw) {
      converged = true;
      break;
    }
    if (mismatch > prev_mismatch) {
      if (++growth_streak >= 5)
        throw InfeasibleError("constant-power iteration diverging; load not transferable");
    } else {
      growth_streak = 0;
    }
    prev_mismatch = mismatch;
  }

  PowerFlowSolution out = solver.solve(u_tss_kv, i_draw);
  out.converged = converged;
  out.iterations = iterations;
  out.max_power_mismatch_mw = mismatch;
  return out;
}

double objective_mw(const Vector& p_tss_mw, const Vector& p_aux_mw) {
  if (p_tss_mw.size() != p_aux_mw.size())
    throw ConfigError("objective: substation power and auxiliary load lengths differ");
  return (p_tss_mw + p_aux_mw).cwiseMax(0.0).sum();
}

Vector apply_vsc_efficiency(const Vector& p_tss_mw, double efficiency) {
  Vector out(p_tss_mw.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out(i) = p_tss_mw(i) > 0.0 ? p_tss_mw(i) / efficiency : p_tss_mw(i) * efficiency;
  return out;
}

}  // namespace dctps
