#include "dctps/superposition.hpp"

#include <cmath>

namespace dctps {

Decomposition decompose(const StructuralMatrices& mats, const Vector& u_tss_kv,
                        const Vector& i_tss_ka) {
  const int n = mats.n_tss();
  if (u_tss_kv.size() != n || i_tss_ka.size() != n)
    throw ConfigError("decompose: vector lengths do not match the substation count");

  Decomposition d;
  d.u_cm_kv = u_tss_kv(n - 1);
  d.u_dm_kv = u_tss_kv.array() - d.u_cm_kv;
  d.u_dm_kv(n - 1) = 0.0;
  d.u_b_cc_kv.noalias() = mats.difference * d.u_dm_kv;
  d.i_c_cc_ka = mats.branch_conductance.cwiseProduct(d.u_b_cc_kv);
  d.i_s_cc_ka.noalias() = mats.incidence * d.i_c_cc_ka;
  d.i_s_nd_ka = i_tss_ka - d.i_s_cc_ka;
  d.u_c_cc_kv = d.u_b_cc_kv.cwiseProduct(
      mats.catenary_resistance_ohm.cwiseQuotient(mats.branch_resistance_ohm));
  d.u_r_cc_kv = d.u_b_cc_kv - d.u_c_cc_kv;
  return d;
}

double cc_loss_mw(const Decomposition& dec, const StructuralMatrices& mats) {
  const double branch_form =
      dec.i_c_cc_ka.cwiseProduct(dec.i_c_cc_ka).dot(mats.branch_resistance_ohm);
  const double quadratic_form = dec.i_s_cc_ka.dot(mats.loss_quadratic * dec.i_s_cc_ka);
  const double tol = 1e-9 * std::max(std::abs(branch_form), 1e-9);
  if (std::abs(branch_form - quadratic_form) > tol)
    throw std::logic_error("coordinated-control loss identity violated");
  return branch_form;
}

SubsystemSolutions solve_subsystems(const FixedVoltageSolver& solver, const Vector& u_tss_kv,
                                    const Vector& i_draw_ka) {
  const int n = solver.n_tss();
  const double u_cm = u_tss_kv(n - 1);
  SubsystemSolutions out;
  out.natural = solver.solve(Vector::Constant(n, u_cm), i_draw_ka);
  out.coordinated = solver.solve(u_tss_kv.array() - u_cm, Vector::Zero(solver.n_vehicles()));
  return out;
}

namespace {

// Rightward current on each on-path interval of a solved network state.
void path_currents(const ChainNetwork& net, const Vector& node_voltage_kv, Vector& out) {
  Eigen::Index k = 0;
  for (const Branch& br : net.branches) {
    if (!br.on_path) break;  // ties are appended after the path branches
    out(k++) = (node_voltage_kv(br.a) - node_voltage_kv(br.b)) / br.resistance_ohm;
  }
}

}  // namespace

double CurrentProfile::sample(const Vector& series, double x_km) const {
  Eigen::Index lo = 0;
  Eigen::Index hi = breaks_km.size() - 1;
  if (x_km <= breaks_km(0)) return series(0);
  if (x_km >= breaks_km(hi)) return series(series.size() - 1);
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (breaks_km(mid) <= x_km ? lo : hi) = mid;
  }
  return series(lo);
}

CurrentProfile current_profile(const FixedVoltageSolver& solver, const Vector& u_tss_kv,
                               const Vector& i_draw_ka) {
  const ChainNetwork& net = solver.network();
  const PowerFlowSolution original = solver.solve(u_tss_kv, i_draw_ka);
  const SubsystemSolutions subs = solve_subsystems(solver, u_tss_kv, i_draw_ka);

  Eigen::Index n_path = 0;
  for (const Branch& br : net.branches)
    if (br.on_path) ++n_path;

  CurrentProfile p;
  // Intervals: [0, first node), the n_path branch spans, [last node, L].
  p.breaks_km.resize(n_path + 3);
  p.total_ka = Vector::Zero(n_path + 2);
  p.natural_ka = Vector::Zero(n_path + 2);
  p.coordinated_ka = Vector::Zero(n_path + 2);

  p.breaks_km(0) = 0.0;
  Eigen::Index k = 1;
  for (const Branch& br : net.branches) {
    if (!br.on_path) break;
    p.breaks_km(k++) = net.nodes[static_cast<std::size_t>(br.a)].position_km;
  }
  // Last on-path node position, then the line end.
  const Branch& last = net.branches[static_cast<std::size_t>(n_path - 1)];
  p.breaks_km(k++) = net.nodes[static_cast<std::size_t>(last.b)].position_km;
  p.breaks_km(k) = std::max(p.breaks_km(k - 1), net.length_km);

  Vector seg(n_path);
  path_currents(net, original.node_voltage_kv, seg);
  p.total_ka.segment(1, n_path) = seg;
  path_currents(net, subs.natural.node_voltage_kv, seg);
  p.natural_ka.segment(1, n_path) = seg;
  path_currents(net, subs.coordinated.node_voltage_kv, seg);
  p.coordinated_ka.segment(1, n_path) = seg;

  for (const Branch& br : net.branches) {
    const auto du = [&](const PowerFlowSolution& s) {
      return s.node_voltage_kv(br.a) - s.node_voltage_kv(br.b);
    };
    const double g = 1.0 / br.resistance_ohm;
    const double d_tot = du(original);
    const double d_nd = du(subs.natural);
    const double d_cc = du(subs.coordinated);
    p.loss_total_mw += d_tot * d_tot * g;
    p.loss_natural_mw += d_nd * d_nd * g;
    p.loss_coordinated_mw += d_cc * d_cc * g;
    p.loss_cross_mw += 2.0 * d_nd * d_cc * g;
  }
  return p;
}

NdStatistics nd_profile_statistics(const std::vector<CurrentProfile>& series,
                                   const Vector& sample_km) {
  if (series.empty()) throw ConfigError("nd_profile_statistics: empty profile series");
  NdStatistics st;
  st.sample_km = sample_km;
  st.mean_ka = Vector::Zero(sample_km.size());
  st.rms_ka = Vector::Zero(sample_km.size());
  for (const CurrentProfile& p : series) {
    for (Eigen::Index i = 0; i < sample_km.size(); ++i) {
      const double v = p.natural_at(sample_km(i));
      st.mean_ka(i) += v;
      st.rms_ka(i) += v * v;
    }
    st.mean_total_loss_mw += p.loss_total_mw;
    st.mean_natural_loss_mw += p.loss_natural_mw;
    st.mean_coordinated_loss_mw += p.loss_coordinated_mw;
    st.mean_cross_loss_mw += p.loss_cross_mw;
  }
  const double t = static_cast<double>(series.size());
  st.mean_ka /= t;
  st.rms_ka = (st.rms_ka / t).cwiseSqrt();
  st.mean_total_loss_mw /= t;
  st.mean_natural_loss_mw /= t;
  st.mean_coordinated_loss_mw /= t;
  st.mean_cross_loss_mw /= t;
  return st;
}

Vector segment_midpoints(const LineModel& line) {
  const int n = line.n_tss();
  Vector mid(n - 1);
  for (int i = 0; i < n - 1; ++i)
    mid(i) = 0.5 * (line.positions_km(i) + line.positions_km(i + 1));
  return mid;
}

}  // namespace dctps
