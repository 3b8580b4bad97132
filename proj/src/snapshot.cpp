#include "dctps/snapshot.hpp"

#include <algorithm>
#include <cmath>

namespace dctps {

void validate_snapshot(const LineModel& line, const Snapshot& snap) {
  for (const VehicleState& v : snap.vehicles) {
    if (!(v.position_km >= 0.0 && v.position_km <= line.length_km))
      throw ConfigError("vehicle '" + v.id + "' position " + std::to_string(v.position_km) +
                        " km outside [0, " + std::to_string(line.length_km) + "]");
    if (v.power_mw > line.p_veh_tract_max_mw + 1e-12 ||
        v.power_mw < -line.p_veh_regen_max_mw - 1e-12)
      throw ConfigError("vehicle '" + v.id + "' power " + std::to_string(v.power_mw) +
                        " MW outside the configured envelope");
  }
}

namespace {

int nearest_tss(const Vector& positions, double x) {
  const Eigen::Index n = positions.size();
  Eigen::Index lo = 0;
  while (lo + 1 < n && positions(lo + 1) <= x) ++lo;
  if (lo + 1 < n && positions(lo + 1) - x < x - positions(lo)) ++lo;
  return static_cast<int>(lo);
}

}  // namespace

ChainNetwork assemble_snapshot(const LineModel& line, const Snapshot& snap) {
  validate_snapshot(line, snap);

  const int n = line.n_tss();
  const int m = static_cast<int>(snap.vehicles.size());

  ChainNetwork net;
  net.n_tss = n;
  net.n_vehicles = m;
  net.length_km = line.length_km;
  net.nodes.reserve(static_cast<std::size_t>(n + m));
  for (int i = 0; i < n; ++i)
    net.nodes.push_back({ChainNode::Kind::Tss, i, line.positions_km(i)});
  for (int j = 0; j < m; ++j)
    net.nodes.push_back({ChainNode::Kind::Vehicle, j, snap.vehicles[j].position_km});

  std::sort(net.nodes.begin(), net.nodes.end(), [](const ChainNode& a, const ChainNode& b) {
    if (a.position_km != b.position_km) return a.position_km < b.position_km;
    if (a.kind != b.kind) return a.kind == ChainNode::Kind::Tss;
    return a.index < b.index;
  });

  net.tss_node.assign(static_cast<std::size_t>(n), -1);
  net.vehicle_node.assign(static_cast<std::size_t>(m), -1);
  net.vehicle_power_mw.resize(m);
  net.vehicle_position_km.resize(m);
  for (int id = 0; id < n + m; ++id) {
    const ChainNode& node = net.nodes[static_cast<std::size_t>(id)];
    if (node.kind == ChainNode::Kind::Tss) {
      net.tss_node[static_cast<std::size_t>(node.index)] = id;
    } else {
      net.vehicle_node[static_cast<std::size_t>(node.index)] = id;
      net.vehicle_power_mw(node.index) = snap.vehicles[static_cast<std::size_t>(node.index)].power_mw;
      net.vehicle_position_km(node.index) = node.position_km;
    }
  }

  // Coincident nodes share one chain position: a vehicle within the merge
  // tolerance of a substation (or of an earlier vehicle) keeps its own node
  // and hangs off the on-path representative through a floor-resistance tie.
  // Ties sit off the path, so the series resistance between substations is
  // exactly rho times the substation gap.
  std::vector<int> path;
  std::vector<Branch> ties;
  int vehicle_anchor = -1;
  double anchor_pos = 0.0;
  for (int id = 0; id < n + m; ++id) {
    const ChainNode& node = net.nodes[static_cast<std::size_t>(id)];
    if (node.kind == ChainNode::Kind::Tss) {
      path.push_back(id);
      vehicle_anchor = -1;
      continue;
    }
    const int tss = nearest_tss(line.positions_km, node.position_km);
    if (std::abs(node.position_km - line.positions_km(tss)) <= kMergeToleranceKm) {
      ties.push_back({net.tss_node[static_cast<std::size_t>(tss)], id, kResistanceFloorOhm, false});
      continue;
    }
    if (vehicle_anchor >= 0 && node.position_km - anchor_pos <= kMergeToleranceKm) {
      ties.push_back({vehicle_anchor, id, kResistanceFloorOhm, false});
      continue;
    }
    path.push_back(id);
    vehicle_anchor = id;
    anchor_pos = node.position_km;
  }

  net.branches.reserve(path.size() - 1 + ties.size());
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const ChainNode& a = net.nodes[static_cast<std::size_t>(path[k])];
    const ChainNode& b = net.nodes[static_cast<std::size_t>(path[k + 1])];
    const double gap = b.position_km - a.position_km;
    const double rho =
        line.rho_lumped_ohm_km(line.segment_of(0.5 * (a.position_km + b.position_km)));
    net.branches.push_back({path[k], path[k + 1], std::max(rho * gap, kResistanceFloorOhm), true});
  }
  net.branches.insert(net.branches.end(), ties.begin(), ties.end());

  net.conductance = Matrix::Zero(n + m, n + m);
  for (const Branch& br : net.branches) {
    const double g = 1.0 / br.resistance_ohm;
    net.conductance(br.a, br.a) += g;
    net.conductance(br.b, br.b) += g;
    net.conductance(br.a, br.b) -= g;
    net.conductance(br.b, br.a) -= g;
  }
  return net;
}

}  // namespace dctps
