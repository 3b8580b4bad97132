// Per-instant system state and its electrical network.
#pragma once

#include <string>
#include <vector>

#include "dctps/line.hpp"
#include "dctps/types.hpp"

namespace dctps {

struct VehicleState {
  std::string id;
  double position_km = 0.0;
  double power_mw = 0.0;  // + consuming, - regenerating
};

struct Snapshot {
  double time_s = 0.0;
  std::vector<VehicleState> vehicles;
};

struct ChainNode {
  enum class Kind { Tss, Vehicle };
  Kind kind = Kind::Tss;
  int index = 0;  // substation index or vehicle index within the snapshot
  double position_km = 0.0;
};

struct Branch {
  int a = 0;
  int b = 0;
  double resistance_ohm = 0.0;
  bool on_path = true;  // false for the short tie of a coincident node
};

/// One snapshot assembled as an ordered node chain. Nodes that coincide
/// within the merge tolerance share a chain position: one representative
/// stays on the path, the others attach to it through a floor-resistance
/// tie so the series resistance between substations stays exact.
struct ChainNetwork {
  std::vector<ChainNode> nodes;  // sorted by position, substations first on ties
  std::vector<Branch> branches;  // path branches in position order, then ties
  Matrix conductance;            // (N+M)x(N+M) weighted Laplacian, 1/ohm
  std::vector<int> tss_node;     // node id per substation
  std::vector<int> vehicle_node; // node id per vehicle (snapshot order)
  Vector vehicle_power_mw;       // per vehicle (snapshot order)
  Vector vehicle_position_km;    // per vehicle (snapshot order)
  int n_tss = 0;
  int n_vehicles = 0;
  double length_km = 0.0;
};

inline constexpr double kMergeToleranceKm = 1e-4;
inline constexpr double kResistanceFloorOhm = 1e-6;

/// Throws ConfigError for positions outside [0, L] or powers outside the
/// configured vehicle envelope.
void validate_snapshot(const LineModel& line, const Snapshot& snap);

ChainNetwork assemble_snapshot(const LineModel& line, const Snapshot& snap);

}  // namespace dctps
