// Scenario ingestion and synthesis: ordered snapshots at a uniform time step.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dctps/line.hpp"
#include "dctps/snapshot.hpp"
#include "dctps/types.hpp"

namespace dctps {

struct Scenario {
  double dt_s = 1.0;
  std::vector<Snapshot> snapshots;     // strictly increasing times, uniform step
  std::vector<std::string> roster;     // vehicle ids seen anywhere in the scenario
  std::string provenance = "loaded";   // "loaded" or "synthesized"
  std::uint64_t seed = 0;

  int n_instants() const { return static_cast<int>(snapshots.size()); }
};

/// Columns: time_s,vehicle_id,position_km,power_mw. Vehicles absent from a
/// timestamp are off-line for that instant. Throws ConfigError with the row
/// number for malformed rows, out-of-range positions, or a non-uniform step.
Scenario load_scenario(const std::string& path, const LineModel& line);

void save_scenario(const Scenario& scenario, const std::string& path);

struct SynthesisParams {
  int n_vehicles = 46;
  double headway_s = 120.0;
  double dwell_s = 35.0;          // mean station stop, jittered per stop
  double accel_power_mw = 5.0;    // tractive envelope during acceleration
  double brake_power_mw = -6.5;   // regenerative envelope during braking
  double cruise_power_mw = 0.05;
  double cruise_speed_kmh = 80.0;
  double dt_s = 1.0;
  double duration_s = 0.0;        // 0 -> one full round trip
  std::uint64_t seed = 1;
};

/// Deterministic timetable: every vehicle shuttles between the termini with
/// trapezoidal speed profiles, stopping at each substation. Phase offsets of
/// one headway populate both directions from the first instant, which keeps
/// the natural-distribution current direction-balanced over a full cycle.
Scenario synthesize_scenario(const LineModel& line, const SynthesisParams& params);

}  // namespace dctps
