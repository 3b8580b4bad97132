#include "dctps/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "dctps/report.hpp"

namespace dctps {

namespace {

double parse_double(const std::string& field, int row, const char* what) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("scenario row " + std::to_string(row) + ": bad " + what + " '" + field +
                      "'");
  return value;
}

}  // namespace

Scenario load_scenario(const std::string& path, const LineModel& line) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");

  Scenario sc;
  sc.provenance = "loaded";
  std::set<std::string> roster;
  std::string lineText;
  int row = 0;
  bool header_seen = false;
  while (std::getline(in, lineText)) {
    ++row;
    if (lineText.empty() || lineText[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ss(lineText);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!header_seen) {
      if (fields.size() != 4 || fields[0] != "time_s")
        throw ConfigError("scenario row " + std::to_string(row) +
                          ": expected header time_s,vehicle_id,position_km,power_mw");
      header_seen = true;
      continue;
    }
    if (fields.size() != 4)
      throw ConfigError("scenario row " + std::to_string(row) + ": expected 4 columns, got " +
                        std::to_string(fields.size()));
    const double t = parse_double(fields[0], row, "time_s");
    const std::string& id = fields[1];
    const double pos = parse_double(fields[2], row, "position_km");
    const double power = parse_double(fields[3], row, "power_mw");
    if (pos < 0.0 || pos > line.length_km)
      throw ConfigError("scenario row " + std::to_string(row) + ": position " +
                        std::to_string(pos) + " km outside [0, " +
                        std::to_string(line.length_km) + "]");
    if (power > line.p_veh_tract_max_mw + 1e-9 || power < -line.p_veh_regen_max_mw - 1e-9)
      throw ConfigError("scenario row " + std::to_string(row) +
                        ": power outside the configured vehicle envelope");
    if (sc.snapshots.empty() || sc.snapshots.back().time_s != t) {
      if (!sc.snapshots.empty() && t < sc.snapshots.back().time_s)
        throw ConfigError("scenario row " + std::to_string(row) + ": times must be sorted");
      sc.snapshots.push_back({t, {}});
    }
    sc.snapshots.back().vehicles.push_back({id, pos, power});
    roster.insert(id);
  }
  if (!header_seen) throw ConfigError("scenario '" + path + "' is empty");

  if (sc.snapshots.size() >= 2) {
    const double dt = sc.snapshots[1].time_s - sc.snapshots[0].time_s;
    for (std::size_t k = 1; k < sc.snapshots.size(); ++k) {
      const double step = sc.snapshots[k].time_s - sc.snapshots[k - 1].time_s;
      if (std::abs(step - dt) > 1e-9)
        throw ConfigError("scenario: non-uniform time step between t=" +
                          std::to_string(sc.snapshots[k - 1].time_s) + " and t=" +
                          std::to_string(sc.snapshots[k].time_s));
    }
    sc.dt_s = dt;
  }
  sc.roster.assign(roster.begin(), roster.end());
  return sc;
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::string out;
  out.reserve(64 * scenario.snapshots.size());
  out += "time_s,vehicle_id,position_km,power_mw\n";
  char buf[160];
  for (const Snapshot& snap : scenario.snapshots) {
    for (const VehicleState& v : snap.vehicles) {
      std::snprintf(buf, sizeof(buf), "%.3f,%s,%.6f,%.6f\n", snap.time_s, v.id.c_str(),
                    v.position_km, v.power_mw);
      out += buf;
    }
  }
  write_file_atomic(path, out);
}

namespace {

// One inter-station run with a trapezoidal (or triangular) speed profile.
struct Leg {
  double duration_s = 0.0;
  double accel_end_s = 0.0;   // acceleration phase end, relative to leg start
  double cruise_end_s = 0.0;  // cruise phase end
  double distance_km = 0.0;
  double accel = 0.0;         // m/s^2
  double brake = 0.0;
  double peak_speed = 0.0;    // m/s
};

Leg make_leg(double distance_km, double v_max_ms, double accel, double brake) {
  Leg leg;
  leg.distance_km = distance_km;
  leg.accel = accel;
  leg.brake = brake;
  const double d = distance_km * 1000.0;
  const double d_full = v_max_ms * v_max_ms * 0.5 * (1.0 / accel + 1.0 / brake);
  if (d >= d_full) {
    leg.peak_speed = v_max_ms;
    const double t_a = v_max_ms / accel;
    const double t_b = v_max_ms / brake;
    const double t_c = (d - d_full) / v_max_ms;
    leg.accel_end_s = t_a;
    leg.cruise_end_s = t_a + t_c;
    leg.duration_s = t_a + t_c + t_b;
  } else {
    leg.peak_speed = std::sqrt(2.0 * d * accel * brake / (accel + brake));
    leg.accel_end_s = leg.peak_speed / accel;
    leg.cruise_end_s = leg.accel_end_s;
    leg.duration_s = leg.accel_end_s + leg.peak_speed / brake;
  }
  return leg;
}

// Offset within the leg (km) and phase: 0 accel, 1 cruise, 2 brake.
void eval_leg(const Leg& leg, double t, double& offset_km, int& phase) {
  if (t <= leg.accel_end_s) {
    phase = 0;
    offset_km = 0.5 * leg.accel * t * t * 1e-3;
  } else if (t <= leg.cruise_end_s) {
    phase = 1;
    const double d_a = 0.5 * leg.accel * leg.accel_end_s * leg.accel_end_s;
    offset_km = (d_a + leg.peak_speed * (t - leg.accel_end_s)) * 1e-3;
  } else {
    phase = 2;
    const double tb = t - leg.cruise_end_s;
    const double d_a = 0.5 * leg.accel * leg.accel_end_s * leg.accel_end_s;
    const double d_c = leg.peak_speed * (leg.cruise_end_s - leg.accel_end_s);
    offset_km = (d_a + d_c + leg.peak_speed * tb - 0.5 * leg.brake * tb * tb) * 1e-3;
  }
}

// A vehicle's whole round trip: alternating dwell and run segments.
struct Segment {
  double start_s = 0.0;
  double end_s = 0.0;
  bool moving = false;
  double from_km = 0.0;  // dwell position, or leg origin
  int leg = -1;          // index into legs when moving
  bool reverse = false;  // leg traversed in the down direction
};

struct Timetable {
  std::vector<Segment> segments;
  double period_s = 0.0;
};

}  // namespace

Scenario synthesize_scenario(const LineModel& line, const SynthesisParams& params) {
  if (params.n_vehicles < 1) throw ConfigError("synthesize: need at least one vehicle");
  if (params.headway_s <= 0.0 || params.dt_s <= 0.0)
    throw ConfigError("synthesize: headway and time step must be positive");
  if (params.accel_power_mw <= 0.0 || params.accel_power_mw > line.p_veh_tract_max_mw)
    throw ConfigError("synthesize: accel_power_mw outside (0, p_veh_tract_max_mw]");
  if (params.brake_power_mw >= 0.0 || params.brake_power_mw < -line.p_veh_regen_max_mw)
    throw ConfigError("synthesize: brake_power_mw outside [-p_veh_regen_max_mw, 0)");
  if (params.dwell_s < 10.0) throw ConfigError("synthesize: dwell must be at least 10 s");

  const int n = line.n_tss();
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> dwell_jitter(-5.0, 5.0);
  std::uniform_real_distribution<double> power_jitter(0.9, 1.1);
  std::uniform_real_distribution<double> speed_jitter(0.95, 1.05);

  constexpr double kAccel = 0.9;  // m/s^2
  constexpr double kBrake = 1.0;

  std::vector<Timetable> tables(static_cast<std::size_t>(params.n_vehicles));
  std::vector<double> p_acc(static_cast<std::size_t>(params.n_vehicles));
  std::vector<double> p_brk(static_cast<std::size_t>(params.n_vehicles));
  std::vector<std::vector<Leg>> legs(static_cast<std::size_t>(params.n_vehicles));

  for (int v = 0; v < params.n_vehicles; ++v) {
    const double v_max = params.cruise_speed_kmh / 3.6 * speed_jitter(rng);
    p_acc[static_cast<std::size_t>(v)] =
        std::min(params.accel_power_mw * power_jitter(rng), line.p_veh_tract_max_mw);
    p_brk[static_cast<std::size_t>(v)] =
        std::max(params.brake_power_mw * power_jitter(rng), -line.p_veh_regen_max_mw);

    auto& vlegs = legs[static_cast<std::size_t>(v)];
    for (int s = 0; s + 1 < n; ++s)
      vlegs.push_back(
          make_leg(line.positions_km(s + 1) - line.positions_km(s), v_max, kAccel, kBrake));

    Timetable& tt = tables[static_cast<std::size_t>(v)];
    double t = 0.0;
    const auto add_dwell = [&](double pos, double duration) {
      tt.segments.push_back({t, t + duration, false, pos, -1, false});
      t += duration;
    };
    const auto add_leg = [&](int leg, bool reverse) {
      const double from =
          reverse ? line.positions_km(leg + 1) : line.positions_km(leg);
      tt.segments.push_back(
          {t, t + vlegs[static_cast<std::size_t>(leg)].duration_s, true, from, leg, reverse});
      t += vlegs[static_cast<std::size_t>(leg)].duration_s;
    };
    // Up the line with a stop at every substation, turn around, come back.
    for (int s = 0; s + 1 < n; ++s) {
      add_dwell(line.positions_km(s),
                std::max(10.0, params.dwell_s + dwell_jitter(rng)) + (s == 0 ? 30.0 : 0.0));
      add_leg(s, false);
    }
    add_dwell(line.positions_km(n - 1), std::max(10.0, params.dwell_s + dwell_jitter(rng)) + 30.0);
    for (int s = n - 2; s >= 0; --s) {
      add_leg(s, true);
      if (s > 0)
        add_dwell(line.positions_km(s), std::max(10.0, params.dwell_s + dwell_jitter(rng)));
    }
    tt.period_s = t;
  }

  double min_period = tables.front().period_s;
  for (const Timetable& tt : tables) min_period = std::min(min_period, tt.period_s);
  if (static_cast<double>(params.n_vehicles) * params.headway_s > min_period)
    throw ConfigError("synthesize: headway too small for the roster (phases wrap: " +
                      std::to_string(params.n_vehicles) + " x " +
                      std::to_string(params.headway_s) + " s exceeds the " +
                      std::to_string(min_period) + " s round trip)");

  const double duration = params.duration_s > 0.0 ? params.duration_s : min_period;
  const int instants = static_cast<int>(std::floor(duration / params.dt_s)) + 1;

  Scenario sc;
  sc.dt_s = params.dt_s;
  sc.provenance = "synthesized";
  sc.seed = params.seed;
  sc.snapshots.reserve(static_cast<std::size_t>(instants));

  char idbuf[32];
  for (int v = 0; v < params.n_vehicles; ++v) {
    std::snprintf(idbuf, sizeof(idbuf), "v%02d", v + 1);
    sc.roster.emplace_back(idbuf);
  }

  for (int k = 0; k < instants; ++k) {
    Snapshot snap;
    snap.time_s = k * params.dt_s;
    for (int v = 0; v < params.n_vehicles; ++v) {
      const Timetable& tt = tables[static_cast<std::size_t>(v)];
      double local = std::fmod(snap.time_s + v * params.headway_s, tt.period_s);
      // Locate the active segment (linear scan; tables are small).
      const Segment* seg = &tt.segments.back();
      for (const Segment& s : tt.segments) {
        if (local < s.end_s) {
          seg = &s;
          break;
        }
      }
      double pos = seg->from_km;
      double power = 0.0;
      if (seg->moving) {
        const Leg& leg = legs[static_cast<std::size_t>(v)][static_cast<std::size_t>(seg->leg)];
        double offset = 0.0;
        int phase = 0;
        eval_leg(leg, local - seg->start_s, offset, phase);
        pos = seg->reverse ? seg->from_km - offset : seg->from_km + offset;
        power = phase == 0   ? p_acc[static_cast<std::size_t>(v)]
                : phase == 1 ? params.cruise_power_mw
                             : p_brk[static_cast<std::size_t>(v)];
      }
      pos = std::clamp(pos, 0.0, line.length_km);
      snap.vehicles.push_back({sc.roster[static_cast<std::size_t>(v)], pos, power});
    }
    sc.snapshots.push_back(std::move(snap));
  }
  return sc;
}

}  // namespace dctps
