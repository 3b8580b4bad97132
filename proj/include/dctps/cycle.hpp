// Whole-cycle replay and the metric/benchmark layer.
#pragma once

#include <string>
#include <vector>

#include "dctps/quasiopf.hpp"
#include "dctps/refopf.hpp"
#include "dctps/scenario.hpp"
#include "dctps/types.hpp"

namespace dctps {

enum class Method { Baseline, Quasi, Ref };

Method method_from_string(const std::string& name);
std::string method_name(Method method);

struct InstantRecord {
  double time_s = 0.0;
  bool feasible = true;
  double objective_mw = 0.0;
  double loss_mw = 0.0;
  double solve_time_s = 0.0;
  int iterations = 0;
  double max_tss_power_mw = 0.0;
  double tss_v_min_kv = 0.0, tss_v_max_kv = 0.0;
  double veh_v_min_kv = 0.0, veh_v_max_kv = 0.0;        // NaN when no vehicles
  double max_nonbraking_veh_v_kv = 0.0;                  // NaN when none
  double regen_mw = 0.0;       // total regenerating vehicle power
  double exported_mw = 0.0;    // power pushed back to the AC utility
  double curtailment_mw = 0.0;
  double max_power_mismatch_mw = 0.0;
  std::string error;
};

struct CycleMetrics {
  int instants = 0;
  int infeasible = 0;
  double energy_cost_kwh = 0.0;
  double regen_total_kwh = 0.0;
  double regen_exported_kwh = 0.0;
  double recuperation_rate = 0.0;
  bool recuperation_defined = false;  // false when no regeneration occurred
  double tss_v_min_kv = 0.0, tss_v_max_kv = 0.0;
  double veh_v_min_kv = 0.0, veh_v_max_kv = 0.0;
  double max_vsc_power_mw = 0.0;
  double mean_solve_time_s = 0.0, median_solve_time_s = 0.0, p95_solve_time_s = 0.0;
  std::vector<int> iteration_histogram;  // index = iteration count
};

struct RunOptions {
  int workers = 0;  // 0 -> hardware concurrency
  QuasiOpfOptions quasi;
  OpfOptions opf;
};

struct CycleResult {
  CycleMetrics metrics;
  std::vector<InstantRecord> records;
};

/// Solves every instant with the chosen method. Per-instant failures are
/// recorded and excluded from the aggregates, never fatal. The reduction is
/// performed serially in instant order, so results do not depend on the
/// worker count.
CycleResult run_cycle(const LineModel& line, const Scenario& scenario, Method method,
                      const RunOptions& options = {});

struct BenchSeries {
  Method method = Method::Quasi;
  std::vector<double> time_s;  // per instant, warm
  double mean_s = 0.0, median_s = 0.0, p95_s = 0.0;
  std::vector<int> iteration_histogram;
};

struct BenchReport {
  std::vector<BenchSeries> series;
  /// mean time of b divided by mean time of a.
  double speedup(Method fast, Method slow) const;
};

BenchReport benchmark(const LineModel& line, const Scenario& scenario,
                      const std::vector<Method>& methods, const RunOptions& options = {});

}  // namespace dctps
