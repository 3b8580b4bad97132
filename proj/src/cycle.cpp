#include "dctps/cycle.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

namespace dctps {

Method method_from_string(const std::string& name) {
  if (name == "baseline") return Method::Baseline;
  if (name == "quasi") return Method::Quasi;
  if (name == "ref") return Method::Ref;
  throw ConfigError("unknown method '" + name + "' (expected baseline, quasi, or ref)");
}

std::string method_name(Method method) {
  switch (method) {
    case Method::Baseline: return "baseline";
    case Method::Quasi: return "quasi";
    case Method::Ref: return "ref";
  }
  return "?";
}

namespace {

InstantRecord solve_instant(const LineModel& line, const Snapshot& snap, Method method,
                            const RunOptions& options) {
  InstantRecord rec;
  rec.time_s = snap.time_s;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  double regen = 0.0;
  for (const VehicleState& v : snap.vehicles) regen += std::max(-v.power_mw, 0.0);
  rec.regen_mw = regen;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    PowerFlowSolution sol;
    if (method == Method::Baseline) {
      const FixedVoltageSolver solver(assemble_snapshot(line, snap));
      sol = solve_constant_power(solver, Vector::Constant(line.n_tss(), line.u_tss_max_kv),
                                 solver.network().vehicle_power_mw, options.quasi.power_flow);
      rec.iterations = sol.iterations;
    } else if (method == Method::Quasi) {
      const QuasiOpfResult r = quasi_opf(line, snap, options.quasi);
      sol = r.verified;
      rec.iterations = r.outer_iterations;
      rec.curtailment_mw = r.order.curtailment_mw.sum();
    } else {
      const OpfResult r = solve_opf(line, snap, options.opf);
      sol = r.solution;
      rec.iterations = r.iterations;
    }
    rec.solve_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const Vector p_ac = apply_vsc_efficiency(sol.tss_power_mw, line.vsc_efficiency);
    rec.objective_mw = objective_mw(p_ac, line.p_aux_mw);
    rec.exported_mw = (-(p_ac + line.p_aux_mw)).cwiseMax(0.0).sum();
    rec.loss_mw = sol.total_loss_mw;
    rec.max_tss_power_mw = sol.tss_power_mw.maxCoeff();
    rec.tss_v_min_kv = sol.tss_voltage_kv.minCoeff();
    rec.tss_v_max_kv = sol.tss_voltage_kv.maxCoeff();
    rec.max_power_mismatch_mw = sol.max_power_mismatch_mw;
    if (sol.vehicle_voltage_kv.size() > 0) {
      rec.veh_v_min_kv = sol.vehicle_voltage_kv.minCoeff();
      rec.veh_v_max_kv = sol.vehicle_voltage_kv.maxCoeff();
      double nb = nan;
      for (Eigen::Index j = 0; j < sol.vehicle_voltage_kv.size(); ++j)
        if (snap.vehicles[static_cast<std::size_t>(j)].power_mw >= 0.0)
          nb = std::isnan(nb) ? sol.vehicle_voltage_kv(j) : std::max(nb, sol.vehicle_voltage_kv(j));
      rec.max_nonbraking_veh_v_kv = nb;
    } else {
      rec.veh_v_min_kv = rec.veh_v_max_kv = rec.max_nonbraking_veh_v_kv = nan;
    }
  } catch (const std::exception& e) {
    rec.feasible = false;
    rec.error = e.what();
    rec.solve_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return rec;
}

void fill_time_stats(std::vector<double> times, double& mean, double& median, double& p95) {
  if (times.empty()) {
    mean = median = p95 = 0.0;
    return;
  }
  mean = 0.0;
  for (double t : times) mean += t;
  mean /= static_cast<double>(times.size());
  std::sort(times.begin(), times.end());
  median = times[times.size() / 2];
  p95 = times[std::min(times.size() - 1, static_cast<std::size_t>(
                                             std::ceil(0.95 * times.size())) )];
}

}  // namespace

CycleResult run_cycle(const LineModel& line, const Scenario& scenario, Method method,
                      const RunOptions& options) {
  const int count = scenario.n_instants();
  CycleResult result;
  result.records.resize(static_cast<std::size_t>(count));

  int workers = options.workers > 0 ? options.workers
                                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, count > 0 ? count : 1));

  std::atomic<int> next{0};
  const auto worker = [&]() {
    while (true) {
      const int k = next.fetch_add(1);
      if (k >= count) break;
      result.records[static_cast<std::size_t>(k)] =
          solve_instant(line, scenario.snapshots[static_cast<std::size_t>(k)], method, options);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  // Serial reduction in instant order keeps the metrics independent of the
  // worker count.
  CycleMetrics& m = result.metrics;
  m.instants = count;
  m.tss_v_min_kv = m.veh_v_min_kv = std::numeric_limits<double>::infinity();
  m.tss_v_max_kv = m.veh_v_max_kv = -std::numeric_limits<double>::infinity();
  m.max_vsc_power_mw = -std::numeric_limits<double>::infinity();
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(count));
  const double to_kwh = scenario.dt_s / 3.6;  // MW * s -> kWh
  for (const InstantRecord& rec : result.records) {
    times.push_back(rec.solve_time_s);
    if (!rec.feasible) {
      ++m.infeasible;
      continue;
    }
    m.energy_cost_kwh += rec.objective_mw * to_kwh;
    m.regen_total_kwh += rec.regen_mw * to_kwh;
    m.regen_exported_kwh += rec.exported_mw * to_kwh;
    m.tss_v_min_kv = std::min(m.tss_v_min_kv, rec.tss_v_min_kv);
    m.tss_v_max_kv = std::max(m.tss_v_max_kv, rec.tss_v_max_kv);
    if (!std::isnan(rec.veh_v_min_kv)) {
      m.veh_v_min_kv = std::min(m.veh_v_min_kv, rec.veh_v_min_kv);
      m.veh_v_max_kv = std::max(m.veh_v_max_kv, rec.veh_v_max_kv);
    }
    m.max_vsc_power_mw = std::max(m.max_vsc_power_mw, rec.max_tss_power_mw);
    if (rec.iterations >= static_cast<int>(m.iteration_histogram.size()))
      m.iteration_histogram.resize(static_cast<std::size_t>(rec.iterations) + 1, 0);
    ++m.iteration_histogram[static_cast<std::size_t>(rec.iterations)];
  }
  if (m.regen_total_kwh > 0.0) {
    m.recuperation_rate = (m.regen_total_kwh - m.regen_exported_kwh) / m.regen_total_kwh;
    m.recuperation_defined = true;
  }
  fill_time_stats(std::move(times), m.mean_solve_time_s, m.median_solve_time_s,
                  m.p95_solve_time_s);
  return result;
}

double BenchReport::speedup(Method fast, Method slow) const {
  const BenchSeries* a = nullptr;
  const BenchSeries* b = nullptr;
  for (const BenchSeries& s : series) {
    if (s.method == fast) a = &s;
    if (s.method == slow) b = &s;
  }
  if (a == nullptr || b == nullptr || a->mean_s <= 0.0)
    return std::numeric_limits<double>::quiet_NaN();
  return b->mean_s / a->mean_s;
}

BenchReport benchmark(const LineModel& line, const Scenario& scenario,
                      const std::vector<Method>& methods, const RunOptions& options) {
  if (methods.empty()) throw ConfigError("benchmark: need at least one method");
  BenchReport report;
  for (const Method method : methods) {
    if (!scenario.snapshots.empty()) {
      // Warm-up instant, excluded from the timings.
      solve_instant(line, scenario.snapshots.front(), method, options);
    }
    const CycleResult run = run_cycle(line, scenario, method, options);
    BenchSeries s;
    s.method = method;
    s.time_s.reserve(run.records.size());
    for (const InstantRecord& rec : run.records) s.time_s.push_back(rec.solve_time_s);
    fill_time_stats(s.time_s, s.mean_s, s.median_s, s.p95_s);
    s.iteration_histogram = run.metrics.iteration_histogram;
    report.series.push_back(std::move(s));
  }
  return report;
}

}  // namespace dctps
