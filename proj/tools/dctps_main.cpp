// Command-line front end: scenario generation, single-snapshot solves,
// decomposition dumps, full-cycle runs, and benchmarks.
//
// Exit codes: 0 success, 1 bad input or I/O, 2 infeasible snapshot.
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "dctps/cycle.hpp"
#include "dctps/line.hpp"
#include "dctps/quasiopf.hpp"
#include "dctps/refopf.hpp"
#include "dctps/report.hpp"
#include "dctps/scenario.hpp"
#include "dctps/superposition.hpp"

namespace {

using namespace dctps;

constexpr const char* kSnapshotSchema = "# dctps-snapshot-v1";
constexpr const char* kDecomposeSchema = "# dctps-decompose-v1";
constexpr const char* kMetricsSchema = "# dctps-metrics-v1";
constexpr const char* kInstantsSchema = "# dctps-instants-v1";
constexpr const char* kBenchSchema = "# dctps-bench-v1";

struct CommonArgs {
  std::string config;
  std::string scenario;
  std::string out = ".";
  std::vector<std::string> methods{"quasi"};
  int workers = 0;
  double time_s = std::numeric_limits<double>::quiet_NaN();
  double pf_tol_kw = 1.0;
  double outer_tol_v = 0.1;
  int max_outer = 10;
  double limit_margin_kw = 0.5;
  std::uint64_t seed = 1;
  bool synthesize = false;
  SynthesisParams synth;
};

RunOptions run_options(const CommonArgs& args) {
  RunOptions opts;
  opts.workers = args.workers;
  opts.quasi.power_flow.power_tol_mw = args.pf_tol_kw * 1e-3;
  opts.quasi.outer_tol_kv = args.outer_tol_v * 1e-3;
  opts.quasi.max_outer_iterations = args.max_outer;
  opts.quasi.limit_margin_mw = args.limit_margin_kw * 1e-3;
  return opts;
}

Scenario obtain_scenario(const CommonArgs& args, const LineModel& line) {
  if (args.synthesize == args.scenario.empty()) {
    // exactly one source must be set
    if (args.synthesize)
      throw ConfigError("give either --scenario or --synthesize, not both");
    throw ConfigError("no scenario source: give --scenario FILE or --synthesize");
  }
  if (args.synthesize) {
    SynthesisParams p = args.synth;
    p.seed = args.seed;
    return synthesize_scenario(line, p);
  }
  return load_scenario(args.scenario, line);
}

const Snapshot& select_snapshot(const Scenario& scenario, double time_s) {
  if (scenario.snapshots.empty()) throw ConfigError("scenario has no instants");
  if (std::isnan(time_s)) {
    if (scenario.snapshots.size() != 1)
      throw ConfigError("scenario has " + std::to_string(scenario.snapshots.size()) +
                        " instants; select one with --time");
    return scenario.snapshots.front();
  }
  const Snapshot* best = &scenario.snapshots.front();
  for (const Snapshot& s : scenario.snapshots)
    if (std::abs(s.time_s - time_s) < std::abs(best->time_s - time_s)) best = &s;
  return *best;
}

std::string output_path(const CommonArgs& args, const std::string& name) {
  std::filesystem::create_directories(args.out);
  return (std::filesystem::path(args.out) / name).string();
}

struct SnapshotReport {
  Vector u_s_kv, i_s_nd_ka, i_s_cc_ka, p_s_mw, curtailment_mw;
  double objective_mw = 0.0, loss_mw = 0.0;
  int iterations = 0;
};

SnapshotReport solve_snapshot(const LineModel& line, const Snapshot& snap, Method method,
                              const RunOptions& opts) {
  const StructuralMatrices mats = structural_matrices(line);
  const FixedVoltageSolver solver(assemble_snapshot(line, snap));
  const Vector& p_v = solver.network().vehicle_power_mw;

  SnapshotReport rep;
  PowerFlowSolution sol;
  rep.curtailment_mw = Vector::Zero(line.n_tss());
  if (method == Method::Baseline) {
    sol = solve_constant_power(solver, Vector::Constant(line.n_tss(), line.u_tss_max_kv), p_v,
                               opts.quasi.power_flow);
    rep.iterations = sol.iterations;
  } else if (method == Method::Quasi) {
    const QuasiOpfResult r = quasi_opf(line, mats, solver, p_v, opts.quasi);
    sol = r.verified;
    rep.iterations = r.outer_iterations;
    rep.curtailment_mw = r.order.curtailment_mw;
  } else {
    const OpfResult r = solve_opf(line, solver, p_v, opts.opf);
    sol = r.solution;
    rep.iterations = r.iterations;
  }
  const Decomposition dec = decompose(mats, sol.tss_voltage_kv, sol.tss_current_ka);
  rep.u_s_kv = sol.tss_voltage_kv;
  rep.i_s_nd_ka = dec.i_s_nd_ka;
  rep.i_s_cc_ka = dec.i_s_cc_ka;
  rep.p_s_mw = sol.tss_power_mw;
  rep.objective_mw =
      objective_mw(apply_vsc_efficiency(sol.tss_power_mw, line.vsc_efficiency), line.p_aux_mw);
  rep.loss_mw = sol.total_loss_mw;
  return rep;
}

int cmd_snapshot(const CommonArgs& args) {
  const LineModel line = build_line(LineConfig::from_json_file(args.config));
  const Scenario scenario = obtain_scenario(args, line);
  const Snapshot& snap = select_snapshot(scenario, args.time_s);
  const RunOptions opts = run_options(args);

  std::vector<SnapshotReport> reports;
  for (const std::string& name : args.methods) {
    const Method method = method_from_string(name);
    const SnapshotReport rep = solve_snapshot(line, snap, method, opts);

    std::ostringstream csv;
    csv << kSnapshotSchema << "\n";
    csv << "# line=" << line.name << " geometry=synthetic-or-configured t=" << snap.time_s
        << " method=" << name << "\n";
    csv << "tss,position_km,u_s_star_kv,i_s_nd_ka,i_s_cc_star_ka,p_s_mw,curtailment_mw\n";
    for (int i = 0; i < line.n_tss(); ++i) {
      csv << (i + 1) << ',' << format_double(line.positions_km(i)) << ','
          << format_double(rep.u_s_kv(i)) << ',' << format_double(rep.i_s_nd_ka(i)) << ','
          << format_double(rep.i_s_cc_ka(i)) << ',' << format_double(rep.p_s_mw(i)) << ','
          << format_double(rep.curtailment_mw(i)) << "\n";
    }
    write_file_atomic(output_path(args, "snapshot_" + name + ".csv"), csv.str());

    std::ostringstream title;
    title << "method " << name << ", t=" << snap.time_s << " s, charged "
          << format_double(rep.objective_mw) << " MW";
    write_file_atomic(output_path(args, "snapshot_" + name + ".svg"),
                      svg_snapshot_plot(line.positions_km, rep.u_s_kv, rep.i_s_nd_ka,
                                        rep.i_s_cc_ka, title.str()));
    reports.push_back(rep);
  }

  std::ostringstream summary;
  summary << "snapshot t=" << snap.time_s << " s, " << snap.vehicles.size() << " vehicles\n";
  for (std::size_t k = 0; k < reports.size(); ++k)
    summary << args.methods[k] << ": charged " << format_double(reports[k].objective_mw)
            << " MW, loss " << format_double(reports[k].loss_mw) << " MW, iterations "
            << reports[k].iterations << "\n";
  if (reports.size() > 1) {
    for (std::size_t a = 0; a + 1 < reports.size(); ++a)
      for (std::size_t b = a + 1; b < reports.size(); ++b) {
        const double dv =
            (reports[a].u_s_kv - reports[b].u_s_kv).cwiseAbs().maxCoeff();
        summary << "max |u_s(" << args.methods[a] << ") - u_s(" << args.methods[b]
                << ")| = " << format_double(dv) << " kV, objective gap "
                << format_double(reports[a].objective_mw - reports[b].objective_mw) << " MW\n";
      }
  }
  write_file_atomic(output_path(args, "snapshot_summary.txt"), summary.str());
  std::cout << summary.str();
  return 0;
}

int cmd_decompose(const CommonArgs& args) {
  const LineModel line = build_line(LineConfig::from_json_file(args.config));
  const Scenario scenario = obtain_scenario(args, line);
  const Snapshot& snap = select_snapshot(scenario, args.time_s);
  const RunOptions opts = run_options(args);

  const StructuralMatrices mats = structural_matrices(line);
  const FixedVoltageSolver solver(assemble_snapshot(line, snap));
  const Vector& p_v = solver.network().vehicle_power_mw;

  Vector u_s;
  const Method method = method_from_string(args.methods.front());
  if (method == Method::Baseline) {
    u_s = Vector::Constant(line.n_tss(), line.u_tss_max_kv);
  } else if (method == Method::Quasi) {
    u_s = quasi_opf(line, mats, solver, p_v, opts.quasi).order.u_s_star_kv;
  } else {
    u_s = solve_opf(line, solver, p_v, opts.opf).u_s_opt_kv;
  }
  const PowerFlowSolution sol = solve_constant_power(solver, u_s, p_v, opts.quasi.power_flow);
  const Decomposition dec = decompose(mats, sol.tss_voltage_kv, sol.tss_current_ka);

  std::ostringstream csv;
  csv << kDecomposeSchema << "\n";
  csv << "# common_mode_kv=" << format_double(dec.u_cm_kv) << " method="
      << args.methods.front() << " t=" << snap.time_s << "\n";
  csv << "tss,u_s_kv,u_dm_kv,i_s_ka,i_s_nd_ka,i_s_cc_ka,u_b_cc_kv,i_c_cc_ka\n";
  for (int i = 0; i < line.n_tss(); ++i) {
    csv << (i + 1) << ',' << format_double(sol.tss_voltage_kv(i)) << ','
        << format_double(dec.u_dm_kv(i)) << ',' << format_double(sol.tss_current_ka(i)) << ','
        << format_double(dec.i_s_nd_ka(i)) << ',' << format_double(dec.i_s_cc_ka(i)) << ',';
    if (i < line.n_tss() - 1)
      csv << format_double(dec.u_b_cc_kv(i)) << ',' << format_double(dec.i_c_cc_ka(i));
    else
      csv << ',';
    csv << "\n";
  }
  write_file_atomic(output_path(args, "decompose.csv"), csv.str());
  std::cout << "decomposition written (common mode " << format_double(dec.u_cm_kv) << " kV)\n";
  return 0;
}

int cmd_gen(const CommonArgs& args) {
  const LineModel line = build_line(LineConfig::from_json_file(args.config));
  SynthesisParams p = args.synth;
  p.seed = args.seed;
  const Scenario scenario = synthesize_scenario(line, p);
  const std::string path =
      args.scenario.empty() ? output_path(args, "scenario.csv") : args.scenario;
  save_scenario(scenario, path);
  std::cout << "scenario: " << scenario.n_instants() << " instants, " << p.n_vehicles
            << " vehicles, dt " << scenario.dt_s << " s -> " << path << "\n";
  return 0;
}

void write_cycle_outputs(const CommonArgs& args, const LineModel& line, const std::string& name,
                         const CycleResult& run) {
  std::ostringstream metrics;
  const CycleMetrics& m = run.metrics;
  metrics << kMetricsSchema << "\n";
  metrics << "# line=" << line.name << " method=" << name << "\n";
  metrics << "# geometry is synthetic unless the config says otherwise\n";
  metrics << "# recuperated = total regeneration - export to AC; losses and auxiliary\n";
  metrics << "# absorption count as recuperated\n";
  metrics << "# curtailment = single global scaling of regeneration targets (bisection)\n";
  metrics << "field,value\n";
  metrics << "instants," << m.instants << "\n";
  metrics << "infeasible," << m.infeasible << "\n";
  metrics << "energy_cost_kwh," << format_double(m.energy_cost_kwh) << "\n";
  metrics << "regen_total_kwh," << format_double(m.regen_total_kwh) << "\n";
  metrics << "regen_exported_kwh," << format_double(m.regen_exported_kwh) << "\n";
  metrics << "recuperation_rate,"
          << (m.recuperation_defined ? format_double(m.recuperation_rate) : "n/a") << "\n";
  metrics << "tss_voltage_min_kv," << format_double(m.tss_v_min_kv) << "\n";
  metrics << "tss_voltage_max_kv," << format_double(m.tss_v_max_kv) << "\n";
  metrics << "vehicle_voltage_min_kv," << format_double(m.veh_v_min_kv) << "\n";
  metrics << "vehicle_voltage_max_kv," << format_double(m.veh_v_max_kv) << "\n";
  metrics << "max_vsc_power_mw," << format_double(m.max_vsc_power_mw) << "\n";
  metrics << "mean_solve_time_s," << format_double(m.mean_solve_time_s) << "\n";
  metrics << "median_solve_time_s," << format_double(m.median_solve_time_s) << "\n";
  metrics << "p95_solve_time_s," << format_double(m.p95_solve_time_s) << "\n";
  std::ostringstream hist;
  for (std::size_t i = 0; i < m.iteration_histogram.size(); ++i) {
    if (m.iteration_histogram[i] == 0) continue;
    hist << (hist.tellp() > 0 ? " " : "") << i << ':' << m.iteration_histogram[i];
  }
  metrics << "iteration_histogram," << hist.str() << "\n";
  write_file_atomic(output_path(args, "metrics_" + name + ".csv"), metrics.str());

  std::ostringstream inst;
  inst << kInstantsSchema << "\n";
  inst << "time_s,feasible,objective_mw,loss_mw,solve_time_s,iterations,max_tss_power_mw,"
          "tss_v_min_kv,tss_v_max_kv,veh_v_min_kv,veh_v_max_kv,regen_mw,exported_mw,"
          "curtailment_mw\n";
  for (const InstantRecord& r : run.records) {
    inst << format_double(r.time_s) << ',' << (r.feasible ? 1 : 0) << ','
         << format_double(r.objective_mw) << ',' << format_double(r.loss_mw) << ','
         << format_double(r.solve_time_s) << ',' << r.iterations << ','
         << format_double(r.max_tss_power_mw) << ',' << format_double(r.tss_v_min_kv) << ','
         << format_double(r.tss_v_max_kv) << ',' << format_double(r.veh_v_min_kv) << ','
         << format_double(r.veh_v_max_kv) << ',' << format_double(r.regen_mw) << ','
         << format_double(r.exported_mw) << ',' << format_double(r.curtailment_mw) << "\n";
  }
  write_file_atomic(output_path(args, "instants_" + name + ".csv"), inst.str());
}

int cmd_cycle(const CommonArgs& args) {
  const LineModel line = build_line(LineConfig::from_json_file(args.config));
  const Scenario scenario = obtain_scenario(args, line);
  const RunOptions opts = run_options(args);
  for (const std::string& name : args.methods) {
    const CycleResult run = run_cycle(line, scenario, method_from_string(name), opts);
    write_cycle_outputs(args, line, name, run);
    std::cout << name << ": energy " << format_double(run.metrics.energy_cost_kwh)
              << " kWh, recuperation "
              << (run.metrics.recuperation_defined
                      ? format_double(run.metrics.recuperation_rate)
                      : "n/a")
              << ", infeasible " << run.metrics.infeasible << "/" << run.metrics.instants
              << ", mean solve " << format_double(run.metrics.mean_solve_time_s) << " s\n";
  }
  return 0;
}

int cmd_bench(const CommonArgs& args) {
  const LineModel line = build_line(LineConfig::from_json_file(args.config));
  const Scenario scenario = obtain_scenario(args, line);
  const RunOptions opts = run_options(args);
  std::vector<Method> methods;
  for (const std::string& name : args.methods) methods.push_back(method_from_string(name));
  const BenchReport report = benchmark(line, scenario, methods, opts);

  std::ostringstream csv;
  csv << kBenchSchema << "\n";
  csv << "instant";
  for (const BenchSeries& s : report.series) csv << ',' << method_name(s.method) << "_s";
  csv << "\n";
  for (std::size_t k = 0; k < report.series.front().time_s.size(); ++k) {
    csv << k;
    for (const BenchSeries& s : report.series) csv << ',' << format_double(s.time_s[k]);
    csv << "\n";
  }
  write_file_atomic(output_path(args, "bench.csv"), csv.str());

  std::ostringstream summary;
  summary << "method,mean_s,median_s,p95_s\n";
  for (const BenchSeries& s : report.series)
    summary << method_name(s.method) << ',' << format_double(s.mean_s) << ','
            << format_double(s.median_s) << ',' << format_double(s.p95_s) << "\n";
  for (std::size_t a = 0; a < report.series.size(); ++a)
    for (std::size_t b = a + 1; b < report.series.size(); ++b)
      summary << "speedup(" << method_name(report.series[a].method) << " vs "
              << method_name(report.series[b].method)
              << ")," << format_double(report.speedup(report.series[a].method,
                                                      report.series[b].method))
              << "\n";
  write_file_atomic(output_path(args, "bench_summary.csv"), summary.str());
  std::cout << summary.str();
  return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_scenario) {
  cmd->add_option("--config", args.config, "line config (JSON)")->required();
  cmd->add_option("--out", args.out, "output directory");
  cmd->add_option("--workers", args.workers, "worker threads (0 = all cores)");
  cmd->add_option("--seed", args.seed, "random seed");
  cmd->add_option("--pf-tol-kw", args.pf_tol_kw, "vehicle power mismatch tolerance, kW");
  cmd->add_option("--outer-tol-v", args.outer_tol_v, "voltage-order convergence, V");
  cmd->add_option("--max-outer", args.max_outer, "outer iteration cap");
  cmd->add_option("--limit-margin-kw", args.limit_margin_kw,
                  "margin kept inside the power limits, kW");
  if (needs_scenario) {
    cmd->add_option("--scenario", args.scenario, "scenario CSV");
    cmd->add_flag("--synthesize", args.synthesize, "synthesize the scenario instead");
    cmd->add_option("--vehicles", args.synth.n_vehicles, "synthesized roster size");
    cmd->add_option("--headway", args.synth.headway_s, "synthesized headway, s");
    cmd->add_option("--dwell", args.synth.dwell_s, "synthesized mean dwell, s");
    cmd->add_option("--duration", args.synth.duration_s, "synthesized duration, s (0 = one trip)");
    cmd->add_option("--accel-mw", args.synth.accel_power_mw, "acceleration power envelope, MW");
    cmd->add_option("--brake-mw", args.synth.brake_power_mw, "braking power envelope, MW (< 0)");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DC traction power system solver toolkit"};
  app.require_subcommand(1);

  CommonArgs gen_args, snap_args, cyc_args, bench_args, dec_args;

  CLI::App* gen = app.add_subcommand("gen", "synthesize a scenario CSV");
  add_common(gen, gen_args, false);
  gen->add_option("--scenario", gen_args.scenario, "output CSV path");
  gen->add_option("--vehicles", gen_args.synth.n_vehicles, "roster size");
  gen->add_option("--headway", gen_args.synth.headway_s, "headway, s");
  gen->add_option("--dwell", gen_args.synth.dwell_s, "mean dwell, s");
  gen->add_option("--duration", gen_args.synth.duration_s, "duration, s (0 = one trip)");
  gen->add_option("--accel-mw", gen_args.synth.accel_power_mw, "acceleration power, MW");
  gen->add_option("--brake-mw", gen_args.synth.brake_power_mw, "braking power, MW (< 0)");

  CLI::App* snap = app.add_subcommand("snapshot", "solve one instant and export reports");
  add_common(snap, snap_args, true);
  snap->add_option("--time", snap_args.time_s, "instant to solve, s");
  snap->add_option("--method", snap_args.methods, "methods: baseline, quasi, ref")
      ->delimiter(',');

  CLI::App* cyc = app.add_subcommand("cycle", "replay a whole scenario");
  add_common(cyc, cyc_args, true);
  cyc->add_option("--method", cyc_args.methods, "methods: baseline, quasi, ref")
      ->delimiter(',');

  CLI::App* bench = app.add_subcommand("bench", "time methods over a scenario");
  add_common(bench, bench_args, true);
  bench->add_option("--methods", bench_args.methods, "methods to compare")->delimiter(',');

  CLI::App* dec = app.add_subcommand("decompose", "export the subsystem decomposition");
  add_common(dec, dec_args, true);
  dec->add_option("--time", dec_args.time_s, "instant to solve, s");
  dec->add_option("--method", dec_args.methods, "voltage source: baseline, quasi, ref")
      ->delimiter(',');

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return cmd_gen(gen_args);
    if (snap->parsed()) return cmd_snapshot(snap_args);
    if (cyc->parsed()) return cmd_cycle(cyc_args);
    if (bench->parsed()) return cmd_bench(bench_args);
    if (dec->parsed()) return cmd_decompose(dec_args);
  } catch (const InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
