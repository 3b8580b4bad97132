// Reference optimal power flow (smoothed objective + logarithmic barrier on a
// reduced voltage space) and an exhaustive lattice oracle for small instances.
#pragma once

#include <vector>

#include "dctps/powerflow.hpp"
#include "dctps/snapshot.hpp"
#include "dctps/types.hpp"

namespace dctps {

struct OpfOptions {
  PowerFlowOptions power_flow{1e-10, 50, 1.9};
  std::vector<double> epsilon_schedule_mw{10.0, 1.0, 0.1, 0.001};
  std::vector<double> barrier_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  double gradient_tol = 1e-6;   // final-stage infinity norm, MW/kV
  int max_iterations = 200;     // cumulative quasi-Newton steps
  int max_stage_iterations = 60;
  double p_lower_factor = -1.0;  // lower substation power bound = factor * p_lim
};

struct OpfResult {
  Vector u_s_opt_kv;
  PowerFlowSolution solution;
  double objective_mw = 0.0;          // exact charged power at the optimum
  double stationarity_residual = 0.0; // final barrier gradient norm
  double solve_time_s = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Reduced-space evaluation: power flow nested inside, smooth surrogate of the
/// charged-power objective, log barrier on every inequality of the problem,
/// and the implicit-function gradient with respect to the substation voltages.
class OpfProblem {
 public:
  OpfProblem(const LineModel& line, const FixedVoltageSolver& solver,
             const Vector& p_vehicle_mw, const OpfOptions& options);

  struct Eval {
    bool feasible = false;
    double value = 0.0;            // smooth objective + barrier
    double objective_smooth = 0.0;
    double objective_exact = 0.0;
    Vector gradient;
    PowerFlowSolution flow;
  };

  /// Throws InfeasibleError when the nested power flow collapses.
  Eval evaluate(const Vector& u_tss_kv, double epsilon_mw, double mu) const;

  double exact_objective(const PowerFlowSolution& flow) const;
  const LineModel& line() const { return line_; }

 private:
  const LineModel& line_;
  const FixedVoltageSolver& solver_;
  Vector p_vehicle_mw_;
  Vector p_lower_mw_;
  OpfOptions options_;
};

OpfResult solve_opf(const LineModel& line, const Snapshot& snap, const OpfOptions& options = {});
OpfResult solve_opf(const LineModel& line, const FixedVoltageSolver& solver,
                    const Vector& p_vehicle_mw, const OpfOptions& options = {});

struct OracleResult {
  Vector u_s_opt_kv;
  double objective_mw = 0.0;
  std::int64_t evaluations = 0;
  std::int64_t feasible = 0;
};

/// Exhaustively evaluates every substation-voltage lattice point with the
/// given step, verifying each candidate by a constant-power flow and the full
/// constraint set. Deterministic tie-break: lexicographically smallest
/// voltage vector. Restricted to N <= 4.
OracleResult grid_search_oracle(const LineModel& line, const Snapshot& snap, double step_v,
                                int workers = 0);

/// Objective change across one lattice step around a point, the resolution
/// term used when comparing solvers against the oracle.
double oracle_step_variation(const LineModel& line, const Snapshot& snap, const Vector& u_s_kv,
                             double step_v);

}  // namespace dctps
