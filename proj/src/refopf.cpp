#include "dctps/refopf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <thread>

#include <Eigen/Dense>

#include "dctps/quasiopf.hpp"

namespace dctps {

namespace {

double smooth_plus(double x, double epsilon) {
  return 0.5 * (x + std::sqrt(x * x + epsilon * epsilon));
}

double smooth_plus_derivative(double x, double epsilon) {
  return 0.5 * (1.0 + x / std::sqrt(x * x + epsilon * epsilon));
}

}  // namespace

OpfProblem::OpfProblem(const LineModel& line, const FixedVoltageSolver& solver,
                       const Vector& p_vehicle_mw, const OpfOptions& options)
    : line_(line), solver_(solver), p_vehicle_mw_(p_vehicle_mw), options_(options) {
  p_lower_mw_ = options.p_lower_factor * line.p_lim_mw;
}

double OpfProblem::exact_objective(const PowerFlowSolution& flow) const {
  return objective_mw(apply_vsc_efficiency(flow.tss_power_mw, line_.vsc_efficiency),
                      line_.p_aux_mw);
}

OpfProblem::Eval OpfProblem::evaluate(const Vector& u_tss_kv, double epsilon_mw,
                                      double mu) const {
  const int n = solver_.n_tss();
  const int m = solver_.n_vehicles();
  Eval e;
  e.flow = solve_constant_power(solver_, u_tss_kv, p_vehicle_mw_, options_.power_flow);
  if (!e.flow.converged || e.flow.max_power_mismatch_mw > 1e-6) return e;

  // Sensitivities through the power-flow equalities. At the vehicle nodes the
  // residual is (L_FF u_F + L_FT u_T) + P/u_F = 0, so
  //   J = L_FF - diag(P/u_F^2),   du_F/du_T = -J^{-1} L_FT.
  Matrix s_ft(m, n);
  if (m > 0) {
    Matrix jac = solver_.vehicle_block();
    for (int j = 0; j < m; ++j)
      jac(j, j) -= p_vehicle_mw_(j) /
                   (e.flow.vehicle_voltage_kv(j) * e.flow.vehicle_voltage_kv(j));
    Eigen::PartialPivLU<Matrix> lu(jac);
    if (std::abs(lu.determinant()) < 1e-300)
      throw InfeasibleError("singular power-flow Jacobian");
    s_ft = -lu.solve(solver_.tss_vehicle_block().transpose());
  }
  Matrix dp(n, n);  // dP_s / dU_s
  {
    Matrix k = solver_.tss_block();
    if (m > 0) k.noalias() += solver_.tss_vehicle_block() * s_ft;
    dp = u_tss_kv.asDiagonal() * k;
    dp.diagonal() += e.flow.tss_current_ka;
  }

  const Vector p_ac = apply_vsc_efficiency(e.flow.tss_power_mw, line_.vsc_efficiency);
  e.objective_exact = objective_mw(p_ac, line_.p_aux_mw);

  double value = 0.0;
  Vector grad = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    const double slope =
        e.flow.tss_power_mw(i) > 0.0 ? 1.0 / line_.vsc_efficiency : line_.vsc_efficiency;
    const double y = p_ac(i) + line_.p_aux_mw(i);
    value += smooth_plus(y, epsilon_mw);
    grad.noalias() += smooth_plus_derivative(y, epsilon_mw) * slope * dp.row(i).transpose();
  }
  e.objective_smooth = value;

  // Log barrier over the inequality set of the problem.
  const auto add_barrier = [&](double slack, const Vector& dslack) {
    if (slack <= 0.0) return false;
    value -= mu * std::log(slack);
    grad.noalias() -= (mu / slack) * dslack;
    return true;
  };
  Vector row(n);
  for (int i = 0; i < n; ++i) {
    row = -dp.row(i).transpose();
    if (!add_barrier(line_.p_lim_mw(i) - e.flow.tss_power_mw(i), row)) return e;
    row = dp.row(i).transpose();
    if (!add_barrier(e.flow.tss_power_mw(i) - p_lower_mw_(i), row)) return e;
    row = -Vector::Unit(n, i);
    if (!add_barrier(line_.u_tss_max_kv - u_tss_kv(i), row)) return e;
    row = Vector::Unit(n, i);
    if (!add_barrier(u_tss_kv(i) - line_.u_tss_min_kv, row)) return e;
  }
  for (int j = 0; j < m; ++j) {
    const double cap = line_.vehicle_voltage_cap_kv(p_vehicle_mw_(j));
    row = -s_ft.row(j).transpose();
    if (!add_barrier(cap - e.flow.vehicle_voltage_kv(j), row)) return e;
    row = s_ft.row(j).transpose();
    if (!add_barrier(e.flow.vehicle_voltage_kv(j) - line_.u_veh_min_kv, row)) return e;
  }

  e.feasible = true;
  e.value = value;
  e.gradient = std::move(grad);
  return e;
}

namespace {

// Strictly feasible start: uniform mid-window first, then a flat-level scan,
// then the quasi-OPF order nudged inside the voltage box.
Vector feasible_start(const OpfProblem& problem, const LineModel& line,
                      const FixedVoltageSolver& solver, const Vector& p_vehicle_mw,
                      const OpfOptions& options) {
  const int n = line.n_tss();
  const double lo = line.u_tss_min_kv;
  const double hi = line.u_tss_max_kv;
  const double pad = 1e-4 * (hi - lo);

  std::vector<Vector> candidates;
  candidates.push_back(Vector::Constant(n, 0.5 * (lo + hi)));
  for (int k = 10; k >= 0; --k)
    candidates.push_back(Vector::Constant(n, lo + pad + (hi - lo - 2 * pad) * k / 10.0));

  const double mu_probe = options.barrier_schedule.front();
  const double eps_probe = options.epsilon_schedule_mw.front();
  for (const Vector& u : candidates) {
    try {
      if (problem.evaluate(u, eps_probe, mu_probe).feasible) return u;
    } catch (const InfeasibleError&) {
    }
  }
  try {
    StructuralMatrices mats = structural_matrices(line);
    QuasiOpfResult warm = quasi_opf(line, mats, solver, p_vehicle_mw, {});
    Vector u = warm.order.u_s_star_kv.cwiseMin(hi - pad).cwiseMax(lo + pad);
    if (problem.evaluate(u, eps_probe, mu_probe).feasible) return u;
  } catch (const InfeasibleError&) {
  }
  throw InfeasibleError("no strictly feasible starting point found");
}

}  // namespace

OpfResult solve_opf(const LineModel& line, const FixedVoltageSolver& solver,
                    const Vector& p_vehicle_mw, const OpfOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = line.n_tss();
  OpfProblem problem(line, solver, p_vehicle_mw, options);

  Vector x = feasible_start(problem, line, solver, p_vehicle_mw, options);

  const std::size_t stages =
      std::max(options.epsilon_schedule_mw.size(), options.barrier_schedule.size());
  int total_iters = 0;
  bool converged = true;
  OpfProblem::Eval current;

  for (std::size_t s = 0; s < stages; ++s) {
    const double eps = options.epsilon_schedule_mw[std::min(s, options.epsilon_schedule_mw.size() - 1)];
    const double mu = options.barrier_schedule[std::min(s, options.barrier_schedule.size() - 1)];
    const double tol = std::max(options.gradient_tol, 0.1 * mu);
    const bool last_stage = s + 1 == stages;

    current = problem.evaluate(x, eps, mu);
    if (!current.feasible) throw InfeasibleError("interior point lost strict feasibility");

    Matrix h = Matrix::Identity(n, n);  // inverse Hessian approximation
    int stage_iters = 0;
    bool stage_converged = current.gradient.lpNorm<Eigen::Infinity>() < tol;
    while (!stage_converged && stage_iters < options.max_stage_iterations &&
           total_iters < options.max_iterations) {
      Vector direction = -(h * current.gradient);
      if (direction.dot(current.gradient) >= 0.0) {
        h.setIdentity();
        direction = -current.gradient;
      }
      const double slope = direction.dot(current.gradient);

      double step = 1.0;
      OpfProblem::Eval next;
      bool accepted = false;
      for (int ls = 0; ls < 40; ++ls) {
        const Vector trial = x + step * direction;
        try {
          next = problem.evaluate(trial, eps, mu);
          if (next.feasible && next.value <= current.value + 1e-4 * step * slope) {
            accepted = true;
            break;
          }
        } catch (const InfeasibleError&) {
        }
        step *= 0.5;
      }
      if (!accepted) break;  // stalled; move to the next stage

      const Vector dx = step * direction;
      const Vector dg = next.gradient - current.gradient;
      const double sy = dx.dot(dg);
      if (sy > 1e-12 * dx.norm() * dg.norm()) {
        const double rho = 1.0 / sy;
        const Matrix left = Matrix::Identity(n, n) - rho * dx * dg.transpose();
        h = left * h * left.transpose() + rho * dx * dx.transpose();
      }
      x += dx;
      current = std::move(next);
      ++stage_iters;
      ++total_iters;
      stage_converged = current.gradient.lpNorm<Eigen::Infinity>() < tol;
    }
    if (last_stage && !stage_converged) converged = false;
    if (total_iters >= options.max_iterations) {
      if (!stage_converged) converged = false;
      break;
    }
  }

  OpfResult result;
  result.u_s_opt_kv = x;
  result.solution = current.flow;
  result.objective_mw = current.objective_exact;
  result.stationarity_residual = current.gradient.size() > 0
                                     ? current.gradient.lpNorm<Eigen::Infinity>()
                                     : std::numeric_limits<double>::quiet_NaN();
  result.iterations = total_iters;
  result.converged = converged;
  result.solve_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

OpfResult solve_opf(const LineModel& line, const Snapshot& snap, const OpfOptions& options) {
  const FixedVoltageSolver solver(assemble_snapshot(line, snap));
  return solve_opf(line, solver, solver.network().vehicle_power_mw, options);
}

namespace {

struct LatticeBest {
  double objective = std::numeric_limits<double>::infinity();
  Vector u;
  std::int64_t feasible = 0;
  std::int64_t evaluations = 0;

  void consider(double obj, const Vector& candidate) {
    ++feasible;
    if (obj < objective ||
        (obj == objective &&
         std::lexicographical_compare(candidate.data(), candidate.data() + candidate.size(),
                                      u.data(), u.data() + u.size()))) {
      objective = obj;
      u = candidate;
    }
  }

  void merge(const LatticeBest& other) {
    evaluations += other.evaluations;
    feasible += other.feasible;
    if (other.feasible == 0) return;
    if (other.objective < objective ||
        (other.objective == objective && u.size() > 0 &&
         std::lexicographical_compare(other.u.data(), other.u.data() + other.u.size(), u.data(),
                                      u.data() + u.size())) ||
        (other.objective == objective && u.size() == 0)) {
      objective = other.objective;
      u = other.u;
    }
  }
};

// Candidate evaluation with warm-started vehicle voltages; returns the exact
// charged power or NaN when infeasible.
class LatticeEvaluator {
 public:
  LatticeEvaluator(const LineModel& line, const FixedVoltageSolver& solver)
      : line_(line),
        solver_(solver),
        m_(solver.n_vehicles()),
        p_v_(solver.network().vehicle_power_mw),
        u_veh_(m_),
        i_draw_(m_),
        u_next_(m_),
        i_tss_(solver.n_tss()) {}

  double evaluate(const Vector& u_tss) {
    if (!warm_) {
      u_veh_ = solver_.interpolate_vehicle_voltages(u_tss);
      warm_ = true;
    }
    bool converged = false;
    for (int k = 0; k < 50; ++k) {
      for (int j = 0; j < m_; ++j) {
        if (u_veh_(j) <= 1e-6) {
          warm_ = false;
          return std::numeric_limits<double>::quiet_NaN();
        }
        i_draw_(j) = p_v_(j) / u_veh_(j);
      }
      solver_.solve_reduced(u_tss, i_draw_, u_next_, i_tss_);
      double mismatch = 0.0;
      for (int j = 0; j < m_; ++j) {
        if (u_next_(j) <= 0.0 || u_next_(j) > 1.9) {
          warm_ = false;
          return std::numeric_limits<double>::quiet_NaN();
        }
        mismatch = std::max(mismatch, std::abs(u_next_(j) * i_draw_(j) - p_v_(j)));
      }
      u_veh_ = u_next_;
      if (mismatch < 1e-6) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      warm_ = false;
      return std::numeric_limits<double>::quiet_NaN();
    }
    for (int j = 0; j < m_; ++j) {
      const double cap = line_.vehicle_voltage_cap_kv(p_v_(j));
      if (u_veh_(j) > cap || u_veh_(j) < line_.u_veh_min_kv)
        return std::numeric_limits<double>::quiet_NaN();
    }
    double objective = 0.0;
    for (int i = 0; i < solver_.n_tss(); ++i) {
      const double p = u_tss(i) * i_tss_(i);
      if (p > line_.p_lim_mw(i) || p < -line_.p_lim_mw(i))
        return std::numeric_limits<double>::quiet_NaN();
      const double p_ac =
          p > 0.0 ? p / line_.vsc_efficiency : p * line_.vsc_efficiency;
      objective += std::max(p_ac + line_.p_aux_mw(i), 0.0);
    }
    return objective;
  }

 private:
  const LineModel& line_;
  const FixedVoltageSolver& solver_;
  int m_;
  Vector p_v_;
  Vector u_veh_, i_draw_, u_next_, i_tss_;
  bool warm_ = false;
};

}  // namespace

OracleResult grid_search_oracle(const LineModel& line, const Snapshot& snap, double step_v,
                                int workers) {
  const int n = line.n_tss();
  if (n > 4) throw ConfigError("grid_search_oracle: limited to 4 substations (cost grows as grid^N)");
  if (step_v <= 0.0) throw ConfigError("grid_search_oracle: step must be positive");

  const FixedVoltageSolver solver(assemble_snapshot(line, snap));
  const double step_kv = step_v * 1e-3;
  const int points =
      1 + static_cast<int>(std::floor((line.u_tss_max_kv - line.u_tss_min_kv) / step_kv + 1e-9));

  if (workers <= 0)
    workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<int>(workers, points);

  const auto scan_slab = [&](int first_axis_begin, int first_axis_end) {
    LatticeBest best;
    LatticeEvaluator eval(line, solver);
    Vector u(n);
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    for (int a = first_axis_begin; a < first_axis_end; ++a) {
      u(0) = line.u_tss_min_kv + a * step_kv;
      std::fill(idx.begin(), idx.end(), 0);
      for (int i = 1; i < n; ++i) u(i) = line.u_tss_min_kv;
      while (true) {
        ++best.evaluations;
        const double obj = eval.evaluate(u);
        if (!std::isnan(obj)) best.consider(obj, u);
        // odometer over axes 1..n-1, least significant last
        int axis = n - 1;
        for (; axis >= 1; --axis) {
          if (++idx[static_cast<std::size_t>(axis)] < points) {
            u(axis) = line.u_tss_min_kv + idx[static_cast<std::size_t>(axis)] * step_kv;
            break;
          }
          idx[static_cast<std::size_t>(axis)] = 0;
          u(axis) = line.u_tss_min_kv;
        }
        if (axis < 1) break;
      }
    }
    return best;
  };

  LatticeBest best;
  if (n == 1 || workers == 1) {
    best = scan_slab(0, points);
  } else {
    std::vector<std::future<LatticeBest>> futures;
    const int chunk = (points + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const int begin = w * chunk;
      const int end = std::min(points, begin + chunk);
      if (begin >= end) break;
      futures.push_back(std::async(std::launch::async, scan_slab, begin, end));
    }
    for (auto& f : futures) best.merge(f.get());
  }

  if (best.feasible == 0)
    throw InfeasibleError("grid_search_oracle: no feasible lattice point");
  OracleResult result;
  result.u_s_opt_kv = best.u;
  result.objective_mw = best.objective;
  result.evaluations = best.evaluations;
  result.feasible = best.feasible;
  return result;
}

double oracle_step_variation(const LineModel& line, const Snapshot& snap, const Vector& u_s_kv,
                             double step_v) {
  const FixedVoltageSolver solver(assemble_snapshot(line, snap));
  LatticeEvaluator eval(line, solver);
  const double base = eval.evaluate(u_s_kv);
  const double step_kv = step_v * 1e-3;
  double variation = 0.0;
  Vector u = u_s_kv;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    for (const double sign : {-1.0, 1.0}) {
      u(i) = u_s_kv(i) + sign * step_kv;
      if (u(i) < line.u_tss_min_kv || u(i) > line.u_tss_max_kv) continue;
      const double obj = eval.evaluate(u);
      if (!std::isnan(obj) && !std::isnan(base))
        variation = std::max(variation, std::abs(obj - base));
    }
    u(i) = u_s_kv(i);
  }
  return variation;
}

}  // namespace dctps
