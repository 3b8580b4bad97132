#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dctps/powerflow.hpp"
#include "dctps/scenario.hpp"
#include "support/test_util.hpp"

using namespace dctps;
using dctps::testing::random_line;
using dctps::testing::random_snapshot;
using dctps::testing::random_vector;

namespace {

// Two substations at 0 and 1 km, one vehicle mid-span: each half-branch is
// 0.0139 ohm, the Thevenin resistance at the vehicle is 0.00695 ohm.
FixedVoltageSolver two_tss_solver(double vehicle_pos_km = 0.5) {
  LineConfig c;
  c.tss_positions_km = Vector::LinSpaced(2, 0.0, 1.0);
  const LineModel line = build_line(c);
  Snapshot snap;
  snap.vehicles.push_back({"v1", vehicle_pos_km, 1.0});
  return FixedVoltageSolver(assemble_snapshot(line, snap));
}

}  // namespace

TEST_CASE("fixed solve reproduces the series-parallel hand reduction") {
  const FixedVoltageSolver solver = two_tss_solver();
  const Vector u_s = Vector::Constant(2, 0.8);

  SUBCASE("vehicle drawing 1 kA") {
    const PowerFlowSolution sol = solve_fixed(solver, u_s, Vector::Constant(1, 1.0));
    CHECK(sol.vehicle_voltage_kv(0) == doctest::Approx(0.79305).epsilon(1e-12));
    CHECK(sol.tss_current_ka(0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(sol.tss_current_ka(1) == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("no excitation") {
    const PowerFlowSolution sol = solve_fixed(solver, u_s, Vector::Zero(1));
    CHECK(sol.vehicle_voltage_kv(0) == doctest::Approx(0.8).epsilon(1e-15));
    CHECK(sol.tss_current_ka.cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("regenerating vehicle mirrors the signs") {
    const PowerFlowSolution sol = solve_fixed(solver, u_s, Vector::Constant(1, -1.0));
    CHECK(sol.vehicle_voltage_kv(0) == doctest::Approx(0.80695).epsilon(1e-12));
    CHECK(sol.tss_current_ka(0) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(sol.tss_current_ka(1) == doctest::Approx(-0.5).epsilon(1e-12));
  }
}

TEST_CASE("constant-power solve matches the closed-form quadratic") {
  const FixedVoltageSolver solver = two_tss_solver();
  const Vector u_s = Vector::Constant(2, 0.8);

  // U_v * (0.8 - U_v) / r_th = P with r_th = 0.00695 ohm, P = 1 MW.
  const double r_th = 0.00695;
  const double p = 1.0;
  const double expected = 0.5 * (0.8 + std::sqrt(0.8 * 0.8 - 4.0 * p * r_th));

  PowerFlowOptions opts;
  opts.power_tol_mw = 1e-9;
  const PowerFlowSolution sol = solve_constant_power(solver, u_s, Vector::Constant(1, p), opts);
  CHECK(sol.converged);
  CHECK(sol.vehicle_voltage_kv(0) == doctest::Approx(expected).epsilon(1e-9));
  CHECK(sol.max_power_mismatch_mw < 1e-9);
}

TEST_CASE("zero-power vehicles converge in one iteration") {
  const FixedVoltageSolver solver = two_tss_solver();
  const Vector u_s = Vector::Constant(2, 0.8);
  const PowerFlowSolution sol = solve_constant_power(solver, u_s, Vector::Zero(1));
  CHECK(sol.converged);
  CHECK(sol.iterations == 1);
  CHECK(sol.vehicle_voltage_kv(0) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("loads beyond the transferable maximum raise InfeasibleError") {
  const FixedVoltageSolver solver = two_tss_solver();
  const Vector u_s = Vector::Constant(2, 0.8);
  // transferable maximum is U^2/(4 r_th) ~ 23 MW; 100 MW must collapse
  CHECK_THROWS_AS(solve_constant_power(solver, u_s, Vector::Constant(1, 100.0)),
                  InfeasibleError);
}

TEST_CASE("charged power follows the utility charge rule") {
  Vector p_aux(2);
  p_aux << 0.5, 0.5;

  Vector p_s(2);
  p_s << 2.0, -1.0;
  CHECK(objective_mw(p_s, p_aux) == doctest::Approx(2.5).epsilon(1e-15));

  p_s = -p_aux;
  CHECK(objective_mw(p_s, p_aux) == 0.0);

  p_s << -3.0, 1.0;
  CHECK(objective_mw(p_s, p_aux) == doctest::Approx(1.5).epsilon(1e-15));

  CHECK_THROWS_AS(objective_mw(Vector::Zero(3), p_aux), ConfigError);
}

TEST_CASE("VSC efficiency is applied on the supplying side only") {
  Vector p(2);
  p << 1.0, -1.0;
  const Vector ac = apply_vsc_efficiency(p, 0.98);
  CHECK(ac(0) == doctest::Approx(1.0 / 0.98));
  CHECK(ac(1) == doctest::Approx(-0.98));
}

TEST_CASE("the linear core superposes") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 25; ++trial) {
    const LineModel line = random_line(rng, 10);
    Snapshot snap = random_snapshot(rng, line, 8);
    if (snap.vehicles.empty()) snap.vehicles.push_back({"v1", 0.3 * line.length_km, 1.0});
    const FixedVoltageSolver solver(assemble_snapshot(line, snap));
    const int n = line.n_tss();
    const int m = static_cast<int>(snap.vehicles.size());

    const Vector u_s = random_vector(rng, n, 0.7, 0.88);
    const Vector ia = random_vector(rng, m, -2.0, 2.0);
    const Vector ib = random_vector(rng, m, -2.0, 2.0);
    std::uniform_real_distribution<double> coef(-2.0, 2.0);
    const double alpha = coef(rng);
    const double beta = coef(rng);

    const Vector base = solve_fixed(solver, u_s, Vector::Zero(m)).node_voltage_kv;
    const Vector va = solve_fixed(solver, u_s, ia).node_voltage_kv;
    const Vector vb = solve_fixed(solver, u_s, ib).node_voltage_kv;
    const Vector vc = solve_fixed(solver, u_s, alpha * ia + beta * ib).node_voltage_kv;

    const Vector lhs = vc - base;
    const Vector rhs = alpha * (va - base) + beta * (vb - base);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sourced power balances achieved vehicle power plus ohmic loss") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 25; ++trial) {
    const LineModel line = random_line(rng, 12);
    Snapshot snap = random_snapshot(rng, line, 10, -4.0, 4.0);
    const FixedVoltageSolver solver(assemble_snapshot(line, snap));
    const Vector u_s = Vector::Constant(line.n_tss(), 0.85);
    PowerFlowSolution sol;
    try {
      sol = solve_constant_power(solver, u_s, solver.network().vehicle_power_mw);
    } catch (const InfeasibleError&) {
      continue;  // randomly overloaded instance
    }
    const double balance =
        sol.tss_power_mw.sum() - sol.vehicle_power_mw.sum() - sol.total_loss_mw;
    CHECK(std::abs(balance) < 1e-9);
    CHECK(sol.total_loss_mw >= 0.0);

    // KCL residual at vehicle nodes against the assembled Laplacian
    const Vector residual = solver.network().conductance * sol.node_voltage_kv;
    for (int j = 0; j < solver.n_vehicles(); ++j) {
      const int node = solver.network().vehicle_node[static_cast<std::size_t>(j)];
      CHECK(std::abs(residual(node) + sol.vehicle_current_ka(j)) < 1e-9);
    }
  }
}

TEST_CASE("raising one substation voltage does not decrease its current") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const LineModel line = random_line(rng, 8);
    Snapshot snap = random_snapshot(rng, line, 6);
    const FixedVoltageSolver solver(assemble_snapshot(line, snap));
    const int n = line.n_tss();
    const Vector i_v = random_vector(rng, solver.n_vehicles(), -2.0, 2.0);
    Vector u_s = random_vector(rng, n, 0.7, 0.85);

    std::uniform_int_distribution<int> pick(0, n - 1);
    const int i = pick(rng);
    const double before = solve_fixed(solver, u_s, i_v).tss_current_ka(i);
    u_s(i) += 0.01;
    const double after = solve_fixed(solver, u_s, i_v).tss_current_ka(i);
    CHECK(after >= before - 1e-12);
  }
}

TEST_CASE("constant-power iteration stays within the stated budget on a cycle") {
  const LineModel line = build_line(dctps::testing::small_line_config(8));
  SynthesisParams params;
  params.n_vehicles = 6;
  params.headway_s = 180.0;
  params.duration_s = 600.0;
  params.seed = 3;
  const Scenario scenario = synthesize_scenario(line, params);

  int within_five = 0;
  int total = 0;
  for (const Snapshot& snap : scenario.snapshots) {
    const FixedVoltageSolver solver(assemble_snapshot(line, snap));
    const PowerFlowSolution sol = solve_constant_power(
        solver, Vector::Constant(line.n_tss(), line.u_tss_max_kv),
        solver.network().vehicle_power_mw);
    REQUIRE(sol.converged);
    ++total;
    if (sol.iterations <= 5) ++within_five;
  }
  CHECK(within_five >= static_cast<int>(0.95 * total));
}
