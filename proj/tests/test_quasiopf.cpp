#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "dctps/quasiopf.hpp"
#include "support/test_util.hpp"

using namespace dctps;
using dctps::testing::random_vector;
using dctps::testing::random_zero_sum;

namespace {

// n substations 1 km apart with the given uniform branch resistance.
LineModel chain_line(int n, double branch_ohm = 0.02, double p_lim = 11.0,
                     double p_aux = 0.54) {
  LineConfig c;
  c.tss_positions_km = Vector::LinSpaced(n, 0.0, static_cast<double>(n - 1));
  c.rho_catenary_ohm_km = Vector::Constant(1, 0.4 * branch_ohm);
  c.rho_rail_ohm_km = Vector::Constant(1, 0.6 * branch_ohm);
  c.p_lim_mw = Vector::Constant(1, p_lim);
  c.p_aux_mw = Vector::Constant(1, p_aux);
  return build_line(c);
}

LineModel line_with_branches(const Vector& branch_ohm, double p_lim = 11.0) {
  const int n = static_cast<int>(branch_ohm.size()) + 1;
  LineConfig c;
  Vector pos(n);
  pos(0) = 0.0;
  for (int i = 1; i < n; ++i) pos(i) = pos(i - 1) + 1.0;
  c.tss_positions_km = pos;
  c.rho_catenary_ohm_km = 0.4 * branch_ohm;
  c.rho_rail_ohm_km = 0.6 * branch_ohm;
  c.p_lim_mw = Vector::Constant(1, p_lim);
  c.p_aux_mw = Vector::Constant(1, 0.54);
  return build_line(c);
}

std::vector<TssTarget> neutral_targets(int n, double i_lim = 1e9, double i_aux = 1e9) {
  std::vector<TssTarget> t(static_cast<std::size_t>(n));
  for (TssTarget& x : t) {
    x.i_lim_ka = i_lim;
    x.i_aux_ka = i_aux;
  }
  return t;
}

void make_needy(std::vector<TssTarget>& t, int i, double target) {
  t[static_cast<std::size_t>(i)].cls =
      target < 0 ? TssClass::TractionLimited : TssClass::RegenLimited;
  t[static_cast<std::size_t>(i)].i_cc_target_ka = target;
}

// Eq-style closed form for the left-flank share, written independently of the
// implementation: each target splits by the resistance toward the far flank.
double left_share_reference(const std::vector<TssTarget>& targets, const Vector& r, int a,
                            int b) {
  double denom = 0.0;
  for (int k = a - 1; k <= b; ++k) denom += r(k);
  double num = 0.0;
  for (int j = a; j <= b; ++j) {
    double suffix = 0.0;
    for (int k = j; k <= b; ++k) suffix += r(k);
    num += targets[static_cast<std::size_t>(j)].i_cc_target_ka * suffix;
  }
  return -num / denom;
}

}  // namespace

TEST_CASE("classification converts the power limits at the given voltage") {
  const LineModel line = chain_line(3);
  Vector u = Vector::Constant(3, 0.8);

  SUBCASE("current limit from an 11 MW cap at 0.8 kV") {
    Vector nd = Vector::Zero(3);
    const auto targets = classify_targets(nd, u, line, 0.0);
    CHECK(targets[0].i_lim_ka == doctest::Approx(13.75).epsilon(1e-15));
    for (const TssTarget& t : targets) {
      CHECK(t.cls == TssClass::Neutral);
      CHECK(t.i_cc_target_ka == 0.0);
    }
  }
  SUBCASE("regeneration beyond the auxiliary current") {
    Vector nd(3);
    nd << 0.0, -2.0, 0.0;
    const auto targets = classify_targets(nd, u, line, 0.0);
    CHECK(targets[1].cls == TssClass::RegenLimited);
    CHECK(targets[1].i_aux_ka == doctest::Approx(0.675).epsilon(1e-15));
    CHECK(targets[1].i_cc_target_ka == doctest::Approx(1.325).epsilon(1e-12));
  }
  SUBCASE("traction beyond the limit") {
    Vector nd(3);
    nd << 15.0, 0.0, 0.0;
    const auto targets = classify_targets(nd, u, line, 0.0);
    CHECK(targets[0].cls == TssClass::TractionLimited);
    CHECK(targets[0].i_cc_target_ka == doctest::Approx(13.75 - 15.0).epsilon(1e-12));
  }
  SUBCASE("classes are exclusive and consistent on random input") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
      const Vector nd = random_vector(rng, 3, -20.0, 20.0);
      const auto targets = classify_targets(nd, u, line, 0.0);
      for (int i = 0; i < 3; ++i) {
        const TssTarget& t = targets[static_cast<std::size_t>(i)];
        CHECK((t.cls == TssClass::TractionLimited) == (nd(i) > t.i_lim_ka));
        CHECK((t.cls == TssClass::RegenLimited) == (nd(i) < -t.i_aux_ka));
        if (t.cls == TssClass::TractionLimited) CHECK(t.i_cc_target_ka < 0.0);
        if (t.cls == TssClass::RegenLimited) CHECK(t.i_cc_target_ka > 0.0);
      }
    }
  }
  SUBCASE("nonpositive voltage is rejected") {
    u(1) = 0.0;
    CHECK_THROWS_AS(classify_targets(Vector::Zero(3), u, line, 0.0), ConfigError);
  }
}

TEST_CASE("support allocation follows the proximity split") {
  SUBCASE("equal flanking branches split a single target evenly") {
    const LineModel line = chain_line(3);
    const StructuralMatrices mats = structural_matrices(line);
    auto targets = neutral_targets(3);
    make_needy(targets, 1, -1.0);
    const Vector alloc = allocate_support(targets, mats);
    CHECK(alloc(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(alloc(1) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(alloc(2) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("unequal branches split inversely to resistance") {
    Vector r(2);
    r << 0.02, 0.04;
    const LineModel line = line_with_branches(r);
    const StructuralMatrices mats = structural_matrices(line);
    auto targets = neutral_targets(3);
    make_needy(targets, 1, -1.0);
    const Vector alloc = allocate_support(targets, mats);
    CHECK(alloc(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(alloc(2) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("two-substation block with equal branches") {
    Vector r = Vector::Constant(3, 0.02);
    const LineModel line = line_with_branches(r);
    const StructuralMatrices mats = structural_matrices(line);
    auto targets = neutral_targets(4);
    make_needy(targets, 1, -1.0);
    make_needy(targets, 2, -0.5);
    const Vector alloc = allocate_support(targets, mats);
    CHECK(alloc(0) == doctest::Approx(1.0 * 0.04 / 0.06 + 0.5 * 0.02 / 0.06).epsilon(1e-12));
    CHECK(alloc(0) == doctest::Approx(0.833333333333).epsilon(1e-9));
    CHECK(alloc(3) == doctest::Approx(0.666666666667).epsilon(1e-9));
  }
  SUBCASE("a block touching the line end leans on its single flank") {
    const LineModel line = chain_line(4);
    const StructuralMatrices mats = structural_matrices(line);
    auto targets = neutral_targets(4);
    make_needy(targets, 0, -0.7);
    const Vector alloc = allocate_support(targets, mats);
    CHECK(alloc(1) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(alloc(2) == 0.0);
    CHECK(alloc(3) == 0.0);
  }
  SUBCASE("all substations limited is infeasible") {
    const LineModel line = chain_line(3);
    const StructuralMatrices mats = structural_matrices(line);
    auto targets = neutral_targets(3);
    for (int i = 0; i < 3; ++i) make_needy(targets, i, -0.1);
    CHECK_THROWS_AS(allocate_support(targets, mats), InfeasibleError);
  }
}

TEST_CASE("randomized blocks: zero support away from blocks, isolation, exact shares") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> n_dist(3, 23);
    const int n = n_dist(rng);
    const Vector r = random_vector(rng, n - 1, 0.01, 0.08);
    const LineModel line = line_with_branches(r);
    const StructuralMatrices mats = structural_matrices(line);

    auto targets = neutral_targets(n);
    std::bernoulli_distribution needy(0.35);
    std::uniform_real_distribution<double> target(-2.0, 2.0);
    int needy_count = 0;
    for (int i = 0; i < n; ++i) {
      if (needy(rng)) {
        double t = target(rng);
        if (t == 0.0) t = 0.5;
        make_needy(targets, i, t);
        ++needy_count;
      }
    }
    if (needy_count == 0 || needy_count == n) continue;

    const Vector alloc = allocate_support(targets, mats);
    CHECK(std::abs(alloc.sum()) < 1e-9);

    // limited substations receive exactly their targets
    for (int i = 0; i < n; ++i)
      if (targets[static_cast<std::size_t>(i)].cls != TssClass::Neutral)
        CHECK(alloc(i) == targets[static_cast<std::size_t>(i)].i_cc_target_ka);

    // a neutral substation with neutral neighbours supplies nothing
    for (int i = 0; i < n; ++i) {
      const bool left_neutral =
          i == 0 || targets[static_cast<std::size_t>(i - 1)].cls == TssClass::Neutral;
      const bool right_neutral =
          i == n - 1 || targets[static_cast<std::size_t>(i + 1)].cls == TssClass::Neutral;
      if (targets[static_cast<std::size_t>(i)].cls == TssClass::Neutral && left_neutral &&
          right_neutral)
        CHECK(alloc(i) == 0.0);
    }

    // branch currents vanish outside the support regions
    const Vector i_c = mats.accumulation * alloc;
    for (int k = 0; k < n - 1; ++k) {
      bool inside = false;
      int i = 0;
      while (i < n) {
        if (targets[static_cast<std::size_t>(i)].cls == TssClass::Neutral) {
          ++i;
          continue;
        }
        int b = i;
        while (b + 1 < n && targets[static_cast<std::size_t>(b + 1)].cls != TssClass::Neutral)
          ++b;
        const int lo = std::max(i - 1, 0);
        const int hi = std::min(b + 1, n - 1);
        if (k >= lo && k < hi) inside = true;
        i = b + 1;
      }
      if (!inside) CHECK(std::abs(i_c(k)) < 1e-12);
    }

    // the left-flank share matches the closed form, written independently
    int i = 0;
    while (i < n) {
      if (targets[static_cast<std::size_t>(i)].cls == TssClass::Neutral) {
        ++i;
        continue;
      }
      int b = i;
      while (b + 1 < n && targets[static_cast<std::size_t>(b + 1)].cls != TssClass::Neutral)
        ++b;
      if (i > 0 && b + 1 < n) {
        // isolate this block's contribution to its left flank
        auto only_this = neutral_targets(n);
        for (int j = i; j <= b; ++j)
          make_needy(only_this, j, targets[static_cast<std::size_t>(j)].i_cc_target_ka);
        const Vector single = allocate_support(only_this, mats);
        const double expected = left_share_reference(targets, r, i, b);
        CHECK(single(i - 1) ==
              doctest::Approx(expected).epsilon(1e-12).scale(std::max(1.0, std::abs(expected))));
      }
      i = b + 1;
    }
  }
}

TEST_CASE("single-block allocation minimizes the coordinated loss") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> n_dist(4, 12);
    const int n = n_dist(rng);
    const Vector r = random_vector(rng, n - 1, 0.01, 0.08);
    const LineModel line = line_with_branches(r);
    const StructuralMatrices mats = structural_matrices(line);

    std::uniform_int_distribution<int> a_dist(1, n - 3);
    const int a = a_dist(rng);
    std::uniform_int_distribution<int> b_dist(a, n - 2);
    const int b = b_dist(rng);

    auto targets = neutral_targets(n);
    double total = 0.0;
    for (int j = a; j <= b; ++j) {
      const double t = random_vector(rng, 1, -2.0, 2.0)(0);
      make_needy(targets, j, t);
      total += t;
    }
    const Vector alloc = allocate_support(targets, mats);

    // Independent minimizer: the loss restricted to (left share s, right
    // share -total - s) is a 1-D quadratic; fit it from three samples.
    const auto loss_at = [&](double s) {
      Vector x = Vector::Zero(n);
      for (int j = a; j <= b; ++j) x(j) = targets[static_cast<std::size_t>(j)].i_cc_target_ka;
      x(a - 1) = s;
      x(b + 1) = -total - s;
      const Vector i_c = mats.accumulation * x;
      return i_c.cwiseProduct(i_c).dot(mats.branch_resistance_ohm);
    };
    const double l0 = loss_at(0.0);
    const double lp = loss_at(1.0);
    const double lm = loss_at(-1.0);
    const double curvature = lp + lm - 2.0 * l0;
    REQUIRE(curvature > 0.0);
    const double s_star = (lm - lp) / (2.0 * curvature);
    CHECK(alloc(a - 1) ==
          doctest::Approx(s_star).epsilon(1e-9).scale(std::max(1.0, std::abs(s_star))));
  }
}

TEST_CASE("saturated supporters are capped and the residual moves outward") {
  SUBCASE("ample headroom leaves the allocation unchanged") {
    const LineModel line = chain_line(4);
    const StructuralMatrices mats = structural_matrices(line);
    auto targets = neutral_targets(4);
    make_needy(targets, 1, -1.0);
    const Vector alloc = allocate_support(targets, mats);
    const Vector after = resolve_saturation(alloc, targets, mats, Vector::Zero(4));
    CHECK((after - alloc).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("a 0.2 kA headroom supporter sheds 0.3 kA to the next flank") {
    const LineModel line = chain_line(4);
    const StructuralMatrices mats = structural_matrices(line);
    auto targets = neutral_targets(4);
    make_needy(targets, 1, -1.0);
    targets[2].i_lim_ka = 0.2;  // headroom with zero natural current
    const Vector alloc = allocate_support(targets, mats);
    CHECK(alloc(2) == doctest::Approx(0.5));
    const Vector after = resolve_saturation(alloc, targets, mats, Vector::Zero(4));
    CHECK(after(2) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(after(0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(after(3) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(std::abs(after.sum()) < 1e-12);
  }
  SUBCASE("an exhausted side pushes all residual to the other flank") {
    const LineModel line = chain_line(4);
    const StructuralMatrices mats = structural_matrices(line);
    auto targets = neutral_targets(4);
    make_needy(targets, 0, -1.0);
    targets[1].i_lim_ka = 0.3;
    const Vector alloc = allocate_support(targets, mats);
    const Vector after = resolve_saturation(alloc, targets, mats, Vector::Zero(4));
    CHECK(after(1) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(after(2) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(after(3) == 0.0);
  }
}

TEST_CASE("voltage references invert the decomposition and pin the ceiling") {
  const LineModel line = chain_line(3, 0.02);
  const StructuralMatrices mats = structural_matrices(line);

  SUBCASE("worked hollow example") {
    Vector i_cc(3);
    i_cc << 0.5, -1.0, 0.5;
    const ControlOrder order = voltage_references(i_cc, mats, line);
    CHECK(order.i_c_cc_star_ka(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(order.i_c_cc_star_ka(1) == doctest::Approx(-0.5).epsilon(1e-15));
    CHECK(order.u_b_cc_star_kv(0) == doctest::Approx(0.010).epsilon(1e-12));
    CHECK(order.u_b_cc_star_kv(1) == doctest::Approx(-0.010).epsilon(1e-12));
    CHECK(order.u_dm_star_kv(0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(order.u_dm_star_kv(1) == doctest::Approx(-0.010).epsilon(1e-12));
    CHECK(order.u_dm_star_kv(2) == 0.0);
    CHECK(order.u_s_star_kv(0) == doctest::Approx(0.88).epsilon(1e-12));
    CHECK(order.u_s_star_kv(1) == doctest::Approx(0.87).epsilon(1e-12));
    CHECK(order.u_s_star_kv(2) == doctest::Approx(0.88).epsilon(1e-12));
  }
  SUBCASE("zero currents give a flat ceiling order") {
    const ControlOrder order = voltage_references(Vector::Zero(3), mats, line);
    CHECK((order.u_s_star_kv.array() == line.u_tss_max_kv).all());
  }
  SUBCASE("regeneration mirror forms a peak") {
    Vector i_cc(3);
    i_cc << -0.5, 1.0, -0.5;
    const ControlOrder order = voltage_references(i_cc, mats, line);
    CHECK(order.u_s_star_kv(1) == doctest::Approx(0.88).epsilon(1e-12));
    CHECK(order.u_s_star_kv(0) == doctest::Approx(0.87).epsilon(1e-12));
    CHECK(order.u_s_star_kv(2) == doctest::Approx(0.87).epsilon(1e-12));
  }
  SUBCASE("nonzero current sum is rejected") {
    CHECK_THROWS_AS(voltage_references(Vector::Constant(3, 0.1), mats, line),
                    std::invalid_argument);
  }
}

TEST_CASE("decompose is the left inverse of voltage_references") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> n_dist(2, 23);
    const int n = n_dist(rng);
    const Vector r = random_vector(rng, n - 1, 0.01, 0.08);
    const LineModel line = line_with_branches(r);
    const StructuralMatrices mats = structural_matrices(line);

    const Vector i_cc = random_zero_sum(rng, n, 2.0);
    const ControlOrder order = voltage_references(i_cc, mats, line);
    const Vector i_s = mats.incidence * order.i_c_cc_star_ka;
    const Decomposition dec = decompose(mats, order.u_s_star_kv, i_s);
    const double scale = std::max(i_cc.cwiseAbs().maxCoeff(), 1e-9);
    CHECK((dec.i_s_cc_ka - i_cc).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK(dec.i_s_nd_ka.cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
}

TEST_CASE("quasi-OPF without vehicles issues a flat ceiling order in one pass") {
  const LineModel line = chain_line(5);
  const QuasiOpfResult r = quasi_opf(line, Snapshot{});
  CHECK(r.converged);
  CHECK(r.outer_iterations == 1);
  CHECK((r.order.u_s_star_kv.array() == line.u_tss_max_kv).all());
  CHECK(r.objective_mw == doctest::Approx(line.p_aux_mw.sum()).epsilon(1e-12));
  CHECK(r.order.curtailment_mw.sum() == 0.0);
}

TEST_CASE("a heavy vehicle pins its substation at the power limit") {
  const LineModel line = chain_line(3, 0.0556, /*p_lim=*/4.0, /*p_aux=*/0.3);
  Snapshot snap;
  snap.vehicles.push_back({"v1", line.positions_km(1), 6.0});
  const QuasiOpfResult r = quasi_opf(line, snap);
  CHECK(r.converged);
  CHECK(std::abs(r.verified.tss_power_mw(1) - 4.0) < 1e-3);
  CHECK(r.verified.tss_power_mw.maxCoeff() <= 4.0 + 1e-6);
  // neighbours pick up the remainder
  CHECK(r.order.i_s_cc_star_ka(0) > 0.0);
  CHECK(r.order.i_s_cc_star_ka(2) > 0.0);
  CHECK(r.order.u_s_star_kv(1) < r.order.u_s_star_kv(0));
}

TEST_CASE("absorbable regeneration is fully recuperated") {
  const LineModel line = chain_line(3, 0.02, 11.0, 0.54);
  Snapshot snap;
  snap.vehicles.push_back({"v1", 0.5, 3.0});   // consumer near substation 1
  snap.vehicles.push_back({"v2", 1.5, -2.0});  // braking vehicle near substation 2
  const QuasiOpfResult r = quasi_opf(line, snap);
  CHECK(r.converged);
  const Vector p_ac = apply_vsc_efficiency(r.verified.tss_power_mw, line.vsc_efficiency);
  const double exported = (-(p_ac + line.p_aux_mw)).cwiseMax(0.0).sum();
  CHECK(exported == 0.0);  // recuperation rate exactly 1
  CHECK(r.order.curtailment_mw.sum() == 0.0);
  // energy balance on the verified solution
  const double balance =
      r.verified.tss_power_mw.sum() - r.verified.vehicle_power_mw.sum() - r.loss_mw;
  CHECK(std::abs(balance) < 1e-9);
}

TEST_CASE("an oversized regeneration block is curtailed by one global scaling") {
  LineConfig c;
  c.tss_positions_km = Vector::LinSpaced(3, 0.0, 4.0);
  c.rho_catenary_ohm_km = Vector::Constant(1, 0.0078);
  c.rho_rail_ohm_km = Vector::Constant(1, 0.02);
  c.p_aux_mw = Vector::Constant(1, 0.2);
  c.u_tss_min_kv = 0.86;  // narrow window so the peak cannot be realised
  const LineModel line = build_line(c);
  Snapshot snap;
  snap.vehicles.push_back({"v1", line.positions_km(1), -6.0});
  const QuasiOpfResult r = quasi_opf(line, snap);
  CHECK(r.order.lambda < 1.0);
  CHECK(r.order.curtailment_mw(1) > 0.0);
  CHECK(r.order.curtailment_mw(0) == 0.0);
  CHECK(r.order.curtailment_mw(2) == 0.0);
  // voltage windows hold on the returned order
  CHECK(r.order.u_s_star_kv.minCoeff() >= line.u_tss_min_kv - 1e-9);
  CHECK(r.order.u_s_star_kv.maxCoeff() <= line.u_tss_max_kv + 1e-9);
}

TEST_CASE("feasible orders pass the relaxation untouched") {
  const LineModel line = chain_line(3);
  const StructuralMatrices mats = structural_matrices(line);
  const FixedVoltageSolver solver(assemble_snapshot(line, Snapshot{}));
  const auto targets = classify_targets(Vector::Zero(3), Vector::Constant(3, 0.88), line, 0.0);
  PowerFlowSolution flow;
  const ControlOrder order =
      relax_regeneration(targets, Vector::Zero(3), Vector::Constant(3, 0.88), mats, line,
                         solver, Vector(), QuasiOpfOptions{}, flow);
  CHECK(order.lambda == 1.0);
  CHECK(order.curtailment_mw.sum() == 0.0);
}

TEST_CASE("an unservable traction hollow is reported infeasible") {
  LineConfig c;
  c.tss_positions_km = Vector::LinSpaced(3, 0.0, 8.0);
  c.rho_catenary_ohm_km = Vector::Constant(1, 0.02);
  c.rho_rail_ohm_km = Vector::Constant(1, 0.05);
  c.p_lim_mw = Vector::Constant(1, 0.8);
  c.p_aux_mw = Vector::Constant(1, 0.0);
  c.u_tss_min_kv = 0.87;  // nearly no control range
  const LineModel line = build_line(c);
  Snapshot snap;
  snap.vehicles.push_back({"v1", line.positions_km(1), 5.5});
  CHECK_THROWS_AS(quasi_opf(line, snap), InfeasibleError);
}

TEST_CASE("verified quasi-OPF solutions satisfy every configured window") {
  std::mt19937_64 rng(59);
  int checked = 0;
  for (int trial = 0; trial < 60 && checked < 30; ++trial) {
    const LineModel line = dctps::testing::random_line(rng, 12);
    Snapshot snap = dctps::testing::random_snapshot(rng, line, 8, -4.0, 4.0);
    QuasiOpfResult r;
    try {
      r = quasi_opf(line, snap);
    } catch (const InfeasibleError&) {
      continue;
    }
    ++checked;
    CHECK(std::abs(r.order.i_s_cc_star_ka.sum()) < 1e-9);
    if (r.order.curtailment_mw.sum() == 0.0)
      CHECK(std::abs(r.order.u_s_star_kv.maxCoeff() - line.u_tss_max_kv) < 1e-6);
    CHECK(r.order.u_s_star_kv.minCoeff() >= line.u_tss_min_kv - 1e-9);
    CHECK((r.verified.tss_power_mw - line.p_lim_mw).maxCoeff() <= 1e-6);
    for (int j = 0; j < r.verified.vehicle_voltage_kv.size(); ++j) {
      const double cap = line.vehicle_voltage_cap_kv(snap.vehicles[static_cast<std::size_t>(j)].power_mw);
      CHECK(r.verified.vehicle_voltage_kv(j) <= cap + 1e-9);
      CHECK(r.verified.vehicle_voltage_kv(j) >= line.u_veh_min_kv - 1e-9);
    }
  }
  CHECK(checked >= 20);
}
