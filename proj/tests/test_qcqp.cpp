#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "pooling/qcqp.hpp"

using namespace pooling;

namespace {

// The instance-1 network shape: one source, two tanks connected as a
// complete graph, one plant reachable from both tanks.
Instance shape_121(int horizon) {
  Instance in;
  in.num_sources = 1;
  in.num_tanks = 2;
  in.num_plants = 1;
  in.horizon = horizon;
  in.arcs = {
      {0, 1, 0, 20, 1.0}, {0, 2, 0, 20, 1.0}, {1, 2, 0, 15, 0.5},
      {2, 1, 0, 15, 0.5}, {1, 3, 0, 15, 2.0}, {2, 3, 0, 15, 2.0},
  };
  in.p_init = {0.0, 12.0, 10.0, 0.0};
  in.q_init = {3.0, 3.5, 4.0, 0.0};
  in.p_min = {0, 0, 0, 0};
  in.p_max = {1e3, 50.0, 50.0, 0};
  in.supply_qty.assign(horizon, {4.0});
  in.supply_qual.assign(horizon, {3.0});
  in.demand_qty.assign(horizon, {3.0});
  in.demand_qual.assign(horizon, {2.0});
  in.shortage_cost = {80.0};
  in.finalize();
  return in;
}

Instance shape_221(int horizon) {
  Instance in;
  in.num_sources = 2;
  in.num_tanks = 2;
  in.num_plants = 1;
  in.horizon = horizon;
  in.arcs = {
      {0, 2, 0, 20, 1.0}, {0, 3, 0, 20, 1.0}, {1, 2, 0, 20, 1.0},
      {1, 3, 0, 20, 1.0}, {2, 3, 0, 15, 0.5}, {3, 2, 0, 15, 0.5},
      {2, 4, 0, 15, 2.0}, {3, 4, 0, 15, 2.0},
  };
  in.p_init = {0.0, 0.0, 12.0, 10.0, 0.0};
  in.q_init = {3.0, 4.0, 3.5, 4.0, 0.0};
  in.p_min = {0, 0, 0, 0, 0};
  in.p_max = {1e3, 1e3, 50.0, 50.0, 0};
  in.supply_qty.assign(horizon, {3.0, 2.0});
  in.supply_qual.assign(horizon, {3.0, 4.0});
  in.demand_qty.assign(horizon, {3.0});
  in.demand_qual.assign(horizon, {2.5});
  in.shortage_cost = {120.0};
  in.finalize();
  return in;
}

}  // namespace

TEST_CASE("pipeline-product rows: one active arc is fine, two are not") {
  Instance in = shape_121(1);
  const VarLayout lay = layout(in);
  const auto rows = eliminate_binaries(in);
  REQUIRE(rows.size() == 4);  // one per node at t = 0

  std::vector<double> x(lay.size(), 0.0);
  // Node 1 (first tank) has entering arcs 0 (from source) and 3 (from the
  // other tank). Carrying (0, 3) keeps the product row at zero.
  x[lay.a(0, 0)] = 0.0;
  x[lay.a(0, 3)] = 3.0;
  CHECK(rows[1].value(x) == 0.0);

  // Carrying (2, 3) on both entering arcs scores 2 * 3 = 6.
  x[lay.a(0, 0)] = 2.0;
  CHECK(rows[1].value(x) == doctest::Approx(6.0));

  // In-arc 2 against out-arc 5 at the same tank: cross term 2 * 5 = 10.
  std::vector<double> y(lay.size(), 0.0);
  y[lay.a(0, 0)] = 2.0;   // into tank 1
  y[lay.a(0, 2)] = 5.0;   // out of tank 1
  CHECK(rows[1].value(y) == doctest::Approx(10.0));
}

TEST_CASE("build_qcqp reproduces the instance-1 variable counts") {
  Instance in = shape_121(10);
  REQUIRE(in.num_arcs() == 6);
  const VarLayout lay = layout(in);
  CHECK(lay.count_a() == 60);
  CHECK(lay.count_p() == 29);
  CHECK(lay.count_q() == 39);
  CHECK(lay.count_v() == 10);
  CHECK(lay.size() == 138);

  const Qcqp q = build_qcqp(in, 1e-4);
  CHECK(q.n == 138);
  // m = MT * (|V| + M_S + M_I + M_P), d = MT * (M_S + M_I).
  CHECK(q.quad_rows.size() == 10u * (4 + 1 + 2 + 1));
  CHECK(q.lin_eq_rows.size() == 10u * 3);
  CHECK(q.lin_ineq_rows.size() == 10u * 1);
  CHECK(q.lambda_count() == 110);
}

TEST_CASE("single arc, M_T = 1, plant fed directly: only pipeline rows are quadratic") {
  Instance in;
  in.num_sources = 1;
  in.num_tanks = 0;
  in.num_plants = 1;
  in.horizon = 1;
  in.arcs = {{0, 1, 0, 10, 1.0}};
  in.p_init = {5.0, 0.0};
  in.q_init = {3.0, 0.0};
  in.p_min = {0, 0};
  in.p_max = {100, 0};
  in.supply_qty = {{0.0}};
  in.supply_qual = {{0.0}};
  in.demand_qty = {{5.0}};
  in.demand_qual = {{2.0}};
  in.shortage_cost = {10.0};
  in.finalize();

  const Qcqp q = build_qcqp(in, 1e-4);
  // At t = 1 all feeder qualities are data, so the quality rows degenerate
  // to linear rows inside the quadratic family.
  for (const auto& row : q.quad_rows) CHECK(row.quad.empty());
  q.validate();
}

TEST_CASE("feasible simulated schedule satisfies all bands at lambda = 0") {
  for (int seed = 1; seed <= 8; ++seed) {
    Instance in = shape_221(3);
    in.supply_qty.assign(3, {0.0, 0.0});  // sources stay empty
    in.p_init[0] = in.p_init[1] = 0.0;
    in.finalize();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<std::vector<double>> flow(3, std::vector<double>(in.num_arcs(), 0.0));
    auto used = flow;
    for (int t = 0; t < 3; ++t) {
      std::vector<bool> busy(in.num_nodes(), false);
      busy[0] = busy[1] = true;
      for (int e = 0; e < in.num_arcs(); ++e) {
        const Arc& a = in.arcs[e];
        if (busy[a.from] || busy[a.to] || unif(rng) > 0.5) continue;
        busy[a.from] = busy[a.to] = true;
        used[t][e] = 1.0;
        flow[t][e] = 0.5 + unif(rng);
      }
    }
    const Schedule s = simulate(in, flow, used);
    REQUIRE(residuals(in, s).max_violation <= 1e-10);

    const Qcqp q = build_qcqp(in, 1e-4);
    const std::vector<double> x = pack_schedule(in, s);
    const std::vector<double> lam(q.lambda_count(), 0.0);
    const QcqpEval ev = eval(q, x, lam);
    CHECK(ev.max_violation(lam) <= 1e-9);
    // Objective with lambda = 0 equals the direct (PP) cost of the schedule.
    CHECK(ev.objective == doctest::Approx(schedule_cost(in, s)).epsilon(1e-12));
    // Bounds are sound after elimination: 0 <= a <= U holds.
    const VarLayout lay = layout(in);
    for (int t = 0; t < 3; ++t)
      for (int e = 0; e < in.num_arcs(); ++e) {
        CHECK(x[lay.a(t, e)] >= q.lower[lay.a(t, e)] - 1e-12);
        CHECK(x[lay.a(t, e)] <= q.upper[lay.a(t, e)] + 1e-12);
      }
  }
}

TEST_CASE("eval: trivial cases and dense-matrix oracle agreement") {
  Qcqp q;
  q.n = 3;
  q.objective = {0.0, 0.0, 0.0};
  q.lower = {0, 0, 0};
  q.upper = {10, 10, 10};
  QuadRow row;
  row.quad.add(0, 1, 1.0);  // off-diagonal 1/2 in matrix terms
  row.quad.finalize();
  q.quad_rows.push_back(row);
  q.validate();

  std::vector<double> x = {2.0, 3.0, 0.0};
  const QcqpEval ev = eval(q, x, {0.0});
  CHECK(ev.objective == 0.0);
  CHECK(ev.quad_values[0] == doctest::Approx(6.0));  // 2 * (1/2) * 2 * 3

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  Qcqp r;
  r.n = 4;
  r.objective = {unif(rng), unif(rng), unif(rng), unif(rng)};
  r.lower.assign(4, -5.0);
  r.upper.assign(4, 5.0);
  for (int k = 0; k < 3; ++k) {
    QuadRow qr;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) qr.quad.add(i, j, unif(rng));
    qr.quad.finalize();
    qr.lin = {{0, unif(rng)}, {2, unif(rng)}};
    qr.constant = unif(rng);
    r.quad_rows.push_back(qr);
  }
  r.validate();
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> xs(4);
    for (double& v : xs) v = unif(rng);
    const QcqpEval ev2 = eval(r, xs, {0.0, 0.0, 0.0});
    for (int k = 0; k < 3; ++k)
      CHECK(ev2.quad_values[k] ==
            doctest::Approx(oracle::dense_quad_row_value(r.quad_rows[k], xs))
                .epsilon(1e-13));
    CHECK(ev2.objective ==
          doctest::Approx(oracle::dense_objective(r, xs, {0.0, 0.0, 0.0})).epsilon(1e-13));
  }
}

TEST_CASE("zero-diagonal assumption is enforced structurally") {
  BilinearForm f;
  CHECK_THROWS_AS(f.add(2, 2, 1.0), std::invalid_argument);
  // And it holds for every generated pooling program by construction.
  for (int mt : {1, 2, 5}) {
    const Qcqp q = build_qcqp(shape_221(mt), 1e-4);
    for (const auto& row : q.quad_rows)
      for (const auto& term : row.quad.terms()) CHECK(term.i < term.j);
  }
}

TEST_CASE("eval rejects dimension mismatches; build rejects bad delta") {
  const Qcqp q = build_qcqp(shape_121(2), 1e-4);
  std::vector<double> x(q.n - 1, 0.0);
  CHECK_THROWS_AS(eval(q, x, std::vector<double>(q.lambda_count(), 0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(build_qcqp(shape_121(2), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(build_qcqp(shape_121(2), -1.0), std::invalid_argument);
}
