#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "pooling/moment.hpp"
#include "pooling/solver.hpp"

using namespace pooling;

namespace {

// min -x1 - x2  s.t.  x1 x2 <= 1,  0 <= x <= 2.
Qcqp tiny_qcqp() {
  Qcqp q;
  q.n = 2;
  q.objective = {-1.0, -1.0};
  q.lower = {0.0, 0.0};
  q.upper = {2.0, 2.0};
  QuadRow row;
  row.quad.add(0, 1, 1.0);
  row.quad.finalize();
  row.constant = -1.0;  // x1 x2 - 1 <= 0
  row.tag = "bilinear cap";
  q.quad_ineq_rows.push_back(row);
  q.validate();
  return q;
}

double row_value(const ConicProgram& p, size_t r, const std::vector<double>& w) {
  double v = -p.rows[r].rhs;
  for (auto [i, c] : p.rows[r].lin) v += c * w[i];
  return v;
}

}  // namespace

TEST_CASE("lift: pure linear program lifts onto the first row") {
  Qcqp q;
  q.n = 1;
  q.objective = {1.0};
  q.lower = {0.0};
  q.upper = {kInf};
  q.lin_ineq_rows.push_back({{{0, 1.0}}, 1.0, "cap"});
  q.validate();
  const MomentModel m = lift(q);
  CHECK(m.lifted_dim == 2);
  CHECK(m.entries.size() == 3);  // (0,0), (0,1), (1,1)
  CHECK(m.objective[m.entry(0, 1)] == 1.0);
  // H0 row pins the corner entry.
  CHECK(m.rows[0].sense == Sense::Eq);
  CHECK(m.rows[0].rhs == 1.0);
  CHECK(m.rows[0].coeffs == SparseVec{{m.entry(0, 0), 1.0}});
  // The cap row reads W01 <= 1.
  bool found = false;
  for (const auto& row : m.rows)
    if (row.tag == "cap") {
      found = true;
      CHECK(row.coeffs == SparseVec{{m.entry(0, 1), 1.0}});
      CHECK(row.rhs == 1.0);
    }
  CHECK(found);
}

TEST_CASE("lift: bilinear row becomes a single off-diagonal entry") {
  const MomentModel m = lift(tiny_qcqp());
  bool found = false;
  for (const auto& row : m.rows)
    if (row.tag == "bilinear cap") {
      found = true;
      CHECK(row.coeffs == SparseVec{{m.entry(1, 2), 1.0}});
      CHECK(row.rhs == 1.0);  // rhs = -constant
    }
  CHECK(found);
}

TEST_CASE("lift: rank-one points reproduce the qcqp evaluation") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(0.0, 2.0);
  Qcqp q = tiny_qcqp();
  // Add a banded equality to exercise the lambda block.
  q.lin_eq_rows.push_back({{{0, 1.0}, {1, 1.0}}, 2.0, "sum"});
  const MomentModel m = lift(q);
  for (int trial = 0; trial < 12; ++trial) {
    const std::vector<double> x = {unif(rng), unif(rng)};
    const std::vector<double> lam = {unif(rng)};
    const QcqpEval ev = eval(q, x, lam);
    double lifted_obj = 0.0;
    const std::vector<double> w = m.rank_one_point(x, lam);
    for (size_t f = 0; f < w.size(); ++f) lifted_obj += m.objective[f] * w[f];
    CHECK(lifted_obj == doctest::Approx(ev.objective).epsilon(1e-13));
  }
}

TEST_CASE("make_lp: absolute-value pair rows accept and reject as expected") {
  const MomentModel m = lift(tiny_qcqp());
  const ConicProgram p = make_lp(m);
  std::vector<double> w(p.num_vars, 0.0);
  const int dii = m.entry(1, 1), djj = m.entry(2, 2), dij = m.entry(1, 2);

  // Locate the two pair rows for (1,2).
  std::vector<size_t> pair_rows;
  for (size_t r = 0; r < p.rows.size(); ++r) {
    const auto& lin = p.rows[r].lin;
    if (lin.size() == 3 && lin[0].first == dii && lin[1].first == djj)
      pair_rows.push_back(r);
  }
  REQUIRE(pair_rows.size() == 2);

  w[dii] = 2.0;
  w[djj] = 2.0;
  w[dij] = 1.0;
  CHECK(row_value(p, pair_rows[0], w) >= 0.0);  // 2 + 2 - 2 >= 0
  CHECK(row_value(p, pair_rows[1], w) >= 0.0);

  w[dii] = 0.0;
  w[djj] = 0.0;
  CHECK((row_value(p, pair_rows[0], w) < 0.0 ||
         row_value(p, pair_rows[1], w) < 0.0));
}

TEST_CASE("make_socp: boundary and violated cone blocks") {
  const MomentModel m = lift(tiny_qcqp());
  const ConicProgram p = make_socp(m);
  const int dii = m.entry(1, 1), djj = m.entry(2, 2), dij = m.entry(1, 2);
  const SocBlock* blk = nullptr;
  for (const auto& b : p.cones)
    if (b.entries[2].terms.size() == 1 && b.entries[2].terms[0].first == dij)
      blk = &b;
  REQUIRE(blk != nullptr);

  std::vector<double> w(p.num_vars, 0.0);
  w[dii] = w[djj] = w[dij] = 1.0;
  const double e0 = blk->entries[0].value(w);
  const double e1 = blk->entries[1].value(w);
  const double e2 = blk->entries[2].value(w);
  CHECK(e0 == doctest::Approx(2.0));  // boundary: ||(0,2)|| = 2 = 1 + 1
  CHECK(std::hypot(e1, e2) == doctest::Approx(e0));

  w[djj] = 0.0;
  w[dij] = 0.1;
  CHECK(std::hypot(blk->entries[1].value(w), blk->entries[2].value(w)) >
        blk->entries[0].value(w));
}

TEST_CASE("tiny qcqp: LP optimum matches vertex enumeration; SOCP matches LP") {
  const MomentModel m = lift(tiny_qcqp());
  const ConicProgram lp = make_lp(m);
  const Solution slp = solve(lp);
  REQUIRE(slp.status == SolveStatus::Optimal);
  const auto expect = oracle::lp_enumerate(lp);
  REQUIRE(expect.has_value());
  CHECK(slp.objective == doctest::Approx(*expect).epsilon(1e-7));
  CHECK(slp.objective == doctest::Approx(-4.0).epsilon(1e-7));

  const Solution ssoc = solve(make_socp(m));
  REQUIRE(ssoc.status == SolveStatus::Optimal);
  CHECK(std::abs(slp.objective - ssoc.objective) <=
        1e-5 * (1.0 + std::abs(slp.objective)));

  // Every SOCP-feasible point satisfies the LP pair rows.
  for (auto [i, j] : m.cone_pairs) {
    const double wii = ssoc.x[m.entry(i, i)];
    const double wjj = ssoc.x[m.entry(j, j)];
    const double wij = ssoc.x[m.entry(i, j)];
    CHECK(wii + wjj - 2.0 * std::abs(wij) >= -1e-6);
  }
}

TEST_CASE("lower-bound chain against the brute-force grid minimum") {
  const Qcqp q = tiny_qcqp();
  const auto gmin = oracle::grid_min(q, 1e-2);
  REQUIRE(gmin.has_value());
  CHECK(*gmin == doctest::Approx(-2.5).epsilon(1e-12));
  const MomentModel m = lift(q);
  const Solution slp = solve(make_lp(m));
  const Solution ssoc = solve(make_socp(m));
  REQUIRE(slp.status == SolveStatus::Optimal);
  REQUIRE(ssoc.status == SolveStatus::Optimal);
  CHECK(slp.objective <= ssoc.objective + 1e-6);
  CHECK(ssoc.objective <= *gmin + 1e-2);
}

TEST_CASE("complete_to_psd: 1x1 Schur example") {
  Qcqp q;
  q.n = 1;
  q.objective = {0.0};
  q.lower = {0.0};
  q.upper = {2.0};
  q.validate();
  const MomentModel m = lift(q);
  std::vector<double> w(m.entries.size(), 0.0);
  w[m.entry(0, 0)] = 1.0;
  w[m.entry(0, 1)] = 1.0;
  w[m.entry(1, 1)] = 0.0;
  const Completion c = complete_to_psd(m, w);
  CHECK(c.alpha == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(c.lambda_min >= -1e-8);
  CHECK(c.objective_after == c.objective_before);
}

TEST_CASE("complete_to_psd: rank-one moment matrix needs no shift") {
  Qcqp q = tiny_qcqp();
  const MomentModel m = lift(q, /*all_pairs=*/true);
  const std::vector<double> w = m.rank_one_point({0.5, 1.5}, {});
  const Completion c = complete_to_psd(m, w);
  CHECK(c.alpha <= 1e-10);
  CHECK(c.lambda_min >= -1e-8);
}

TEST_CASE("complete_to_psd: witnesses the theorem at the tiny LP optimum") {
  const MomentModel m = lift(tiny_qcqp());
  const ConicProgram lp = make_lp(m);
  const Solution sol = solve(lp);
  REQUIRE(sol.status == SolveStatus::Optimal);
  const Completion c = complete_to_psd(m, sol.x);
  CHECK(c.lambda_min >= -1e-8);
  CHECK(std::abs(c.objective_after - c.objective_before) <=
        1e-10 * (1.0 + std::abs(c.objective_before)));
  CHECK(c.max_row_violation_after <=
        c.max_row_violation_before + 1e-12);
}

TEST_CASE("dual_reduce: pure-LP program recovers ordinary LP duality") {
  Qcqp q;
  q.n = 2;
  q.objective = {1.0, 2.0};
  q.lower = {0.0, 0.0};
  q.upper = {10.0, 10.0};
  q.lin_ineq_rows.push_back({{{0, -1.0}, {1, -1.0}}, -2.0, "cover"});
  q.validate();
  const MomentModel m = lift(q);
  const Solution primal = solve(make_lp(m));
  REQUIRE(primal.status == SolveStatus::Optimal);
  CHECK(primal.objective == doctest::Approx(2.0).epsilon(1e-7));

  const Solution dual = solve(dual_reduce(m));
  REQUIRE(dual.status == SolveStatus::Optimal);
  const double mu = dual_mu_from_objective(dual.objective);
  CHECK(mu == doctest::Approx(primal.objective).epsilon(1e-6));
}

TEST_CASE("dual_reduce: a lone bilinear row forces its multiplier to zero") {
  const MomentModel m = lift(tiny_qcqp());
  const ConicProgram d = dual_reduce(m);
  const Solution sol = solve(d);
  REQUIRE(sol.status == SolveStatus::Optimal);
  // Stationarity on the (1,2) entry reads eta_bilinear * 1 = 0.
  // Identify the bilinear row's eta: model row index 1 (H0 is row 0), so
  // variable 2 + (1 - 1) = 2 in the reduced dual.
  CHECK(std::abs(sol.x[2]) <= 1e-7);
  const double mu = dual_mu_from_objective(sol.objective);
  const Solution primal = solve(make_lp(m));
  CHECK(std::abs(mu - primal.objective) <=
        1e-6 * (1.0 + std::abs(primal.objective)));
}

TEST_CASE("dual_reduce rejects support outside the zero-diagonal regime") {
  // Constructing a diagonal entry is impossible through BilinearForm, so
  // the assumption holds by construction; entry() rejects unknown pairs.
  const MomentModel m = lift(tiny_qcqp());
  CHECK_THROWS_AS(m.entry(5, 7), std::out_of_range);
}

TEST_CASE("all-pairs flag only adds entries, never changes the LP value") {
  const Qcqp q = tiny_qcqp();
  const MomentModel m1 = lift(q, false);
  const MomentModel m2 = lift(q, true);
  CHECK(m2.entries.size() >= m1.entries.size());
  const Solution a = solve(make_lp(m1));
  const Solution b = solve(make_lp(m2));
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-7));
}
