#include "doctest.h"

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pooling/solver.hpp"

using namespace pooling;

namespace {

ConicProgram min_x_ge_1() {
  ConicProgram p;
  p.num_vars = 1;
  p.objective = {1.0};
  p.add_row({{0, 1.0}}, Sense::Ge, 1.0);
  return p;
}

}  // namespace

TEST_CASE("lp: min x subject to x >= 1") {
  const Solution sol = solve(min_x_ge_1());
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(sol.row_duals[0] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("socp: zero-radius cone, min t with ||(x-1, y)|| <= t") {
  ConicProgram p;
  p.kind = ConicProgram::Kind::SOCP;
  p.num_vars = 3;  // t, x, y
  p.objective = {1.0, 0.0, 0.0};
  SocBlock blk;
  blk.entries.push_back({{{0, 1.0}}, 0.0});
  blk.entries.push_back({{{1, 1.0}}, -1.0});
  blk.entries.push_back({{{2, 1.0}}, 0.0});
  p.cones.push_back(blk);
  const Solution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(std::abs(sol.objective) < 1e-6);
  CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(std::abs(sol.x[2]) < 1e-5);
}

TEST_CASE("socp: boundary attained, min x + y with ||(1, x - y)|| <= x + y") {
  ConicProgram p;
  p.kind = ConicProgram::Kind::SOCP;
  p.num_vars = 2;
  p.objective = {1.0, 1.0};
  SocBlock blk;
  blk.entries.push_back({{{0, 1.0}, {1, 1.0}}, 0.0});
  blk.entries.push_back({{}, 1.0});
  blk.entries.push_back({{{0, 1.0}, {1, -1.0}}, 0.0});
  p.cones.push_back(blk);
  const Solution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  // (x+y)^2 >= 1 + (x-y)^2 has minimal x+y = 1 at x = y = 1/2.
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
  const CertifyReport rep = certify(sol, p, 1e-6);
  CHECK(rep.all_pass);
}

TEST_CASE("lp: infeasible bounds are detected") {
  ConicProgram p;
  p.num_vars = 1;
  p.objective = {1.0};
  p.add_row({{0, 1.0}}, Sense::Ge, 2.0);
  p.add_row({{0, 1.0}}, Sense::Le, 1.0);
  const Solution sol = solve(p);
  CHECK(sol.status == SolveStatus::PrimalInfeasible);
}

TEST_CASE("lp: unbounded objective is flagged dual infeasible") {
  ConicProgram p;
  p.num_vars = 1;
  p.objective = {-1.0};
  p.add_row({{0, 1.0}}, Sense::Ge, 0.0);
  const Solution sol = solve(p);
  CHECK(sol.status == SolveStatus::DualInfeasible);
}

TEST_CASE("lp: random dense micro problems match basic-solution enumeration") {
  std::mt19937_64 rng(20240517);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> nd(2, 6), md(3, 8);
  int solved = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const int n = nd(rng), m = md(rng);
    ConicProgram p;
    p.num_vars = n;
    p.objective.resize(n);
    for (double& c : p.objective) c = coef(rng);
    for (int r = 0; r < m; ++r) {
      SparseVec lin;
      for (int i = 0; i < n; ++i) lin.emplace_back(i, coef(rng));
      p.add_row(std::move(lin), Sense::Le, 1.0 + std::abs(coef(rng)));
    }
    // Box rows keep the problem bounded and the vertex set nonempty.
    for (int i = 0; i < n; ++i) {
      p.add_row({{i, 1.0}}, Sense::Le, 3.0);
      p.add_row({{i, 1.0}}, Sense::Ge, -3.0);
    }
    const auto expect = oracle::lp_enumerate(p);
    REQUIRE(expect.has_value());
    const Solution sol = solve(p);
    REQUIRE(sol.status == SolveStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(*expect).epsilon(1e-7));
    ++solved;
  }
  CHECK(solved == 30);
}

TEST_CASE("certify: hand-built optimal pair passes, perturbed primal fails") {
  const ConicProgram p = min_x_ge_1();
  Solution sol;
  sol.status = SolveStatus::Optimal;
  sol.x = {1.0};
  sol.row_duals = {1.0};
  sol.dual_objective = 1.0;
  CHECK(certify(sol, p, 1e-9).all_pass);

  sol.x = {1.1};
  const CertifyReport rep = certify(sol, p, 1e-9);
  CHECK(!rep.all_pass);
  bool gap_failed = false;
  for (const auto& c : rep.checks)
    if (c.name == "gap" && !c.pass && c.value > 0.04) gap_failed = true;
  CHECK(gap_failed);
}

TEST_CASE("weak duality holds along the iterate history") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  ConicProgram p;
  p.num_vars = 5;
  p.objective.resize(5);
  for (double& c : p.objective) c = coef(rng);
  for (int r = 0; r < 6; ++r) {
    SparseVec lin;
    for (int i = 0; i < 5; ++i) lin.emplace_back(i, coef(rng));
    p.add_row(std::move(lin), Sense::Le, 1.0);
  }
  for (int i = 0; i < 5; ++i) {
    p.add_row({{i, 1.0}}, Sense::Le, 2.0);
    p.add_row({{i, 1.0}}, Sense::Ge, -2.0);
  }
  const Solution sol = solve(p);
  REQUIRE(sol.status == SolveStatus::Optimal);
  for (const IterStat& st : sol.history)
    CHECK(st.dcost <= st.pcost + 1e-6 * (1.0 + std::abs(st.pcost)));
}

TEST_CASE("scaling invariance: positive objective scaling keeps the argmin") {
  ConicProgram p;
  p.num_vars = 2;
  p.objective = {1.0, 2.0};
  p.add_row({{0, 1.0}, {1, 1.0}}, Sense::Ge, 1.0);
  p.add_row({{0, 1.0}}, Sense::Le, 5.0);
  p.add_row({{1, 1.0}}, Sense::Le, 5.0);
  p.add_row({{0, 1.0}}, Sense::Ge, 0.0);
  p.add_row({{1, 1.0}}, Sense::Ge, 0.0);
  const Solution a = solve(p);
  ConicProgram scaled = p;
  for (double& c : scaled.objective) c *= 37.5;
  const Solution b = solve(scaled);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(b.objective == doctest::Approx(37.5 * a.objective).epsilon(1e-6));
  for (int i = 0; i < 2; ++i)
    CHECK(b.x[i] == doctest::Approx(a.x[i]).epsilon(1e-5));
}

TEST_CASE("determinism: identical inputs give identical iterates and objective") {
  ConicProgram p;
  p.num_vars = 3;
  p.objective = {1.0, -2.0, 0.5};
  p.add_row({{0, 1.0}, {1, 2.0}, {2, -1.0}}, Sense::Le, 4.0);
  p.add_row({{0, 1.0}, {1, -1.0}}, Sense::Ge, -3.0);
  p.add_row({{0, 1.0}}, Sense::Le, 2.0);
  p.add_row({{1, 1.0}}, Sense::Le, 2.0);
  p.add_row({{2, 1.0}}, Sense::Le, 2.0);
  p.add_row({{0, 1.0}}, Sense::Ge, -2.0);
  p.add_row({{1, 1.0}}, Sense::Ge, -2.0);
  p.add_row({{2, 1.0}}, Sense::Ge, -2.0);
  const Solution a = solve(p);
  const Solution b = solve(p);
  CHECK(a.iterations == b.iterations);
  CHECK(a.objective == b.objective);  // bitwise
}

TEST_CASE("structurally empty program is rejected") {
  ConicProgram p;
  p.num_vars = 0;
  CHECK_THROWS_AS(solve(p), std::invalid_argument);
}

TEST_CASE("program dump round-trips") {
  ConicProgram p;
  p.kind = ConicProgram::Kind::SOCP;
  p.num_vars = 3;
  p.objective = {1.0, 0.0, -0.25};
  p.objective_constant = 0.5;
  p.add_row({{0, 1.0}, {2, -2.0}}, Sense::Le, 1.5);
  p.add_row({{1, 1.0}}, Sense::Eq, 0.75);
  SocBlock blk;
  blk.entries.push_back({{{0, 1.0}}, 0.0});
  blk.entries.push_back({{{1, 1.0}, {2, 1.0}}, -0.5});
  p.cones.push_back(blk);

  std::stringstream ss;
  p.dump(ss);
  const ConicProgram q = ConicProgram::parse(ss);
  std::stringstream ss2;
  q.dump(ss2);
  CHECK(ss.str() == ss2.str());
  const Solution sa = solve(p), sb = solve(q);
  CHECK(sa.objective == sb.objective);
}
