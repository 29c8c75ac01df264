#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pooling/conic.hpp"

namespace pooling {

struct SolverConfig {
  double tol_gap = 1e-8;
  double tol_feas_primal = 1e-8;
  double tol_feas_dual = 1e-8;
  // Reduced tolerances reported as IterLimit-with-diagnostics when only
  // these are met.
  double tol_gap_reduced = 5e-5;
  double tol_feas_reduced = 5e-5;
  int max_iters = 200;
  double step_fraction = 0.98;   // fraction of the distance to the boundary
  double static_reg = 1e-9;      // quasi-definite regularization
  double refine_tol = 1e-8;      // refine when KKT residual exceeds this
  int max_refine = 3;
  double sigma_min = 1e-4;
  double sigma_max = 0.9999;
  bool verbose = false;

  void validate() const;  // throws on nonpositive tolerances or iters < 1
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, IterLimit };

const char* to_string(SolveStatus s);

struct IterStat {
  int iter = 0;
  double pcost = 0, dcost = 0, gap = 0, pres = 0, dres = 0, mu = 0, step = 0;
};

struct Solution {
  SolveStatus status = SolveStatus::IterLimit;
  std::vector<double> x;
  double objective = 0.0;  // includes the program's objective constant
  // Duals per user row (shadow-price convention: nonnegative for Le/Ge rows)
  // and per cone block (member of the dual cone).
  std::vector<double> row_duals;
  std::vector<std::vector<double>> cone_duals;
  double dual_objective = 0.0;
  int iterations = 0;
  double primal_res = 0, dual_res = 0, gap = 0;
  std::vector<IterStat> history;
  std::string message;
};

/// Primal-dual path-following solve of an LP or SOCP via the homogeneous
/// self-dual embedding: Nesterov-Todd scaling on SOC blocks, log-barrier on
/// the nonnegative part, sparse quasi-definite KKT factorization with static
/// regularization and iterative refinement. Deterministic for fixed inputs.
Solution solve(const ConicProgram& p, const SolverConfig& cfg = {});

struct CertifyCheck {
  std::string name;
  double value = 0.0;   // residual magnitude
  double tol = 0.0;
  bool pass = false;
};

struct CertifyReport {
  std::vector<CertifyCheck> checks;
  bool all_pass = false;
};

/// Recomputes primal feasibility, dual feasibility (stationarity and dual
/// cone membership) and the duality gap from the raw program data only.
CertifyReport certify(const Solution& sol, const ConicProgram& p,
                      double tol = 1e-7);

}  // namespace pooling
