#pragma once

#include <Eigen/Dense>

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pooling/conic.hpp"
#include "pooling/qcqp.hpp"

namespace pooling {

/// The lifted representation W-bar of a penalized QCQP: the homogenizing
/// coordinate sits at lifted index 0, the core variables at 1..n, and the
/// lambda variables after them. Only the active support is materialized:
/// the (0,0) entry, every first-row entry, every diagonal, and every
/// off-diagonal pair that appears in some quadratic row. All rows of the
/// program are re-expressed as linear functionals over the flat entries.
class MomentModel {
 public:
  struct Row {
    SparseVec coeffs;  // over flat entry indices
    double rhs = 0.0;
    Sense sense = Sense::Le;
    std::string tag;
  };

  int base_dim = 0;    // n + lambda_count
  int lifted_dim = 0;  // base_dim + 1
  double delta = 0.0;

  std::vector<std::pair<int, int>> entries;  // flat -> (i, j), i <= j, lifted
  std::vector<double> objective;             // flat coefficient vector
  std::vector<Row> rows;                     // model rows; rows[0] is H0 . W = 1
  std::vector<std::pair<int, int>> cone_pairs;  // strict pairs i < j in support

  int entry(int i, int j) const;       // flat index; throws if absent
  bool has_entry(int i, int j) const;
  int diag(int i) const { return entry(i, i); }

  /// Value of a flat coefficient vector at the rank-one point (1, x, lambda).
  double eval_rank_one(const SparseVec& coeffs,
                       const std::vector<double>& x,
                       const std::vector<double>& lambda) const;
  std::vector<double> rank_one_point(const std::vector<double>& x,
                                     const std::vector<double>& lambda) const;

 private:
  friend MomentModel lift(const Qcqp&, bool);
  std::unordered_map<long long, int> index_;
};

/// Builds the moment lift of the penalized program. With all_pairs set,
/// every off-diagonal pair is generated instead of the support-restricted
/// set (only sensible at toy sizes).
MomentModel lift(const Qcqp& q, bool all_pairs = false);

/// LP relaxation: diagonal nonnegativity plus the two absolute-value rows
/// W_ii + W_jj -+ 2 W_ij >= 0 per support pair (the dual cone of the
/// diagonally dominant matrices restricted to the support).
ConicProgram make_lp(const MomentModel& m);

/// SOCP relaxation: per support pair the rotated-cone condition
/// (W_ij)^2 <= W_ii W_jj expressed as ||(W_ii - W_jj, 2 W_ij)|| <= W_ii + W_jj.
ConicProgram make_socp(const MomentModel& m);

struct Completion {
  double alpha = 0.0;        // diagonal shift applied off the (0,0) entry
  double lambda_min = 0.0;   // smallest eigenvalue of the completed matrix
  double objective_before = 0.0;
  double objective_after = 0.0;
  double max_row_violation_before = 0.0;
  double max_row_violation_after = 0.0;
  int power_iterations = 0;
};

/// Constructive diagonal-shift completion: given a feasible point of the LP
/// (or SOCP) relaxation as flat entry values, adds
/// alpha >= lambda_max(w w^T / w00 - W) to every diagonal except (0,0) and
/// verifies the result is positive semidefinite with unchanged row values
/// and objective. Dense eigensolves up to dimension 500, power iteration
/// with tolerance 1e-10 and a 10000-iteration cap beyond that.
Completion complete_to_psd(const MomentModel& m, const std::vector<double>& w,
                           double tol_psd = 1e-8);

/// The reduced dual LP obtained by forcing the dual slack block to vanish
/// (zero diagonals): max mu subject to the (0,0) entry inequality, linear
/// stationarity rows per first-row entry, entrywise stationarity on the
/// pair-support union, eta >= 0 and s00 >= 0. Solving it yields mu*_LP.
ConicProgram dual_reduce(const MomentModel& m);

/// Objective sign convention of dual_reduce: mu* = -optimal_value.
inline double dual_mu_from_objective(double obj) { return -obj; }

}  // namespace pooling
