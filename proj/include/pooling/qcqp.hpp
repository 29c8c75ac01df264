#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pooling/instance.hpp"

namespace pooling {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using SparseVec = std::vector<std::pair<int, double>>;

/// Strictly upper-triangular bilinear form, stored as unordered-pair
/// coefficients: value(x) = sum c_ij * x_i * x_j over entries with i < j.
/// In matrix terms Q_ij = c_ij / 2; the diagonal is identically zero and
/// an entry with i == j is rejected at insert.
class BilinearForm {
 public:
  struct Term {
    int i, j;
    double c;
  };

  void add(int i, int j, double c);
  /// Sorts by (i, j) and sums duplicates; drops exact zeros.
  void finalize();
  double value(const std::vector<double>& x) const;
  bool empty() const { return terms_.empty(); }
  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
};

struct QuadRow {
  BilinearForm quad;   // zero-diagonal by construction
  SparseVec lin;       // q_k
  double constant = 0; // gamma_k
  std::string tag;
  double value(const std::vector<double>& x) const;
};

struct LinRow {
  SparseVec lin;       // row of L
  double rhs = 0;      // b entry; row reads lin . x (= or <=) rhs
  std::string tag;
  double value(const std::vector<double>& x) const;  // lin . x - rhs
};

/// Index map realizing the variable ordering of the penalized formulation:
/// the a-block (time-major, arc order), then p, q, v blocks, with the lambda
/// block appended after the core variables. State time tau runs 0..MT with
/// tau = 0 the initial data (not a variable).
class VarLayout {
 public:
  VarLayout() = default;
  VarLayout(const Instance& inst);

  int a(int t, int arc) const { return t * na_ + arc; }
  // p variables: sources and tanks for tau in 1..MT-1, tanks at tau = MT.
  int p(int tau, int node) const;
  bool has_p(int tau, int node) const;
  // q variables: plants for tau in 0..MT-1, sources for tau in 1..MT-1,
  // tanks for tau in 1..MT.
  int q(int tau, int node) const;
  bool has_q(int tau, int node) const;
  int v(int t, int plant) const { return v0_ + t * np_ + plant; }

  int count_a() const { return p0_; }
  int count_p() const { return q0_ - p0_; }
  int count_q() const { return v0_ - q0_; }
  int count_v() const { return n_ - v0_; }
  int size() const { return n_; }

 private:
  int ns_ = 0, ni_ = 0, np_ = 0, na_ = 0, mt_ = 0;
  int p0_ = 0, q0_ = 0, v0_ = 0, n_ = 0;
};

/// General form of the penalty-relaxed program: a linear objective, m
/// zero-diagonal quadratic equality rows and d linear equality rows (each
/// relaxed into a +-lambda band with penalty delta), e linear inequality
/// rows, and box bounds on x. Lambda variables are implicit trailing
/// coordinates, one per banded row, each bounded below by zero.
struct Qcqp {
  int n = 0;
  std::vector<double> objective;        // q_0, length n
  std::vector<QuadRow> quad_rows;       // m rows, == 0 before relaxation
  std::vector<QuadRow> quad_ineq_rows;  // plain quadratic rows, value <= 0
  std::vector<LinRow> lin_eq_rows;      // d rows, == rhs before relaxation
  std::vector<LinRow> lin_ineq_rows;    // e rows, <= rhs
  std::vector<double> lower, upper;     // bounds on x, length n
  double delta = 1e-4;

  int lambda_count() const {
    return static_cast<int>(quad_rows.size() + lin_eq_rows.size());
  }
  void validate() const;  // throws on diagonal entries or bound violations
};

struct QcqpEval {
  double objective = 0;                 // includes delta * sum(lambda)
  std::vector<double> quad_values;      // row value of each quadratic row
  std::vector<double> quad_ineq_values;
  std::vector<double> lin_eq_values;    // L x - b
  std::vector<double> lin_ineq_values;  // L x - b
  /// Largest violation of the banded/inequality system at (x, lambda).
  double max_violation(const std::vector<double>& lambda) const;
};

QcqpEval eval(const Qcqp& q, const std::vector<double>& x,
              const std::vector<double>& lambda);

/// The pairwise-product rows that replace the binary pipeline constraints:
/// for each (node, t) the sum of products of distinct entering flows,
/// distinct leaving flows, and entering x leaving cross pairs must vanish.
/// Returned rows are indexed by the layout of `layout(inst)`.
std::vector<QuadRow> eliminate_binaries(const Instance& inst);

/// Builds the full penalized program: quadratic rows (pipeline products,
/// source/tank quality dynamics, plant averaging), balance equalities,
/// shortage inequalities, relaxed bounds 0 <= a <= U, and the transport +
/// shortage objective. delta must be positive.
Qcqp build_qcqp(const Instance& inst, double delta = 1e-4);

VarLayout layout(const Instance& inst);

/// Packs a schedule into the x ordering (lambda excluded).
std::vector<double> pack_schedule(const Instance& inst, const Schedule& s);

}  // namespace pooling
