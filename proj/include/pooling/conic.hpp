#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pooling/qcqp.hpp"

namespace pooling {

enum class Sense { Eq, Le, Ge };

struct ConicRow {
  SparseVec lin;
  double rhs = 0.0;
  Sense sense = Sense::Le;
};

/// Affine expression constant + terms . x, used for second-order cone
/// block entries.
struct AffineExpr {
  SparseVec terms;
  double constant = 0.0;
  double value(const std::vector<double>& x) const;
};

/// One second-order cone constraint: entries e_0 .. e_{d-1} are affine in x
/// and the block requires e_0(x) >= || (e_1(x), ..., e_{d-1}(x)) ||_2.
struct SocBlock {
  std::vector<AffineExpr> entries;
};

/// A linear objective over free variables with linear rows and second-order
/// cone blocks. Variable bounds are expressed as rows. Immutable once built.
struct ConicProgram {
  enum class Kind { LP, SOCP };
  Kind kind = Kind::LP;
  int num_vars = 0;
  std::vector<double> objective;  // dense, length num_vars
  double objective_constant = 0.0;
  std::vector<ConicRow> rows;
  std::vector<SocBlock> cones;

  void add_row(SparseVec lin, Sense sense, double rhs);
  /// Sparse textual dump (header with dims, triplet body); parse inverts it.
  void dump(std::ostream& os) const;
  static ConicProgram parse(std::istream& is);
};

}  // namespace pooling
