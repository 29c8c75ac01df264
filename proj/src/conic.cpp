#include "pooling/conic.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

namespace pooling {

double AffineExpr::value(const std::vector<double>& x) const {
  double v = constant;
  for (auto [i, c] : terms) v += c * x[i];
  return v;
}

void ConicProgram::add_row(SparseVec lin, Sense sense, double rhs) {
  rows.push_back({std::move(lin), rhs, sense});
}

namespace {
const char* sense_name(Sense s) {
  switch (s) {
    case Sense::Eq: return "eq";
    case Sense::Le: return "le";
    default: return "ge";
  }
}
Sense sense_from(const std::string& s) {
  if (s == "eq") return Sense::Eq;
  if (s == "le") return Sense::Le;
  if (s == "ge") return Sense::Ge;
  throw std::invalid_argument("conicprog parse: bad sense '" + s + "'");
}
}  // namespace

void ConicProgram::dump(std::ostream& os) const {
  os.precision(17);
  os << "conicprog 1\n";
  os << "kind " << (kind == Kind::LP ? "lp" : "socp") << "\n";
  os << "vars " << num_vars << "\n";
  int obj_nnz = 0;
  for (double c : objective)
    if (c != 0.0) ++obj_nnz;
  os << "objective " << obj_nnz << " " << objective_constant << "\n";
  for (int i = 0; i < num_vars; ++i)
    if (objective[i] != 0.0) os << i << " " << objective[i] << "\n";
  os << "rows " << rows.size() << "\n";
  for (const auto& r : rows) {
    os << "row " << sense_name(r.sense) << " " << r.rhs << " " << r.lin.size()
       << "\n";
    for (auto [i, c] : r.lin) os << i << " " << c << "\n";
  }
  os << "cones " << cones.size() << "\n";
  for (const auto& blk : cones) {
    os << "cone " << blk.entries.size() << "\n";
    for (const auto& e : blk.entries) {
      os << "entry " << e.constant << " " << e.terms.size() << "\n";
      for (auto [i, c] : e.terms) os << i << " " << c << "\n";
    }
  }
}

ConicProgram ConicProgram::parse(std::istream& is) {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("conicprog parse: " + what);
  };
  std::string word;
  int version = 0;
  if (!(is >> word >> version) || word != "conicprog" || version != 1)
    fail("missing or unsupported header");
  ConicProgram p;
  if (!(is >> word) || word != "kind") fail("expected kind");
  is >> word;
  p.kind = word == "socp" ? Kind::SOCP : Kind::LP;
  if (!(is >> word >> p.num_vars) || word != "vars" || p.num_vars < 0)
    fail("expected vars");
  int nnz = 0;
  if (!(is >> word >> nnz >> p.objective_constant) || word != "objective")
    fail("expected objective");
  p.objective.assign(p.num_vars, 0.0);
  for (int k = 0; k < nnz; ++k) {
    int i;
    double c;
    if (!(is >> i >> c) || i < 0 || i >= p.num_vars) fail("bad objective entry");
    p.objective[i] = c;
  }
  size_t nrows = 0;
  if (!(is >> word >> nrows) || word != "rows") fail("expected rows");
  for (size_t r = 0; r < nrows; ++r) {
    std::string sense;
    double rhs;
    size_t cnt;
    if (!(is >> word >> sense >> rhs >> cnt) || word != "row") fail("bad row");
    ConicRow row;
    row.sense = sense_from(sense);
    row.rhs = rhs;
    for (size_t k = 0; k < cnt; ++k) {
      int i;
      double c;
      if (!(is >> i >> c) || i < 0 || i >= p.num_vars) fail("bad row entry");
      row.lin.emplace_back(i, c);
    }
    p.rows.push_back(std::move(row));
  }
  size_t ncones = 0;
  if (!(is >> word >> ncones) || word != "cones") fail("expected cones");
  for (size_t b = 0; b < ncones; ++b) {
    size_t dim;
    if (!(is >> word >> dim) || word != "cone" || dim < 2) fail("bad cone");
    SocBlock blk;
    for (size_t j = 0; j < dim; ++j) {
      double cst;
      size_t cnt;
      if (!(is >> word >> cst >> cnt) || word != "entry") fail("bad cone entry");
      AffineExpr e;
      e.constant = cst;
      for (size_t k = 0; k < cnt; ++k) {
        int i;
        double c;
        if (!(is >> i >> c) || i < 0 || i >= p.num_vars) fail("bad cone term");
        e.terms.emplace_back(i, c);
      }
      blk.entries.push_back(std::move(e));
    }
    p.cones.push_back(std::move(blk));
  }
  return p;
}

}  // namespace pooling
