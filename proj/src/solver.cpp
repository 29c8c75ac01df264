#include "pooling/solver.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pooling {

void SolverConfig::validate() const {
  if (tol_gap <= 0 || tol_feas_primal <= 0 || tol_feas_dual <= 0)
    throw std::invalid_argument("solver config: tolerances must be positive");
  if (max_iters < 1)
    throw std::invalid_argument("solver config: max_iters must be >= 1");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal-infeasible";
    case SolveStatus::DualInfeasible: return "dual-infeasible";
    default: return "iter-limit";
  }
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

// Standard conic form  min c'x  s.t.  Ax = b,  Gx + s = h,  s in K,
// where K = R+^{nl} x SOC(d_1) x ... x SOC(d_N). Rows of G list the
// nonnegative part first, then the cone blocks in order.
struct StdForm {
  int n = 0;
  SpMat A, G, At, Gt;
  Vec b, h, c;
  int nl = 0;                   // size of the nonnegative part
  std::vector<int> soc_dims;    // cone block dimensions
  int m = 0;                    // total rows of G

  // Mapping back to user rows: eq_of_row[r] = index into y for Eq rows,
  // ineq_of_row[r] = index into z for Le/Ge rows (-1 otherwise).
  std::vector<int> eq_index, ineq_index;
  int first_cone_row = 0;
};

StdForm to_std_form(const ConicProgram& p) {
  StdForm f;
  f.n = p.num_vars;
  f.c = Vec::Zero(f.n);
  for (int i = 0; i < f.n; ++i) f.c[i] = p.objective[i];

  std::vector<Triplet> ta, tg;
  std::vector<double> bb, hh;
  f.eq_index.assign(p.rows.size(), -1);
  f.ineq_index.assign(p.rows.size(), -1);
  for (size_t r = 0; r < p.rows.size(); ++r) {
    const ConicRow& row = p.rows[r];
    if (row.lin.empty()) {
      // Empty rows are dropped; an inconsistent constant row makes the
      // program trivially infeasible which the caller sees via status.
      continue;
    }
    if (row.sense == Sense::Eq) {
      f.eq_index[r] = static_cast<int>(bb.size());
      for (auto [i, c] : row.lin) ta.emplace_back(bb.size(), i, c);
      bb.push_back(row.rhs);
    } else {
      const double sgn = row.sense == Sense::Le ? 1.0 : -1.0;
      f.ineq_index[r] = static_cast<int>(hh.size());
      for (auto [i, c] : row.lin) tg.emplace_back(hh.size(), i, sgn * c);
      hh.push_back(sgn * row.rhs);
    }
  }
  f.nl = static_cast<int>(hh.size());
  f.first_cone_row = f.nl;
  for (const SocBlock& blk : p.cones) {
    if (blk.entries.size() < 2)
      throw std::invalid_argument("solve: cone block must have dimension >= 2");
    f.soc_dims.push_back(static_cast<int>(blk.entries.size()));
    for (const AffineExpr& e : blk.entries) {
      for (auto [i, c] : e.terms) tg.emplace_back(hh.size(), i, -c);
      hh.push_back(e.constant);
    }
  }
  f.m = static_cast<int>(hh.size());
  const int neq = static_cast<int>(bb.size());
  f.A.resize(neq, f.n);
  f.A.setFromTriplets(ta.begin(), ta.end());
  f.G.resize(f.m, f.n);
  f.G.setFromTriplets(tg.begin(), tg.end());
  f.b = Eigen::Map<Vec>(bb.data(), neq);
  f.h = Eigen::Map<Vec>(hh.data(), f.m);
  f.At = f.A.transpose();
  f.Gt = f.G.transpose();
  return f;
}

// Ruiz-style equilibration on the stacked [A; G] with matching scalings of
// c, b, h. Cone rows within one block share a single scaling factor so the
// cone geometry is preserved.
struct Equilibration {
  Vec e_col, e_row_a, e_row_g;

  void compute(StdForm& f, int sweeps = 3) {
    const int n = f.n, p = static_cast<int>(f.A.rows()), m = f.m;
    e_col = Vec::Ones(n);
    e_row_a = Vec::Ones(p);
    e_row_g = Vec::Ones(m);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      Vec cmax = Vec::Zero(n), ramax = Vec::Zero(p), rgmax = Vec::Zero(m);
      for (int j = 0; j < n; ++j)
        for (SpMat::InnerIterator it(f.A, j); it; ++it) {
          const double a = std::abs(it.value());
          cmax[j] = std::max(cmax[j], a);
          ramax[it.row()] = std::max(ramax[it.row()], a);
        }
      for (int j = 0; j < n; ++j)
        for (SpMat::InnerIterator it(f.G, j); it; ++it) {
          const double a = std::abs(it.value());
          cmax[j] = std::max(cmax[j], a);
          rgmax[it.row()] = std::max(rgmax[it.row()], a);
        }
      // One factor per SOC block: use the block max.
      int row = f.nl;
      for (int d : f.soc_dims) {
        const double blk = rgmax.segment(row, d).maxCoeff();
        rgmax.segment(row, d).setConstant(blk);
        row += d;
      }
      auto norm_scale = [](double v) {
        return v > 0 ? 1.0 / std::sqrt(v) : 1.0;
      };
      Vec sc = cmax.unaryExpr(norm_scale);
      Vec sa = ramax.unaryExpr(norm_scale);
      Vec sg = rgmax.unaryExpr(norm_scale);
      for (int j = 0; j < n; ++j)
        for (SpMat::InnerIterator it(f.A, j); it; ++it)
          it.valueRef() *= sc[j] * sa[it.row()];
      for (int j = 0; j < n; ++j)
        for (SpMat::InnerIterator it(f.G, j); it; ++it)
          it.valueRef() *= sc[j] * sg[it.row()];
      e_col.array() *= sc.array();
      e_row_a.array() *= sa.array();
      e_row_g.array() *= sg.array();
    }
    f.c.array() *= e_col.array();
    f.b.array() *= e_row_a.array();
    f.h.array() *= e_row_g.array();
    f.At = f.A.transpose();
    f.Gt = f.G.transpose();
  }
};

struct SocScaling {
  double eta = 1.0;  // sqrt of snorm/znorm
  double a = 1.0;    // scaled NT point leading entry
  Vec q;             // scaled NT point tail
};

// Cone-wise operations over the composite cone variable layout.
class ConeOps {
 public:
  int nl = 0;
  std::vector<int> dims;
  std::vector<int> starts;  // start offset of each SOC block
  std::vector<SocScaling> soc;
  Vec lp_v;  // s_i / z_i for the nonnegative part
  Vec lp_w;  // sqrt of lp_v

  void init(int nl_, const std::vector<int>& dims_) {
    nl = nl_;
    dims = dims_;
    starts.clear();
    int off = nl;
    for (int d : dims) {
      starts.push_back(off);
      off += d;
    }
    soc.resize(dims.size());
    lp_v = Vec::Ones(nl);
    lp_w = Vec::Ones(nl);
  }

  int total() const {
    int t = nl;
    for (int d : dims) t += d;
    return t;
  }
  double barrier_degree() const { return nl + static_cast<double>(dims.size()); }

  // Identity scalings, used for the initialization solves.
  void set_identity() {
    lp_v.setOnes();
    lp_w.setOnes();
    for (size_t k = 0; k < dims.size(); ++k) {
      soc[k].eta = 1.0;
      soc[k].a = 1.0;
      soc[k].q = Vec::Zero(dims[k] - 1);
    }
  }

  // Nesterov-Todd scaling for the current (s, z); returns false if either
  // point has left the cone interior.
  bool update(const Vec& s, const Vec& z) {
    for (int i = 0; i < nl; ++i) {
      if (s[i] <= 0 || z[i] <= 0) return false;
      lp_v[i] = s[i] / z[i];
      lp_w[i] = std::sqrt(lp_v[i]);
    }
    for (size_t k = 0; k < dims.size(); ++k) {
      const int st = starts[k], d = dims[k];
      const double sres =
          s[st] * s[st] - s.segment(st + 1, d - 1).squaredNorm();
      const double zres =
          z[st] * z[st] - z.segment(st + 1, d - 1).squaredNorm();
      if (sres <= 0 || zres <= 0 || s[st] <= 0 || z[st] <= 0) return false;
      const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
      Vec sbar = s.segment(st, d) / snorm;
      Vec zbar = z.segment(st, d) / znorm;
      const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
      SocScaling& sc = soc[k];
      sc.eta = std::sqrt(snorm / znorm);
      sc.a = (0.5 / gamma) * (sbar[0] + zbar[0]);
      sc.q = (0.5 / gamma) * (sbar.tail(d - 1) - zbar.tail(d - 1));
    }
    return true;
  }

  // lambda = W z (symmetric NT scaling applied to z).
  void scale(const Vec& z, Vec& out) const {
    out.resize(total());
    out.head(nl) = lp_w.cwiseProduct(z.head(nl));
    for (size_t k = 0; k < dims.size(); ++k) {
      const int st = starts[k], d = dims[k];
      const SocScaling& sc = soc[k];
      const double zeta = sc.q.dot(z.segment(st + 1, d - 1));
      const double factor = z[st] + zeta / (1.0 + sc.a);
      out[st] = sc.eta * (sc.a * z[st] + zeta);
      out.segment(st + 1, d - 1) =
          sc.eta * (z.segment(st + 1, d - 1) + factor * sc.q);
    }
  }

  // y += W^2 x (used by iterative refinement).
  void scale2_add(const Vec& x, Vec& y) const {
    y.head(nl) += lp_v.cwiseProduct(x.head(nl));
    for (size_t k = 0; k < dims.size(); ++k) {
      const int st = starts[k], d = dims[k];
      Eigen::MatrixXd V = dense_block(k);
      y.segment(st, d) += V * x.segment(st, d);
    }
  }

  // Dense W^2 block of one SOC cone: eta^2 * (J + 2 w wbar') with
  // wbar = (a, q); computed explicitly as W * W.
  Eigen::MatrixXd dense_block(size_t k) const {
    const int d = dims[k];
    const SocScaling& sc = soc[k];
    Eigen::MatrixXd W(d, d);
    W(0, 0) = sc.a;
    for (int i = 1; i < d; ++i) {
      W(0, i) = sc.q[i - 1];
      W(i, 0) = sc.q[i - 1];
    }
    Eigen::MatrixXd tail = Eigen::MatrixXd::Identity(d - 1, d - 1) +
                           sc.q * sc.q.transpose() / (1.0 + sc.a);
    W.block(1, 1, d - 1, d - 1) = tail;
    return (sc.eta * sc.eta) * (W * W).eval();
  }

  // w = u o v (Jordan product); returns sum of |first components| for mu.
  void product(const Vec& u, const Vec& v, Vec& w) const {
    w.resize(total());
    w.head(nl) = u.head(nl).cwiseProduct(v.head(nl));
    for (size_t k = 0; k < dims.size(); ++k) {
      const int st = starts[k], d = dims[k];
      w[st] = u.segment(st, d).dot(v.segment(st, d));
      w.segment(st + 1, d - 1) = u[st] * v.segment(st + 1, d - 1) +
                                 v[st] * u.segment(st + 1, d - 1);
    }
  }

  // v = u \ w (inverse Jordan product).
  void division(const Vec& u, const Vec& w, Vec& v) const {
    v.resize(total());
    v.head(nl) = w.head(nl).cwiseQuotient(u.head(nl));
    for (size_t k = 0; k < dims.size(); ++k) {
      const int st = starts[k], d = dims[k];
      const double u0 = u[st], w0 = w[st];
      const double rho = u0 * u0 - u.segment(st + 1, d - 1).squaredNorm();
      const double zeta =
          u.segment(st + 1, d - 1).dot(w.segment(st + 1, d - 1));
      const double factor = (zeta / u0 - w0) / rho;
      v[st] = (u0 * w0 - zeta) / rho;
      v.segment(st + 1, d - 1) =
          factor * u.segment(st + 1, d - 1) + w.segment(st + 1, d - 1) / u0;
    }
  }

  // Subtracts sigma*mu from the identity-element components of w.
  void sub_sigma_mu(double sigmamu, Vec& w) const {
    w.head(nl).array() -= sigmamu;
    for (size_t k = 0; k < dims.size(); ++k) w[starts[k]] -= sigmamu;
  }

  // Largest step alpha with lambda + alpha*d staying in the cone, for the
  // scaled directions ds and dz; returns a bound on 1/alpha pieces.
  double line_search(const Vec& lambda, const Vec& ds, const Vec& dz) const {
    double inv_alpha = 0.0;
    for (int i = 0; i < nl; ++i) {
      inv_alpha = std::max(inv_alpha, -ds[i] / lambda[i]);
      inv_alpha = std::max(inv_alpha, -dz[i] / lambda[i]);
    }
    for (size_t k = 0; k < dims.size(); ++k) {
      const int st = starts[k], d = dims[k];
      const double lres =
          lambda[st] * lambda[st] - lambda.segment(st + 1, d - 1).squaredNorm();
      if (lres <= 0) continue;
      const double lnorm = std::sqrt(lres);
      Vec lbar = lambda.segment(st, d) / lnorm;
      auto dir_bound = [&](const Vec& dvec) {
        const double lbar_d = lbar[0] * dvec[st] -
                              lbar.tail(d - 1).dot(dvec.segment(st + 1, d - 1));
        Vec rho(d);
        rho[0] = lbar_d / lnorm;
        const double factor = (lbar_d + dvec[st]) / (lbar[0] + 1.0);
        rho.tail(d - 1) =
            (dvec.segment(st + 1, d - 1) - factor * lbar.tail(d - 1)) / lnorm;
        return rho.tail(d - 1).norm() - rho[0];
      };
      inv_alpha = std::max({inv_alpha, dir_bound(ds), dir_bound(dz)});
    }
    return inv_alpha;
  }

  // Shifts a point onto the cone interior: out = r + (1+alpha)*e when needed.
  void bring_to_cone(const Vec& r, Vec& out) const {
    double alpha = -0.99;
    for (int i = 0; i < nl; ++i) alpha = std::max(alpha, -r[i]);
    for (size_t k = 0; k < dims.size(); ++k) {
      const int st = starts[k], d = dims[k];
      const double res =
          r[st] - r.segment(st + 1, d - 1).norm();
      alpha = std::max(alpha, -res);
    }
    out = r;
    if (alpha >= 0) {
      out.head(nl).array() += 1.0 + alpha;
      for (size_t k = 0; k < dims.size(); ++k) out[starts[k]] += 1.0 + alpha;
    }
  }
};

// Sparse KKT system [ dI  A'  G' ; A  -dI  0 ; G  0  -(W^2+dI) ] held in
// upper-triangular CSC form with cached slots for the scaling-dependent
// entries, so each iteration only rewrites values and refactorizes.
class KktSystem {
 public:
  void setup(const StdForm& f, double reg) {
    reg_ = reg;
    n_ = f.n;
    p_ = static_cast<int>(f.A.rows());
    m_ = f.m;
    dim_ = n_ + p_ + m_;
    std::vector<Triplet> trips;
    for (int i = 0; i < n_; ++i) trips.emplace_back(i, i, reg_);
    for (int j = 0; j < n_; ++j)
      for (SpMat::InnerIterator it(f.A, j); it; ++it)
        trips.emplace_back(j, n_ + it.row(), it.value());
    for (int i = 0; i < p_; ++i) trips.emplace_back(n_ + i, n_ + i, -reg_);
    for (int j = 0; j < n_; ++j)
      for (SpMat::InnerIterator it(f.G, j); it; ++it)
        trips.emplace_back(j, n_ + p_ + it.row(), it.value());
    // Scaling block: diagonal slots for the nonnegative part, dense upper
    // blocks per cone.
    for (int i = 0; i < f.nl; ++i)
      trips.emplace_back(n_ + p_ + i, n_ + p_ + i, -1.0 - reg_);
    int row = f.nl;
    for (int d : f.soc_dims) {
      for (int r = 0; r < d; ++r)
        for (int c = r; c < d; ++c)
          trips.emplace_back(n_ + p_ + row + r, n_ + p_ + row + c,
                             r == c ? -1.0 - reg_ : 0.0);
      row += d;
    }
    K_.resize(dim_, dim_);
    K_.setFromTriplets(trips.begin(), trips.end());
    K_.makeCompressed();
    cache_slots(f);
    ldlt_.analyzePattern(K_.selfadjointView<Eigen::Upper>());
  }

  // Writes the current scalings into the cached slots and refactorizes.
  // A failed pivot retries with geometrically stronger regularization.
  bool factorize(const ConeOps& cones) {
    for (double reg = reg_; reg <= 1e4 * reg_; reg *= 100.0) {
      for (int i = 0; i < n_; ++i) *x_slots_[i] = reg;
      for (int i = 0; i < p_; ++i) *y_slots_[i] = -reg;
      for (int i = 0; i < cones.nl; ++i) *lp_slots_[i] = -cones.lp_v[i] - reg;
      size_t ptr = 0;
      for (size_t k = 0; k < cones.dims.size(); ++k) {
        Eigen::MatrixXd V = cones.dense_block(k);
        const int d = cones.dims[k];
        for (int r = 0; r < d; ++r)
          for (int c = r; c < d; ++c)
            *soc_slots_[ptr++] = -V(r, c) - (r == c ? reg : 0.0);
      }
      ldlt_.factorize(K_.selfadjointView<Eigen::Upper>());
      if (ldlt_.info() == Eigen::Success) return true;
    }
    return false;
  }

  bool factorize_identity(const ConeOps& cones) {
    ConeOps id = cones;
    id.set_identity();
    return factorize(id);
  }

  // Solves the KKT system with iterative refinement against the
  // unregularized matrix. `initialize` selects the -I scaling block used
  // for the two initialization solves.
  int solve(const StdForm& f, const ConeOps& cones, const Vec& rhs, Vec& dx,
            Vec& dy, Vec& dz, bool initialize, double refine_tol,
            int max_refine) const {
    Vec sol = ldlt_.solve(rhs);
    const double thresh = (1.0 + rhs.lpNorm<Eigen::Infinity>()) * refine_tol;
    double prev_err = std::numeric_limits<double>::max();
    Vec best = sol;
    int pass = 0;
    for (; pass <= max_refine; ++pass) {
      Vec ex = rhs.head(n_);
      Vec ey = rhs.segment(n_, p_);
      Vec ez = rhs.tail(m_);
      const Vec xs = sol.head(n_);
      const Vec ys = sol.segment(n_, p_);
      const Vec zs = sol.tail(m_);
      ex -= f.At * ys + f.Gt * zs;
      ey -= f.A * xs;
      ez -= f.G * xs;
      if (initialize)
        ez += zs;
      else
        cones.scale2_add(zs, ez);
      double err = std::max(ex.lpNorm<Eigen::Infinity>(),
                            ez.size() ? ez.lpNorm<Eigen::Infinity>() : 0.0);
      if (ey.size()) err = std::max(err, ey.lpNorm<Eigen::Infinity>());
      if (err >= prev_err) {
        sol = best;
        break;
      }
      best = sol;
      prev_err = err;
      if (err < thresh || pass == max_refine) break;
      Vec e(dim_);
      e << ex, ey, ez;
      sol += ldlt_.solve(e);
    }
    dx = sol.head(n_);
    dy = sol.segment(n_, p_);
    dz = sol.tail(m_);
    return pass;
  }

 private:
  void cache_slots(const StdForm& f) {
    x_slots_.clear();
    y_slots_.clear();
    lp_slots_.clear();
    soc_slots_.clear();
    auto slot = [this](int r, int c) -> double* {
      for (SpMat::InnerIterator it(K_, c); it; ++it)
        if (it.row() == r) return &it.valueRef();
      throw std::logic_error("kkt slot lookup failed");
    };
    for (int i = 0; i < n_; ++i) x_slots_.push_back(slot(i, i));
    for (int i = 0; i < p_; ++i) y_slots_.push_back(slot(n_ + i, n_ + i));
    for (int i = 0; i < f.nl; ++i)
      lp_slots_.push_back(slot(n_ + p_ + i, n_ + p_ + i));
    int row = f.nl;
    for (int d : f.soc_dims) {
      for (int r = 0; r < d; ++r)
        for (int c = r; c < d; ++c)
          soc_slots_.push_back(slot(n_ + p_ + row + r, n_ + p_ + row + c));
      row += d;
    }
  }

  SpMat K_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Upper> ldlt_;
  std::vector<double*> x_slots_, y_slots_, lp_slots_, soc_slots_;
  double reg_ = 1e-9;
  int n_ = 0, p_ = 0, m_ = 0, dim_ = 0;
};

struct Iterate {
  Vec x, y, z, s, lambda;
  double tau = 1.0, kap = 1.0;
};

}  // namespace

Solution solve(const ConicProgram& prog, const SolverConfig& cfg) {
  cfg.validate();
  if (prog.num_vars < 1)
    throw std::invalid_argument("solve: program has no variables");
  if (static_cast<int>(prog.objective.size()) != prog.num_vars)
    throw std::invalid_argument("solve: objective size mismatch");

  StdForm f = to_std_form(prog);
  if (f.m == 0 && f.A.rows() == 0) {
    // No constraints at all: optimal at zero or unbounded.
    Solution sol;
    sol.x.assign(prog.num_vars, 0.0);
    const bool zero_obj =
        std::all_of(prog.objective.begin(), prog.objective.end(),
                    [](double v) { return v == 0.0; });
    sol.status = zero_obj ? SolveStatus::Optimal : SolveStatus::DualInfeasible;
    sol.objective = prog.objective_constant;
    sol.row_duals.assign(prog.rows.size(), 0.0);
    sol.message = zero_obj ? "unconstrained zero objective"
                           : "unconstrained nonzero objective";
    return sol;
  }

  Equilibration eq;
  eq.compute(f);

  ConeOps cones;
  cones.init(f.nl, f.soc_dims);

  KktSystem kkt;
  kkt.setup(f, cfg.static_reg);

  const int n = f.n, p = static_cast<int>(f.A.rows()), m = f.m;
  Iterate w;
  w.x = Vec::Zero(n);
  w.y = Vec::Zero(p);
  w.z = Vec::Zero(m);
  w.s = Vec::Zero(m);

  // Initialization: solve the two systems with identity scaling.
  if (!kkt.factorize_identity(cones))
    throw std::runtime_error("solve: initial KKT factorization failed");
  {
    Vec rhs1 = Vec::Zero(n + p + m);
    rhs1.segment(n, p) = f.b;
    rhs1.tail(m) = f.h;
    Vec dx, dy, dz;
    kkt.solve(f, cones, rhs1, dx, dy, dz, true, cfg.refine_tol, cfg.max_refine);
    w.x = dx;
    cones.bring_to_cone(-dz, w.s);

    Vec rhs2 = Vec::Zero(n + p + m);
    rhs2.head(n) = -f.c;
    kkt.solve(f, cones, rhs2, dx, dy, dz, true, cfg.refine_tol, cfg.max_refine);
    w.y = dy;
    cones.bring_to_cone(dz, w.z);
  }
  w.tau = 1.0;
  w.kap = 1.0;

  const double resx0 = std::max(1.0, f.c.norm());
  const double resy0 = std::max(1.0, f.b.norm());
  const double resz0 = std::max(1.0, f.h.norm());
  const double nu = cones.barrier_degree();

  Solution out;
  out.row_duals.assign(prog.rows.size(), 0.0);

  Vec rx, ry, rz;
  double rt = 0, cx = 0, by = 0, hz = 0;
  double pres = 0, dres = 0, gap = 0, relgap = -1, pcost = 0, dcost = 0;
  double pinfres = -1, dinfres = -1;
  double mu = 1.0;

  auto compute_residuals = [&] {
    rx = -(f.Gt * w.z);
    if (p > 0) rx -= f.At * w.y;
    const double hresx = rx.norm();
    rx -= w.tau * f.c;
    double hresy = 0;
    if (p > 0) {
      ry = f.A * w.x;
      hresy = ry.norm();
      ry -= w.tau * f.b;
    } else {
      ry = Vec::Zero(0);
    }
    rz = w.s + f.G * w.x;
    const double hresz = rz.norm();
    rz -= w.tau * f.h;
    cx = f.c.dot(w.x);
    by = p > 0 ? f.b.dot(w.y) : 0.0;
    hz = f.h.dot(w.z);
    rt = w.kap + cx + by + hz;

    const double nx = w.x.norm(), ny = w.y.norm(), nz = w.z.norm(),
                 ns = w.s.norm();
    gap = w.s.dot(w.z);
    mu = (gap + w.kap * w.tau) / (nu + 1.0);
    pcost = cx / w.tau;
    dcost = -(hz + by) / w.tau;
    if (pcost < 0)
      relgap = gap / (-pcost);
    else if (dcost > 0)
      relgap = gap / dcost;
    else
      relgap = -1;
    const double nry = p > 0 ? ry.norm() / std::max(resy0 + nx, 1.0) : 0.0;
    const double nrz = rz.norm() / std::max(resz0 + nx + ns, 1.0);
    pres = std::max(nry, nrz) / w.tau;
    dres = rx.norm() / std::max(resx0 + ny + nz, 1.0) / w.tau;
    pinfres = dinfres = -1;
    if ((hz + by) / std::max(ny + nz, 1.0) < -1e-9)
      pinfres = hresx / std::max(ny + nz, 1.0);
    if (cx / std::max(nx, 1.0) < -1e-9)
      dinfres = std::max(hresy / std::max(nx, 1.0),
                         hresz / std::max(nx + ns, 1.0));
  };

  enum class Verdict { None, Optimal, Reduced, PInf, DInf };
  auto check_exit = [&](bool reduced) {
    const double ft = reduced ? cfg.tol_feas_reduced : std::min(cfg.tol_feas_primal, cfg.tol_feas_dual);
    const double at = reduced ? cfg.tol_gap_reduced : cfg.tol_gap;
    const double rl = reduced ? cfg.tol_gap_reduced : cfg.tol_gap;
    if ((-cx > 0 || -by - hz >= -at) && pres < ft && dres < ft &&
        (gap < at || (relgap >= 0 && relgap < rl)))
      return reduced ? Verdict::Reduced : Verdict::Optimal;
    if (dinfres >= 0 && dinfres < ft && w.tau < w.kap) return Verdict::DInf;
    if (pinfres >= 0 && pinfres < ft && w.tau < w.kap) return Verdict::PInf;
    return Verdict::None;
  };

  auto finish = [&](SolveStatus st, const std::string& msg) {
    out.status = st;
    out.message = msg;
    out.iterations = static_cast<int>(out.history.size());
    out.primal_res = pres;
    out.dual_res = dres;
    out.gap = gap;
    // Unscale: divide variables by tau, undo equilibration.
    const double t = w.tau > 0 ? w.tau : 1.0;
    Vec xu = w.x.cwiseProduct(eq.e_col) / t;
    Vec yu = w.y.cwiseProduct(eq.e_row_a) / t;
    Vec zu = w.z.cwiseProduct(eq.e_row_g) / t;
    out.x.assign(xu.data(), xu.data() + n);
    out.objective = prog.objective_constant;
    for (int i = 0; i < n; ++i) out.objective += prog.objective[i] * out.x[i];
    double dobj = prog.objective_constant;
    for (size_t r = 0; r < prog.rows.size(); ++r) {
      const ConicRow& row = prog.rows[r];
      double d = 0;
      if (f.eq_index[r] >= 0) d = yu[f.eq_index[r]];
      if (f.ineq_index[r] >= 0) d = zu[f.ineq_index[r]];
      out.row_duals[r] = d;
      dobj -= row.rhs * (row.sense == Sense::Eq || row.sense == Sense::Le
                             ? d
                             : -d);
    }
    out.cone_duals.clear();
    int crow = f.first_cone_row;
    for (int d : f.soc_dims) {
      std::vector<double> blk(zu.data() + crow, zu.data() + crow + d);
      out.cone_duals.push_back(blk);
      crow += d;
    }
    // Dual objective -b'y - h'z in user terms.
    for (size_t b = 0; b < prog.cones.size(); ++b)
      for (size_t j = 0; j < prog.cones[b].entries.size(); ++j)
        dobj -= prog.cones[b].entries[j].constant * out.cone_duals[b][j];
    out.dual_objective = dobj;
    return out;
  };

  Iterate best = w;
  double best_score = std::numeric_limits<double>::max();
  double pres_prev = std::numeric_limits<double>::max();

  Vec dx1(n), dy1(p), dz1(m), dx2(n), dy2(p), dz2(m);
  Vec rhs1(n + p + m), rhs2(n + p + m);
  Vec ds_by_w(m), w_dz(m), dsc(m), ds(m), tmp(m);

  for (int iter = 0; iter <= cfg.max_iters; ++iter) {
    compute_residuals();

    IterStat st{iter, pcost, dcost, gap, pres, dres, mu, 0.0};
    out.history.push_back(st);
    if (cfg.verbose)
      std::fprintf(stderr,
                   "it %3d  pcost %+.6e  dcost %+.6e  gap %.2e  pres %.2e  "
                   "dres %.2e  mu %.2e\n",
                   iter, pcost, dcost, gap, pres, dres, mu);

    Verdict v = check_exit(false);
    if (v == Verdict::Optimal) return finish(SolveStatus::Optimal, "optimal");
    if (v == Verdict::PInf)
      return finish(SolveStatus::PrimalInfeasible, "primal infeasibility certificate");
    if (v == Verdict::DInf)
      return finish(SolveStatus::DualInfeasible, "dual infeasibility certificate");

    // Divergence safeguard: fall back to the best iterate seen.
    const double pres_floor = 10.0 * std::min(cfg.tol_feas_primal, 1e-7);
    if (iter > 0 &&
        ((pres > 1e3 * pres_prev && pres > pres_floor) || gap < -1e-10)) {
      w = best;
      compute_residuals();
      const Verdict vs = check_exit(true);
      if (vs == Verdict::Reduced)
        return finish(SolveStatus::IterLimit,
                      "reduced accuracy after unreliable direction");
      return finish(SolveStatus::IterLimit, "numerical problems");
    }
    pres_prev = pres;
    if (iter == cfg.max_iters) {
      v = check_exit(true);
      return finish(SolveStatus::IterLimit,
                    v == Verdict::Reduced ? "iteration limit at reduced accuracy"
                                          : "iteration limit");
    }

    const double score = std::max({pres, dres}) + std::max(gap, 0.0);
    if (iter == 0 || score < best_score) {
      best = w;
      best_score = score;
    }

    if (!cones.update(w.s, w.z)) {
      w = best;
      compute_residuals();
      const Verdict vr = check_exit(true);
      return finish(SolveStatus::IterLimit,
                    vr == Verdict::Reduced
                        ? "cone boundary reached at reduced accuracy"
                        : "cone boundary reached");
    }
    cones.scale(w.z, w.lambda);

    if (!kkt.factorize(cones))
      return finish(SolveStatus::IterLimit, "KKT factorization failed");

    rhs1.setZero();
    rhs1.head(n) = -f.c;
    rhs1.segment(n, p) = f.b;
    rhs1.tail(m) = f.h;
    kkt.solve(f, cones, rhs1, dx1, dy1, dz1, false, cfg.refine_tol,
              cfg.max_refine);

    // Affine direction.
    rhs2.head(n) = rx;
    rhs2.segment(n, p) = -ry;
    rhs2.tail(m) = w.s - rz;
    kkt.solve(f, cones, rhs2, dx2, dy2, dz2, false, cfg.refine_tol,
              cfg.max_refine);

    const double dtau_denom =
        w.kap / w.tau - f.c.dot(dx1) - f.b.dot(dy1) - f.h.dot(dz1);
    const double dtau_aff =
        (rt - w.kap + f.c.dot(dx2) + f.b.dot(dy2) + f.h.dot(dz2)) / dtau_denom;
    dz2 += dtau_aff * dz1;
    cones.scale(dz2, w_dz);
    ds_by_w = -w_dz - w.lambda;
    const double dkap_aff = -w.kap - (w.kap / w.tau) * dtau_aff;

    double inv_alpha = cones.line_search(w.lambda, ds_by_w, w_dz);
    if (dtau_aff < 0) inv_alpha = std::max(inv_alpha, -dtau_aff / w.tau);
    if (dkap_aff < 0) inv_alpha = std::max(inv_alpha, -dkap_aff / w.kap);
    const double alpha_aff = std::min(1.0, inv_alpha > 0 ? 1.0 / inv_alpha : 1.0);

    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3.0),
                                    cfg.sigma_min, cfg.sigma_max);
    const double sigmamu = sigma * mu;

    // Combined direction.
    cones.product(w.lambda, w.lambda, dsc);
    cones.product(ds_by_w, w_dz, tmp);
    dsc += tmp;
    cones.sub_sigma_mu(sigmamu, dsc);
    cones.division(w.lambda, dsc, ds_by_w);  // lambda \ ds
    cones.scale(ds_by_w, tmp);               // W (lambda \ ds)

    const double one_minus_sigma = 1.0 - sigma;
    rhs2.head(n) = one_minus_sigma * rx;
    rhs2.segment(n, p) = -one_minus_sigma * ry;
    rhs2.tail(m) = -one_minus_sigma * rz + tmp;
    kkt.solve(f, cones, rhs2, dx2, dy2, dz2, false, cfg.refine_tol,
              cfg.max_refine);

    const double bkap = w.kap * w.tau + dkap_aff * dtau_aff - sigmamu;
    const double dtau = (one_minus_sigma * rt - bkap / w.tau + f.c.dot(dx2) +
                         f.b.dot(dy2) + f.h.dot(dz2)) /
                        dtau_denom;
    dx2 += dtau * dx1;
    dy2 += dtau * dy1;
    dz2 += dtau * dz1;
    cones.scale(dz2, w_dz);
    ds_by_w = -(ds_by_w + w_dz);
    const double dkap = -(bkap + w.kap * dtau) / w.tau;

    inv_alpha = cones.line_search(w.lambda, ds_by_w, w_dz);
    if (dtau < 0) inv_alpha = std::max(inv_alpha, -dtau / w.tau);
    if (dkap < 0) inv_alpha = std::max(inv_alpha, -dkap / w.kap);
    double alpha = std::min(1.0, inv_alpha > 0 ? 1.0 / inv_alpha : 1.0);
    alpha *= cfg.step_fraction;
    out.history.back().step = alpha;

    if (alpha < 1e-10) {
      w = best;
      compute_residuals();
      const Verdict vr = check_exit(true);
      return finish(SolveStatus::IterLimit,
                    vr == Verdict::Reduced ? "stalled at reduced accuracy"
                                           : "stalled, no progress possible");
    }

    cones.scale(ds_by_w, ds);  // ds = W * (W \ ds)
    w.x += alpha * dx2;
    w.y += alpha * dy2;
    w.z += alpha * dz2;
    w.s += alpha * ds;
    w.kap += alpha * dkap;
    w.tau += alpha * dtau;
  }
  return finish(SolveStatus::IterLimit, "iteration limit");
}

CertifyReport certify(const Solution& sol, const ConicProgram& p, double tol) {
  CertifyReport rep;
  auto add = [&](const std::string& name, double value, double t) {
    rep.checks.push_back({name, value, t, value <= t});
  };
  const int n = p.num_vars;
  const std::vector<double>& x = sol.x;

  double worst_eq = 0, worst_ineq = 0, worst_cone = 0;
  for (const auto& row : p.rows) {
    double v = -row.rhs;
    for (auto [i, c] : row.lin) v += c * x[i];
    if (row.sense == Sense::Eq)
      worst_eq = std::max(worst_eq, std::abs(v));
    else if (row.sense == Sense::Le)
      worst_ineq = std::max(worst_ineq, v);
    else
      worst_ineq = std::max(worst_ineq, -v);
  }
  for (const auto& blk : p.cones) {
    std::vector<double> e(blk.entries.size());
    for (size_t j = 0; j < e.size(); ++j) e[j] = blk.entries[j].value(x);
    double tail = 0;
    for (size_t j = 1; j < e.size(); ++j) tail += e[j] * e[j];
    worst_cone = std::max(worst_cone, std::sqrt(tail) - e[0]);
  }
  add("primal-eq", worst_eq, tol);
  add("primal-ineq", worst_ineq, tol);
  add("primal-cone", worst_cone, tol);

  // Stationarity: c + sum_eq y a + sum_le z g - sum_ge z g - sum F'u = 0.
  std::vector<double> grad(p.objective.begin(), p.objective.end());
  double dual_sign_ok = 0;
  for (size_t r = 0; r < p.rows.size(); ++r) {
    const auto& row = p.rows[r];
    const double d = r < sol.row_duals.size() ? sol.row_duals[r] : 0.0;
    const double sgn = row.sense == Sense::Ge ? -1.0 : 1.0;
    for (auto [i, c] : row.lin) grad[i] += sgn * d * c;
    if (row.sense != Sense::Eq) dual_sign_ok = std::max(dual_sign_ok, -d);
  }
  double dual_cone_viol = 0;
  for (size_t b = 0; b < p.cones.size(); ++b) {
    const auto& blk = p.cones[b];
    const auto& u = sol.cone_duals.size() > b ? sol.cone_duals[b]
                                              : std::vector<double>(blk.entries.size(), 0.0);
    for (size_t j = 0; j < blk.entries.size(); ++j)
      for (auto [i, c] : blk.entries[j].terms) grad[i] -= u[j] * c;
    double tail = 0;
    for (size_t j = 1; j < u.size(); ++j) tail += u[j] * u[j];
    dual_cone_viol = std::max(dual_cone_viol, std::sqrt(tail) - u[0]);
  }
  double stat = 0, cnorm = 1;
  for (double g : grad) stat = std::max(stat, std::abs(g));
  for (double c : p.objective) cnorm = std::max(cnorm, std::abs(c));
  add("dual-stationarity", stat / cnorm, tol);
  add("dual-sign", dual_sign_ok, tol);
  add("dual-cone", dual_cone_viol, tol);

  double primal_obj = p.objective_constant;
  for (int i = 0; i < n; ++i) primal_obj += p.objective[i] * x[i];
  add("gap", std::abs(primal_obj - sol.dual_objective) /
                 (1.0 + std::abs(primal_obj)),
      tol);

  rep.all_pass = std::all_of(rep.checks.begin(), rep.checks.end(),
                             [](const CertifyCheck& c) { return c.pass; });
  return rep;
}

}  // namespace pooling
