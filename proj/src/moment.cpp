#include "pooling/moment.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace pooling {

namespace {
long long key_of(int i, int j) {
  return static_cast<long long>(i) * (1LL << 31) + j;
}
}  // namespace

int MomentModel::entry(int i, int j) const {
  if (i > j) std::swap(i, j);
  const auto it = index_.find(key_of(i, j));
  if (it == index_.end())
    throw std::out_of_range("moment entry (" + std::to_string(i) + "," +
                            std::to_string(j) + ") outside the support");
  return it->second;
}

bool MomentModel::has_entry(int i, int j) const {
  if (i > j) std::swap(i, j);
  return index_.count(key_of(i, j)) > 0;
}

std::vector<double> MomentModel::rank_one_point(
    const std::vector<double>& x, const std::vector<double>& lambda) const {
  std::vector<double> z(1 + x.size() + lambda.size());
  z[0] = 1.0;
  std::copy(x.begin(), x.end(), z.begin() + 1);
  std::copy(lambda.begin(), lambda.end(), z.begin() + 1 + x.size());
  std::vector<double> w(entries.size());
  for (size_t f = 0; f < entries.size(); ++f)
    w[f] = z[entries[f].first] * z[entries[f].second];
  return w;
}

double MomentModel::eval_rank_one(const SparseVec& coeffs,
                                  const std::vector<double>& x,
                                  const std::vector<double>& lambda) const {
  std::vector<double> z(1 + x.size() + lambda.size());
  z[0] = 1.0;
  std::copy(x.begin(), x.end(), z.begin() + 1);
  std::copy(lambda.begin(), lambda.end(), z.begin() + 1 + x.size());
  double v = 0;
  for (auto [f, c] : coeffs)
    v += c * z[entries[f].first] * z[entries[f].second];
  return v;
}

MomentModel lift(const Qcqp& q, bool all_pairs) {
  q.validate();
  MomentModel m;
  const int n = q.n;
  const int nl = q.lambda_count();
  m.base_dim = n + nl;
  m.lifted_dim = m.base_dim + 1;
  m.delta = q.delta;

  auto add_entry = [&m](int i, int j) {
    if (i > j) std::swap(i, j);
    const long long k = key_of(i, j);
    if (!m.index_.count(k)) {
      m.index_[k] = static_cast<int>(m.entries.size());
      m.entries.emplace_back(i, j);
    }
  };
  // (0,0), first row, diagonals; then the bilinear support.
  add_entry(0, 0);
  for (int i = 1; i <= m.base_dim; ++i) add_entry(0, i);
  for (int i = 1; i <= m.base_dim; ++i) add_entry(i, i);
  auto add_quad_support = [&](const QuadRow& row) {
    for (const auto& t : row.quad.terms()) add_entry(t.i + 1, t.j + 1);
  };
  for (const auto& row : q.quad_rows) add_quad_support(row);
  for (const auto& row : q.quad_ineq_rows) add_quad_support(row);
  if (all_pairs)
    for (int i = 1; i <= m.base_dim; ++i)
      for (int j = i + 1; j <= m.base_dim; ++j) add_entry(i, j);

  for (const auto& [i, j] : m.entries)
    if (i < j) m.cone_pairs.emplace_back(i, j);
  std::sort(m.cone_pairs.begin(), m.cone_pairs.end());

  // Objective: q_0 on the first row, delta on the lambda entries.
  m.objective.assign(m.entries.size(), 0.0);
  for (int i = 0; i < n; ++i)
    if (q.objective[i] != 0.0) m.objective[m.entry(0, i + 1)] = q.objective[i];
  for (int k = 0; k < nl; ++k) m.objective[m.entry(0, n + 1 + k)] = q.delta;

  // Rows. rows[0] is the homogenizing constraint H0 . W = 1.
  m.rows.push_back({{{m.entry(0, 0), 1.0}}, 1.0, Sense::Eq, "H0"});

  auto lifted_quad = [&](const QuadRow& row, double sgn, int lambda_idx,
                         const std::string& tag) {
    MomentModel::Row lr;
    lr.tag = tag;
    for (const auto& t : row.quad.terms())
      lr.coeffs.emplace_back(m.entry(t.i + 1, t.j + 1), sgn * t.c);
    for (auto [i, c] : row.lin)
      lr.coeffs.emplace_back(m.entry(0, i + 1), sgn * c);
    if (lambda_idx >= 0)
      lr.coeffs.emplace_back(m.entry(0, n + 1 + lambda_idx), -1.0);
    lr.rhs = -sgn * row.constant;
    lr.sense = Sense::Le;
    std::sort(lr.coeffs.begin(), lr.coeffs.end());
    m.rows.push_back(std::move(lr));
  };

  int lam = 0;
  for (const auto& row : q.quad_rows) {
    lifted_quad(row, +1.0, lam, row.tag + " +");
    lifted_quad(row, -1.0, lam, row.tag + " -");
    ++lam;
  }
  for (const auto& row : q.lin_eq_rows) {
    for (double sgn : {+1.0, -1.0}) {
      MomentModel::Row lr;
      lr.tag = row.tag + (sgn > 0 ? " +" : " -");
      for (auto [i, c] : row.lin)
        lr.coeffs.emplace_back(m.entry(0, i + 1), sgn * c);
      lr.coeffs.emplace_back(m.entry(0, n + 1 + lam), -1.0);
      lr.rhs = sgn * row.rhs;
      lr.sense = Sense::Le;
      std::sort(lr.coeffs.begin(), lr.coeffs.end());
      m.rows.push_back(std::move(lr));
    }
    ++lam;
  }
  for (const auto& row : q.quad_ineq_rows) lifted_quad(row, +1.0, -1, row.tag);
  for (const auto& row : q.lin_ineq_rows) {
    MomentModel::Row lr;
    lr.tag = row.tag;
    for (auto [i, c] : row.lin) lr.coeffs.emplace_back(m.entry(0, i + 1), c);
    lr.rhs = row.rhs;
    lr.sense = Sense::Le;
    std::sort(lr.coeffs.begin(), lr.coeffs.end());
    m.rows.push_back(std::move(lr));
  }
  // Bounds become linear rows on the first-row entries.
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(q.lower[i]))
      m.rows.push_back({{{m.entry(0, i + 1), -1.0}},
                        -q.lower[i],
                        Sense::Le,
                        "lb x" + std::to_string(i)});
    if (std::isfinite(q.upper[i]))
      m.rows.push_back({{{m.entry(0, i + 1), 1.0}},
                        q.upper[i],
                        Sense::Le,
                        "ub x" + std::to_string(i)});
  }
  for (int k = 0; k < nl; ++k)
    m.rows.push_back({{{m.entry(0, n + 1 + k), -1.0}},
                      0.0,
                      Sense::Le,
                      "lb lambda" + std::to_string(k)});
  return m;
}

namespace {

ConicProgram base_program(const MomentModel& m, ConicProgram::Kind kind) {
  ConicProgram p;
  p.kind = kind;
  p.num_vars = static_cast<int>(m.entries.size());
  p.objective = m.objective;
  for (const auto& row : m.rows) {
    SparseVec lin = row.coeffs;
    p.add_row(std::move(lin), row.sense, row.rhs);
  }
  // Diagonal nonnegativity, including the (0,0) entry.
  for (int f = 0; f < p.num_vars; ++f)
    if (m.entries[f].first == m.entries[f].second)
      p.add_row({{f, 1.0}}, Sense::Ge, 0.0);
  return p;
}

}  // namespace

ConicProgram make_lp(const MomentModel& m) {
  ConicProgram p = base_program(m, ConicProgram::Kind::LP);
  for (auto [i, j] : m.cone_pairs) {
    const int dii = m.entry(i, i), djj = m.entry(j, j), dij = m.entry(i, j);
    p.add_row({{dii, 1.0}, {djj, 1.0}, {dij, -2.0}}, Sense::Ge, 0.0);
    p.add_row({{dii, 1.0}, {djj, 1.0}, {dij, 2.0}}, Sense::Ge, 0.0);
  }
  return p;
}

ConicProgram make_socp(const MomentModel& m) {
  ConicProgram p = base_program(m, ConicProgram::Kind::SOCP);
  for (auto [i, j] : m.cone_pairs) {
    const int dii = m.entry(i, i), djj = m.entry(j, j), dij = m.entry(i, j);
    SocBlock blk;
    blk.entries.push_back({{{dii, 1.0}, {djj, 1.0}}, 0.0});
    blk.entries.push_back({{{dii, 1.0}, {djj, -1.0}}, 0.0});
    blk.entries.push_back({{{dij, 2.0}}, 0.0});
    p.cones.push_back(std::move(blk));
  }
  return p;
}

namespace {

// Largest eigenvalue of a symmetric operator given by matvec, via shifted
// power iteration: iterate on (shift I + M), which is PSD when shift bounds
// the spectrum from below, so its dominant eigenvalue is shift + lambda_max.
template <typename MatVec>
std::pair<double, int> power_lambda_max(int dim, double shift, MatVec&& mv,
                                        double tol, int max_iters) {
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i)
    v[i] = 1.0 + 1e-3 * static_cast<double>((i * 2654435761ULL) % 97);
  v.normalize();
  double prev = 0.0;
  Eigen::VectorXd w(dim);
  for (int it = 1; it <= max_iters; ++it) {
    mv(v, w);
    w += shift * v;
    const double norm = w.norm();
    if (norm == 0.0) return {-shift, it};
    const double rayleigh = v.dot(w);
    v = w / norm;
    if (it > 3 && std::abs(rayleigh - prev) <= tol * (1.0 + std::abs(rayleigh)))
      return {rayleigh - shift, it};
    prev = rayleigh;
  }
  throw std::runtime_error(
      "power iteration did not converge within " + std::to_string(max_iters) +
      " iterations (last estimate " + std::to_string(prev - shift) + ")");
}

}  // namespace

Completion complete_to_psd(const MomentModel& m, const std::vector<double>& w,
                           double tol_psd) {
  if (w.size() != m.entries.size())
    throw std::invalid_argument("complete_to_psd: entry vector size mismatch");
  const int n = m.base_dim;

  const double w00 = w[m.entry(0, 0)];
  Eigen::VectorXd first(n);
  for (int i = 1; i <= n; ++i) first[i - 1] = w[m.entry(0, i)];
  // Sparse body W; absent support entries are zero.
  std::vector<Eigen::Triplet<double>> trips;
  for (size_t f = 0; f < m.entries.size(); ++f) {
    auto [i, j] = m.entries[f];
    if (i == 0) continue;
    trips.emplace_back(i - 1, j - 1, w[f]);
    if (i != j) trips.emplace_back(j - 1, i - 1, w[f]);
  }
  Eigen::SparseMatrix<double> body(n, n);
  body.setFromTriplets(trips.begin(), trips.end());

  Completion out;
  auto row_violation = [&](const std::vector<double>& vals) {
    double worst = 0.0;
    for (const auto& row : m.rows) {
      double v = -row.rhs;
      for (auto [f, c] : row.coeffs) v += c * vals[f];
      worst = std::max(worst, row.sense == Sense::Eq ? std::abs(v) : v);
    }
    return worst;
  };
  out.max_row_violation_before = row_violation(w);
  out.objective_before = 0.0;
  for (size_t f = 0; f < w.size(); ++f)
    out.objective_before += m.objective[f] * w[f];

  // alpha >= lambda_max(first first^T / w00 - body).
  const double scale = 1.0 / std::max(w00, 1e-300);
  double lam_max;
  if (n <= 500) {
    Eigen::MatrixXd M = -Eigen::MatrixXd(body);
    M += scale * first * first.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    lam_max = es.eigenvalues().maxCoeff();
  } else {
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < body.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(body, k); it; ++it)
        rowsum[it.row()] += std::abs(it.value());
    const double shift = rowsum.maxCoeff() + scale * first.squaredNorm() + 1.0;
    auto mv = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
      y = scale * first.dot(x) * first - body * x;
    };
    auto [lm, iters] = power_lambda_max(n, shift, mv, 1e-10, 10000);
    lam_max = lm;
    out.power_iterations = iters;
  }
  out.alpha = std::max(0.0, lam_max) * (1.0 + 1e-12);

  // lambda_min of the completed (n+1) x (n+1) matrix.
  const double a = out.alpha;
  if (n + 1 <= 500) {
    Eigen::MatrixXd full(n + 1, n + 1);
    full(0, 0) = w00;
    full.block(0, 1, 1, n) = first.transpose();
    full.block(1, 0, n, 1) = first;
    full.block(1, 1, n, n) =
        Eigen::MatrixXd(body) + a * Eigen::MatrixXd::Identity(n, n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full, Eigen::EigenvaluesOnly);
    out.lambda_min = es.eigenvalues().minCoeff();
  } else {
    auto full_mv = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
      y.resize(n + 1);
      y[0] = w00 * x[0] + first.dot(x.tail(n));
      y.tail(n) = x[0] * first + body * x.tail(n) + a * x.tail(n);
    };
    Eigen::VectorXd rowsum = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < body.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(body, k); it; ++it)
        rowsum[it.row()] += std::abs(it.value());
    const double bound =
        std::abs(w00) + first.lpNorm<1>() + rowsum.maxCoeff() + a + 1.0;
    auto [top, it1] = power_lambda_max(n + 1, bound, full_mv, 1e-10, 10000);
    auto neg_mv = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
      full_mv(x, y);
      y = top * x - y;
    };
    auto [gap, it2] = power_lambda_max(n + 1, 1.0, neg_mv, 1e-10, 10000);
    out.lambda_min = top - gap;
    out.power_iterations += it1 + it2;
  }

  // Only diagonals move, so rows and the zero-diagonal objective should be
  // unchanged; recompute both honestly rather than asserting it.
  std::vector<double> w_after = w;
  for (int i = 1; i <= n; ++i) w_after[m.entry(i, i)] += a;
  out.max_row_violation_after = row_violation(w_after);
  out.objective_after = 0.0;
  for (size_t f = 0; f < w_after.size(); ++f)
    out.objective_after += m.objective[f] * w_after[f];

  (void)tol_psd;
  return out;
}

ConicProgram dual_reduce(const MomentModel& m) {
  for (size_t k = 1; k < m.rows.size(); ++k)
    if (m.rows[k].sense != Sense::Le)
      throw std::logic_error("dual_reduce: expected Le model rows");

  // Variables: mu (0), s00 (1), then one eta per inequality model row.
  const int n_eta = static_cast<int>(m.rows.size()) - 1;
  ConicProgram d;
  d.kind = ConicProgram::Kind::LP;
  d.num_vars = 2 + n_eta;
  d.objective.assign(d.num_vars, 0.0);
  d.objective[0] = -1.0;  // maximize mu

  // Rows are stored as coeffs . w <= rhs, i.e. the lifted data has
  // gamma_k = -rhs plus any explicit (0,0) coefficient. The reduced dual:
  //   gamma_0 + sum eta_k gamma_k - mu - s00 >= 0,
  //   q_0 + sum eta_k q_k = 0 per first-row entry,
  //   Q_0 + sum eta_k Q_k = 0 entrywise on the pair support,
  //   eta >= 0, s00 >= 0.
  std::vector<SparseVec> entry_rows(m.entries.size());
  SparseVec gamma_row;
  gamma_row.emplace_back(0, -1.0);
  gamma_row.emplace_back(1, -1.0);
  const int e00 = m.entry(0, 0);
  for (int k = 1; k <= n_eta; ++k) {
    const auto& row = m.rows[k];
    const int var = 1 + k;
    double gk = -row.rhs;
    for (auto [f, c] : row.coeffs) {
      if (f == e00)
        gk += c;
      else
        entry_rows[f].emplace_back(var, c);
    }
    if (gk != 0.0) gamma_row.emplace_back(var, gk);
  }
  const double gamma0 = m.objective[e00];
  d.add_row(std::move(gamma_row), Sense::Ge, -gamma0);

  // Proportional stationarity rows collapse to one representative (the two
  // bands of a quadratic row give identical patterns on every pair entry).
  std::map<std::vector<std::pair<int, long long>>, int> seen;
  auto signature = [](const SparseVec& v) {
    std::vector<std::pair<int, long long>> sig;
    const double lead = v.front().second;
    sig.reserve(v.size());
    for (auto [i, c] : v)
      sig.emplace_back(
          i, static_cast<long long>(std::llround(c / lead * (1LL << 40))));
    return sig;
  };
  for (size_t f = 0; f < m.entries.size(); ++f) {
    if (static_cast<int>(f) == e00) continue;
    SparseVec row = entry_rows[f];
    const double q0 = m.objective[f];
    if (row.empty()) {
      if (q0 != 0.0) d.add_row({}, Sense::Eq, -q0);
      continue;
    }
    std::sort(row.begin(), row.end());
    if (q0 == 0.0 && !seen.emplace(signature(row), 1).second) continue;
    d.add_row(std::move(row), Sense::Eq, -q0);
  }
  // eta >= 0 and s00 >= 0.
  d.add_row({{1, 1.0}}, Sense::Ge, 0.0);
  for (int k = 0; k < n_eta; ++k) d.add_row({{2 + k, 1.0}}, Sense::Ge, 0.0);
  return d;
}

}  // namespace pooling
