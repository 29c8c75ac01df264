#include "pooling/qcqp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pooling {

void BilinearForm::add(int i, int j, double c) {
  if (i == j)
    throw std::invalid_argument("bilinear form: diagonal entry rejected");
  if (i > j) std::swap(i, j);
  terms_.push_back({i, j, c});
}

void BilinearForm::finalize() {
  std::sort(terms_.begin(), terms_.end(), [](const Term& a, const Term& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  std::vector<Term> merged;
  for (const Term& t : terms_) {
    if (!merged.empty() && merged.back().i == t.i && merged.back().j == t.j)
      merged.back().c += t.c;
    else
      merged.push_back(t);
  }
  std::erase_if(merged, [](const Term& t) { return t.c == 0.0; });
  terms_ = std::move(merged);
}

double BilinearForm::value(const std::vector<double>& x) const {
  double v = 0.0;
  for (const Term& t : terms_) v += t.c * x[t.i] * x[t.j];
  return v;
}

double QuadRow::value(const std::vector<double>& x) const {
  double v = quad.value(x) + constant;
  for (auto [i, c] : lin) v += c * x[i];
  return v;
}

double LinRow::value(const std::vector<double>& x) const {
  double v = -rhs;
  for (auto [i, c] : lin) v += c * x[i];
  return v;
}

VarLayout::VarLayout(const Instance& inst) {
  ns_ = inst.num_sources;
  ni_ = inst.num_tanks;
  np_ = inst.num_plants;
  na_ = inst.num_arcs();
  mt_ = inst.horizon;
  p0_ = mt_ * na_;
  const int p_count = (mt_ - 1) * (ns_ + ni_) + ni_;
  q0_ = p0_ + p_count;
  const int q_count = np_ + (mt_ - 1) * (ns_ + ni_ + np_) + ni_;
  v0_ = q0_ + q_count;
  n_ = v0_ + mt_ * np_;
}

bool VarLayout::has_p(int tau, int node) const {
  if (node >= ns_ + ni_) return false;
  if (tau >= 1 && tau <= mt_ - 1) return true;
  return tau == mt_ && node >= ns_;
}

int VarLayout::p(int tau, int node) const {
  if (tau <= mt_ - 1) return p0_ + (tau - 1) * (ns_ + ni_) + node;
  return p0_ + (mt_ - 1) * (ns_ + ni_) + (node - ns_);
}

bool VarLayout::has_q(int tau, int node) const {
  if (node >= ns_ + ni_)  // plant
    return tau <= mt_ - 1;
  if (tau >= 1 && tau <= mt_ - 1) return true;
  return tau == mt_ && node >= ns_;
}

int VarLayout::q(int tau, int node) const {
  if (tau == 0) return q0_ + (node - ns_ - ni_);
  if (tau <= mt_ - 1)
    return q0_ + np_ + (tau - 1) * (ns_ + ni_ + np_) + node;
  return q0_ + np_ + (mt_ - 1) * (ns_ + ni_ + np_) + (node - ns_);
}

void Qcqp::validate() const {
  if (static_cast<int>(objective.size()) != n ||
      static_cast<int>(lower.size()) != n ||
      static_cast<int>(upper.size()) != n)
    throw std::invalid_argument("qcqp: vector sizes do not match n");
  for (int i = 0; i < n; ++i)
    if (!(lower[i] <= upper[i]))
      throw std::invalid_argument("qcqp: lower bound exceeds upper bound");
  if (delta <= 0) throw std::invalid_argument("qcqp: delta must be positive");
  // The zero-diagonal assumption is enforced structurally by BilinearForm.
}

QcqpEval eval(const Qcqp& q, const std::vector<double>& x,
              const std::vector<double>& lambda) {
  if (static_cast<int>(x.size()) != q.n)
    throw std::invalid_argument("eval: x dimension mismatch");
  if (static_cast<int>(lambda.size()) != q.lambda_count())
    throw std::invalid_argument("eval: lambda dimension mismatch");
  QcqpEval out;
  out.objective = 0.0;
  for (int i = 0; i < q.n; ++i) out.objective += q.objective[i] * x[i];
  for (double l : lambda) out.objective += q.delta * l;
  out.quad_values.reserve(q.quad_rows.size());
  for (const auto& row : q.quad_rows) out.quad_values.push_back(row.value(x));
  out.quad_ineq_values.reserve(q.quad_ineq_rows.size());
  for (const auto& row : q.quad_ineq_rows)
    out.quad_ineq_values.push_back(row.value(x));
  out.lin_eq_values.reserve(q.lin_eq_rows.size());
  for (const auto& row : q.lin_eq_rows) out.lin_eq_values.push_back(row.value(x));
  out.lin_ineq_values.reserve(q.lin_ineq_rows.size());
  for (const auto& row : q.lin_ineq_rows)
    out.lin_ineq_values.push_back(row.value(x));
  return out;
}

double QcqpEval::max_violation(const std::vector<double>& lambda) const {
  double m = 0.0;
  const int nq = static_cast<int>(quad_values.size());
  for (int k = 0; k < nq; ++k)
    m = std::max(m, std::abs(quad_values[k]) - lambda[k]);
  for (size_t r = 0; r < lin_eq_values.size(); ++r)
    m = std::max(m, std::abs(lin_eq_values[r]) - lambda[nq + r]);
  for (double v : quad_ineq_values) m = std::max(m, v);
  for (double v : lin_ineq_values) m = std::max(m, v);
  for (double l : lambda) m = std::max(m, -l);
  return std::max(m, 0.0);
}

VarLayout layout(const Instance& inst) { return VarLayout(inst); }

std::vector<QuadRow> eliminate_binaries(const Instance& inst) {
  const VarLayout lay(inst);
  std::vector<QuadRow> rows;
  rows.reserve(static_cast<size_t>(inst.horizon) * inst.num_nodes());
  for (int t = 0; t < inst.horizon; ++t) {
    for (int i = 0; i < inst.num_nodes(); ++i) {
      QuadRow row;
      row.tag = "one-pipeline t" + std::to_string(t) + " n" + std::to_string(i);
      const auto& in = inst.in_arcs(i);
      const auto& out = inst.out_arcs(i);
      for (size_t a = 0; a < in.size(); ++a)
        for (size_t b = a + 1; b < in.size(); ++b)
          row.quad.add(lay.a(t, in[a]), lay.a(t, in[b]), 1.0);
      for (size_t a = 0; a < out.size(); ++a)
        for (size_t b = a + 1; b < out.size(); ++b)
          row.quad.add(lay.a(t, out[a]), lay.a(t, out[b]), 1.0);
      for (int ea : in)
        for (int eb : out) row.quad.add(lay.a(t, ea), lay.a(t, eb), 1.0);
      row.quad.finalize();
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

// Accumulates a linear row, folding constant terms into the rhs.
struct RowBuilder {
  SparseVec lin;
  double rhs = 0.0;
  void var(int idx, double c) { lin.emplace_back(idx, c); }
  void constant(double c) { rhs -= c; }
  LinRow done(std::string tag) {
    std::sort(lin.begin(), lin.end());
    return LinRow{std::move(lin), rhs, std::move(tag)};
  }
};

}  // namespace

Qcqp build_qcqp(const Instance& inst, double delta) {
  if (delta <= 0) throw std::invalid_argument("build_qcqp: delta must be positive");
  const VarLayout lay(inst);
  const int MT = inst.horizon;

  Qcqp q;
  q.n = lay.size();
  q.delta = delta;
  q.objective.assign(q.n, 0.0);
  q.lower.assign(q.n, 0.0);
  q.upper.assign(q.n, kInf);

  // Objective: transport cost on flows, CQ * RC on shortfalls.
  for (int t = 0; t < MT; ++t) {
    for (int e = 0; e < inst.num_arcs(); ++e)
      q.objective[lay.a(t, e)] = inst.arcs[e].cost;
    for (int i = 0; i < inst.num_plants; ++i)
      q.objective[lay.v(t, i)] =
          inst.shortage_cost[i] * inst.demand_qty[t][i];
  }

  // Bounds: 0 <= a <= U replaces the u-linked flow bounds; storage bounds on
  // tanks; everything else nonnegative.
  for (int t = 0; t < MT; ++t)
    for (int e = 0; e < inst.num_arcs(); ++e)
      q.upper[lay.a(t, e)] = inst.arcs[e].flow_hi;
  for (int tau = 1; tau <= MT; ++tau)
    for (int i = 0; i < inst.first_plant(); ++i) {
      if (!lay.has_p(tau, i)) continue;
      if (inst.is_tank(i)) {
        q.lower[lay.p(tau, i)] = inst.p_min[i];
        q.upper[lay.p(tau, i)] = inst.p_max[i];
      }
    }

  // Quadratic equality rows, family-major: pipeline products first.
  q.quad_rows = eliminate_binaries(inst);

  const auto q_or_const = [&](int tau, int node) {
    return lay.has_q(tau, node);  // tau = 0 source/tank quality is data
  };

  // Source quality dynamics.
  for (int t = 0; t < MT; ++t) {
    for (int i = 0; i < inst.num_sources; ++i) {
      QuadRow row;
      row.tag = "source-quality t" + std::to_string(t) + " n" + std::to_string(i);
      const int tn = t + 1;
      if (lay.has_p(tn, i))  // at tn == MT the source is empty by constraint
        row.quad.add(lay.p(tn, i), lay.q(tn, i), -1.0);
      if (t == 0)
        row.constant += inst.p_init[i] * inst.q_init[i];
      else
        row.quad.add(lay.p(t, i), lay.q(t, i), 1.0);
      row.constant += inst.supply_qty[t][i] * inst.supply_qual[t][i];
      for (int e : inst.out_arcs(i)) {
        if (q_or_const(t, i))
          row.quad.add(lay.a(t, e), lay.q(t, i), -1.0);
        else
          row.lin.emplace_back(lay.a(t, e), -inst.q_init[i]);
      }
      row.quad.finalize();
      std::sort(row.lin.begin(), row.lin.end());
      q.quad_rows.push_back(std::move(row));
    }
  }
  // Tank quality dynamics.
  for (int t = 0; t < MT; ++t) {
    for (int i = inst.first_tank(); i < inst.first_plant(); ++i) {
      QuadRow row;
      row.tag = "tank-quality t" + std::to_string(t) + " n" + std::to_string(i);
      row.quad.add(lay.p(t + 1, i), lay.q(t + 1, i), -1.0);
      if (t == 0)
        row.constant += inst.p_init[i] * inst.q_init[i];
      else
        row.quad.add(lay.p(t, i), lay.q(t, i), 1.0);
      for (int e : inst.in_arcs(i)) {
        const int from = inst.arcs[e].from;
        if (q_or_const(t, from))
          row.quad.add(lay.a(t, e), lay.q(t, from), 1.0);
        else
          row.lin.emplace_back(lay.a(t, e), inst.q_init[from]);
      }
      for (int e : inst.out_arcs(i)) {
        if (q_or_const(t, i))
          row.quad.add(lay.a(t, e), lay.q(t, i), -1.0);
        else
          row.lin.emplace_back(lay.a(t, e), -inst.q_init[i]);
      }
      row.quad.finalize();
      std::sort(row.lin.begin(), row.lin.end());
      q.quad_rows.push_back(std::move(row));
    }
  }
  // Plant averaging: -q_i^t + (1/RC) sum a_ji q_j = 0.
  for (int t = 0; t < MT; ++t) {
    for (int i = inst.first_plant(); i < inst.num_nodes(); ++i) {
      QuadRow row;
      row.tag = "plant-quality t" + std::to_string(t) + " n" + std::to_string(i);
      const double inv_rc = 1.0 / inst.demand_qty[t][inst.plant_index(i)];
      row.lin.emplace_back(lay.q(t, i), -1.0);
      for (int e : inst.in_arcs(i)) {
        const int from = inst.arcs[e].from;
        if (q_or_const(t, from))
          row.quad.add(lay.a(t, e), lay.q(t, from), inv_rc);
        else
          row.lin.emplace_back(lay.a(t, e), inv_rc * inst.q_init[from]);
      }
      row.quad.finalize();
      std::sort(row.lin.begin(), row.lin.end());
      q.quad_rows.push_back(std::move(row));
    }
  }

  // Linear equalities: source balance, then tank balance.
  for (int t = 0; t < MT; ++t) {
    for (int i = 0; i < inst.num_sources; ++i) {
      RowBuilder rb;
      if (lay.has_p(t + 1, i)) rb.var(lay.p(t + 1, i), -1.0);
      if (t == 0)
        rb.constant(inst.p_init[i]);
      else
        rb.var(lay.p(t, i), 1.0);
      rb.constant(inst.supply_qty[t][i]);
      for (int e : inst.out_arcs(i)) rb.var(lay.a(t, e), -1.0);
      q.lin_eq_rows.push_back(
          rb.done("source-balance t" + std::to_string(t) + " n" + std::to_string(i)));
    }
  }
  for (int t = 0; t < MT; ++t) {
    for (int i = inst.first_tank(); i < inst.first_plant(); ++i) {
      RowBuilder rb;
      rb.var(lay.p(t + 1, i), -1.0);
      if (t == 0)
        rb.constant(inst.p_init[i]);
      else
        rb.var(lay.p(t, i), 1.0);
      for (int e : inst.in_arcs(i)) rb.var(lay.a(t, e), 1.0);
      for (int e : inst.out_arcs(i)) rb.var(lay.a(t, e), -1.0);
      q.lin_eq_rows.push_back(
          rb.done("tank-balance t" + std::to_string(t) + " n" + std::to_string(i)));
    }
  }

  // Shortage inequalities: RQ - q - v <= 0.
  for (int t = 0; t < MT; ++t) {
    for (int i = inst.first_plant(); i < inst.num_nodes(); ++i) {
      const int pi = inst.plant_index(i);
      RowBuilder rb;
      rb.var(lay.q(t, i), -1.0);
      rb.var(lay.v(t, pi), -1.0);
      rb.constant(inst.demand_qual[t][pi]);
      q.lin_ineq_rows.push_back(
          rb.done("shortage t" + std::to_string(t) + " n" + std::to_string(i)));
    }
  }

  q.validate();
  return q;
}

std::vector<double> pack_schedule(const Instance& inst, const Schedule& s) {
  const VarLayout lay(inst);
  std::vector<double> x(lay.size(), 0.0);
  for (int t = 0; t < inst.horizon; ++t) {
    for (int e = 0; e < inst.num_arcs(); ++e) x[lay.a(t, e)] = s.flow[t][e];
    for (int i = 0; i < inst.num_plants; ++i)
      x[lay.v(t, i)] = s.shortfall[t][i];
  }
  for (int tau = 0; tau <= inst.horizon; ++tau)
    for (int i = 0; i < inst.num_nodes(); ++i) {
      if (lay.has_p(tau, i)) x[lay.p(tau, i)] = s.qty[tau][i];
      if (lay.has_q(tau, i)) x[lay.q(tau, i)] = s.qual[tau][i];
    }
  return x;
}

}  // namespace pooling
