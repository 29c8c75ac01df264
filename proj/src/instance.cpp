#include "pooling/instance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pooling {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument("instance: " + msg);
}

}  // namespace

void Instance::finalize() {
  const int n = num_nodes();
  require(num_sources >= 0 && num_tanks >= 0 && num_plants >= 0 && n > 0,
          "node counts must be nonnegative and total positive");
  require(horizon >= 1, "horizon must be at least 1");
  require(static_cast<int>(p_init.size()) == n, "p_init size mismatch");
  require(static_cast<int>(q_init.size()) == n, "q_init size mismatch");
  require(static_cast<int>(p_min.size()) == n, "p_min size mismatch");
  require(static_cast<int>(p_max.size()) == n, "p_max size mismatch");
  require(static_cast<int>(shortage_cost.size()) == num_plants,
          "shortage_cost size mismatch");
  auto check_table = [&](const std::vector<std::vector<double>>& tab, int cols,
                         const char* name) {
    require(static_cast<int>(tab.size()) == horizon,
            std::string(name) + " must have one row per time step");
    for (const auto& row : tab) {
      require(static_cast<int>(row.size()) == cols,
              std::string(name) + " row width mismatch");
      for (double v : row)
        require(finite_nonneg(v), std::string(name) + " entries must be finite and nonnegative");
    }
  };
  check_table(supply_qty, num_sources, "supply_qty");
  check_table(supply_qual, num_sources, "supply_qual");
  check_table(demand_qty, num_plants, "demand_qty");
  check_table(demand_qual, num_plants, "demand_qual");
  for (int t = 0; t < horizon; ++t)
    for (int i = 0; i < num_plants; ++i)
      require(demand_qty[t][i] > 0.0, "RC must be positive at every plant and time");
  for (int i = 0; i < n; ++i) {
    require(finite_nonneg(p_init[i]) && finite_nonneg(q_init[i]),
            "initial state must be finite and nonnegative");
    require(finite_nonneg(p_min[i]) && finite_nonneg(p_max[i]) && p_min[i] <= p_max[i],
            "storage bounds must satisfy 0 <= pmin <= pmax");
  }
  for (double c : shortage_cost) require(finite_nonneg(c), "CQ must be nonnegative");

  in_arcs_.assign(n, {});
  out_arcs_.assign(n, {});
  for (int e = 0; e < num_arcs(); ++e) {
    const Arc& a = arcs[e];
    require(a.from >= 0 && a.from < n && a.to >= 0 && a.to < n && a.from != a.to,
            "arc endpoints out of range");
    require(finite_nonneg(a.flow_lo) && finite_nonneg(a.flow_hi) &&
                a.flow_lo <= a.flow_hi,
            "arc bounds must satisfy 0 <= L <= U");
    require(finite_nonneg(a.cost), "arc cost must be nonnegative");
    const NodeKind kf = kind(a.from), kt = kind(a.to);
    const bool ok = (kf == NodeKind::Source && kt != NodeKind::Source) ||
                    (kf == NodeKind::Intermediate &&
                     (kt == NodeKind::Intermediate || kt == NodeKind::Plant));
    require(ok, "arc must go source->tank/plant, tank->tank or tank->plant");
    out_arcs_[a.from].push_back(e);
    in_arcs_[a.to].push_back(e);
  }
}

Schedule Schedule::zeros(const Instance& inst) {
  Schedule s;
  s.flow.assign(inst.horizon, std::vector<double>(inst.num_arcs(), 0.0));
  s.used.assign(inst.horizon, std::vector<double>(inst.num_arcs(), 0.0));
  s.qty.assign(inst.horizon + 1, std::vector<double>(inst.num_nodes(), 0.0));
  s.qual.assign(inst.horizon + 1, std::vector<double>(inst.num_nodes(), 0.0));
  s.shortfall.assign(inst.horizon, std::vector<double>(inst.num_plants, 0.0));
  s.qty[0] = inst.p_init;
  s.qual[0] = inst.q_init;
  return s;
}

double ResidualReport::family_max(const std::string& family) const {
  double m = 0.0;
  for (const auto& e : entries)
    if (e.family == family) m = std::max(m, e.value);
  return m;
}

namespace {

void check_dims(const Instance& inst, const Schedule& s) {
  const auto bad = [&] {
    throw std::invalid_argument("schedule dimensions do not match instance");
  };
  if (static_cast<int>(s.flow.size()) != inst.horizon ||
      static_cast<int>(s.used.size()) != inst.horizon ||
      static_cast<int>(s.qty.size()) != inst.horizon + 1 ||
      static_cast<int>(s.qual.size()) != inst.horizon + 1 ||
      static_cast<int>(s.shortfall.size()) != inst.horizon)
    bad();
  for (int t = 0; t < inst.horizon; ++t) {
    if (static_cast<int>(s.flow[t].size()) != inst.num_arcs() ||
        static_cast<int>(s.used[t].size()) != inst.num_arcs() ||
        static_cast<int>(s.shortfall[t].size()) != inst.num_plants)
      bad();
  }
  for (int t = 0; t <= inst.horizon; ++t)
    if (static_cast<int>(s.qty[t].size()) != inst.num_nodes() ||
        static_cast<int>(s.qual[t].size()) != inst.num_nodes())
      bad();
}

}  // namespace

ResidualReport residuals(const Instance& inst, const Schedule& s) {
  check_dims(inst, s);
  ResidualReport rep;
  auto push = [&rep](const char* family, int t, int id, double v, bool dynamics) {
    v = std::max(0.0, v);
    rep.entries.push_back({family, t, id, v});
    rep.max_violation = std::max(rep.max_violation, v);
    if (dynamics)
      rep.max_dynamics_violation = std::max(rep.max_dynamics_violation, v);
  };

  const int MT = inst.horizon;
  for (int t = 0; t < MT; ++t) {
    // Flow bounds gated by u, and binarity of u.
    for (int e = 0; e < inst.num_arcs(); ++e) {
      const double u = s.used[t][e];
      const double a = s.flow[t][e];
      const double lo = u * inst.arcs[e].flow_lo;
      const double hi = u * inst.arcs[e].flow_hi;
      push("flow-bounds", t, e, std::max(lo - a, a - hi), true);
      push("binary-u", t, e, std::min(std::abs(u), std::abs(u - 1.0)), true);
    }
    // At most one pipeline per node.
    for (int i = 0; i < inst.num_nodes(); ++i) {
      double su = 0.0;
      for (int e : inst.in_arcs(i)) su += s.used[t][e];
      for (int e : inst.out_arcs(i)) su += s.used[t][e];
      push("one-pipeline", t, i, su - 1.0, true);
    }
    // Sources: balance, nonnegativity, final emptiness, quality dynamics.
    for (int i = 0; i < inst.num_sources; ++i) {
      double out = 0.0, out_q = 0.0;
      for (int e : inst.out_arcs(i)) {
        out += s.flow[t][e];
        out_q += s.flow[t][e] * s.qual[t][i];
      }
      const double p_next = s.qty[t + 1][i];
      push("source-balance", t, i,
           std::abs(p_next - s.qty[t][i] - inst.supply_qty[t][i] + out), true);
      push("source-balance", t, i, -s.qty[t][i], true);
      const double lhs = p_next * s.qual[t + 1][i];
      const double rhs = s.qty[t][i] * s.qual[t][i] +
                         inst.supply_qty[t][i] * inst.supply_qual[t][i] - out_q;
      push("source-quality", t, i, std::abs(lhs - rhs), true);
      if (t == MT - 1) push("source-balance", t, i, std::abs(p_next), true);
    }
    // Tanks: balance, storage bounds, quality dynamics.
    for (int i = inst.first_tank(); i < inst.first_plant(); ++i) {
      double in = 0.0, out = 0.0, in_q = 0.0, out_q = 0.0;
      for (int e : inst.in_arcs(i)) {
        in += s.flow[t][e];
        in_q += s.flow[t][e] * s.qual[t][inst.arcs[e].from];
      }
      for (int e : inst.out_arcs(i)) {
        out += s.flow[t][e];
        out_q += s.flow[t][e] * s.qual[t][i];
      }
      push("tank-balance", t, i,
           std::abs(s.qty[t + 1][i] - s.qty[t][i] - in + out), true);
      const double lhs = s.qty[t + 1][i] * s.qual[t + 1][i];
      const double rhs = s.qty[t][i] * s.qual[t][i] + in_q - out_q;
      push("tank-quality", t, i, std::abs(lhs - rhs), true);
    }
    // Plants: averaged quality and shortage definition.
    for (int i = inst.first_plant(); i < inst.num_nodes(); ++i) {
      const int pi = inst.plant_index(i);
      double in_q = 0.0;
      for (int e : inst.in_arcs(i))
        in_q += s.flow[t][e] * s.qual[t][inst.arcs[e].from];
      push("plant-quality", t, i,
           std::abs(s.qual[t][i] - in_q / inst.demand_qty[t][pi]), true);
      const double v = s.shortfall[t][pi];
      push("shortage", t, i, inst.demand_qual[t][pi] - s.qual[t][i] - v, false);
      push("shortage", t, i, -v, false);
    }
  }
  // Storage bounds over the whole stored trajectory, including t = MT+1.
  for (int t = 0; t <= MT; ++t)
    for (int i = inst.first_tank(); i < inst.first_plant(); ++i)
      push("storage-bounds", t, i,
           std::max(inst.p_min[i] - s.qty[t][i], s.qty[t][i] - inst.p_max[i]),
           true);
  return rep;
}

double sucs_ratio(const Instance& inst, const Schedule& s) {
  check_dims(inst, s);
  double total_req = 0.0, total_short = 0.0;
  for (int t = 0; t < inst.horizon; ++t)
    for (int i = 0; i < inst.num_plants; ++i) {
      total_req += inst.demand_qual[t][i];
      total_short += s.shortfall[t][i];
    }
  if (total_req <= 0.0)
    throw std::invalid_argument("sucs_ratio undefined: total required quality is zero");
  return std::clamp((total_req - total_short) / total_req, 0.0, 1.0);
}

double schedule_cost(const Instance& inst, const Schedule& s) {
  check_dims(inst, s);
  double c = 0.0;
  for (int t = 0; t < inst.horizon; ++t) {
    for (int e = 0; e < inst.num_arcs(); ++e)
      c += inst.arcs[e].cost * s.flow[t][e];
    for (int i = 0; i < inst.num_plants; ++i)
      c += inst.shortage_cost[i] * inst.demand_qty[t][i] * s.shortfall[t][i];
  }
  return c;
}

Schedule simulate(const Instance& inst,
                  const std::vector<std::vector<double>>& flow,
                  const std::vector<std::vector<double>>& used) {
  Schedule s = Schedule::zeros(inst);
  s.flow = flow;
  s.used = used;
  check_dims(inst, s);
  const int MT = inst.horizon;
  for (int t = 0; t < MT; ++t) {
    // Plant quality at t from the already-known feeder states at t.
    for (int i = inst.first_plant(); i < inst.num_nodes(); ++i) {
      const int pi = inst.plant_index(i);
      double in_q = 0.0;
      for (int e : inst.in_arcs(i))
        in_q += s.flow[t][e] * s.qual[t][inst.arcs[e].from];
      s.qual[t][i] = in_q / inst.demand_qty[t][pi];
      s.shortfall[t][pi] = std::max(0.0, inst.demand_qual[t][pi] - s.qual[t][i]);
    }
    // Roll node states to t+1.
    for (int i = 0; i < inst.first_plant(); ++i) {
      double in = 0.0, out = 0.0, in_q = 0.0, out_q = 0.0;
      for (int e : inst.in_arcs(i)) {
        in += s.flow[t][e];
        in_q += s.flow[t][e] * s.qual[t][inst.arcs[e].from];
      }
      for (int e : inst.out_arcs(i)) {
        out += s.flow[t][e];
        out_q += s.flow[t][e] * s.qual[t][i];
      }
      if (inst.is_source(i)) {
        in += inst.supply_qty[t][i];
        in_q += inst.supply_qty[t][i] * inst.supply_qual[t][i];
      }
      const double p_next = s.qty[t][i] + in - out;
      const double mass_next = s.qty[t][i] * s.qual[t][i] + in_q - out_q;
      s.qty[t + 1][i] = p_next;
      s.qual[t + 1][i] = p_next > 0.0 ? mass_next / p_next : 0.0;
    }
  }
  return s;
}

}  // namespace pooling
