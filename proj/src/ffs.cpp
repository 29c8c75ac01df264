#include "pooling/ffs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "pooling/qcqp.hpp"

namespace pooling {

namespace {

// Variable layout of the FFS1 linear program: flows, stocks, plant
// qualities, shortfalls, pipe indicators and the 1-norm split variables.
struct FfsLayout {
  int na, mt, ns, ni, np;
  int p0, q0, v0, u0, s0, total;
  std::vector<std::pair<int, int>> p_vars;  // (state time, node) per p index

  explicit FfsLayout(const Instance& in) {
    na = in.num_arcs();
    mt = in.horizon;
    ns = in.num_sources;
    ni = in.num_tanks;
    np = in.num_plants;
    p0 = mt * na;
    for (int tau = 1; tau <= mt; ++tau)
      for (int i = 0; i < ns + ni; ++i)
        if (tau <= mt - 1 || i >= ns) p_vars.emplace_back(tau, i);
    q0 = p0 + static_cast<int>(p_vars.size());
    v0 = q0 + mt * np;
    u0 = v0 + mt * np;
    s0 = u0 + mt * na;
    total = s0 + static_cast<int>(p_vars.size());
  }
  int a(int t, int e) const { return t * na + e; }
  int u(int t, int e) const { return u0 + t * na + e; }
  int q(int t, int p) const { return q0 + t * np + p; }
  int v(int t, int p) const { return v0 + t * np + p; }
  int p(int tau, int node) const {  // dense scan is fine at these sizes
    for (size_t k = 0; k < p_vars.size(); ++k)
      if (p_vars[k] == std::make_pair(tau, node)) return p0 + static_cast<int>(k);
    throw std::logic_error("ffs layout: no such p variable");
  }
  bool has_p(int tau, int node) const {
    return node < ns + ni && tau >= 1 &&
           (tau <= mt - 1 || (tau == mt && node >= ns));
  }
};

// u fixing state per (t, arc): -1 free, 0 or 1 fixed.
using Fixing = std::vector<signed char>;

ConicProgram build_lp(const Instance& in, const FfsLayout& lay,
                      const ReferencePoint& ref, double alpha,
                      const Fixing& fix) {
  ConicProgram p;
  p.num_vars = lay.total;
  p.objective.assign(lay.total, 0.0);
  for (int t = 0; t < lay.mt; ++t)
    for (int e = 0; e < lay.na; ++e)
      p.objective[lay.a(t, e)] = in.arcs[e].cost;
  for (int t = 0; t < lay.mt; ++t)
    for (int pl = 0; pl < lay.np; ++pl) p.objective[lay.v(t, pl)] = 1.0;
  for (size_t k = 0; k < lay.p_vars.size(); ++k)
    p.objective[lay.s0 + k] = alpha;

  // Tracking band: -s <= p - p_bar <= s.
  for (size_t k = 0; k < lay.p_vars.size(); ++k) {
    const auto [tau, node] = lay.p_vars[k];
    const int pv = lay.p0 + static_cast<int>(k);
    const int sv = lay.s0 + static_cast<int>(k);
    const double pbar = ref.p_bar[tau][node];
    p.add_row({{pv, 1.0}, {sv, -1.0}}, Sense::Le, pbar);
    p.add_row({{pv, -1.0}, {sv, -1.0}}, Sense::Le, -pbar);
    p.add_row({{sv, 1.0}}, Sense::Ge, 0.0);
  }

  // Balance rows; the final source balance drains the stock completely.
  for (int t = 0; t < lay.mt; ++t) {
    for (int i = 0; i < in.num_sources; ++i) {
      SparseVec lin;
      double rhs = in.supply_qty[t][i];
      if (lay.has_p(t + 1, i)) lin.emplace_back(lay.p(t + 1, i), 1.0);
      if (t == 0)
        rhs += in.p_init[i];
      else
        lin.emplace_back(lay.p(t, i), -1.0);
      for (int e : in.out_arcs(i)) lin.emplace_back(lay.a(t, e), 1.0);
      p.add_row(std::move(lin), Sense::Eq, rhs);
    }
    for (int i = in.first_tank(); i < in.first_plant(); ++i) {
      SparseVec lin;
      double rhs = 0.0;
      lin.emplace_back(lay.p(t + 1, i), 1.0);
      if (t == 0)
        rhs += in.p_init[i];
      else
        lin.emplace_back(lay.p(t, i), -1.0);
      for (int e : in.in_arcs(i)) lin.emplace_back(lay.a(t, e), -1.0);
      for (int e : in.out_arcs(i)) lin.emplace_back(lay.a(t, e), 1.0);
      p.add_row(std::move(lin), Sense::Eq, rhs);
    }
  }
  // Stock bounds.
  for (size_t k = 0; k < lay.p_vars.size(); ++k) {
    const auto [tau, node] = lay.p_vars[k];
    const int pv = lay.p0 + static_cast<int>(k);
    (void)tau;
    p.add_row({{pv, 1.0}}, Sense::Ge,
              in.is_tank(node) ? in.p_min[node] : 0.0);
    if (in.is_tank(node)) p.add_row({{pv, 1.0}}, Sense::Le, in.p_max[node]);
  }

  // Plant requirement rows, linear thanks to the fixed q_bar; omitted when
  // the required quality is zero (no demand to meet).
  for (int t = 0; t < lay.mt; ++t)
    for (int pl = 0; pl < lay.np; ++pl) {
      const int node = in.first_plant() + pl;
      if (in.demand_qual[t][pl] > 0.0) {
        SparseVec qty_row, qual_row;
        for (int e : in.in_arcs(node)) {
          const int from = in.arcs[e].from;
          qty_row.emplace_back(lay.a(t, e), 1.0);
          const double qb = t == 0 ? in.q_init[from] : ref.q_bar[t][from];
          qual_row.emplace_back(lay.a(t, e), qb);
        }
        qual_row.emplace_back(lay.q(t, pl), -in.demand_qty[t][pl]);
        p.add_row(std::move(qty_row), Sense::Eq, in.demand_qty[t][pl]);
        p.add_row(std::move(qual_row), Sense::Eq, 0.0);
        p.add_row({{lay.q(t, pl), 1.0}, {lay.v(t, pl), 1.0}}, Sense::Ge,
                  in.demand_qual[t][pl]);
      }
      p.add_row({{lay.q(t, pl), 1.0}}, Sense::Ge, 0.0);
      p.add_row({{lay.v(t, pl), 1.0}}, Sense::Ge, 0.0);
    }

  // Pipe gating and the one-pipeline rows.
  for (int t = 0; t < lay.mt; ++t) {
    for (int e = 0; e < lay.na; ++e) {
      p.add_row({{lay.a(t, e), 1.0}, {lay.u(t, e), -in.arcs[e].flow_hi}},
                Sense::Le, 0.0);
      p.add_row({{lay.a(t, e), 1.0}, {lay.u(t, e), -in.arcs[e].flow_lo}},
                Sense::Ge, 0.0);
      const signed char f = fix[t * lay.na + e];
      const double lo = f < 0 ? 0.0 : static_cast<double>(f);
      const double hi = f < 0 ? 1.0 : static_cast<double>(f);
      p.add_row({{lay.u(t, e), 1.0}}, Sense::Ge, lo);
      p.add_row({{lay.u(t, e), 1.0}}, Sense::Le, hi);
    }
    for (int i = 0; i < in.num_nodes(); ++i) {
      SparseVec lin;
      for (int e : in.in_arcs(i)) lin.emplace_back(lay.u(t, e), 1.0);
      for (int e : in.out_arcs(i)) lin.emplace_back(lay.u(t, e), 1.0);
      if (!lin.empty()) p.add_row(std::move(lin), Sense::Le, 1.0);
    }
  }
  return p;
}

// Fixes an arc on and propagates: every other pipe touching either endpoint
// at the same step must be off. Returns false on contradiction.
bool propagate(const Instance& in, int t, int e, signed char value,
               Fixing& fix) {
  const int na = in.num_arcs();
  signed char& slot = fix[t * na + e];
  if (slot >= 0) return slot == value;
  slot = value;
  if (value == 1) {
    for (int node : {in.arcs[e].from, in.arcs[e].to}) {
      for (int other : in.in_arcs(node))
        if (other != e && !propagate(in, t, other, 0, fix)) return false;
      for (int other : in.out_arcs(node))
        if (other != e && !propagate(in, t, other, 0, fix)) return false;
    }
  }
  return true;
}

// Elastic diagnosis on an infeasible program: soften every equality and Ge
// row with a slack and report the family of the largest one.
std::string diagnose_infeasible(const Instance& in, const FfsLayout& lay,
                                const ReferencePoint& ref, double alpha,
                                const Fixing& fix, const SolverConfig& scfg) {
  ConicProgram p = build_lp(in, lay, ref, alpha, fix);
  const int base = p.num_vars;
  ConicProgram elastic = p;
  elastic.objective.assign(base, 0.0);
  int extra = 0;
  std::vector<size_t> slack_of_row;
  for (size_t r = 0; r < p.rows.size(); ++r) {
    if (p.rows[r].sense == Sense::Eq) {
      elastic.rows[r].lin.emplace_back(base + extra, 1.0);
      elastic.rows[r].sense = Sense::Le;
      ConicRow ge = p.rows[r];
      ge.sense = Sense::Ge;
      ge.lin.emplace_back(base + extra, -1.0);
      elastic.rows.push_back(ge);
      slack_of_row.push_back(r);
      ++extra;
    } else if (p.rows[r].sense == Sense::Ge) {
      elastic.rows[r].lin.emplace_back(base + extra, 1.0);
      slack_of_row.push_back(r);
      ++extra;
    }
  }
  elastic.num_vars = base + extra;
  elastic.objective.resize(base + extra, 1.0);
  for (int k = 0; k < extra; ++k)
    elastic.rows.push_back({{{base + k, 1.0}}, 0.0, Sense::Ge});
  const Solution sol = solve(elastic, scfg);
  if (sol.status != SolveStatus::Optimal) return "unlocalized infeasibility";
  double worst = 0.0;
  size_t worst_row = 0;
  for (int k = 0; k < extra; ++k)
    if (sol.x[base + k] > worst) {
      worst = sol.x[base + k];
      worst_row = slack_of_row[k];
    }
  if (worst <= 1e-7) return "unlocalized infeasibility";
  // Classify the row by reconstructing which block it came from.
  const auto& lin = p.rows[worst_row].lin;
  if (lin.size() >= 1 && lin[0].first >= lay.s0) return "tracking band";
  for (auto [i, c] : lin) {
    if (i >= lay.u0 && i < lay.s0) return "pipe bounds / one-pipeline";
    if (i >= lay.q0 && i < lay.u0) return "plant requirement";
  }
  if (!lin.empty() && lin[0].first < lay.p0) return "balance";
  return "stock bounds";
}

struct Node {
  Fixing fix;
  double bound;
  long id;
};

}  // namespace

Ffs1Result ffs1(const Instance& inst, const ReferencePoint& ref,
                const Ffs1Config& cfg) {
  if (cfg.alpha <= 0) throw std::invalid_argument("ffs1: alpha must be positive");
  if (static_cast<int>(ref.p_bar.size()) != inst.horizon + 1 ||
      static_cast<int>(ref.q_bar.size()) != inst.horizon + 1)
    throw std::invalid_argument("ffs1: reference trajectories sized wrong");
  const FfsLayout lay(inst);
  const int nbin = inst.horizon * inst.num_arcs();

  Ffs1Result out;
  double incumbent = std::numeric_limits<double>::infinity();
  std::vector<double> incumbent_x;
  double global_bound = -std::numeric_limits<double>::infinity();

  std::vector<Node> open;
  long next_id = 0;
  open.push_back({Fixing(nbin, -1), -std::numeric_limits<double>::infinity(),
                  next_id++});

  bool root_done = false;
  while (!open.empty() && out.nodes < cfg.node_limit) {
    // Depth-first dive: take the most recently added node unless its bound
    // already lost to the incumbent, then fall back to the best bound.
    size_t pick = open.size() - 1;
    if (open[pick].bound >= incumbent - cfg.tol_mip) {
      pick = 0;
      for (size_t k = 1; k < open.size(); ++k)
        if (open[k].bound < open[pick].bound ||
            (open[k].bound == open[pick].bound && open[k].id < open[pick].id))
          pick = k;
    }
    Node node = std::move(open[pick]);
    open.erase(open.begin() + static_cast<long>(pick));
    if (node.bound >= incumbent - cfg.tol_mip) continue;

    ++out.nodes;
    const ConicProgram lp = build_lp(inst, lay, ref, cfg.alpha, node.fix);
    const Solution sol = solve(lp, cfg.lp);
    {
      double gb = std::isfinite(incumbent) ? incumbent : node.bound;
      gb = std::min(gb, node.bound);
      for (const Node& n : open) gb = std::min(gb, n.bound);
      out.progress.emplace_back(gb, incumbent);
    }
    if (sol.status == SolveStatus::PrimalInfeasible) {
      if (!root_done) {
        out.status = Ffs1Result::Status::Infeasible;
        out.message =
            diagnose_infeasible(inst, lay, ref, cfg.alpha, node.fix, cfg.lp);
        return out;
      }
      continue;
    }
    if (sol.status != SolveStatus::Optimal &&
        sol.status != SolveStatus::IterLimit)
      continue;
    root_done = true;
    if (out.nodes == 1) out.root_bound = sol.objective;
    if (sol.objective >= incumbent - cfg.tol_mip) continue;

    // Most fractional u, ties broken by (t, arc) ascending.
    int branch = -1;
    double best_frac = cfg.int_tol;
    for (int k = 0; k < nbin; ++k) {
      const double u = sol.x[lay.u0 + k];
      const double frac = std::min(u - std::floor(u), std::ceil(u) - u);
      const double dist = std::min(std::abs(u), std::abs(u - 1.0));
      if (std::min(frac, dist) > best_frac) {
        best_frac = std::min(frac, dist);
        branch = k;
      }
    }
    if (branch < 0) {
      // Integral within tolerance: pin every u and resolve once so closed
      // arcs carry exactly zero flow, then accept as incumbent.
      bool all_fixed = true;
      for (int k = 0; k < nbin; ++k) all_fixed = all_fixed && node.fix[k] >= 0;
      if (all_fixed) {
        if (sol.objective < incumbent) {
          incumbent = sol.objective;
          incumbent_x = sol.x;
        }
        continue;
      }
      Fixing pinned = node.fix;
      bool consistent = true;
      for (int k = 0; k < nbin && consistent; ++k)
        if (pinned[k] < 0)
          consistent = propagate(inst, k / inst.num_arcs(),
                                 k % inst.num_arcs(),
                                 sol.x[lay.u0 + k] > 0.5 ? 1 : 0, pinned);
      if (consistent) {
        const ConicProgram pinned_lp =
            build_lp(inst, lay, ref, cfg.alpha, pinned);
        const Solution pinned_sol = solve(pinned_lp, cfg.lp);
        if (pinned_sol.status == SolveStatus::Optimal &&
            pinned_sol.objective < incumbent) {
          incumbent = pinned_sol.objective;
          incumbent_x = pinned_sol.x;
        }
      }
      continue;
    }
    const int bt = branch / inst.num_arcs(), be = branch % inst.num_arcs();
    const double frac_val = sol.x[lay.u0 + branch];
    const signed char first = frac_val >= 0.5 ? 1 : 0;
    const double child_bound = std::max(node.bound, sol.objective);
    for (signed char child_val : {static_cast<signed char>(1 - first), first}) {
      Fixing child = node.fix;
      if (!propagate(inst, bt, be, child_val, child)) continue;
      open.push_back({std::move(child), child_bound, next_id++});
    }
  }

  global_bound = incumbent;
  for (const Node& n : open) global_bound = std::min(global_bound, n.bound);

  if (!std::isfinite(incumbent)) {
    out.status = Ffs1Result::Status::Infeasible;
    if (out.message.empty()) out.message = "no incumbent found";
    return out;
  }
  out.status = open.empty() ? Ffs1Result::Status::Optimal
                            : Ffs1Result::Status::NodeLimit;
  out.objective = incumbent;
  out.bound = out.status == Ffs1Result::Status::Optimal ? incumbent
                                                        : global_bound;

  // Tight resolve of the incumbent pattern: node LPs run at the working
  // tolerance, whose absolute row error can exceed what the downstream
  // recursion tolerates; the fixed pattern resolves quickly to ~1e-11.
  {
    Fixing pinned(nbin, 0);
    bool consistent = true;
    for (int k = 0; k < nbin && consistent; ++k)
      if (incumbent_x[lay.u0 + k] > 0.5) {
        pinned[k] = -1;
        consistent = propagate(inst, k / inst.num_arcs(), k % inst.num_arcs(),
                               1, pinned);
      }
    if (consistent) {
      SolverConfig tight = cfg.lp;
      tight.tol_gap = std::min(tight.tol_gap, 1e-10);
      tight.tol_feas_primal = std::min(tight.tol_feas_primal, 1e-11);
      tight.tol_feas_dual = std::min(tight.tol_feas_dual, 1e-11);
      const Solution refined =
          solve(build_lp(inst, lay, ref, cfg.alpha, pinned), tight);
      if (refined.status == SolveStatus::Optimal) incumbent_x = refined.x;
    }
  }

  // Unpack the incumbent.
  out.flow.assign(inst.horizon, std::vector<double>(inst.num_arcs(), 0.0));
  out.used = out.flow;
  out.qty.assign(inst.horizon + 1, std::vector<double>(inst.num_nodes(), 0.0));
  out.qty[0] = inst.p_init;
  out.plant_qual.assign(inst.horizon, std::vector<double>(inst.num_plants, 0.0));
  out.shortfall = out.plant_qual;
  for (int t = 0; t < inst.horizon; ++t)
    for (int e = 0; e < inst.num_arcs(); ++e) {
      out.flow[t][e] = std::max(0.0, incumbent_x[lay.a(t, e)]);
      out.used[t][e] = incumbent_x[lay.u(t, e)] > 0.5 ? 1.0 : 0.0;
      if (out.used[t][e] == 0.0) out.flow[t][e] = 0.0;
    }
  // Scrub the source drains: the final balance row forces an empty source,
  // so fold any leftover solver slack into the last active shipment.
  for (int i = 0; i < inst.num_sources; ++i) {
    double residual = inst.p_init[i];
    int last_t = -1, last_e = -1;
    for (int t = 0; t < inst.horizon; ++t) {
      residual += inst.supply_qty[t][i];
      for (int e : inst.out_arcs(i)) {
        residual -= out.flow[t][e];
        if (out.used[t][e] > 0.5) {
          last_t = t;
          last_e = e;
        }
      }
    }
    if (last_t >= 0 && residual != 0.0) {
      double& f = out.flow[last_t][last_e];
      f = std::clamp(f + residual, 0.0, inst.arcs[last_e].flow_hi);
    }
  }

  // Stocks re-derived by exact forward balance so the dynamics rows hold to
  // machine precision rather than solver tolerance.
  for (int t = 0; t < inst.horizon; ++t)
    for (int i = 0; i < inst.first_plant(); ++i) {
      double in_flow = inst.is_source(i) ? inst.supply_qty[t][i] : 0.0;
      double out_flow = 0.0;
      for (int e : inst.in_arcs(i)) in_flow += out.flow[t][e];
      for (int e : inst.out_arcs(i)) out_flow += out.flow[t][e];
      out.qty[t + 1][i] = out.qty[t][i] + in_flow - out_flow;
    }
  for (int t = 0; t < inst.horizon; ++t)
    for (int pl = 0; pl < inst.num_plants; ++pl) {
      out.plant_qual[t][pl] = incumbent_x[lay.q(t, pl)];
      out.shortfall[t][pl] = incumbent_x[lay.v(t, pl)];
    }
  return out;
}

Ffs2Result ffs2(const Instance& inst,
                const std::vector<std::vector<double>>& flow,
                const std::vector<std::vector<double>>& used,
                const std::vector<std::vector<double>>& qty) {
  Ffs2Result out;
  Schedule& s = out.schedule;
  s = Schedule::zeros(inst);
  s.flow = flow;
  s.used = used;
  s.qty = qty;
  s.qty[0] = inst.p_init;
  s.qual[0] = inst.q_init;

  const int MT = inst.horizon;
  for (int t = 0; t < MT; ++t) {
    // Plants first: averaged quality from the feeder qualities at t.
    for (int i = inst.first_plant(); i < inst.num_nodes(); ++i) {
      const int pi = inst.plant_index(i);
      double mass = 0.0;
      for (int e : inst.in_arcs(i))
        mass += s.flow[t][e] * s.qual[t][inst.arcs[e].from];
      s.qual[t][i] = mass / inst.demand_qty[t][pi];
      s.shortfall[t][pi] =
          std::max(0.0, inst.demand_qual[t][pi] - s.qual[t][i]);
    }
    // Sources and tanks roll forward.
    for (int i = 0; i < inst.first_plant(); ++i) {
      double in_mass = 0.0, out_flow = 0.0;
      for (int e : inst.in_arcs(i))
        in_mass += s.flow[t][e] * s.qual[t][inst.arcs[e].from];
      for (int e : inst.out_arcs(i)) out_flow += s.flow[t][e];
      if (inst.is_source(i))
        in_mass += inst.supply_qty[t][i] * inst.supply_qual[t][i];
      const double numer =
          s.qty[t][i] * s.qual[t][i] + in_mass - out_flow * s.qual[t][i];
      const double denom = s.qty[t + 1][i];
      if (denom > 0.0) {
        s.qual[t + 1][i] = numer / denom;
      } else {
        s.qual[t + 1][i] = 0.0;  // empty-node convention
        ++out.empty_divisions;
      }
    }
  }
  return out;
}

}  // namespace pooling
