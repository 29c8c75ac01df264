#pragma once

#include <string>
#include <vector>

#include "pooling/instance.hpp"
#include "pooling/solver.hpp"

namespace pooling {

/// Reference trajectories (p-bar, q-bar) from a relaxation solution,
/// indexed [state time 0..MT][node]; slot 0 carries the instance data.
struct ReferencePoint {
  std::vector<std::vector<double>> p_bar;
  std::vector<std::vector<double>> q_bar;
};

struct Ffs1Config {
  double alpha = 100.0;    // weight of the ||p - p_bar||_1 tracking term
  double tol_mip = 1e-6;   // absolute branch-and-bound gap
  int node_limit = 100000;
  double int_tol = 1e-7;   // integrality tolerance on u
  SolverConfig lp;
};

struct Ffs1Result {
  enum class Status { Optimal, NodeLimit, Infeasible };
  Status status = Status::Infeasible;
  double objective = 0.0;     // incumbent objective (tracking + transport + v)
  double bound = 0.0;         // best proven lower bound
  double root_bound = 0.0;    // LP relaxation value at the root
  int nodes = 0;
  std::vector<std::vector<double>> flow;   // a-hat
  std::vector<std::vector<double>> used;   // u-hat, exactly binary
  std::vector<std::vector<double>> qty;    // p-hat over state times 0..MT
  std::vector<std::vector<double>> plant_qual;  // q-hat at plants per step
  std::vector<std::vector<double>> shortfall;   // v-hat per step
  std::string message;  // on Infeasible: the offending row family
  // (global bound, incumbent) after each explored node.
  std::vector<std::pair<double, double>> progress;

  double gap() const { return objective - bound; }
};

/// Solves the feasibility MILP: track the relaxation's p-bar in the 1-norm,
/// pay transport plus plant quality shortfall, subject to balance rows,
/// storage bounds, plant requirement rows linearized with the fixed q-bar,
/// pipe bounds gated by binary u and the one-pipeline-per-node rows.
/// Branch and bound over u: most-fractional branching with (t, arc)
/// tie-breaking, depth-first diving with best-bound backtracking, and
/// one-pipeline constraint propagation after every fixing.
Ffs1Result ffs1(const Instance& inst, const ReferencePoint& ref,
                const Ffs1Config& cfg = {});

struct Ffs2Result {
  Schedule schedule;        // (a-hat, p-hat, q-tilde, u-hat, v-tilde)
  int empty_divisions = 0;  // times the recursion hit p-hat^{t+1} = 0
};

/// Forward quality recursion: propagates exact mixing qualities through
/// sources, tanks and plants given the FFS1 flows and stocks, setting the
/// quality of an emptied node to zero, and recomputes the shortfalls.
Ffs2Result ffs2(const Instance& inst,
                const std::vector<std::vector<double>>& flow,
                const std::vector<std::vector<double>>& used,
                const std::vector<std::vector<double>>& qty);

}  // namespace pooling
