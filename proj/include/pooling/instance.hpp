#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pooling {

/// Node categories of the transportation network. Node ids partition as
/// sources [0, num_sources), tanks [num_sources, num_sources+num_tanks),
/// plants [num_sources+num_tanks, num_nodes). Ids are 0-based in memory
/// and 1-based in instance files.
enum class NodeKind { Source, Intermediate, Plant };

struct Arc {
  int from = -1;
  int to = -1;
  double flow_lo = 0.0;   // L_ij
  double flow_hi = 0.0;   // U_ij
  double cost = 0.0;      // CA_ij, per unit of flow
};

/// A pooling instance: network topology, horizon and all problem constants.
/// Immutable after construction (build one with InstanceBuilder or the
/// generator); all member queries are const and thread-safe.
class Instance {
 public:
  int num_sources = 0;
  int num_tanks = 0;
  int num_plants = 0;
  int horizon = 0;  // M_T, number of time steps t = 1..M_T (0-based 0..M_T-1)

  std::vector<Arc> arcs;

  // Per-node data, indexed by node id.
  std::vector<double> p_init;   // quantity at t = 1
  std::vector<double> q_init;   // quality at t = 1
  std::vector<double> p_min;    // storage lower bound (tanks)
  std::vector<double> p_max;    // storage upper bound (tanks)

  // supply[t][source], quality likewise. demand[t][plant - plant offset].
  std::vector<std::vector<double>> supply_qty;    // SA_i^t
  std::vector<std::vector<double>> supply_qual;   // SQ_i^t
  std::vector<std::vector<double>> demand_qty;    // RC_i^t
  std::vector<std::vector<double>> demand_qual;   // RQ_i^t
  std::vector<double> shortage_cost;              // CQ_i per plant

  int num_nodes() const { return num_sources + num_tanks + num_plants; }
  int num_arcs() const { return static_cast<int>(arcs.size()); }

  NodeKind kind(int node) const {
    if (node < num_sources) return NodeKind::Source;
    if (node < num_sources + num_tanks) return NodeKind::Intermediate;
    return NodeKind::Plant;
  }
  bool is_source(int node) const { return node < num_sources; }
  bool is_tank(int node) const {
    return node >= num_sources && node < num_sources + num_tanks;
  }
  bool is_plant(int node) const { return node >= num_sources + num_tanks; }
  int first_tank() const { return num_sources; }
  int first_plant() const { return num_sources + num_tanks; }
  int plant_index(int node) const { return node - first_plant(); }
  int tank_index(int node) const { return node - first_tank(); }

  // I(i): arc indices entering node i.  E(i): arc indices leaving node i.
  const std::vector<int>& in_arcs(int node) const { return in_arcs_[node]; }
  const std::vector<int>& out_arcs(int node) const { return out_arcs_[node]; }

  /// Rebuilds adjacency and validates all invariants; throws
  /// std::invalid_argument on malformed data.
  void finalize();

 private:
  std::vector<std::vector<int>> in_arcs_;
  std::vector<std::vector<int>> out_arcs_;
};

/// A full candidate assignment over the horizon. Flow/usage are stored per
/// time step then arc; node state per time step then node. State arrays run
/// through t = M_T + 1 (index horizon), flows through t = M_T.
struct Schedule {
  // flow[t][arc] for t = 0..MT-1
  std::vector<std::vector<double>> flow;
  // used[t][arc], the binary pipeline indicator (stored as double 0/1)
  std::vector<std::vector<double>> used;
  // qty[t][node], qual[t][node] for t = 0..MT (state at t = MT is the final one)
  std::vector<std::vector<double>> qty;
  std::vector<std::vector<double>> qual;
  // shortfall[t][plant] for t = 0..MT-1
  std::vector<std::vector<double>> shortfall;

  static Schedule zeros(const Instance& inst);
};

/// One violation entry: family label, time step (0-based), node or arc id,
/// and the nonnegative residual value.
struct ResidualEntry {
  std::string family;
  int t = 0;
  int id = 0;
  double value = 0.0;
};

struct ResidualReport {
  std::vector<ResidualEntry> entries;
  double max_violation = 0.0;
  double max_dynamics_violation = 0.0;  // excludes shortage-definition rows

  double family_max(const std::string& family) const;
  bool feasible(double tol) const { return max_violation <= tol; }
};

inline constexpr double kDefaultFeasTol = 1e-6;

/// Evaluates every (PP) constraint family at s exactly: flow bounds against
/// u, one-pipeline-per-node, source balance and quality dynamics, tank
/// balance, storage bounds and quality dynamics, plant quality averaging,
/// and the shortage definition v >= max{0, RQ - q}. Pure and deterministic.
ResidualReport residuals(const Instance& inst, const Schedule& s);

/// (sum RQ - sum v) / sum RQ, clamped to [0, 1]. Throws if sum RQ == 0.
double sucs_ratio(const Instance& inst, const Schedule& s);

/// Objective of (PP): transport cost plus CQ*RC-weighted shortage cost.
double schedule_cost(const Instance& inst, const Schedule& s);

/// Rolls the dynamics equations forward given flows and pipeline choices:
/// produces the unique state trajectory with quality set to 0 at emptied
/// nodes. Plants get their averaged quality and v = max{0, RQ - q}.
/// The result satisfies every dynamics row exactly by construction; flow
/// bound or storage violations are the caller's responsibility.
Schedule simulate(const Instance& inst,
                  const std::vector<std::vector<double>>& flow,
                  const std::vector<std::vector<double>>& used);

}  // namespace pooling
