#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pooling/ffs.hpp"
#include "pooling/instance.hpp"
#include "pooling/moment.hpp"

namespace pooling {

enum class RelaxKind { LP, SOCP };

struct RescheduleConfig {
  RelaxKind relax = RelaxKind::LP;
  double delta = 1e-4;
  Ffs1Config ffs;
  double shortage_tol = 1e-7;  // v above this counts as unmet
  SolverConfig relax_solver;
};

enum class RepairCase { CaseI, CaseII };

/// Case I iff the recursed quality meets the requirement at every plant at
/// step t (boundary included); otherwise Case II.
RepairCase case_select(const Instance& inst, const Schedule& x_plus, int t);

/// The sorted requirement/supply tables of the insufficient-supplies repair.
struct RepairTables {
  // (value, node id), sorted descending by value with ascending-id ties.
  std::vector<std::pair<double, int>> plant_demand;   // D = RC * RQ
  std::vector<std::pair<double, int>> tank_supply;    // min{p-pmin, U} * q
  std::vector<std::pair<double, int>> source_supply;  // min{p, U} * q
};

RepairTables build_repair_tables(const Instance& inst,
                                 const std::vector<double>& qty_t,
                                 const std::vector<double>& qual_t, int t);

/// Greedy monotone matching of plants (descending requirement) to distinct
/// tanks placed later and later in the descending-supply order, requiring
/// an existing arc and per-arc supply min{p-pmin, U_ji} q >= D. Returns the
/// (tank, plant) arcs or nullopt when some plant cannot be served.
std::optional<std::vector<std::pair<int, int>>> case2_matching(
    const Instance& inst, const std::vector<double>& qty_t,
    const std::vector<double>& qual_t, int t);

struct RepairResult {
  Schedule schedule;
  bool repaired = false;    // false: window returned unmodified
  bool unrepairable = false;  // Case II matching failed
  std::string note;
};

/// Excessive-supplies repair applied per step over [t_begin, t_end]: plants
/// pinned to the required quality by shrinking the active tank feeds,
/// sources refill tanks through the active arcs up to capacity and
/// headroom, all other flows zeroed, states rolled exactly.
RepairResult repair_case1(const Instance& inst, const Schedule& x_plus,
                          int t_begin, int t_end);

/// Insufficient-supplies repair applied per step over [t_begin, t_end]:
/// matched tanks pin their plants to the required quality mass, the
/// strongest sources refill the weakest unmatched tanks, states roll
/// exactly. A failed matching returns the input unchanged.
RepairResult repair_case2(const Instance& inst, const Schedule& x_plus,
                          int t_begin, int t_end);

struct RescheduleIteration {
  int t_hat = 0;             // accepted steps before this round
  int t_plus = -1;           // first shortage step, -1 when none
  char case_taken = '-';     // 'I', 'X' (mixed), '2', '-' none
  double relax_objective = 0.0;
};

struct RescheduleResult {
  enum class Status { Success, Unrepairable, FfsInfeasible };
  Status status = Status::Success;
  Schedule schedule;
  std::vector<RescheduleIteration> history;
  double first_relax_objective = 0.0;
  double final_relax_objective = 0.0;
  std::string message;
};

/// The rescheduling loop: solve the chosen relaxation on the remaining
/// horizon, recover a schedule with FFS, accept it outright if every
/// requirement is met, otherwise repair up to the first shortage step and
/// restart from there. Terminates within M_T outer rounds.
RescheduleResult reschedule(const Instance& inst,
                            const RescheduleConfig& cfg = {});

/// Sub-instance over global steps [t_hat, MT) with the spliced state as the
/// initial condition (tiny negative stocks are clamped to zero).
Instance tail_instance(const Instance& inst, const Schedule& accepted,
                       int t_hat);

/// First-row entries of a lifted relaxation solution, mapped back to
/// reference trajectories for FFS1.
ReferencePoint extract_reference(const Instance& inst, const MomentModel& m,
                                 const std::vector<double>& lifted);

}  // namespace pooling
