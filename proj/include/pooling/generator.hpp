#pragma once

#include <cstdint>
#include <optional>

#include "pooling/instance.hpp"

namespace pooling {

/// Closed range drawn with quantized uniform values (multiples of 0.25)
/// so generated instances are bit-identical across platforms.
struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

struct GeneratorRanges {
  Range supply_qty{5, 20};
  Range supply_qual{1, 5};
  Range demand_qty{3, 10};
  Range demand_qual{1, 4};
  Range arc_cost{1, 5};
  Range shortage_cost{50, 200};
  Range flow_cap{10, 40};
  Range tank_cap{20, 60};
  Range source_init{0, 8};
};

/// Families of generated instances. `Slack` sizes the tank stocks and
/// caps around an explicit round-robin feeding plan so a schedule meeting
/// every requirement provably exists with at least 20% supply margin; all
/// qualities sit above every plant requirement and each source's supply
/// quality equals its initial quality (a source can then drain completely
/// without breaking its quality balance). `Starved` keeps quantities
/// feasible but caps tank-to-plant pipes and qualities low enough that no
/// repair can meet the quality requirements.
enum class GeneratorPreset { Default, Slack, Starved };

struct GeneratorSpec {
  int num_sources = 1;
  int num_tanks = 2;
  int num_plants = 1;
  int horizon = 2;
  std::uint64_t seed = 1;
  GeneratorPreset preset = GeneratorPreset::Default;
  GeneratorRanges ranges;  // used by the Default preset
};

struct GeneratedInstance {
  Instance instance;
  /// For the Slack preset, the certifying feasible plan (flows and
  /// pipeline choices); nullopt otherwise.
  std::optional<std::vector<std::vector<double>>> plan_flow;
  std::optional<std::vector<std::vector<double>>> plan_used;
  bool shape_warning = false;  // M_I <= M_P or too few free tanks
};

/// Deterministic generation: same spec (including seed) gives bit-identical
/// instances. Topology is complete source->tank, tank->tank, tank->plant.
GeneratedInstance generate(const GeneratorSpec& spec);

/// SplitMix64, the fixed PRNG behind the generator.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform pick from {lo, lo + q, ..., <= hi} with quantum q = 0.25.
  double quantized(Range r) {
    const double q = 0.25;
    const std::uint64_t steps =
        static_cast<std::uint64_t>((r.hi - r.lo) / q + 0.5) + 1;
    return r.lo + q * static_cast<double>(next() % steps);
  }
};

}  // namespace pooling
