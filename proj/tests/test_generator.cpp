#include "doctest.h"

#include "pooling/generator.hpp"
#include "pooling/qcqp.hpp"

using namespace pooling;

TEST_CASE("shape (1,2,1) has 6 pipelines; layout matches the known counts") {
  GeneratorSpec spec;
  spec.num_sources = 1;
  spec.num_tanks = 2;
  spec.num_plants = 1;
  spec.horizon = 10;
  spec.seed = 7;
  const GeneratedInstance g = generate(spec);
  CHECK(g.instance.num_arcs() == 6);
  const VarLayout lay = layout(g.instance);
  CHECK(lay.size() == 138);
}

TEST_CASE("shape (10,18,7) at two steps carries 1224 flow variables") {
  GeneratorSpec spec;
  spec.num_sources = 10;
  spec.num_tanks = 18;
  spec.num_plants = 7;
  spec.horizon = 2;
  spec.seed = 3;
  const GeneratedInstance g = generate(spec);
  CHECK(g.instance.num_arcs() == 612);
  const VarLayout lay = layout(g.instance);
  CHECK(lay.count_a() == 1224);
  CHECK(lay.size() == 1344);
}

TEST_CASE("seeded generation is reproducible bit for bit") {
  GeneratorSpec spec;
  spec.num_sources = 2;
  spec.num_tanks = 4;
  spec.num_plants = 2;
  spec.horizon = 5;
  spec.seed = 20240101;
  for (auto preset :
       {GeneratorPreset::Default, GeneratorPreset::Slack, GeneratorPreset::Starved}) {
    spec.preset = preset;
    const GeneratedInstance a = generate(spec);
    const GeneratedInstance b = generate(spec);
    REQUIRE(a.instance.num_arcs() == b.instance.num_arcs());
    for (int e = 0; e < a.instance.num_arcs(); ++e) {
      CHECK(a.instance.arcs[e].flow_hi == b.instance.arcs[e].flow_hi);
      CHECK(a.instance.arcs[e].cost == b.instance.arcs[e].cost);
    }
    CHECK(a.instance.p_init == b.instance.p_init);
    CHECK(a.instance.q_init == b.instance.q_init);
    CHECK(a.instance.supply_qty == b.instance.supply_qty);
    CHECK(a.instance.demand_qual == b.instance.demand_qual);
  }
}

TEST_CASE("slack preset ships a certifying plan that meets every requirement") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 11ULL, 99ULL}) {
    GeneratorSpec spec;
    spec.num_sources = 2;
    spec.num_tanks = 4;
    spec.num_plants = 2;
    spec.horizon = 4;
    spec.seed = seed;
    spec.preset = GeneratorPreset::Slack;
    const GeneratedInstance g = generate(spec);
    REQUIRE(!g.shape_warning);
    REQUIRE(g.plan_flow.has_value());
    const Schedule s = simulate(g.instance, *g.plan_flow, *g.plan_used);
    const ResidualReport rep = residuals(g.instance, s);
    CHECK(rep.max_violation <= 1e-9);
    CHECK(sucs_ratio(g.instance, s) == 1.0);

    // Supply slack: available mass at least 1.2x the demanded mass.
    double avail = 0.0, need = 0.0;
    const Instance& in = g.instance;
    for (int i = 0; i < in.first_plant(); ++i) avail += in.p_init[i];
    for (int t = 0; t < in.horizon; ++t) {
      for (int i = 0; i < in.num_sources; ++i) avail += in.supply_qty[t][i];
      for (int p = 0; p < in.num_plants; ++p) need += in.demand_qty[t][p];
    }
    CHECK(avail >= 1.2 * need);
  }
}

TEST_CASE("starved preset is quantity-feasible but cannot meet any quality bar") {
  GeneratorSpec spec;
  spec.num_sources = 2;
  spec.num_tanks = 4;
  spec.num_plants = 2;
  spec.horizon = 3;
  spec.seed = 5;
  spec.preset = GeneratorPreset::Starved;
  const GeneratedInstance g = generate(spec);
  REQUIRE(g.plan_flow.has_value());
  const Schedule s = simulate(g.instance, *g.plan_flow, *g.plan_used);
  const ResidualReport rep = residuals(g.instance, s);
  CHECK(rep.max_dynamics_violation <= 1e-9);
  CHECK(sucs_ratio(g.instance, s) < 1.0);

  const Instance& in = g.instance;
  // No tank-to-plant pipe can ever carry the required quality mass.
  double qual_cap = 0.0;
  for (int i = 0; i < in.first_plant(); ++i)
    qual_cap = std::max(qual_cap, in.q_init[i]);
  for (const Arc& a : in.arcs)
    if (in.is_tank(a.from) && in.is_plant(a.to))
      for (int t = 0; t < in.horizon; ++t) {
        const int p = in.plant_index(a.to);
        CHECK(a.flow_hi * qual_cap <
              in.demand_qty[t][p] * in.demand_qual[t][p]);
      }
}

TEST_CASE("warned shapes still generate") {
  GeneratorSpec spec;
  spec.num_sources = 3;
  spec.num_tanks = 2;
  spec.num_plants = 2;
  spec.horizon = 2;
  spec.preset = GeneratorPreset::Slack;
  const GeneratedInstance g = generate(spec);
  CHECK(g.shape_warning);
  CHECK(g.instance.num_arcs() > 0);
}
