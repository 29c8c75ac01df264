#include "pooling/generator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pooling {

namespace {

void build_topology(Instance& in, SplitMix64& rng, Range si_cap, Range ii_cap,
                    Range ip_cap, Range cost) {
  const int S = in.num_sources, I = in.num_tanks, P = in.num_plants;
  for (int s = 0; s < S; ++s)
    for (int j = 0; j < I; ++j)
      in.arcs.push_back(
          {s, S + j, 0.0, rng.quantized(si_cap), rng.quantized(cost)});
  for (int a = 0; a < I; ++a)
    for (int b = 0; b < I; ++b)
      if (a != b)
        in.arcs.push_back(
            {S + a, S + b, 0.0, rng.quantized(ii_cap), rng.quantized(cost)});
  for (int j = 0; j < I; ++j)
    for (int p = 0; p < P; ++p)
      in.arcs.push_back(
          {S + j, S + I + p, 0.0, rng.quantized(ip_cap), rng.quantized(cost)});
}

int arc_between(const Instance& in, int from, int to) {
  for (const Arc& a : in.arcs)
    if (a.from == from && a.to == to)
      return static_cast<int>(&a - in.arcs.data());
  throw std::logic_error("generator: missing arc");
}

GeneratedInstance generate_default(const GeneratorSpec& spec) {
  SplitMix64 rng(spec.seed);
  const GeneratorRanges& R = spec.ranges;
  Instance in;
  in.num_sources = spec.num_sources;
  in.num_tanks = spec.num_tanks;
  in.num_plants = spec.num_plants;
  in.horizon = spec.horizon;
  build_topology(in, rng, R.flow_cap, R.flow_cap, R.flow_cap, R.arc_cost);

  const int n = in.num_nodes();
  in.p_init.assign(n, 0.0);
  in.q_init.assign(n, 0.0);
  in.p_min.assign(n, 0.0);
  in.p_max.assign(n, 0.0);
  for (int i = 0; i < in.num_sources; ++i) {
    in.p_init[i] = rng.quantized(R.source_init);
    in.q_init[i] = rng.quantized(R.supply_qual);
    in.p_max[i] = 1e6;
  }
  for (int i = in.first_tank(); i < in.first_plant(); ++i) {
    in.p_max[i] = rng.quantized(R.tank_cap);
    in.p_init[i] = rng.quantized({0.0, in.p_max[i]});
    in.q_init[i] = rng.quantized(R.supply_qual);
  }
  in.supply_qty.assign(in.horizon, std::vector<double>(in.num_sources));
  in.supply_qual.assign(in.horizon, std::vector<double>(in.num_sources));
  in.demand_qty.assign(in.horizon, std::vector<double>(in.num_plants));
  in.demand_qual.assign(in.horizon, std::vector<double>(in.num_plants));
  in.shortage_cost.assign(in.num_plants, 0.0);
  double total_supply = 0.0, total_demand = 0.0;
  for (int t = 0; t < in.horizon; ++t)
    for (int i = 0; i < in.num_sources; ++i) {
      in.supply_qty[t][i] = rng.quantized(R.supply_qty);
      // Constant per-source quality: supply arrives at the stored quality,
      // so a source can empty without violating its quality balance.
      in.supply_qual[t][i] = in.q_init[i];
      total_supply += in.supply_qty[t][i];
    }
  for (int t = 0; t < in.horizon; ++t)
    for (int p = 0; p < in.num_plants; ++p) {
      in.demand_qty[t][p] = std::max(0.25, rng.quantized(R.demand_qty));
      in.demand_qual[t][p] = rng.quantized(R.demand_qual);
      total_demand += in.demand_qty[t][p];
    }
  for (int p = 0; p < in.num_plants; ++p)
    in.shortage_cost[p] = rng.quantized(R.shortage_cost);
  for (int i = 0; i < in.num_sources; ++i) total_supply += in.p_init[i];
  for (int i = in.first_tank(); i < in.first_plant(); ++i)
    total_supply += in.p_init[i];
  if (total_supply < total_demand) {
    // Top up tank stocks so total supply covers total demand.
    const double bump =
        std::ceil((total_demand - total_supply) / in.num_tanks / 0.25) * 0.25;
    for (int i = in.first_tank(); i < in.first_plant(); ++i) {
      in.p_init[i] += bump;
      in.p_max[i] = std::max(in.p_max[i], in.p_init[i] + 10.0);
    }
  }

  GeneratedInstance out;
  out.shape_warning = in.num_tanks <= in.num_plants;
  in.finalize();
  out.instance = std::move(in);
  return out;
}

struct PlanRanges {
  Range node_qual;   // source and tank initial / supply quality
  Range demand_qty;  // RC
  Range demand_qual; // RQ
  Range supply_qty;  // SA
  Range source_init; // stock at t = 1
  Range ip_cap;      // tank -> plant pipe capacity
};

// Instance built around an explicit round-robin plan: a rotating window of
// distinct tanks feeds the plants exactly RC, each source ships its stored
// stock to a private free tank every step (the stock lags supply by one
// step so stored quality equals the supply quality) and drains fully on
// the last step. Tank stocks are then sized off the plan with margin.
GeneratedInstance generate_planned(const GeneratorSpec& spec,
                                   const PlanRanges& pr) {
  SplitMix64 rng(spec.seed);
  const int S = spec.num_sources, I = spec.num_tanks, P = spec.num_plants;
  const int MT = spec.horizon;

  Instance in;
  in.num_sources = S;
  in.num_tanks = I;
  in.num_plants = P;
  in.horizon = MT;
  build_topology(in, rng, {20, 30}, {20, 30}, pr.ip_cap, {1, 5});

  const int n = in.num_nodes();
  in.p_init.assign(n, 0.0);
  in.q_init.assign(n, 0.0);
  in.p_min.assign(n, 0.0);
  in.p_max.assign(n, 0.0);
  in.supply_qty.assign(MT, std::vector<double>(S));
  in.supply_qual.assign(MT, std::vector<double>(S));
  in.demand_qty.assign(MT, std::vector<double>(P));
  in.demand_qual.assign(MT, std::vector<double>(P));
  in.shortage_cost.assign(P, 0.0);

  for (int i = 0; i < S; ++i) {
    in.q_init[i] = rng.quantized(pr.node_qual);
    in.p_init[i] = rng.quantized(pr.source_init);
    in.p_max[i] = 1e6;
  }
  for (int j = in.first_tank(); j < in.first_plant(); ++j)
    in.q_init[j] = rng.quantized(pr.node_qual);
  for (int t = 0; t < MT; ++t)
    for (int i = 0; i < S; ++i) {
      in.supply_qty[t][i] = rng.quantized(pr.supply_qty);
      in.supply_qual[t][i] = in.q_init[i];
    }
  for (int t = 0; t < MT; ++t)
    for (int p = 0; p < P; ++p) {
      in.demand_qty[t][p] = rng.quantized(pr.demand_qty);
      in.demand_qual[t][p] = rng.quantized(pr.demand_qual);
    }
  for (int p = 0; p < P; ++p) in.shortage_cost[p] = rng.quantized({50, 200});

  GeneratedInstance out;
  const int free_tanks = I - P;
  out.shape_warning = free_tanks < 1 || P > I;
  const int shippers = std::clamp(free_tanks, 0, S);
  // Sources without a private refill tank stay empty and idle.
  for (int i = shippers; i < S; ++i) {
    in.p_init[i] = 0.0;
    for (int t = 0; t < MT; ++t) in.supply_qty[t][i] = 0.0;
  }
  in.finalize();

  if (out.shape_warning) {
    out.instance = std::move(in);
    return out;
  }

  std::vector<std::vector<double>> flow(
      MT, std::vector<double>(in.num_arcs(), 0.0));
  std::vector<std::vector<double>> used = flow;
  std::vector<double> balance(I, 0.0);  // tank stock relative to p_init
  std::vector<double> min_bal(I, 0.0), max_bal(I, 0.0), draw_total(I, 0.0);
  std::vector<double> src_stock(S);
  for (int i = 0; i < S; ++i) src_stock[i] = in.p_init[i];

  for (int t = 0; t < MT; ++t) {
    std::vector<bool> feeding(I, false);
    for (int p = 0; p < P; ++p) {
      const int j = (t * P + p) % I;
      feeding[j] = true;
      const int e = arc_between(in, in.first_tank() + j, in.first_plant() + p);
      flow[t][e] = in.demand_qty[t][p];
      used[t][e] = 1.0;
      balance[j] -= flow[t][e];
      draw_total[j] += flow[t][e];
      min_bal[j] = std::min(min_bal[j], balance[j]);
    }
    std::vector<int> free_list;
    for (int j = 0; j < I; ++j)
      if (!feeding[j]) free_list.push_back(j);
    for (int i = 0; i < shippers; ++i) {
      double ship = src_stock[i];
      if (t == MT - 1) ship += in.supply_qty[t][i];
      const int j = free_list[i];
      if (ship > 0.0) {
        const int e = arc_between(in, i, in.first_tank() + j);
        flow[t][e] = ship;
        used[t][e] = 1.0;
        balance[j] += ship;
        max_bal[j] = std::max(max_bal[j], balance[j]);
      }
      src_stock[i] += in.supply_qty[t][i] - ship;
    }
  }

  // Size stocks and caps so the plan fits with at least 20% margin.
  for (int j = 0; j < I; ++j) {
    const double margin = 0.2 * draw_total[j] + rng.quantized({5, 15});
    const double p1 = std::ceil((-min_bal[j] + margin) / 0.25) * 0.25;
    in.p_init[in.first_tank() + j] = p1;
    in.p_max[in.first_tank() + j] =
        std::ceil((p1 + std::max(0.0, max_bal[j]) + rng.quantized({5, 15})) /
                  0.25) *
        0.25;
  }
  in.finalize();

  out.plan_flow = flow;
  out.plan_used = used;
  out.instance = std::move(in);
  return out;
}

}  // namespace

GeneratedInstance generate(const GeneratorSpec& spec) {
  if (spec.num_sources < 1 || spec.num_tanks < 1 || spec.num_plants < 1 ||
      spec.horizon < 1)
    throw std::invalid_argument("generator: counts and horizon must be >= 1");
  switch (spec.preset) {
    case GeneratorPreset::Slack: {
      PlanRanges pr;
      pr.node_qual = {3.0, 5.0};
      pr.demand_qty = {3.0, 8.0};
      pr.demand_qual = {1.0, 2.5};
      pr.supply_qty = {1.0, 5.0};
      pr.source_init = {1.0, 6.0};
      pr.ip_cap = {30.0, 40.0};
      return generate_planned(spec, pr);
    }
    case GeneratorPreset::Starved: {
      // Quantity-feasible but quality-starved: every quality sits far below
      // every requirement and the tank->plant pipes are too thin for the
      // oversupply trick min{p - pmin, U} q >= RC RQ to ever hold.
      PlanRanges pr;
      pr.node_qual = {0.25, 0.5};
      pr.demand_qty = {2.0, 3.0};
      pr.demand_qual = {2.0, 4.0};
      pr.supply_qty = {1.0, 3.0};
      pr.source_init = {1.0, 4.0};
      pr.ip_cap = {3.25, 4.0};
      return generate_planned(spec, pr);
    }
    case GeneratorPreset::Default:
      break;
  }
  return generate_default(spec);
}

}  // namespace pooling
