#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "mcies/building.hpp"
#include "mcies/common.hpp"
#include "mcies/market.hpp"
#include "mcies/model.hpp"
#include "mcies/scenario.hpp"

namespace mcies::dispatch {

// ---------------------------------------------------------------------------
// Single-hour merit-order clearing.

/// Capacity offered at a flat marginal price. Below the clearing price the
/// block sits at `lo`, above it at `hi`, at the price anywhere in between.
/// Negative outputs model sales and curtailment.
struct PriceBlock {
  double price = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Supply stack of one commodity for one hour: an optional unit with cost
/// a*x^2 + b*x on [lo, hi] plus a few flat-price blocks. Unmet demand and
/// unabsorbed supply cost `penalty_weight` per kW^2.
struct SupplyStack {
  static constexpr std::size_t kMaxBlocks = 6;

  bool has_unit = false;
  double a = 0.0;
  double b = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::array<PriceBlock, kMaxBlocks> blocks{};
  std::size_t n_blocks = 0;
  double penalty_weight = 1e3;

  void add(const PriceBlock& block);
};

struct Clearing {
  double unit = 0.0;
  std::array<double, SupplyStack::kMaxBlocks> block{};
  double shortfall = 0.0;
  double surplus = 0.0;
  double cost = 0.0;  // unit + blocks + penalty
};

/// Least-cost split of `demand` over the stack. Shortfall or surplus appears
/// only once the stack is exhausted. Within its range the split is exact: the
/// unit sits on its marginal-cost line, blocks are at a bound unless they set
/// the price.
Clearing clear(const SupplyStack& stack, double demand);

// ---------------------------------------------------------------------------
// Daily exchange between two communities.

/// Minimizes sum_t cost(t, x_t) over multiples of `quantum` subject to
/// sum_t x_t = 0 and lo <= x_t <= hi. `cost` must be convex in x for every t;
/// then the result is the exact optimum on the lattice.
HourlySeries allocate_exchange(const std::function<double(std::size_t, double)>& cost, double lo, double hi,
                               double quantum);

// ---------------------------------------------------------------------------
// Storage.

struct StoragePlan {
  HourlySeries ch{};
  HourlySeries dc{};
};

/// Day plan driven by an hourly value signal: charge at a constant rate in
/// the cheapest hours and discharge at a constant rate in the dearest hours,
/// with the end-of-day level equal to the start level. The discharge rate is
/// the largest the ratings and capacity allow when the round trip pays off;
/// otherwise only the self-discharge is topped up.
StoragePlan plan_storage(const devices::StorageDevice& s, const HourlySeries& value, double dt_hours,
                         devices::EndRule rule);

// ---------------------------------------------------------------------------
// Scenario dispatch.

struct DispatchOptions {
  double penalty_weight = 1e3;  // yuan per kW^2 of unmet or unabsorbed energy
  double tie_quantum = 0.5;     // kW
};

/// Everything that depends on the instance but not on loads or weather.
struct DispatchContext {
  model::SystemModel system;
  std::vector<market::HeatLink> links;
  std::vector<std::size_t> served_by;
  std::vector<market::GridLimits> grid_limits;
  std::vector<StoragePlan> ees_plan;  // per community (zeros when absent)
  std::vector<StoragePlan> hst_plan;
  DispatchOptions options;
};

DispatchContext make_context(const model::SystemModel& system, const DispatchOptions& options = {});

/// Heat side of the dispatch. It does not depend on the weather scenario.
struct HeatStage {
  std::vector<HourlySeries> chp_h;  // per community
  std::vector<HourlySeries> eb_h;
  std::vector<HourlySeries> unserved;
  std::vector<HourlySeries> dumped;
  HourlySeries tie_into_first{};  // heat flow into community 1
};

HeatStage heat_stage(const DispatchContext& ctx, std::span<const building::EffectiveLoads> loads);

struct DispatchResult {
  market::ScenarioDispatch dispatch;
  double penalty = 0.0;
  Violations shortfalls;  // hours where supply could not meet or absorb demand
};

DispatchResult scenario_dispatch(const DispatchContext& ctx, std::span<const building::EffectiveLoads> loads,
                                 const scenario::JointScenario& sc);

DispatchResult scenario_dispatch(const DispatchContext& ctx, std::span<const building::EffectiveLoads> loads,
                                 const scenario::JointScenario& sc, const HeatStage& heat);

}  // namespace mcies::dispatch
