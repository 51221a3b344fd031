#pragma once

#include <span>
#include <vector>

#include "mcies/building.hpp"
#include "mcies/common.hpp"
#include "mcies/devices.hpp"

namespace mcies::market {

/// Grid tariff and the regulatory envelope on retail prices.
struct TariffTable {
  HourlySeries p_buy{};
  HourlySeries p_sell{};
  double gamma_min = 0.3;
  double gamma_max = 0.66;
  double mu_av = 0.65;
  double gamma_av = 0.5;
};

Violations validate(const TariffTable& tariff);

/// Leader strategy: retail electricity and heat prices per hour (yuan/kWh).
struct PriceSchedule {
  HourlySeries mu_sell{};
  HourlySeries gamma_sell{};
};

struct MTCost {
  double a = 1.0;
  double b = 0.6;
  double c_start = 1.3;
};

struct CHPCost {
  double a = 2.415e-4;
  double b = 0.31;
  double c = 185.5;
  double d = 2.1e-4;
  double e = 0.0294;
  double f = 2.17e-7;
};

/// Operation and maintenance coefficients (yuan/kWh) per device family,
/// applied to WT/PV delivered output, CHP/MT electric output, EB input and
/// storage discharge.
struct OMCoefficients {
  double wt = 0.0;
  double pv = 0.0;
  double chp = 0.0;
  double mt = 0.0;
  double eb = 0.0;
  double ees = 0.0;
  double hst = 0.0;
};

struct DeviceCostParams {
  MTCost mt;
  CHPCost chp;
  OMCoefficients om;
};

/// Signed grid exchange range: imports up to p_max, exports up to -p_min.
struct GridLimits {
  double p_min = -1000.0;
  double p_max = 1000.0;
};

struct TieLineLimits {
  double p_min = -400.0;
  double p_max = 400.0;
  double h_min = -400.0;
  double h_max = 400.0;
};

/// Day schedule of one community system in one scenario. Tie-line and grid
/// quantities are seen from this community: tie flows are imports when
/// positive. `unserved_*` and `dumped_*` carry residual infeasibility; they
/// are never counted as supply or demand by the balance checks.
struct CiesDispatch {
  HourlySeries wt{}, pv{};
  HourlySeries curtailed{};
  HourlySeries chp_p{}, chp_h{};
  HourlySeries mt_p{};
  devices::Commitment mt_on{};
  HourlySeries eb_p{}, eb_h{};
  HourlySeries ees_ch{}, ees_dc{};
  HourlySeries hst_ch{}, hst_dc{};
  HourlySeries grid_buy{}, grid_sell{};
  HourlySeries tie_p{}, tie_h{};
  HourlySeries unserved_e{}, dumped_e{};
  HourlySeries unserved_h{}, dumped_h{};
  bool has_chp = false;
  bool has_mt = false;
  bool mt_initially_on = false;  // state before hour 1
};

struct ScenarioDispatch {
  std::vector<CiesDispatch> cies;
};

/// How a building's heat reaches it: the serving community, the transport
/// delay in periods and the pipe heat loss per hour (kW).
struct HeatLink {
  std::size_t cies = 0;
  int delay = 0;
  HourlySeries loss{};
};

/// Electricity and heat retail income per hour, summed over buildings.
HourlySeries sales_revenue(const PriceSchedule& prices, std::span<const building::EffectiveLoads> loads);

/// p_sell * sold - p_buy * bought per hour. Throws DomainError when an
/// exchange exceeds the grid limits.
HourlySeries grid_revenue(const TariffTable& tariff, const CiesDispatch& dispatch, const GridLimits& limits);

/// MT fuel and start-up, CHP fuel, and O&M per hour. The CHP constant term
/// is charged only in hours where the unit produces; start-ups are 0->1
/// transitions.
HourlySeries operating_cost(const DeviceCostParams& costs, const CiesDispatch& dispatch);

/// Scenario-weighted hourly profit components summed over communities.
struct ProfitLedger {
  HourlySeries sales_electric{};
  HourlySeries sales_heat{};
  HourlySeries grid{};
  HourlySeries operating{};

  double sales() const { return total(sales_electric) + total(sales_heat); }
  double profit() const;
};

ProfitLedger profit_ledger(std::span<const double> probabilities, const PriceSchedule& prices,
                           std::span<const building::EffectiveLoads> loads,
                           std::span<const ScenarioDispatch> dispatches, const TariffTable& tariff,
                           const DeviceCostParams& costs, std::span<const GridLimits> grid_limits);

/// Expected net profit of the operator. Throws DomainError when a scenario
/// has no dispatch.
double net_profit(std::span<const double> probabilities, const PriceSchedule& prices,
                  std::span<const building::EffectiveLoads> loads, std::span<const ScenarioDispatch> dispatches,
                  const TariffTable& tariff, const DeviceCostParams& costs,
                  std::span<const GridLimits> grid_limits);

/// Supply minus demand of the electric balance of community `cies` at a
/// 0-based hour. `served_by` maps each building to its community.
double electric_balance_residual(const CiesDispatch& dispatch, std::span<const building::EffectiveLoads> loads,
                                 std::span<const std::size_t> served_by, std::size_t cies, std::size_t hour);

/// Supply minus demand of the heat balance. Supply in hour t serves each
/// building's demand (plus pipe loss) in hour t + delay, wrapping at the end
/// of the day.
double heat_balance_residual(const CiesDispatch& dispatch, std::span<const building::EffectiveLoads> loads,
                             std::span<const HeatLink> links, std::size_t cies, std::size_t hour);

/// Bounds and daily zero-sum of the inter-community exchange; with two
/// communities the flows must also mirror each other every hour.
Violations tie_line_check(const ScenarioDispatch& dispatch, const TieLineLimits& limits);

/// Retail price box and daily-average caps.
Violations price_check(const PriceSchedule& prices, const TariffTable& tariff);

/// Expected bill plus quadratic discomfort of one building user.
double follower_cost(const PriceSchedule& prices, const building::BuildingParams& params,
                     const building::BaselineProfile& base, const building::DemandResponse& dr,
                     std::span<const double> probabilities);

/// Discomfort part of follower_cost for a single scenario weight of one.
double discomfort_cost(const building::BuildingParams& params, const building::DemandResponse& dr);

}  // namespace mcies::market
