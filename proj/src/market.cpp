#include "mcies/market.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mcies::market {

namespace {

double tol(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

std::size_t wrap(std::size_t t, int delay) {
  const auto n = static_cast<long>(kHours);
  const long shifted = (static_cast<long>(t) + delay) % n;
  return static_cast<std::size_t>(shifted < 0 ? shifted + n : shifted);
}

}  // namespace

Violations validate(const TariffTable& tariff) {
  Violations out;
  for (std::size_t t = 0; t < kHours; ++t) {
    const int hour = static_cast<int>(t) + 1;
    if (tariff.p_sell[t] < 0.0) out.push_back({"price_box", hour, -tariff.p_sell[t], "negative feed-in tariff"});
    if (tariff.p_sell[t] > tariff.p_buy[t]) {
      out.push_back({"price_box", hour, tariff.p_sell[t] - tariff.p_buy[t], "feed-in tariff above purchase tariff"});
    }
  }
  if (tariff.gamma_min > tariff.gamma_max) {
    out.push_back({"heat_price_box", 0, tariff.gamma_min - tariff.gamma_max, "empty heat price range"});
  }
  if (total(tariff.p_sell) > kHours * tariff.mu_av + tol(kHours * tariff.mu_av)) {
    out.push_back({"price_average", 0, total(tariff.p_sell) - kHours * tariff.mu_av, "electric average cap below price floor"});
  }
  if (kHours * tariff.gamma_min > kHours * tariff.gamma_av + tol(kHours * tariff.gamma_av)) {
    out.push_back({"heat_price_average", 0, kHours * (tariff.gamma_min - tariff.gamma_av), "heat average cap below price floor"});
  }
  return out;
}

HourlySeries sales_revenue(const PriceSchedule& prices, std::span<const building::EffectiveLoads> loads) {
  HourlySeries out{};
  for (std::size_t t = 0; t < kHours; ++t) {
    double p = 0.0;
    double h = 0.0;
    for (const auto& l : loads) {
      p += l.p[t];
      h += l.h[t];
    }
    out[t] = prices.mu_sell[t] * p + prices.gamma_sell[t] * h;
  }
  return out;
}

HourlySeries grid_revenue(const TariffTable& tariff, const CiesDispatch& d, const GridLimits& limits) {
  HourlySeries out{};
  for (std::size_t t = 0; t < kHours; ++t) {
    const double buy = d.grid_buy[t];
    const double sell = d.grid_sell[t];
    if (buy < -tol(0.0) || sell < -tol(0.0) || buy > limits.p_max + tol(limits.p_max) ||
        sell > -limits.p_min + tol(limits.p_min)) {
      throw DomainError("grid_limit: grid exchange outside limits at hour " + std::to_string(t + 1));
    }
    out[t] = tariff.p_sell[t] * sell - tariff.p_buy[t] * buy;
  }
  return out;
}

HourlySeries operating_cost(const DeviceCostParams& costs, const CiesDispatch& d) {
  HourlySeries out{};
  int prev_on = d.mt_initially_on ? 1 : 0;
  const auto& c = costs.chp;
  const auto& om = costs.om;
  for (std::size_t t = 0; t < kHours; ++t) {
    double cost = 0.0;
    if (d.has_mt) {
      const int on = d.mt_on[t];
      cost += costs.mt.a * on + costs.mt.b * d.mt_p[t] + costs.mt.c_start * std::max(on - prev_on, 0);
      prev_on = on;
    }
    if (d.has_chp) {
      const double p = d.chp_p[t];
      const double h = d.chp_h[t];
      if (p > 0.0 || h > 0.0) {
        cost += c.a * p * p + c.b * p + c.c + c.d * h * h + c.e * h + c.f * p * h;
      }
    }
    cost += om.wt * d.wt[t] + om.pv * d.pv[t] + om.chp * d.chp_p[t] + om.mt * d.mt_p[t] + om.eb * d.eb_p[t] +
            om.ees * d.ees_dc[t] + om.hst * d.hst_dc[t];
    out[t] = cost;
  }
  return out;
}

double ProfitLedger::profit() const {
  double sum = 0.0;
  for (std::size_t t = 0; t < kHours; ++t) {
    sum += sales_electric[t] + sales_heat[t] + grid[t] - operating[t];
  }
  return sum;
}

ProfitLedger profit_ledger(std::span<const double> probabilities, const PriceSchedule& prices,
                           std::span<const building::EffectiveLoads> loads,
                           std::span<const ScenarioDispatch> dispatches, const TariffTable& tariff,
                           const DeviceCostParams& costs, std::span<const GridLimits> grid_limits) {
  if (dispatches.size() != probabilities.size()) {
    throw DomainError("missing dispatch: " + std::to_string(probabilities.size()) + " scenarios, " +
                      std::to_string(dispatches.size()) + " dispatches");
  }
  ProfitLedger ledger;
  double weight = 0.0;
  for (double pi : probabilities) weight += pi;
  for (std::size_t t = 0; t < kHours; ++t) {
    double p = 0.0;
    double h = 0.0;
    for (const auto& l : loads) {
      p += l.p[t];
      h += l.h[t];
    }
    ledger.sales_electric[t] = weight * prices.mu_sell[t] * p;
    ledger.sales_heat[t] = weight * prices.gamma_sell[t] * h;
  }
  for (std::size_t s = 0; s < dispatches.size(); ++s) {
    const auto& sd = dispatches[s];
    if (sd.cies.size() != grid_limits.size()) {
      throw DomainError("scenario " + std::to_string(s + 1) + ": dispatch does not cover every community");
    }
    for (std::size_t j = 0; j < sd.cies.size(); ++j) {
      const auto grid = grid_revenue(tariff, sd.cies[j], grid_limits[j]);
      const auto cost = operating_cost(costs, sd.cies[j]);
      for (std::size_t t = 0; t < kHours; ++t) {
        ledger.grid[t] += probabilities[s] * grid[t];
        ledger.operating[t] += probabilities[s] * cost[t];
      }
    }
  }
  return ledger;
}

double net_profit(std::span<const double> probabilities, const PriceSchedule& prices,
                  std::span<const building::EffectiveLoads> loads, std::span<const ScenarioDispatch> dispatches,
                  const TariffTable& tariff, const DeviceCostParams& costs,
                  std::span<const GridLimits> grid_limits) {
  return profit_ledger(probabilities, prices, loads, dispatches, tariff, costs, grid_limits).profit();
}

double electric_balance_residual(const CiesDispatch& d, std::span<const building::EffectiveLoads> loads,
                                 std::span<const std::size_t> served_by, std::size_t cies, std::size_t t) {
  double demand = d.ees_ch[t] + d.eb_p[t] + d.grid_sell[t];
  for (std::size_t i = 0; i < loads.size(); ++i) {
    if (served_by[i] == cies) demand += loads[i].p[t];
  }
  const double supply = d.wt[t] + d.pv[t] + d.chp_p[t] + d.mt_p[t] + d.ees_dc[t] + d.grid_buy[t] + d.tie_p[t];
  return supply - demand;
}

double heat_balance_residual(const CiesDispatch& d, std::span<const building::EffectiveLoads> loads,
                             std::span<const HeatLink> links, std::size_t cies, std::size_t t) {
  double demand = d.hst_ch[t];
  for (std::size_t i = 0; i < loads.size(); ++i) {
    if (links[i].cies != cies) continue;
    const std::size_t at = wrap(t, links[i].delay);
    demand += loads[i].h[at] + links[i].loss[at];
  }
  const double supply = d.chp_h[t] + d.eb_h[t] + d.hst_dc[t] + d.tie_h[t];
  return supply - demand;
}

Violations tie_line_check(const ScenarioDispatch& sd, const TieLineLimits& lim) {
  Violations out;
  for (std::size_t j = 0; j < sd.cies.size(); ++j) {
    const auto& d = sd.cies[j];
    const std::string who = "CIES" + std::to_string(j + 1) + ": ";
    for (std::size_t t = 0; t < kHours; ++t) {
      const int hour = static_cast<int>(t) + 1;
      if (d.tie_p[t] < lim.p_min - tol(lim.p_min)) out.push_back({"tie_limit", hour, lim.p_min - d.tie_p[t], who + "electric export above limit"});
      if (d.tie_p[t] > lim.p_max + tol(lim.p_max)) out.push_back({"tie_limit", hour, d.tie_p[t] - lim.p_max, who + "electric import above limit"});
      if (d.tie_h[t] < lim.h_min - tol(lim.h_min)) out.push_back({"tie_limit", hour, lim.h_min - d.tie_h[t], who + "heat export above limit"});
      if (d.tie_h[t] > lim.h_max + tol(lim.h_max)) out.push_back({"tie_limit", hour, d.tie_h[t] - lim.h_max, who + "heat import above limit"});
    }
    const double sp = total(d.tie_p);
    const double sh = total(d.tie_h);
    if (std::abs(sp) > 1e-6) out.push_back({"tie_balance", 0, std::abs(sp), who + "electric exchange does not net to zero"});
    if (std::abs(sh) > 1e-6) out.push_back({"tie_balance", 0, std::abs(sh), who + "heat exchange does not net to zero"});
  }
  if (sd.cies.size() == 2) {
    for (std::size_t t = 0; t < kHours; ++t) {
      const double ep = sd.cies[0].tie_p[t] + sd.cies[1].tie_p[t];
      const double eh = sd.cies[0].tie_h[t] + sd.cies[1].tie_h[t];
      if (std::abs(ep) > 1e-6) out.push_back({"tie_mirror", static_cast<int>(t) + 1, std::abs(ep), "electric flows do not mirror"});
      if (std::abs(eh) > 1e-6) out.push_back({"tie_mirror", static_cast<int>(t) + 1, std::abs(eh), "heat flows do not mirror"});
    }
  }
  return out;
}

Violations price_check(const PriceSchedule& prices, const TariffTable& tariff) {
  Violations out;
  for (std::size_t t = 0; t < kHours; ++t) {
    const int hour = static_cast<int>(t) + 1;
    const double mu = prices.mu_sell[t];
    const double g = prices.gamma_sell[t];
    if (!std::isfinite(mu) || !std::isfinite(g)) {
      out.push_back({"price_box", hour, 0.0, "non-finite price"});
      continue;
    }
    if (mu < tariff.p_sell[t] - tol(tariff.p_sell[t])) out.push_back({"price_box", hour, tariff.p_sell[t] - mu, "electricity price below feed-in tariff"});
    if (mu > tariff.p_buy[t] + tol(tariff.p_buy[t])) out.push_back({"price_box", hour, mu - tariff.p_buy[t], "electricity price above purchase tariff"});
    if (g < tariff.gamma_min - tol(tariff.gamma_min)) out.push_back({"heat_price_box", hour, tariff.gamma_min - g, "heat price below floor"});
    if (g > tariff.gamma_max + tol(tariff.gamma_max)) out.push_back({"heat_price_box", hour, g - tariff.gamma_max, "heat price above ceiling"});
  }
  const double mu_cap = kHours * tariff.mu_av;
  const double g_cap = kHours * tariff.gamma_av;
  if (total(prices.mu_sell) > mu_cap + tol(mu_cap)) out.push_back({"price_average", 0, total(prices.mu_sell) - mu_cap, "average electricity price above cap"});
  if (total(prices.gamma_sell) > g_cap + tol(g_cap)) out.push_back({"heat_price_average", 0, total(prices.gamma_sell) - g_cap, "average heat price above cap"});
  return out;
}

double discomfort_cost(const building::BuildingParams& params, const building::DemandResponse& dr) {
  double sum = 0.0;
  for (std::size_t t = 0; t < kHours; ++t) {
    sum += params.omega * dr.tsl[t] * dr.tsl[t] + params.vartheta * dr.il[t] * dr.il[t] +
           params.theta * dr.ch[t] * dr.ch[t];
  }
  return sum;
}

double follower_cost(const PriceSchedule& prices, const building::BuildingParams& params,
                     const building::BaselineProfile& base, const building::DemandResponse& dr,
                     std::span<const double> probabilities) {
  double weight = 0.0;
  for (double pi : probabilities) weight += pi;
  double sum = 0.0;
  for (std::size_t t = 0; t < kHours; ++t) {
    const double p = base.p0[t] + dr.tsl[t] - dr.il[t];
    const double h = base.h0[t] - dr.ch[t];
    sum += prices.mu_sell[t] * p + prices.gamma_sell[t] * h;
  }
  return weight * (sum + discomfort_cost(params, dr));
}

}  // namespace mcies::market
