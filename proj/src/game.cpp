#include "mcies/game.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mcies/solver.hpp"

namespace mcies::game {

void validate(const StackelbergGame& game) {
  model::validate(game.system);
  if (game.system.buildings.empty()) throw InputError("the game needs at least one follower");
  if (game.scenarios.scenarios.empty()) throw InputError("the game needs at least one scenario");
  double sum = 0.0;
  for (const auto& s : game.scenarios.scenarios) {
    if (!(s.probability >= 0.0)) throw InputError("negative scenario probability");
    sum += s.probability;
    for (std::size_t t = 0; t < kHours; ++t) {
      if (!(s.wt[t] >= 0.0 && s.wt[t] <= 1.0 && s.pv[t] >= 0.0 && s.pv[t] <= 1.0)) {
        throw InputError("scenario output outside [0, 1] per unit at hour " + std::to_string(t + 1));
      }
    }
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("scenario probabilities sum to " + std::to_string(sum));
  const auto& tariff = game.system.tariff;
  if (total(tariff.p_sell) > kHours * tariff.mu_av + 1e-9) throw InputError("empty electricity price space");
  if (tariff.gamma_min > tariff.gamma_av + 1e-12) throw InputError("empty heat price space");
  for (const auto& b : game.system.buildings) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t t = 0; t < kHours; ++t) {
      lo += b.baseline.tsl_min[t];
      hi += b.baseline.tsl_max[t];
    }
    if (lo > 0.0 || hi < 0.0) throw InputError(b.name + ": empty demand-response space");
  }
}

std::vector<double> probabilities(const StackelbergGame& game) {
  std::vector<double> out;
  out.reserve(game.scenarios.scenarios.size());
  for (const auto& s : game.scenarios.scenarios) out.push_back(s.probability);
  return out;
}

StationaryResponse stationary_response(const market::PriceSchedule& prices, const building::BuildingParams& params,
                                       int hour) {
  if (hour < 1 || hour > static_cast<int>(kHours)) throw DomainError("hour must lie in 1..24");
  if (!(params.omega > 0.0 && params.vartheta > 0.0 && params.theta > 0.0)) {
    throw DomainError("discomfort coefficients must be strictly positive");
  }
  const auto t = static_cast<std::size_t>(hour - 1);
  const double mu = prices.mu_sell[t];
  const double gamma = prices.gamma_sell[t];
  return {-mu / (2.0 * params.omega), mu / (2.0 * params.vartheta), gamma / (2.0 * params.theta)};
}

bool verify_follower_convexity(const building::BuildingParams& params) {
  return params.omega > 0.0 && params.vartheta > 0.0 && params.theta > 0.0;
}

double leader_profit_gradient(const StackelbergGame& game, const EquilibriumSolution& sol, int hour,
                              Commodity commodity) {
  if (hour < 1 || hour > static_cast<int>(kHours)) throw DomainError("hour must lie in 1..24");
  const auto t = static_cast<std::size_t>(hour - 1);
  double weight = 0.0;
  for (double p : probabilities(game)) weight += p;
  double load = 0.0;
  for (const auto& l : sol.loads) load += commodity == Commodity::Electricity ? l.p[t] : l.h[t];
  return weight * load;
}

int leader_profit_gradient_sign(const StackelbergGame& game, const EquilibriumSolution& sol, int hour,
                                Commodity commodity) {
  const double g = leader_profit_gradient(game, sol, hour, commodity);
  return (g > 0.0) - (g < 0.0);
}

Violations check_solution(const StackelbergGame& game, const EquilibriumSolution& sol) {
  const auto& sys = game.system;
  Violations out = market::price_check(sol.prices, sys.tariff);
  const std::size_t nb = sys.buildings.size();
  if (sol.responses.size() != nb || sol.loads.size() != nb) {
    out.push_back({"structure", 0, 0.0, "one response and load profile per building expected"});
    return out;
  }
  double peak = 1.0;
  for (std::size_t t = 0; t < kHours; ++t) {
    double p = 0.0, h = 0.0;
    for (const auto& l : sol.loads) {
      p += l.p[t];
      h += l.h[t];
    }
    peak = std::max({peak, p, h});
  }
  for (std::size_t i = 0; i < nb; ++i) {
    const auto& b = sys.buildings[i];
    for (auto v : building::validate_dr(b.baseline, sol.responses[i])) {
      v.detail = b.name + ": " + v.detail;
      out.push_back(std::move(v));
    }
    for (std::size_t t = 0; t < kHours; ++t) {
      const double p = b.baseline.p0[t] + sol.responses[i].tsl[t] - sol.responses[i].il[t];
      const double h = b.baseline.h0[t] - sol.responses[i].ch[t];
      if (std::abs(p - sol.loads[i].p[t]) > 1e-9 * peak || std::abs(h - sol.loads[i].h[t]) > 1e-9 * peak) {
        out.push_back({"effective_load", static_cast<int>(t) + 1, 0.0, b.name + ": load does not match response"});
      }
    }
  }
  if (sol.dispatches.size() != game.scenarios.scenarios.size()) {
    out.push_back({"structure", 0, 0.0, "one dispatch per scenario expected"});
    return out;
  }
  const auto links = model::heat_links(sys);
  const auto served = model::served_by(sys);
  const double tol = 1e-6 * peak;
  for (std::size_t s = 0; s < sol.dispatches.size(); ++s) {
    const auto& sd = sol.dispatches[s];
    const auto& sc = game.scenarios.scenarios[s];
    const std::string tag = "scenario " + std::to_string(s + 1) + ", ";
    if (sd.cies.size() != sys.cies.size()) {
      out.push_back({"structure", 0, 0.0, tag + "dispatch does not cover every community"});
      continue;
    }
    auto add = [&](Violations vs, const std::string& who) {
      for (auto& v : vs) {
        v.detail = tag + who + ": " + v.detail;
        out.push_back(std::move(v));
      }
    };
    add(market::tie_line_check(sd, sys.tie), "tie-line");
    for (std::size_t j = 0; j < sys.cies.size(); ++j) {
      const auto& c = sys.cies[j];
      const auto& d = sd.cies[j];
      if (c.chp) add(devices::chp_validate(*c.chp, d.chp_p, d.chp_h).violations, c.name);
      if (c.mt) add(devices::mt_validate(*c.mt, d.mt_p, d.mt_on, c.mt_initially_on, c.mt_initially_on ? c.mt->p_min : 0.0), c.name);
      if (c.ees) add(devices::storage_validate(*c.ees, d.ees_ch, d.ees_dc, sys.dt_hours, sys.storage_end_rule).violations, c.name + " EES");
      if (c.hst) add(devices::storage_validate(*c.hst, d.hst_ch, d.hst_dc, sys.dt_hours, sys.storage_end_rule).violations, c.name + " HST");
      Violations local;
      for (std::size_t t = 0; t < kHours; ++t) {
        const int hour = static_cast<int>(t) + 1;
        const double eb_cap = c.eb ? c.eb->p_max : 0.0;
        if (d.eb_p[t] < -1e-9 || d.eb_p[t] > eb_cap + 1e-9 * std::max(1.0, eb_cap)) {
          local.push_back({"eb_power", hour, d.eb_p[t], "boiler input outside rating"});
        }
        if (c.eb && std::abs(d.eb_h[t] - c.eb->eta * d.eb_p[t]) > 1e-9 * std::max(1.0, d.eb_h[t])) {
          local.push_back({"eb_power", hour, d.eb_h[t], "boiler heat does not match its input"});
        }
        if (d.grid_buy[t] < -1e-9 || d.grid_sell[t] < -1e-9 ||
            d.grid_buy[t] > c.grid.p_max + 1e-9 * std::max(1.0, c.grid.p_max) ||
            d.grid_sell[t] > -c.grid.p_min + 1e-9 * std::max(1.0, -c.grid.p_min)) {
          local.push_back({"grid_limit", hour, std::max(d.grid_buy[t], d.grid_sell[t]), "grid exchange outside limits"});
        }
        if (d.grid_buy[t] > 1e-9 && d.grid_sell[t] > 1e-9) {
          local.push_back({"grid_exclusive", hour, std::min(d.grid_buy[t], d.grid_sell[t]), "buys and sells in the same hour"});
        }
        const double wt_cap = c.wt_capacity * sc.wt[t];
        const double pv_cap = c.pv_capacity * sc.pv[t];
        if (d.wt[t] < -1e-9 || d.wt[t] > wt_cap + 1e-9 * std::max(1.0, wt_cap) || d.pv[t] < -1e-9 ||
            d.pv[t] > pv_cap + 1e-9 * std::max(1.0, pv_cap)) {
          local.push_back({"renewable_output", hour, 0.0, "renewable output outside availability"});
        }
        const double re = market::electric_balance_residual(d, sol.loads, served, j, t);
        if (std::abs(re) > tol) local.push_back({"electric_balance", hour, re, "electric balance not closed"});
        const double rh = market::heat_balance_residual(d, sol.loads, links, j, t);
        if (std::abs(rh) > tol) local.push_back({"heat_balance", hour, rh, "heat balance not closed"});
      }
      add(std::move(local), c.name);
    }
  }
  return out;
}

EquilibriumReport equilibrium_check(const StackelbergGame& game, const EquilibriumSolution& sol, double eps_follower,
                                    double eps_leader, std::size_t n_probes, std::uint64_t seed) {
  const auto violations = check_solution(game, sol);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw DomainError("infeasible solution: " + v.constraint + (v.hour ? " at hour " + std::to_string(v.hour) : "") +
                      ", " + v.detail + " (" + std::to_string(violations.size()) + " violations)");
  }
  EquilibriumReport rep;
  rep.eps_follower = eps_follower;
  rep.eps_leader = eps_leader;
  rep.seed = seed;
  rep.probes = n_probes;

  const auto probs = probabilities(game);
  rep.follower_pass = true;
  for (std::size_t i = 0; i < game.system.buildings.size(); ++i) {
    const auto& b = game.system.buildings[i];
    const double current = market::follower_cost(sol.prices, b.params, b.baseline, sol.responses[i], probs);
    const auto best = solver::follower_qp_solve(solver::make_qp(sol.prices, b.params, b.baseline));
    const double better = market::follower_cost(sol.prices, b.params, b.baseline, best.dr, probs);
    const double gain = (current - better) / std::max(std::abs(current), 1e-12);
    rep.follower_improvement.push_back(gain);
    if (!(gain < eps_follower)) rep.follower_pass = false;
  }

  const auto ctx = dispatch::make_context(game.system, game.dispatch);
  const auto bounds = solver::price_bounds(game.system.tariff);
  const double base = solver::price_fitness(game, ctx, sol.prices);
  const double scale = std::max(std::abs(base), 1e-12);
  std::mt19937_64 rng(seed);
  rep.worst_probe.prices = sol.prices;
  rep.worst_probe.fitness = base;
  rep.worst_probe.improvement = -std::numeric_limits<double>::infinity();
  const auto start = solver::to_genome(sol.prices);
  for (std::size_t k = 0; k < n_probes; ++k) {
    auto g = start;
    for (std::size_t d = 0; d < g.size(); ++d) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      g[d] = std::clamp(g[d] * (1.0 + 0.1 * u - 0.05), bounds.lo[d], bounds.hi[d]);
    }
    solver::repair_prices(g, bounds, game.system.tariff);
    const auto prices = solver::to_prices(g);
    const double f = solver::price_fitness(game, ctx, prices);
    const double gain = (f - base) / scale;
    if (gain > rep.worst_probe.improvement) rep.worst_probe = {prices, f, gain};
  }
  rep.leader_pass = n_probes == 0 || rep.worst_probe.improvement < eps_leader;
  if (n_probes == 0) rep.worst_probe.improvement = 0.0;
  return rep;
}

}  // namespace mcies::game
