#include "mcies/solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace mcies::solver {

QPProblem make_qp(const market::PriceSchedule& prices, const building::BuildingParams& params,
                  const building::BaselineProfile& base) {
  QPProblem qp;
  qp.mu = prices.mu_sell;
  qp.gamma = prices.gamma_sell;
  qp.omega = params.omega;
  qp.vartheta = params.vartheta;
  qp.theta = params.theta;
  qp.tsl_min = base.tsl_min;
  qp.tsl_max = base.tsl_max;
  qp.il_max = base.il_max;
  for (std::size_t t = 0; t < kHours; ++t) qp.ch_max[t] = std::max(0.0, base.h0[t] - base.h_min[t]);
  return qp;
}

double qp_objective(const QPProblem& qp, const building::DemandResponse& dr) {
  double sum = 0.0;
  for (std::size_t t = 0; t < qp.hours; ++t) {
    sum += qp.mu[t] * dr.tsl[t] + qp.omega * dr.tsl[t] * dr.tsl[t];
    sum += -qp.mu[t] * dr.il[t] + qp.vartheta * dr.il[t] * dr.il[t];
    sum += -qp.gamma[t] * dr.ch[t] + qp.theta * dr.ch[t] * dr.ch[t];
  }
  return sum;
}

namespace {

double at_bound_tol(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

// violation of the first-order condition of a scalar on [lo, hi] with gradient g
double box_kkt(double x, double lo, double hi, double g) {
  double v = 0.0;
  if (x < lo - at_bound_tol(lo)) v = std::max(v, lo - x);
  if (x > hi + at_bound_tol(hi)) v = std::max(v, x - hi);
  if (hi - lo <= at_bound_tol(hi)) return v;
  if (x <= lo + at_bound_tol(lo)) return std::max(v, -g);
  if (x >= hi - at_bound_tol(hi)) return std::max(v, g);
  return std::max(v, std::abs(g));
}

}  // namespace

double kkt_residual(const QPProblem& qp, const building::DemandResponse& dr, double nu) {
  double worst = 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t < qp.hours; ++t) {
    worst = std::max(worst, box_kkt(dr.tsl[t], qp.tsl_min[t], qp.tsl_max[t],
                                    qp.mu[t] + nu + 2.0 * qp.omega * dr.tsl[t]));
    worst = std::max(worst, box_kkt(dr.il[t], 0.0, qp.il_max[t], -qp.mu[t] + 2.0 * qp.vartheta * dr.il[t]));
    worst = std::max(worst, box_kkt(dr.ch[t], 0.0, qp.ch_max[t], -qp.gamma[t] + 2.0 * qp.theta * dr.ch[t]));
    sum += dr.tsl[t];
  }
  return std::max(worst, std::abs(sum));
}

QPSolution follower_qp_solve(const QPProblem& qp) {
  if (!(qp.omega > 0.0 && qp.vartheta > 0.0 && qp.theta > 0.0)) {
    throw DomainError("follower problem is not strictly convex: discomfort coefficients must be > 0");
  }
  if (qp.hours > kHours) throw DomainError("QP horizon longer than a day");
  const std::size_t n = qp.hours;
  double sum_lo = 0.0, sum_hi = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (qp.tsl_min[t] > qp.tsl_max[t] || qp.il_max[t] < 0.0 || qp.ch_max[t] < 0.0) {
      throw DomainError("empty box at hour " + std::to_string(t + 1));
    }
    sum_lo += qp.tsl_min[t];
    sum_hi += qp.tsl_max[t];
  }
  if (sum_lo > 0.0 || sum_hi < 0.0) throw DomainError("shift boxes cannot sum to zero: empty feasible set");

  QPSolution sol;
  for (std::size_t t = 0; t < n; ++t) {
    sol.dr.il[t] = std::clamp(qp.mu[t] / (2.0 * qp.vartheta), 0.0, qp.il_max[t]);
    sol.dr.ch[t] = std::clamp(qp.gamma[t] / (2.0 * qp.theta), 0.0, qp.ch_max[t]);
  }

  auto shift_at = [&](double nu, HourlySeries& out) {
    double s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      out[t] = std::clamp(-(qp.mu[t] + nu) / (2.0 * qp.omega), qp.tsl_min[t], qp.tsl_max[t]);
      s += out[t];
    }
    return s;
  };

  // sum_t tsl_t(nu) is nonincreasing in nu; bracket the root and bisect
  double nu_a = std::numeric_limits<double>::infinity();
  double nu_b = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    nu_a = std::min(nu_a, -(qp.mu[t] + 2.0 * qp.omega * qp.tsl_max[t]));
    nu_b = std::max(nu_b, -(qp.mu[t] + 2.0 * qp.omega * qp.tsl_min[t]));
  }
  if (n == 0) {
    nu_a = 0.0;
    nu_b = 0.0;
  }
  nu_a -= 1.0;
  nu_b += 1.0;
  HourlySeries ta{}, tb{}, tm{};
  double ga = shift_at(nu_a, ta);
  double gb = shift_at(nu_b, tb);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (nu_a + nu_b);
    if (mid <= nu_a || mid >= nu_b) break;
    const double gm = shift_at(mid, tm);
    if (gm == 0.0) {
      nu_a = nu_b = mid;
      ta = tb = tm;
      ga = gb = 0.0;
      break;
    }
    if (gm > 0.0) {
      nu_a = mid;
      ta = tm;
      ga = gm;
    } else {
      nu_b = mid;
      tb = tm;
      gb = gm;
    }
  }
  // the root lies between the two ends; blend them so the sum vanishes
  const double s = ga == gb ? 0.0 : ga / (ga - gb);
  for (std::size_t t = 0; t < n; ++t) sol.dr.tsl[t] = (1.0 - s) * ta[t] + s * tb[t];
  sol.multiplier = (1.0 - s) * nu_a + s * nu_b;
  sol.objective = qp_objective(qp, sol.dr);
  sol.kkt_residual = kkt_residual(qp, sol.dr, sol.multiplier);
  return sol;
}

// ---------------------------------------------------------------------------

void validate(const DEConfig& c) {
  if (c.population < 4) throw DomainError("DE population must be >= 4");
  if (!(c.f_min > 0.0 && c.f_min <= c.f_max && c.f_max <= 2.0)) throw DomainError("DE weight range must lie in (0, 2]");
  if (!(c.cr >= 0.0 && c.cr <= 1.0)) throw DomainError("DE crossover rate must lie in [0, 1]");
  if (c.max_iter < 1) throw DomainError("DE needs at least one iteration");
  if (!(c.chaos_mu > 0.0 && c.chaos_mu <= 4.0)) throw DomainError("logistic-map parameter must lie in (0, 4]");
  if (!(c.chaos_z0 >= 0.0 && c.chaos_z0 < 1.0)) throw DomainError("logistic-map state must lie in [0, 1)");
  if (!(c.penalty_weight >= 0.0)) throw DomainError("penalty weight must be >= 0");
}

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

class LogisticMap {
 public:
  LogisticMap(double mu, double z0, std::mt19937_64& rng) : mu_(mu), rng_(rng) {
    z_ = z0 > 0.0 ? z0 : fresh();
  }
  double next() {
    z_ = mu_ * z_ * (1.0 - z_);
    // leave the absorbing points 0, 1 and the fixed point 1 - 1/mu
    if (!(z_ > 1e-9 && z_ < 1.0 - 1e-9) || std::abs(z_ - (1.0 - 1.0 / mu_)) < 1e-12) z_ = fresh();
    return z_;
  }

 private:
  double fresh() { return 0.05 + 0.9 * unit_uniform(rng_); }
  double mu_;
  double z_ = 0.5;
  std::mt19937_64& rng_;
};

double sanitize(double f) {
  return std::isfinite(f) ? f : -std::numeric_limits<double>::max();
}

void evaluate_all(const Objective& objective, const std::vector<Genome>& xs, std::vector<double>& out,
                  unsigned threads) {
  out.resize(xs.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(xs.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = sanitize(objective(xs[i]));
    return;
  }
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < xs.size(); i += threads) out[i] = sanitize(objective(xs[i]));
    });
  }
}

}  // namespace

DEResult chaotic_de_optimize(const Objective& objective, const Bounds& bounds, const DEConfig& config,
                             const Repair& repair, const GenerationHook& hook) {
  validate(config);
  const std::size_t dim = bounds.lo.size();
  if (dim == 0 || bounds.hi.size() != dim) throw DomainError("DE bounds must be non-empty and of equal length");
  for (std::size_t d = 0; d < dim; ++d) {
    if (bounds.lo[d] > bounds.hi[d]) throw DomainError("DE bound with lo > hi at gene " + std::to_string(d));
  }
  const std::size_t np = config.population;
  std::mt19937_64 rng(config.seed);
  LogisticMap chaos(config.chaos_mu, config.chaos_z0, rng);

  std::vector<Genome> pop(np, Genome(dim));
  for (auto& x : pop) {
    for (std::size_t d = 0; d < dim; ++d) x[d] = bounds.lo[d] + chaos.next() * (bounds.hi[d] - bounds.lo[d]);
    if (repair) repair(x);
  }
  std::vector<double> fit;
  evaluate_all(objective, pop, fit, config.threads);

  DEResult res;
  res.evaluations = np;
  auto best_index = [&] {
    return static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
  };
  std::size_t best = best_index();
  res.trace.push_back(fit[best]);
  if (hook) hook(0, pop[best], fit[best]);

  std::vector<Genome> trial(np, Genome(dim));
  std::vector<double> trial_fit;
  for (std::size_t g = 1; g <= config.max_iter; ++g) {
    const double f = config.f_min + (config.f_max - config.f_min) * chaos.next();
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t r1, r2, r3;
      do r1 = rng() % np; while (r1 == i);
      do r2 = rng() % np; while (r2 == i || r2 == r1);
      do r3 = rng() % np; while (r3 == i || r3 == r1 || r3 == r2);
      const std::size_t forced = rng() % dim;
      for (std::size_t d = 0; d < dim; ++d) {
        const bool cross = unit_uniform(rng) < config.cr || d == forced;
        double v = cross ? pop[r1][d] + f * (pop[r2][d] - pop[r3][d]) : pop[i][d];
        trial[i][d] = std::clamp(v, bounds.lo[d], bounds.hi[d]);
      }
      if (repair) repair(trial[i]);
    }
    evaluate_all(objective, trial, trial_fit, config.threads);
    res.evaluations += np;
    for (std::size_t i = 0; i < np; ++i) {
      if (trial_fit[i] >= fit[i]) {
        pop[i].swap(trial[i]);
        fit[i] = trial_fit[i];
      }
    }
    best = best_index();
    res.trace.push_back(fit[best]);
    if (hook) hook(g, pop[best], fit[best]);
    if (config.plateau_window > 0 && g >= config.plateau_window &&
        res.trace[g] <= res.trace[g - config.plateau_window]) {
      break;
    }
  }
  res.best = pop[best];
  res.best_fitness = fit[best];
  return res;
}

// ---------------------------------------------------------------------------

Bounds price_bounds(const market::TariffTable& tariff) {
  Bounds b;
  b.lo.resize(kGenes);
  b.hi.resize(kGenes);
  for (std::size_t t = 0; t < kHours; ++t) {
    b.lo[t] = tariff.p_sell[t];
    b.hi[t] = tariff.p_buy[t];
    b.lo[kHours + t] = tariff.gamma_min;
    b.hi[kHours + t] = tariff.gamma_max;
  }
  return b;
}

market::PriceSchedule to_prices(const Genome& g) {
  if (g.size() != kGenes) throw DomainError("price genome must have 48 genes");
  market::PriceSchedule p;
  for (std::size_t t = 0; t < kHours; ++t) {
    p.mu_sell[t] = g[t];
    p.gamma_sell[t] = g[kHours + t];
  }
  return p;
}

Genome to_genome(const market::PriceSchedule& p) {
  Genome g(kGenes);
  for (std::size_t t = 0; t < kHours; ++t) {
    g[t] = p.mu_sell[t];
    g[kHours + t] = p.gamma_sell[t];
  }
  return g;
}

void repair_prices(Genome& g, const Bounds& b, const market::TariffTable& tariff) {
  const double caps[2] = {kHours * tariff.mu_av, kHours * tariff.gamma_av};
  for (std::size_t half = 0; half < 2; ++half) {
    const std::size_t off = half * kHours;
    double sum = 0.0, sum_lo = 0.0;
    for (std::size_t t = 0; t < kHours; ++t) {
      sum += g[off + t];
      sum_lo += b.lo[off + t];
    }
    if (sum <= caps[half]) continue;
    const double s = sum_lo >= caps[half] ? 0.0 : (caps[half] - sum_lo) / (sum - sum_lo);
    for (std::size_t t = 0; t < kHours; ++t) {
      g[off + t] = b.lo[off + t] + s * (g[off + t] - b.lo[off + t]);
    }
  }
}

game::EquilibriumSolution evaluate_prices(const game::StackelbergGame& game, const dispatch::DispatchContext& ctx,
                                          const market::PriceSchedule& prices) {
  const auto& sys = game.system;
  const auto probs = game::probabilities(game);
  game::EquilibriumSolution sol;
  sol.prices = prices;
  for (const auto& b : sys.buildings) {
    const auto qp = follower_qp_solve(make_qp(prices, b.params, b.baseline));
    sol.responses.push_back(qp.dr);
    sol.loads.push_back(building::effective_loads(b.baseline, qp.dr));
    sol.user_costs.push_back(market::follower_cost(prices, b.params, b.baseline, qp.dr, probs));
  }
  const auto heat = dispatch::heat_stage(ctx, sol.loads);
  for (std::size_t s = 0; s < game.scenarios.scenarios.size(); ++s) {
    auto res = dispatch::scenario_dispatch(ctx, sol.loads, game.scenarios.scenarios[s], heat);
    sol.penalty += probs[s] * res.penalty;
    for (auto& v : res.shortfalls) v.detail += ", scenario " + std::to_string(s + 1);
    append(sol.shortfalls, std::move(res.shortfalls));
    sol.dispatches.push_back(std::move(res.dispatch));
  }
  sol.ledger = market::profit_ledger(probs, prices, sol.loads, sol.dispatches, sys.tariff, sys.costs,
                                     ctx.grid_limits);
  sol.profit = sol.ledger.profit();
  sol.fitness = sol.profit - sol.penalty;
  return sol;
}

double price_fitness(const game::StackelbergGame& game, const dispatch::DispatchContext& ctx,
                     const market::PriceSchedule& prices) {
  try {
    return evaluate_prices(game, ctx, prices).fitness;
  } catch (const std::exception&) {
    return -1e12;
  }
}

market::PriceSchedule polish_prices(const game::StackelbergGame& game, const dispatch::DispatchContext& ctx,
                                    const market::PriceSchedule& start, const PolishOptions& options) {
  if (!(options.step > 0.0 && options.min_step > 0.0)) throw DomainError("polish steps must be positive");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const auto& tariff = game.system.tariff;
  const Bounds bounds = price_bounds(tariff);
  Genome x = to_genome(start);
  double fx = price_fitness(game, ctx, to_prices(x));
  const double caps[2] = {kHours * tariff.mu_av, kHours * tariff.gamma_av};

  for (double step = options.step; step >= options.min_step; step *= 0.5) {
    for (std::size_t half = 0; half < 2; ++half) {
      const std::size_t base = half * kHours;
      std::array<double, kHours> up{}, dn{};
      auto gain = [&](std::size_t d, double delta) {
        const double v = x[d] + delta;
        if (v > bounds.hi[d] + 1e-12 || v < bounds.lo[d] - 1e-12) return -inf;
        Genome y = x;
        y[d] = v;
        return price_fitness(game, ctx, to_prices(y)) - fx;
      };
      auto refresh = [&](std::size_t t) {
        up[t] = gain(base + t, step);
        dn[t] = gain(base + t, -step);
      };
      for (std::size_t t = 0; t < kHours; ++t) refresh(t);
      bool fresh = true;
      for (std::size_t moves = 0; moves < options.max_moves; ++moves) {
        double used = 0.0;
        for (std::size_t t = 0; t < kHours; ++t) used += x[base + t];
        const bool slack = used + step <= caps[half] + 1e-12;
        // estimated gain of each move type, assuming hours act independently
        double best = 0.0;
        std::size_t a = kHours, b = kHours;
        for (std::size_t i = 0; i < kHours; ++i) {
          if (slack && up[i] > best) best = up[i], a = i, b = kHours;
          if (dn[i] > best) best = dn[i], a = kHours, b = i;
          for (std::size_t k = 0; k < kHours; ++k) {
            if (k != i && up[i] + dn[k] > best) best = up[i] + dn[k], a = i, b = k;
          }
        }
        bool accepted = false;
        if (best > 1e-9) {
          Genome y = x;
          if (a < kHours) y[base + a] += step;
          if (b < kHours) y[base + b] -= step;
          const double fy = price_fitness(game, ctx, to_prices(y));
          if (fy > fx + 1e-9) {
            x = std::move(y);
            fx = fy;
            accepted = true;
          }
        }
        if (accepted) {
          // gains elsewhere are stale but still a useful ranking
          if (a < kHours) refresh(a);
          if (b < kHours) refresh(b);
          fresh = false;
        } else if (!fresh) {
          for (std::size_t t = 0; t < kHours; ++t) refresh(t);
          fresh = true;
        } else {
          break;
        }
      }
    }
  }
  return to_prices(x);
}

game::EquilibriumSolution stackelberg_iterate(const game::StackelbergGame& game_in, const DEConfig& config) {
  game::StackelbergGame game = game_in;
  game.dispatch.penalty_weight = config.penalty_weight;
  game::validate(game);
  validate(config);
  const auto ctx = dispatch::make_context(game.system, game.dispatch);
  const Bounds bounds = price_bounds(game.system.tariff);
  const auto& tariff = game.system.tariff;

  std::vector<std::vector<double>> user_trace;
  Genome last;
  auto hook = [&](std::size_t, const Genome& best, double) {
    if (best != last || user_trace.empty()) {
      last = best;
      user_trace.push_back(evaluate_prices(game, ctx, to_prices(best)).user_costs);
    } else {
      user_trace.push_back(user_trace.back());
    }
  };
  const auto res = chaotic_de_optimize([&](const Genome& g) { return price_fitness(game, ctx, to_prices(g)); },
                                       bounds, config, [&](Genome& g) { repair_prices(g, bounds, tariff); },
                                       hook);
  auto best = to_prices(res.best);
  if (config.polish) best = polish_prices(game, ctx, best);
  auto sol = evaluate_prices(game, ctx, best);
  sol.trace = res.trace;
  sol.user_trace = std::move(user_trace);
  sol.evaluations = res.evaluations;
  return sol;
}

}  // namespace mcies::solver
