#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mcies/building.hpp"
#include "mcies/dispatch.hpp"
#include "mcies/game.hpp"
#include "mcies/market.hpp"

namespace mcies::solver {

// ---------------------------------------------------------------------------
// Follower problem.

/// One building's day-ahead problem: minimise
///   sum_t  mu_t tsl_t + omega tsl_t^2 - mu_t il_t + vartheta il_t^2 - gamma_t ch_t + theta ch_t^2
/// over box-bounded tsl, il, ch with sum_t tsl_t = 0.
struct QPProblem {
  HourlySeries mu{};
  HourlySeries gamma{};
  double omega = 0.0;
  double vartheta = 0.0;
  double theta = 0.0;
  HourlySeries tsl_min{};
  HourlySeries tsl_max{};
  HourlySeries il_max{};
  HourlySeries ch_max{};
  std::size_t hours = kHours;  // leading hours that take part
};

QPProblem make_qp(const market::PriceSchedule& prices, const building::BuildingParams& params,
                  const building::BaselineProfile& base);

struct QPSolution {
  building::DemandResponse dr;
  double multiplier = 0.0;  // of the zero-sum shift constraint
  double kkt_residual = 0.0;
  double objective = 0.0;
};

/// Exact minimiser. il and ch are clipped stationary points; tsl comes from
/// bisection on the multiplier of the zero-sum constraint. Throws DomainError
/// when the problem is not strictly convex or the shift boxes cannot sum to
/// zero.
QPSolution follower_qp_solve(const QPProblem& problem);

double qp_objective(const QPProblem& problem, const building::DemandResponse& dr);

/// Largest violation of stationarity, complementarity and primal feasibility.
double kkt_residual(const QPProblem& problem, const building::DemandResponse& dr, double multiplier);

// ---------------------------------------------------------------------------
// Chaotic differential evolution (maximisation).

struct DEConfig {
  std::size_t population = 50;
  double f_min = 0.4;  // the logistic map drives F over [f_min, f_max]
  double f_max = 1.0;
  double cr = 0.9;
  double chaos_mu = 4.0;  // logistic-map parameter
  double chaos_z0 = 0.0;  // initial state in (0, 1); 0 draws it from the seed
  std::size_t max_iter = 200;
  std::uint64_t seed = 1;
  double penalty_weight = 1e3;  // yuan per kW^2, passed to the dispatch
  std::size_t plateau_window = 0;  // stop after this many flat generations; 0 = off
  bool polish = true;              // pairwise-exchange hill climb on the DE winner
  unsigned threads = 1;
};

void validate(const DEConfig& config);

using Genome = std::vector<double>;

struct Bounds {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct DEResult {
  Genome best;
  double best_fitness = 0.0;
  std::vector<double> trace;  // trace[0] = initial population, then one per generation
  std::size_t evaluations = 0;
};

using Objective = std::function<double(const Genome&)>;
using Repair = std::function<void(Genome&)>;
using GenerationHook = std::function<void(std::size_t generation, const Genome& best, double fitness)>;

/// DE/rand/1/bin with elitist one-to-one selection. F per generation and the
/// initial population come from the logistic map. Trial vectors are clipped
/// to the bounds and then passed through `repair`. Deterministic for a seed
/// regardless of `threads`.
DEResult chaotic_de_optimize(const Objective& objective, const Bounds& bounds, const DEConfig& config,
                             const Repair& repair = {}, const GenerationHook& hook = {});

// ---------------------------------------------------------------------------
// Leader problem.

constexpr std::size_t kGenes = 2 * kHours;

Bounds price_bounds(const market::TariffTable& tariff);
market::PriceSchedule to_prices(const Genome& genome);
Genome to_genome(const market::PriceSchedule& prices);

/// Shrinks each half of the genome toward its lower bounds until the daily
/// average caps hold.
void repair_prices(Genome& genome, const Bounds& bounds, const market::TariffTable& tariff);

/// Broadcasts prices, collects every building's best response and dispatches
/// every scenario. The returned solution has no trace.
game::EquilibriumSolution evaluate_prices(const game::StackelbergGame& game, const dispatch::DispatchContext& ctx,
                                          const market::PriceSchedule& prices);

/// Fitness only; any evaluation error scores -1e12.
double price_fitness(const game::StackelbergGame& game, const dispatch::DispatchContext& ctx,
                     const market::PriceSchedule& prices);

struct PolishOptions {
  double step = 0.05;  // yuan/kWh, halved down to min_step
  double min_step = 0.0005;
  std::size_t max_moves = 5000;  // per step and commodity
};

/// Deterministic hill climb from a feasible schedule. Per commodity it moves
/// one price up, one down, or one up and another down by the same step (so
/// the daily average is kept), accepting only verified gains.
market::PriceSchedule polish_prices(const game::StackelbergGame& game, const dispatch::DispatchContext& ctx,
                                    const market::PriceSchedule& start, const PolishOptions& options = {});

/// Outer DE over prices with followers and dispatch in the loop.
game::EquilibriumSolution stackelberg_iterate(const game::StackelbergGame& game, const DEConfig& config);

}  // namespace mcies::solver
