#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mcies/building.hpp"
#include "mcies/dispatch.hpp"
#include "mcies/market.hpp"
#include "mcies/model.hpp"
#include "mcies/scenario.hpp"

namespace mcies::game {

/// Leader: the operator with its system, tariff and scenario set.
/// Followers: the buildings of the system.
struct StackelbergGame {
  model::SystemModel system;
  scenario::JointScenarioSet scenarios;
  dispatch::DispatchOptions dispatch;
};

/// Throws InputError when the game has no follower, an empty strategy space,
/// or scenario probabilities that do not sum to one.
void validate(const StackelbergGame& game);

/// Scenario probabilities in scenario order.
std::vector<double> probabilities(const StackelbergGame& game);

struct EquilibriumSolution {
  market::PriceSchedule prices;
  std::vector<building::DemandResponse> responses;
  std::vector<building::EffectiveLoads> loads;
  std::vector<market::ScenarioDispatch> dispatches;
  market::ProfitLedger ledger;
  std::vector<double> user_costs;
  double profit = 0.0;
  double penalty = 0.0;  // scenario-weighted
  double fitness = 0.0;  // profit - penalty
  Violations shortfalls;
  std::vector<double> trace;                    // best fitness per generation
  std::vector<std::vector<double>> user_trace;  // per generation, per building
  std::size_t evaluations = 0;
};

struct StationaryResponse {
  double tsl = 0.0;
  double il = 0.0;
  double ch = 0.0;
};

/// Unconstrained minimiser of a building's hourly cost. Hour is 1-based.
/// Throws DomainError for a non-positive discomfort coefficient.
StationaryResponse stationary_response(const market::PriceSchedule& prices, const building::BuildingParams& params,
                                       int hour);

/// True iff the follower cost is strictly convex (all discomfort
/// coefficients strictly positive).
bool verify_follower_convexity(const building::BuildingParams& params);

enum class Commodity { Electricity, Heat };

/// Sign of d(profit)/d(price) at a 1-based hour with responses and dispatch
/// frozen, i.e. the sign of the scenario-weighted served load.
int leader_profit_gradient_sign(const StackelbergGame& game, const EquilibriumSolution& solution, int hour,
                                Commodity commodity);

/// The frozen-response derivative itself.
double leader_profit_gradient(const StackelbergGame& game, const EquilibriumSolution& solution, int hour,
                              Commodity commodity);

/// Every constraint breach of a solution: prices, responses, devices,
/// storage, grid, tie-line and both balances.
Violations check_solution(const StackelbergGame& game, const EquilibriumSolution& solution);

struct ProbeResult {
  market::PriceSchedule prices;
  double fitness = 0.0;
  double improvement = 0.0;  // relative to the solution's fitness
};

struct EquilibriumReport {
  bool follower_pass = false;
  std::vector<double> follower_improvement;  // relative, per building
  bool leader_pass = false;
  std::size_t probes = 0;
  ProbeResult worst_probe;  // the probe with the largest improvement
  double eps_follower = 0.0;
  double eps_leader = 0.0;
  std::uint64_t seed = 0;

  bool pass() const { return follower_pass && leader_pass; }
};

/// Sampled equilibrium certificate. Followers: re-solving each building at
/// the solution prices must not lower its cost by a relative eps_follower or
/// more. Leader: none of n_probes random feasible price perturbations (each
/// coordinate uniform within +-5%, clipped and repaired) may raise fitness by
/// a relative eps_leader or more. Throws DomainError when the solution
/// breaks a constraint.
EquilibriumReport equilibrium_check(const StackelbergGame& game, const EquilibriumSolution& solution,
                                    double eps_follower, double eps_leader, std::size_t n_probes,
                                    std::uint64_t seed);

}  // namespace mcies::game
