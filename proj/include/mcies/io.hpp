#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mcies/game.hpp"
#include "mcies/model.hpp"
#include "mcies/scenario.hpp"

namespace mcies::io {

using nlohmann::json;

/// Parses a JSON file; throws InputError with the path on failure.
json read_json(const std::string& path);
void write_text(const std::string& path, std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex(std::uint64_t v);

/// Shortest text that reads back to the same double.
std::string num(double v);
/// Fixed two decimals, for money tables.
std::string money(double v);

// Instance files. Buildings carry p0, t_in and a flexibility share; the
// baseline heat load and the demand-response boxes are derived on load.
model::SystemModel system_from_json(const json& j);
model::SystemModel load_system(const std::string& path);

json to_json(const scenario::JointScenarioSet& set);
scenario::JointScenarioSet scenarios_from_json(const json& j);

json to_json(const market::PriceSchedule& prices);
market::PriceSchedule prices_from_json(const json& j);

json to_json(const market::ScenarioDispatch& dispatch);
market::ScenarioDispatch dispatch_from_json(const json& j);

json to_json(const market::ProfitLedger& ledger);
json to_json(const Violations& violations);
json to_json(const game::EquilibriumReport& report);

/// Full solution, enough to re-validate it with game::check_solution.
json to_json(const game::EquilibriumSolution& solution, const model::SystemModel& system);
game::EquilibriumSolution solution_from_json(const json& j);

}  // namespace mcies::io
