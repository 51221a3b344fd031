#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcies/building.hpp"
#include "mcies/common.hpp"
#include "mcies/devices.hpp"
#include "mcies/market.hpp"

namespace mcies::model {

struct CiesConfig {
  std::string name;
  double wt_capacity = 0.0;  // kW, scales per-unit WT paths
  double pv_capacity = 0.0;
  std::optional<devices::CHPUnit> chp;
  std::optional<devices::MicroTurbine> mt;
  bool mt_initially_on = false;
  std::optional<devices::ElectricBoiler> eb;
  std::optional<devices::StorageDevice> ees;
  std::optional<devices::StorageDevice> hst;
  market::GridLimits grid;
};

struct BuildingConfig {
  std::string name;
  std::size_t cies = 0;  // serving community (index)
  std::size_t pipe = 0;  // supply pipe (index)
  building::BuildingParams params;
  building::BaselineProfile baseline;
  double flex_share = 0.1;
};

/// A complete instance: communities, buildings, heat network, tariff and costs.
struct SystemModel {
  std::string name;
  bool synthetic = false;
  double dt_hours = 1.0;
  double supply_temperature = 80.0;  // C at the plant end of every pipe
  HourlySeries t_out{};
  market::TariffTable tariff;
  market::DeviceCostParams costs;
  market::TieLineLimits tie;
  devices::EndRule storage_end_rule = devices::EndRule::Cyclic;
  std::vector<devices::HeatPipe> pipes;
  std::vector<CiesConfig> cies;
  std::vector<BuildingConfig> buildings;
};

/// Structural checks; throws InputError describing the first problem.
void validate(const SystemModel& sys);

/// Delay and hourly loss of each building's supply pipe.
std::vector<market::HeatLink> heat_links(const SystemModel& sys);

std::vector<std::size_t> served_by(const SystemModel& sys);
std::vector<market::GridLimits> grid_limits(const SystemModel& sys);

/// Copy with every building's demand-response boxes collapsed to zero.
SystemModel without_flexibility(SystemModel sys);

/// Copy with both tie-line limits set to [-cap, cap].
SystemModel with_tie_cap(SystemModel sys, double cap);

}  // namespace mcies::model
