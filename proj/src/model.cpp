#include "mcies/model.hpp"

namespace mcies::model {

void validate(const SystemModel& sys) {
  if (!(sys.dt_hours > 0.0)) throw InputError("dt_hours must be positive");
  if (sys.cies.empty() || sys.cies.size() > 2) throw InputError("an instance needs one or two communities");
  if (sys.buildings.empty()) throw InputError("an instance needs at least one building");
  for (const auto& v : market::validate(sys.tariff)) {
    throw InputError("tariff: " + v.constraint + " " + v.detail);
  }
  if (sys.tie.p_min > 0.0 || sys.tie.p_max < 0.0 || sys.tie.h_min > 0.0 || sys.tie.h_max < 0.0) {
    throw InputError("tie-line limits must contain zero");
  }
  if (sys.costs.chp.a < 0.0 || sys.costs.chp.d < 0.0) throw InputError("CHP quadratic cost coefficients must be >= 0");
  for (const auto& pipe : sys.pipes) {
    try {
      devices::validate(pipe);
    } catch (const DomainError& e) {
      throw InputError(e.what());
    }
  }
  for (const auto& c : sys.cies) {
    for (const auto* s : {&c.ees, &c.hst}) {
      if (!s->has_value()) continue;
      try {
        devices::validate(**s);
      } catch (const DomainError& e) {
        throw InputError(c.name + ": " + e.what());
      }
      if (sys.storage_end_rule == devices::EndRule::PinMin && (*s)->c_init != (*s)->c_min) {
        throw InputError(c.name + ": pinned end rule needs c_init == c_min");
      }
    }
    if (c.grid.p_min > 0.0 || c.grid.p_max < 0.0) throw InputError(c.name + ": grid limits must contain zero");
    if (c.wt_capacity < 0.0 || c.pv_capacity < 0.0) throw InputError(c.name + ": negative renewable capacity");
  }
  for (const auto& b : sys.buildings) {
    if (b.cies >= sys.cies.size()) throw InputError(b.name + ": unknown community");
    if (b.pipe >= sys.pipes.size()) throw InputError(b.name + ": unknown pipe");
    try {
      building::validate(b.params);
    } catch (const DomainError& e) {
      throw InputError(b.name + ": " + e.what());
    }
    for (const auto& v : building::validate(b.baseline)) {
      throw InputError(b.name + ": " + v.constraint + " at hour " + std::to_string(v.hour) + ", " + v.detail);
    }
  }
}

std::vector<market::HeatLink> heat_links(const SystemModel& sys) {
  std::vector<market::HeatLink> out;
  out.reserve(sys.buildings.size());
  for (const auto& b : sys.buildings) {
    const auto& pipe = sys.pipes.at(b.pipe);
    market::HeatLink link;
    link.cies = b.cies;
    link.delay = devices::pipe_delay(pipe, sys.dt_hours);
    for (std::size_t t = 0; t < kHours; ++t) {
      link.loss[t] = devices::pipe_loss(pipe, sys.supply_temperature, sys.t_out[t]).delta_h;
    }
    out.push_back(link);
  }
  return out;
}

std::vector<std::size_t> served_by(const SystemModel& sys) {
  std::vector<std::size_t> out;
  for (const auto& b : sys.buildings) out.push_back(b.cies);
  return out;
}

std::vector<market::GridLimits> grid_limits(const SystemModel& sys) {
  std::vector<market::GridLimits> out;
  for (const auto& c : sys.cies) out.push_back(c.grid);
  return out;
}

SystemModel without_flexibility(SystemModel sys) {
  for (auto& b : sys.buildings) {
    b.baseline = building::without_flexibility(b.baseline);
    b.flex_share = 0.0;
  }
  return sys;
}

SystemModel with_tie_cap(SystemModel sys, double cap) {
  if (cap < 0.0) throw DomainError("tie-line cap must be >= 0");
  sys.tie = {-cap, cap, -cap, cap};
  return sys;
}

}  // namespace mcies::model
