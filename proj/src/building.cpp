#include "mcies/building.hpp"

#include <algorithm>
#include <cmath>

namespace mcies::building {

void validate(const BuildingParams& p) {
  const std::pair<const char*, double> fields[] = {
      {"K", p.K},           {"F", p.F},         {"V", p.V},
      {"c_air", p.c_air},   {"rho_air", p.rho_air}, {"M", p.M},
      {"I_cl", p.I_cl},     {"T_s", p.T_s},     {"omega", p.omega},
      {"vartheta", p.vartheta}, {"theta", p.theta}};
  for (const auto& [name, value] : fields) {
    if (!(value > 0.0) || !std::isfinite(value)) {
      throw DomainError(std::string("building parameter ") + name + " must be strictly positive");
    }
  }
}

Violations validate(const BaselineProfile& base) {
  Violations out;
  for (std::size_t t = 0; t < kHours; ++t) {
    const int hour = static_cast<int>(t) + 1;
    if (base.p0[t] < 0.0) out.push_back({"baseline_p0", hour, -base.p0[t], "negative electric load"});
    if (base.h0[t] < 0.0) out.push_back({"baseline_h0", hour, -base.h0[t], "negative heat load"});
    if (base.tsl_min[t] > 0.0 || base.tsl_max[t] < 0.0) {
      out.push_back({"shift_box", hour, 0.0, "shift box must contain zero"});
    }
    if (base.il_max[t] < 0.0 || base.il_max[t] > base.p0[t]) {
      out.push_back({"interrupt_box", hour, base.il_max[t], "interrupt cap outside [0, p0]"});
    }
    if (base.h_min[t] < 0.0 || base.h_min[t] > base.h0[t]) {
      out.push_back({"heat_cut_box", hour, base.h_min[t], "minimum heat load outside [0, h0]"});
    }
  }
  return out;
}

double pmv(const BuildingParams& params, double t_in) {
  return 2.43 - 3.76 * (params.T_s - t_in) / (params.M * (params.I_cl + 0.1));
}

double pmv_cap(int hour) {
  if (hour < 1 || hour > static_cast<int>(kHours)) {
    throw DomainError("hour must lie in 1..24, got " + std::to_string(hour));
  }
  return (hour >= 8 && hour <= 19) ? 0.5 : 0.9;
}

ComfortBand comfort_band_for_cap(const BuildingParams& params, double cap) {
  if (!(cap >= 0.0)) throw DomainError("PMV cap must be >= 0");
  // PMV is affine in t_in with slope 3.76 / (M (I_cl + 0.1))
  const double scale = params.M * (params.I_cl + 0.1) / 3.76;
  return {params.T_s - (2.43 + cap) * scale, params.T_s - (2.43 - cap) * scale};
}

ComfortBand comfort_band(const BuildingParams& params, int hour) {
  return comfort_band_for_cap(params, pmv_cap(hour));
}

double baseline_heat_load(const BuildingParams& params, double t_in, double t_out, double dt_hours) {
  if (!(dt_hours > 0.0)) throw DomainError("period length must be positive");
  const double kf = params.K * params.F / 1000.0;                      // kW/C
  const double air = params.c_air * params.rho_air * params.V;          // kJ/C
  const double dt = dt_hours * 3600.0;                                  // s
  const double gap = t_in - t_out;
  const double numerator = gap + kf * gap / air * dt;
  const double denominator = 1.0 / kf + dt / air;
  return numerator / denominator;
}

namespace {

double tol(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

}  // namespace

Violations validate_dr(const BaselineProfile& base, const DemandResponse& dr) {
  Violations out;
  double shift_sum = 0.0;
  double scale = 0.0;
  for (std::size_t t = 0; t < kHours; ++t) {
    const int hour = static_cast<int>(t) + 1;
    if (dr.tsl[t] < base.tsl_min[t] - tol(base.tsl_min[t])) {
      out.push_back({"shift_box", hour, base.tsl_min[t] - dr.tsl[t], "shift below lower bound"});
    }
    if (dr.tsl[t] > base.tsl_max[t] + tol(base.tsl_max[t])) {
      out.push_back({"shift_box", hour, dr.tsl[t] - base.tsl_max[t], "shift above upper bound"});
    }
    if (dr.il[t] < -tol(0.0)) out.push_back({"interrupt_box", hour, -dr.il[t], "negative interruption"});
    if (dr.il[t] > base.il_max[t] + tol(base.il_max[t])) {
      out.push_back({"interrupt_box", hour, dr.il[t] - base.il_max[t], "interruption above cap"});
    }
    const double cut_cap = base.h0[t] - base.h_min[t];
    if (dr.ch[t] < -tol(0.0)) out.push_back({"heat_cut_box", hour, -dr.ch[t], "negative heat cut"});
    if (dr.ch[t] > cut_cap + tol(cut_cap)) {
      out.push_back({"heat_cut_box", hour, dr.ch[t] - cut_cap, "heat cut beyond comfort limit"});
    }
    shift_sum += dr.tsl[t];
    scale += std::max(std::abs(base.tsl_min[t]), std::abs(base.tsl_max[t]));
  }
  if (std::abs(shift_sum) > 1e-9 * std::max(1.0, scale)) {
    out.push_back({"shift_balance", 0, std::abs(shift_sum), "shifted load does not net to zero over the day"});
  }
  return out;
}

EffectiveLoads effective_loads(const BaselineProfile& base, const DemandResponse& dr) {
  const Violations v = validate_dr(base, dr);
  if (!v.empty()) {
    throw DomainError("demand response violates " + v.front().constraint +
                      (v.front().hour ? " at hour " + std::to_string(v.front().hour) : std::string()) +
                      ": " + v.front().detail);
  }
  EffectiveLoads out;
  for (std::size_t t = 0; t < kHours; ++t) {
    out.p[t] = base.p0[t] + dr.tsl[t] - dr.il[t];
    out.h[t] = base.h0[t] - dr.ch[t];
    if (out.p[t] < 0.0) {
      throw DomainError("effective_load: negative effective electric load at hour " + std::to_string(t + 1));
    }
    if (out.h[t] < 0.0) {
      throw DomainError("effective_load: negative effective heat load at hour " + std::to_string(t + 1));
    }
  }
  return out;
}

BaselineProfile make_baseline(const BuildingParams& params, const HourlySeries& p0,
                              const HourlySeries& t_in, const HourlySeries& t_out,
                              double flex_share, double dt_hours) {
  validate(params);
  if (flex_share < 0.0 || flex_share > 0.5) throw DomainError("flexibility share must lie in [0, 0.5]");
  BaselineProfile base;
  base.p0 = p0;
  base.t_in = t_in;
  base.t_out = t_out;
  for (std::size_t t = 0; t < kHours; ++t) {
    const int hour = static_cast<int>(t) + 1;
    base.h0[t] = std::max(0.0, baseline_heat_load(params, t_in[t], t_out[t], dt_hours));
    const double t_low = comfort_band(params, hour).t_min;
    const double floor = std::max(0.0, baseline_heat_load(params, t_low, t_out[t], dt_hours));
    base.h_min[t] = std::min(floor, base.h0[t]);
    base.tsl_min[t] = -flex_share * p0[t];
    base.tsl_max[t] = flex_share * p0[t];
    base.il_max[t] = flex_share * p0[t];
  }
  return base;
}

BaselineProfile without_flexibility(BaselineProfile base) {
  base.tsl_min.fill(0.0);
  base.tsl_max.fill(0.0);
  base.il_max.fill(0.0);
  base.h_min = base.h0;
  return base;
}

}  // namespace mcies::building
