#include "mcies/devices.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace mcies::devices {

namespace {

double tol(double scale) { return 1e-9 * std::max(1.0, std::abs(scale)); }

}  // namespace

double eb_heat(const ElectricBoiler& eb, double p_in) {
  if (!(eb.eta > 0.0 && eb.eta <= 1.0)) throw DomainError("boiler efficiency must lie in (0, 1]");
  if (p_in < 0.0 || p_in > eb.p_max) {
    throw DomainError("boiler input " + std::to_string(p_in) + " kW outside [0, " + std::to_string(eb.p_max) + "]");
  }
  return eb.eta * p_in;
}

CHPCheck chp_validate(const CHPUnit& chp, const HourlySeries& p, const HourlySeries& h) {
  CHPCheck out;
  for (std::size_t t = 0; t < kHours; ++t) {
    const int hour = static_cast<int>(t) + 1;
    out.p_zs[t] = p[t] + chp.c_v * h[t];
    if (p[t] < chp.p_min - tol(chp.p_min)) out.violations.push_back({"chp_power", hour, chp.p_min - p[t], "CHP power below minimum"});
    if (p[t] > chp.p_max + tol(chp.p_max)) out.violations.push_back({"chp_power", hour, p[t] - chp.p_max, "CHP power above maximum"});
    if (h[t] < -tol(0.0)) out.violations.push_back({"chp_heat", hour, -h[t], "negative CHP heat"});
    if (h[t] > chp.h_max + tol(chp.h_max)) out.violations.push_back({"chp_heat", hour, h[t] - chp.h_max, "CHP heat above maximum"});
    if (t > 0) {
      const double step = p[t] - p[t - 1];
      if (step > chp.ramp_up + tol(chp.ramp_up)) {
        out.violations.push_back({"chp_ramp", hour, step - chp.ramp_up, "CHP ramp-up limit exceeded"});
      }
      if (step < chp.ramp_down - tol(chp.ramp_down)) {
        out.violations.push_back({"chp_ramp", hour, chp.ramp_down - step, "CHP ramp-down limit exceeded"});
      }
    }
  }
  return out;
}

Violations mt_validate(const MicroTurbine& mt, const HourlySeries& p, const Commitment& on,
                       bool initially_on, double initial_power) {
  Violations out;
  double prev = initially_on ? initial_power : 0.0;
  for (std::size_t t = 0; t < kHours; ++t) {
    const int hour = static_cast<int>(t) + 1;
    if (on[t] != 0 && on[t] != 1) out.push_back({"mt_power", hour, 0.0, "state must be 0 or 1"});
    if (on[t] == 1) {
      if (p[t] < mt.p_min - tol(mt.p_min)) out.push_back({"mt_power", hour, mt.p_min - p[t], "MT power below minimum while on"});
      if (p[t] > mt.p_max + tol(mt.p_max)) out.push_back({"mt_power", hour, p[t] - mt.p_max, "MT power above maximum"});
      const double step = p[t] - prev;
      if (step > mt.ramp_up + tol(mt.ramp_up)) out.push_back({"mt_ramp", hour, step - mt.ramp_up, "MT ramp-up limit exceeded"});
      if (step < mt.ramp_down - tol(mt.ramp_down)) out.push_back({"mt_ramp", hour, mt.ramp_down - step, "MT ramp-down limit exceeded"});
    } else if (std::abs(p[t]) > tol(0.0)) {
      out.push_back({"mt_power", hour, std::abs(p[t]), "MT produces while off"});
    }
    prev = p[t];
  }
  return out;
}

void validate(const StorageDevice& s) {
  if (!(s.c_min <= s.c_init && s.c_init <= s.c_max)) throw DomainError("storage initial level outside [c_min, c_max]");
  if (!(s.eta_ch > 0.0 && s.eta_ch <= 1.0 && s.eta_dc > 0.0 && s.eta_dc <= 1.0)) {
    throw DomainError("storage efficiencies must lie in (0, 1]");
  }
  if (!(s.k_loss >= 0.0 && s.k_loss < 1.0)) throw DomainError("self-discharge rate must lie in [0, 1)");
  if (s.p_ch_max < 0.0 || s.p_dc_max < 0.0) throw DomainError("storage ratings must be >= 0");
}

double storage_step(const StorageDevice& s, double c_t, double p_ch, double p_dc, double dt_hours) {
  if (p_ch < -tol(0.0) || p_ch > s.p_ch_max + tol(s.p_ch_max)) throw DomainError("charge power outside its rating");
  if (p_dc < -tol(0.0) || p_dc > s.p_dc_max + tol(s.p_dc_max)) throw DomainError("discharge power outside its rating");
  return (1.0 - s.k_loss) * c_t + (s.eta_ch * p_ch - p_dc / s.eta_dc) * dt_hours;
}

StorageCheck storage_validate(const StorageDevice& s, const HourlySeries& p_ch, const HourlySeries& p_dc,
                              double dt_hours, EndRule rule) {
  StorageCheck out;
  out.level[0] = s.c_init;
  if (rule == EndRule::PinMin && std::abs(s.c_init - s.c_min) > 1e-6) {
    out.violations.push_back({"storage_cycle", 0, std::abs(s.c_init - s.c_min), "initial level must equal c_min"});
  }
  for (std::size_t t = 0; t < kHours; ++t) {
    const int hour = static_cast<int>(t) + 1;
    double ch = p_ch[t];
    double dc = p_dc[t];
    if (ch < -tol(0.0) || ch > s.p_ch_max + tol(s.p_ch_max)) {
      out.violations.push_back({"storage_rating", hour, ch, "charge power outside rating"});
      ch = std::clamp(ch, 0.0, s.p_ch_max);
    }
    if (dc < -tol(0.0) || dc > s.p_dc_max + tol(s.p_dc_max)) {
      out.violations.push_back({"storage_rating", hour, dc, "discharge power outside rating"});
      dc = std::clamp(dc, 0.0, s.p_dc_max);
    }
    out.level[t + 1] = storage_step(s, out.level[t], ch, dc, dt_hours);
    const double c = out.level[t + 1];
    if (c < s.c_min - 1e-6) out.violations.push_back({"storage_level", hour, s.c_min - c, "level below minimum"});
    if (c > s.c_max + 1e-6) out.violations.push_back({"storage_level", hour, c - s.c_max, "level above maximum"});
  }
  const double end = out.level[kHours];
  const double target = rule == EndRule::PinMin ? s.c_min : s.c_init;
  if (std::abs(end - target) > 1e-6) {
    out.violations.push_back({"storage_cycle", static_cast<int>(kHours), std::abs(end - target), "end-of-day level differs from start"});
  }
  return out;
}

void validate(const HeatPipe& pipe) {
  if (!(pipe.length > 0 && pipe.diameter > 0 && pipe.flow > 0 && pipe.lambda > 0 && pipe.c_pipe > 0 &&
        pipe.rho_w > 0)) {
    throw DomainError("pipe " + pipe.name + ": all parameters must be strictly positive");
  }
}

PipeLoss pipe_loss(const HeatPipe& pipe, double t_start, double t_out) {
  if (!(pipe.flow > 0.0)) throw DomainError("pipe flow must be positive");
  const double c_si = pipe.c_pipe * 1e6;  // J/(kg C)
  PipeLoss out;
  out.k_loss = -std::expm1(-pipe.lambda * pipe.length / (c_si * pipe.flow));
  out.delta_t = out.k_loss * (t_start - t_out);
  out.delta_h = c_si * pipe.flow * out.delta_t / 1000.0;
  return out;
}

double pipe_delay_seconds(const HeatPipe& pipe) {
  if (!(pipe.flow > 0.0)) throw DomainError("pipe flow must be positive");
  return std::numbers::pi * pipe.rho_w * pipe.length * pipe.diameter * pipe.diameter / (4.0 * pipe.flow);
}

int pipe_delay(const HeatPipe& pipe, double dt_hours) {
  if (!(dt_hours > 0.0)) throw DomainError("period length must be positive");
  return static_cast<int>(std::lround(pipe_delay_seconds(pipe) / (dt_hours * 3600.0)));
}

}  // namespace mcies::devices
