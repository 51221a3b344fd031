#pragma once

#include <string>
#include <utility>

#include "mcies/common.hpp"

namespace mcies::building {

/// Thermal envelope, comfort model and discomfort pricing of one building user.
/// Units: K in W/(m2 C), F in m2, V in m3, c_air in kJ/(kg C), rho_air in kg/m3,
/// M in W/m2, I_cl in m2 C/W, T_s in C; discomfort coefficients in yuan/kW^2.
struct BuildingParams {
  double K = 0.5;
  double F = 4.5e4;
  double V = 4.5e5;
  double c_air = 1.007;
  double rho_air = 1.2;
  double M = 80.0;
  double I_cl = 0.161;
  double T_s = 33.5;
  double omega = 0.003;     // time-shiftable load
  double vartheta = 0.002;  // interruptible load
  double theta = 0.008;     // cuttable heat load
};

/// Throws DomainError unless every field is strictly positive.
void validate(const BuildingParams& p);

/// Hourly baseline of one building and the boxes its demand response must respect.
struct BaselineProfile {
  HourlySeries p0{};       // initial electric load, kW
  HourlySeries h0{};       // initial heat load, kW
  HourlySeries t_in{};     // indoor set-point behind h0, C
  HourlySeries t_out{};    // outdoor temperature, C
  HourlySeries tsl_min{};  // <= 0
  HourlySeries tsl_max{};  // >= 0
  HourlySeries il_max{};
  HourlySeries h_min{};
};

Violations validate(const BaselineProfile& base);

struct DemandResponse {
  HourlySeries tsl{};  // signed shift, kW
  HourlySeries il{};   // interrupted, kW
  HourlySeries ch{};   // cut heat, kW
};

/// Linear PMV index of the reduced comfort model.
double pmv(const BuildingParams& params, double t_in);

/// PMV cap for a 1-based hour: 0.5 during 8:00-19:00, 0.9 otherwise.
double pmv_cap(int hour);

struct ComfortBand {
  double t_min = 0.0;
  double t_max = 0.0;
};

/// Indoor temperatures whose PMV magnitude stays within the given cap.
ComfortBand comfort_band_for_cap(const BuildingParams& params, double cap);
ComfortBand comfort_band(const BuildingParams& params, int hour);

/// Heat load (kW) to hold t_in against t_out over a period of dt hours, using
/// the building's lumped envelope/air-capacity expression. At constant t_in it
/// equals K*F*(t_in - t_out).
double baseline_heat_load(const BuildingParams& params, double t_in, double t_out, double dt_hours);

struct EffectiveLoads {
  HourlySeries p{};
  HourlySeries h{};
};

/// p = p0 + tsl - il and h = h0 - ch. Throws DomainError naming the hour and
/// constraint when a response breaks its boxes or drives a load negative.
EffectiveLoads effective_loads(const BaselineProfile& base, const DemandResponse& dr);

/// Every breach of the shift/interrupt/cut boxes and the zero-sum shift rule.
Violations validate_dr(const BaselineProfile& base, const DemandResponse& dr);

/// Builds a baseline from set-points and weather: h0 from the set-point,
/// h_min from the lower comfort temperature of each hour, and shift/interrupt
/// boxes as `flex_share` of the hourly electric load.
BaselineProfile make_baseline(const BuildingParams& params, const HourlySeries& p0,
                              const HourlySeries& t_in, const HourlySeries& t_out,
                              double flex_share, double dt_hours = 1.0);

/// Same baseline with all demand-response boxes collapsed to zero.
BaselineProfile without_flexibility(BaselineProfile base);

}  // namespace mcies::building
