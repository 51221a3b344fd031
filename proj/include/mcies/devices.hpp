#pragma once

#include <span>
#include <string>

#include "mcies/common.hpp"

namespace mcies::devices {

// All powers in kW, energies in kWh, temperatures in C. Pipe fluid data is
// converted to SI once, inside pipe_loss.

struct ElectricBoiler {
  double eta = 0.95;
  double p_max = 600.0;
};

/// Heat output for a given electric input. Throws DomainError outside [0, p_max].
double eb_heat(const ElectricBoiler& eb, double p_in);

struct CHPUnit {
  double c_v = 0.75;
  double p_min = 0.0;
  double p_max = 1200.0;
  double h_max = 1200.0;
  double ramp_down = -250.0;
  double ramp_up = 250.0;
};

struct CHPCheck {
  HourlySeries p_zs{};
  Violations violations;
};

/// Condensing-equivalent power p + c_v*h per hour plus every bound/ramp breach.
CHPCheck chp_validate(const CHPUnit& chp, const HourlySeries& p, const HourlySeries& h);

struct MicroTurbine {
  double p_min = 50.0;
  double p_max = 500.0;
  double ramp_down = -200.0;
  double ramp_up = 200.0;
};

using Commitment = std::array<int, kHours>;

/// Output bounds gated by the on/off state, and ramp limits applied while on.
/// The hour before the horizon is taken as off with zero output unless
/// `initially_on` is set (then at `initial_power`). A unit that is off this
/// hour may stop from any level; the ramp test applies only when on.
Violations mt_validate(const MicroTurbine& mt, const HourlySeries& p, const Commitment& on,
                       bool initially_on = false, double initial_power = 0.0);

enum class StorageKind { EES, HST };

enum class EndRule {
  Cyclic,  // end-of-day level equals the initial level
  PinMin,  // initial and end-of-day levels both equal c_min
};

struct StorageDevice {
  StorageKind kind = StorageKind::EES;
  double c_min = 0.0;
  double c_max = 0.0;
  double c_init = 0.0;
  double p_ch_max = 0.0;
  double p_dc_max = 0.0;
  double eta_ch = 0.9;
  double eta_dc = 0.9;
  double k_loss = 0.0;
};

void validate(const StorageDevice& s);

/// Level after one period. Throws DomainError when a flow is outside its
/// rating; a level outside [c_min, c_max] is returned and checked by
/// storage_validate.
double storage_step(const StorageDevice& s, double c_t, double p_ch, double p_dc, double dt_hours);

struct StorageCheck {
  std::array<double, kHours + 1> level{};  // level[0] = initial
  Violations violations;
};

/// Runs a day of flows and reports rating, capacity and end-of-day breaches.
/// The end-of-day equality uses an absolute tolerance of 1e-6 kWh.
StorageCheck storage_validate(const StorageDevice& s, const HourlySeries& p_ch, const HourlySeries& p_dc,
                              double dt_hours, EndRule rule = EndRule::Cyclic);

/// Supply pipe of the primary heating network. length m, diameter m,
/// flow kg/s, lambda W/(m C), c_pipe MJ/(kg C), rho_w kg/m3.
struct HeatPipe {
  std::string name;
  double length = 1000.0;
  double diameter = 0.6;
  double flow = 200.0;
  double lambda = 0.2;
  double c_pipe = 4.2e-3;
  double rho_w = 1000.0;
};

void validate(const HeatPipe& pipe);

struct PipeLoss {
  double k_loss = 0.0;
  double delta_t = 0.0;  // C
  double delta_h = 0.0;  // kW
};

PipeLoss pipe_loss(const HeatPipe& pipe, double t_start, double t_out);

/// Transport delay in seconds.
double pipe_delay_seconds(const HeatPipe& pipe);

/// Transport delay rounded to whole periods of dt hours.
int pipe_delay(const HeatPipe& pipe, double dt_hours);

}  // namespace mcies::devices
