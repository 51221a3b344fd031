#include <doctest.h>

#include <cmath>

#include "mcies/devices.hpp"

using namespace mcies;
using namespace mcies::devices;

namespace {

HeatPipe pipe(const char* name, double length, double d, double m) {
  HeatPipe p;
  p.name = name;
  p.length = length;
  p.diameter = d;
  p.flow = m;
  return p;
}

StorageDevice ees() {
  StorageDevice s;
  s.c_min = 100;
  s.c_max = 800;
  s.c_init = 100;
  s.p_ch_max = 200;
  s.p_dc_max = 200;
  s.k_loss = 0.001;
  return s;
}

}  // namespace

TEST_CASE("electric boiler") {
  const ElectricBoiler eb;
  CHECK(eb_heat(eb, 600.0) == doctest::Approx(570.0).epsilon(1e-15));
  CHECK(eb_heat(eb, 0.0) == 0.0);
  CHECK_THROWS_AS(eb_heat(eb, 601.0), DomainError);
  CHECK_THROWS_AS(eb_heat(eb, -1.0), DomainError);
}

TEST_CASE("chp operating region and ramps") {
  const CHPUnit chp;
  HourlySeries p = filled(800.0), h = filled(400.0);
  auto r = chp_validate(chp, p, h);
  CHECK(r.p_zs[0] == doctest::Approx(1100.0));
  CHECK(r.violations.empty());

  const double delta = 40.0;
  HourlySeries p2 = p, h2 = h;
  for (std::size_t t = 0; t < kHours; ++t) {
    p2[t] += chp.c_v * delta;
    h2[t] -= delta;
  }
  const auto r2 = chp_validate(chp, p2, h2);
  for (std::size_t t = 0; t < kHours; ++t) CHECK(r2.p_zs[t] == doctest::Approx(r.p_zs[t]));

  CHECK(chp_validate(chp, filled(chp.p_min), filled(0.0)).violations.empty());

  p[10] = 1100.0;
  r = chp_validate(chp, p, h);
  bool ramp = false;
  for (const auto& v : r.violations) ramp |= v.constraint == "chp_ramp" && v.hour == 11;
  CHECK(ramp);
}

TEST_CASE("micro-turbine gating") {
  const MicroTurbine mt;
  Commitment off{};
  CHECK(mt_validate(mt, filled(0.0), off).empty());

  Commitment on{};
  on.fill(1);
  HourlySeries p = filled(100.0);
  p[0] = 49.0;
  auto v = mt_validate(mt, p, on, true, 100.0);
  bool low = false;
  for (const auto& x : v) low |= x.constraint == "mt_power" && x.hour == 1;
  CHECK(low);

  // start-up from zero may reach ramp_up but not beyond
  Commitment start{};
  HourlySeries q{};
  start[3] = 1;
  q[3] = 200.0;
  CHECK(mt_validate(mt, q, start).empty());
  q[3] = 250.0;
  CHECK_FALSE(mt_validate(mt, q, start).empty());

  // shutting down from any level is allowed
  Commitment stop{};
  HourlySeries s{};
  stop[0] = stop[1] = 1;
  s[0] = 150.0;
  s[1] = 300.0;
  CHECK(mt_validate(mt, s, stop).empty());

  // off with output is a violation
  HourlySeries leak{};
  leak[5] = 1.0;
  CHECK_FALSE(mt_validate(mt, leak, off).empty());
}

TEST_CASE("storage step") {
  StorageDevice s;
  s.c_min = 0;
  s.c_max = 400;
  s.p_ch_max = 100;
  s.p_dc_max = 100;
  s.k_loss = 0.01;
  s.eta_ch = 0.9;
  CHECK(storage_step(s, 100.0, 50.0, 0.0, 1.0) == 144.0);

  s.k_loss = 0.0;
  s.eta_ch = s.eta_dc = 1.0;
  CHECK(storage_step(s, 123.0, 0.0, 0.0, 1.0) == 123.0);
  CHECK_THROWS_AS(storage_step(s, 0.0, 101.0, 0.0, 1.0), DomainError);

  // superposition without self-discharge
  s.eta_ch = s.eta_dc = 0.9;
  const double both = storage_step(s, 200.0, 60.0, 30.0, 1.0);
  const double split = storage_step(s, storage_step(s, 200.0, 60.0, 0.0, 1.0), 0.0, 30.0, 1.0);
  CHECK(both == doctest::Approx(split).epsilon(1e-15));

  // round trip returns eta_ch * eta_dc
  const double stored = storage_step(s, 0.0, 100.0, 0.0, 1.0);
  CHECK(stored == doctest::Approx(90.0));
  const double out = stored * s.eta_dc;
  CHECK(out / 100.0 == doctest::Approx(0.81));
}

TEST_CASE("storage day validation") {
  const auto s = ees();
  CHECK(storage_validate(s, filled(0.0), filled(0.0), 1.0).violations.size() >= 1);  // self-discharge breaks the cycle

  StorageDevice lossless = s;
  lossless.k_loss = 0.0;
  CHECK(storage_validate(lossless, filled(0.0), filled(0.0), 1.0).violations.empty());

  HourlySeries ch{}, dc{};
  ch[0] = 100.0;
  const auto r = storage_validate(lossless, ch, dc, 1.0);
  CHECK(r.level[1] == doctest::Approx(190.0));
  bool cycle = false;
  for (const auto& v : r.violations) cycle |= v.constraint == "storage_cycle";
  CHECK(cycle);

  ch[0] = 900.0;
  bool rating = false;
  for (const auto& v : storage_validate(lossless, ch, dc, 1.0).violations) rating |= v.constraint == "storage_rating";
  CHECK(rating);

  StorageDevice pinned = lossless;
  pinned.c_init = 300.0;
  bool pin = false;
  for (const auto& v : storage_validate(pinned, filled(0.0), filled(0.0), 1.0, EndRule::PinMin).violations)
    pin |= v.constraint == "storage_cycle";
  CHECK(pin);
}

TEST_CASE("pipe loss and delay") {
  const auto h4 = pipe("H-4", 1000, 0.6, 200);
  const auto h5 = pipe("H-5", 1500, 0.7, 250);
  const auto h6 = pipe("H-6", 1800, 0.7, 250);
  const auto loss = pipe_loss(h4, 80.0, 0.0);
  CHECK(std::abs(loss.k_loss - 2.381e-4) <= 1e-7);
  CHECK(loss.delta_h == doctest::Approx(16.0).epsilon(1e-2));
  CHECK(pipe_loss(h4, 20.0, 20.0).delta_h == 0.0);
  const auto half = pipe_loss(h4, 40.0, 0.0);
  CHECK(half.delta_h == doctest::Approx(loss.delta_h / 2).epsilon(1e-14));

  CHECK(pipe_delay_seconds(h4) == doctest::Approx(1413.7).epsilon(1e-4));
  CHECK(pipe_delay_seconds(h5) == doctest::Approx(2309.1).epsilon(1e-4));
  CHECK(pipe_delay(h4, 1.0) == 0);
  CHECK(pipe_delay(h5, 1.0) == 1);
  CHECK(pipe_delay(h6, 1.0) == 1);
  auto fast = h5;
  fast.flow = 1e12;
  CHECK(pipe_delay(fast, 1.0) == 0);
  auto none = h5;
  none.flow = 0.0;
  CHECK_THROWS_AS(pipe_loss(none, 80, 0), DomainError);
}
