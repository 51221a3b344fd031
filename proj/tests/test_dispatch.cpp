#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "mcies/devices.hpp"
#include "mcies/dispatch.hpp"
#include "mcies/io.hpp"

using namespace mcies;
using namespace mcies::dispatch;

namespace {

double stack_cost(const SupplyStack& st, double unit, const std::vector<double>& blocks) {
  double c = st.has_unit ? st.a * unit * unit + st.b * unit : 0.0;
  for (std::size_t i = 0; i < blocks.size(); ++i) c += st.blocks[i].price * blocks[i];
  return c;
}

// Interval of clearing prices consistent with every component's position.
bool price_certificate(const SupplyStack& st, const Clearing& c) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  auto place = [&](double x, double xl, double xh, double marginal) {
    if (x > xl + 1e-9) lo = std::max(lo, marginal);
    if (x < xh - 1e-9) hi = std::min(hi, marginal);
  };
  for (std::size_t i = 0; i < st.n_blocks; ++i) {
    const auto& b = st.blocks[i];
    place(c.block[i], b.lo, b.hi, b.price);
  }
  if (st.has_unit) {
    const double m = 2.0 * st.a * c.unit + st.b;
    place(c.unit, st.lo, st.hi, m);
  }
  return lo <= hi + 1e-9;
}

SupplyStack random_stack(std::mt19937_64& rng, bool with_unit) {
  std::uniform_int_distribution<int> cap(0, 12);
  std::uniform_int_distribution<int> price(1, 20);
  SupplyStack st;
  st.penalty_weight = 1e3;
  st.has_unit = with_unit;
  if (with_unit) {
    st.a = 0.01 * price(rng);
    st.b = 0.1 * price(rng);
    st.lo = 0.0;
    st.hi = 0.5 * cap(rng);
  }
  st.add({0.1 * price(rng), 0.0, 0.5 * cap(rng)});
  st.add({0.1 * price(rng), -0.5 * cap(rng), 0.0});
  st.add({0.1 * price(rng), 0.0, 0.5 * cap(rng)});
  return st;
}

// Exhaustive search over the blocks on a 0.5 kW lattice; the unit takes the remainder.
double brute_force(const SupplyStack& st, double demand) {
  double best = std::numeric_limits<double>::infinity();
  auto grid = [](const PriceBlock& b) {
    std::vector<double> v;
    for (double x = b.lo; x <= b.hi + 1e-12; x += 0.5) v.push_back(x);
    return v;
  };
  for (double x0 : grid(st.blocks[0]))
    for (double x1 : grid(st.blocks[1]))
      for (double x2 : grid(st.blocks[2])) {
        const double rest = demand - x0 - x1 - x2;
        double unit = 0.0;
        if (st.has_unit) {
          if (rest < st.lo - 1e-12 || rest > st.hi + 1e-12) continue;
          unit = rest;
        } else if (std::abs(rest) > 1e-12) {
          continue;
        }
        best = std::min(best, stack_cost(st, unit, {x0, x1, x2}));
      }
  return best;
}

}  // namespace

TEST_CASE("merit-order clearing against exhaustive search") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 300; ++trial) {
    const bool with_unit = trial % 3 != 0;
    const auto st = random_stack(rng, with_unit);
    double s_min = st.blocks[0].lo + st.blocks[1].lo + st.blocks[2].lo + (with_unit ? st.lo : 0.0);
    double s_max = st.blocks[0].hi + st.blocks[1].hi + st.blocks[2].hi + (with_unit ? st.hi : 0.0);
    std::uniform_int_distribution<int> pick(static_cast<int>(2 * s_min) - 2, static_cast<int>(2 * s_max) + 2);
    const double demand = 0.5 * pick(rng);
    const auto c = clear(st, demand);

    const std::vector<double> blocks(c.block.begin(), c.block.begin() + 3);
    const double supplied = c.unit + blocks[0] + blocks[1] + blocks[2];
    CHECK(supplied + c.shortfall - c.surplus == doctest::Approx(demand).epsilon(1e-12));
    CHECK(c.shortfall == doctest::Approx(std::max(0.0, demand - s_max)));
    CHECK(c.surplus == doctest::Approx(std::max(0.0, s_min - demand)));
    const double penalty = st.penalty_weight * (c.shortfall * c.shortfall + c.surplus * c.surplus);
    CHECK(c.cost == doctest::Approx(stack_cost(st, c.unit, blocks) + penalty));
    CHECK(price_certificate(st, c));
    if (demand >= s_min && demand <= s_max) {
      const double oracle = brute_force(st, demand);
      CHECK(stack_cost(st, c.unit, blocks) <= oracle + 1e-9);
      if (!with_unit) CHECK(stack_cost(st, c.unit, blocks) == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
}

TEST_CASE("exchange allocation") {
  SUBCASE("matches exhaustive search on three active hours") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
      double c2[3], c1[3];
      for (int i = 0; i < 3; ++i) {
        c2[i] = 0.05 + 0.5 * (u(rng) + 1.0);
        c1[i] = 3.0 * u(rng);
      }
      auto cost = [&](std::size_t t, double x) {
        if (t >= 3) return 1e6 * x * x;
        return c2[t] * x * x + c1[t] * x + std::max(0.0, x - 1.0) * 2.0;
      };
      const auto x = allocate_exchange(cost, -4.0, 4.0, 0.5);
      double got = 0.0;
      for (std::size_t t = 0; t < kHours; ++t) got += cost(t, x[t]);
      double best = std::numeric_limits<double>::infinity();
      for (int a = -8; a <= 8; ++a)
        for (int b = -8; b <= 8; ++b) {
          const int c = -a - b;
          if (c < -8 || c > 8) continue;
          best = std::min(best, cost(0, 0.5 * a) + cost(1, 0.5 * b) + cost(2, 0.5 * c) + 21 * cost(3, 0.0));
        }
      CHECK(got == doctest::Approx(best).epsilon(1e-12));
    }
  }
  SUBCASE("no improving pairwise exchange remains") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    HourlySeries a{}, b{};
    for (std::size_t t = 0; t < kHours; ++t) {
      a[t] = 0.01 + u(rng);
      b[t] = 200.0 * (u(rng) - 0.5);
    }
    auto cost = [&](std::size_t t, double x) { return a[t] * x * x + b[t] * x; };
    const double q = 0.5;
    const auto x = allocate_exchange(cost, -400.0, 400.0, q);
    CHECK(std::abs(total(x)) < 1e-9);
    for (std::size_t i = 0; i < kHours; ++i) {
      CHECK(std::abs(x[i] / q - std::round(x[i] / q)) < 1e-12);
      CHECK(x[i] >= -400.0);
      CHECK(x[i] <= 400.0);
      for (std::size_t j = 0; j < kHours; ++j) {
        if (i == j || x[i] + q > 400.0 || x[j] - q < -400.0) continue;
        const double delta = cost(i, x[i] + q) + cost(j, x[j] - q) - cost(i, x[i]) - cost(j, x[j]);
        CHECK(delta >= -1e-9);
      }
    }
  }
  CHECK(allocate_exchange([](std::size_t, double x) { return x * x; }, 0.0, 0.0, 0.5) == HourlySeries{});
  CHECK_THROWS_AS(allocate_exchange([](std::size_t, double) { return 0.0; }, 1.0, 2.0, 0.5), DomainError);
}

TEST_CASE("storage plan") {
  devices::StorageDevice s;
  s.c_min = 100;
  s.c_max = 800;
  s.c_init = 100;
  s.p_ch_max = 200;
  s.p_dc_max = 200;
  s.k_loss = 0.001;
  HourlySeries value = filled(0.7);
  for (std::size_t t = 0; t < 7; ++t) value[t] = 0.44;
  for (std::size_t t : {9u, 10u, 11u, 12u, 18u, 19u, 20u, 21u}) value[t] = 1.0;

  for (auto rule : {devices::EndRule::Cyclic, devices::EndRule::PinMin}) {
    const auto plan = plan_storage(s, value, 1.0, rule);
    const auto check = devices::storage_validate(s, plan.ch, plan.dc, 1.0, rule);
    CHECK(check.violations.empty());
    CHECK(total(plan.dc) > 0.0);
    for (std::size_t t = 0; t < kHours; ++t) {
      if (plan.ch[t] > 0.0) CHECK(value[t] == 0.44);
      if (plan.dc[t] > 0.0) CHECK(value[t] == 1.0);
      CHECK(plan.ch[t] * plan.dc[t] == 0.0);
    }
    CHECK(*std::max_element(check.level.begin(), check.level.end()) == doctest::Approx(800.0).epsilon(1e-9));
  }

  const auto flat = plan_storage(s, filled(0.7), 1.0, devices::EndRule::Cyclic);
  CHECK(total(flat.dc) == 0.0);
  CHECK(devices::storage_validate(s, flat.ch, flat.dc, 1.0).violations.empty());

  HourlySeries narrow = filled(0.7);
  narrow[3] = 0.66;
  const auto lossy = plan_storage(s, narrow, 1.0, devices::EndRule::Cyclic);
  CHECK(total(lossy.dc) == 0.0);
}

TEST_CASE("scenario dispatch balances on the bundled system") {
  const auto sys = io::load_system(std::string(MCIES_DATA_DIR) + "/system.json");
  const auto ctx = make_context(sys);
  std::vector<building::EffectiveLoads> loads;
  double peak = 0.0;
  for (const auto& b : sys.buildings) {
    loads.push_back({b.baseline.p0, b.baseline.h0});
    for (std::size_t t = 0; t < kHours; ++t) peak = std::max({peak, b.baseline.p0[t], b.baseline.h0[t]});
  }
  for (double level : {0.0, 0.3, 0.8}) {
    const auto sc = scenario::single_scenario(filled(level), filled(level * 0.5));
    const auto r = scenario_dispatch(ctx, loads, sc.scenarios[0]);
    CHECK(r.shortfalls.empty());
    CHECK(market::tie_line_check(r.dispatch, sys.tie).empty());
    for (std::size_t j = 0; j < sys.cies.size(); ++j) {
      const auto& d = r.dispatch.cies[j];
      for (std::size_t t = 0; t < kHours; ++t) {
        CHECK(std::abs(market::electric_balance_residual(d, loads, ctx.served_by, j, t)) <= 1e-6 * peak);
        CHECK(std::abs(market::heat_balance_residual(d, loads, ctx.links, j, t)) <= 1e-6 * peak);
        CHECK(d.curtailed[t] >= -1e-9);
      }
      if (d.has_chp) CHECK(devices::chp_validate(*sys.cies[j].chp, d.chp_p, d.chp_h).violations.empty());
      if (d.has_mt) {
        CHECK(devices::mt_validate(*sys.cies[j].mt, d.mt_p, d.mt_on, d.mt_initially_on).empty());
      }
    }
  }
}
