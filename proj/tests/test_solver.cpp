#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mcies/game.hpp"
#include "mcies/io.hpp"
#include "mcies/solver.hpp"
#include "oracles.hpp"

using namespace mcies;
using namespace mcies::solver;
using namespace mcies::oracle;

namespace {

game::StackelbergGame bundled_game() {
  game::StackelbergGame g;
  g.system = io::load_system(std::string(MCIES_DATA_DIR) + "/system.json");
  g.scenarios = scenario::single_scenario(filled(0.3), filled(0.2));
  return g;
}

}  // namespace

TEST_CASE("follower QP against lattice enumeration") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 60; ++trial) {
    const auto qp = aligned_instance(rng);
    const auto sol = follower_qp_solve(qp);
    CHECK(std::abs(sol.objective - brute_force(qp)) <= 1e-3);
    CHECK(sol.kkt_residual <= 1e-8);
  }
  for (int trial = 0; trial < 60; ++trial) {
    const auto qp = random_instance(rng);
    const auto sol = follower_qp_solve(qp);
    CHECK(sol.objective <= brute_force(qp) + 1e-9);
    CHECK(sol.kkt_residual <= 1e-8);
    CHECK(sol.objective == doctest::Approx(qp_objective(qp, sol.dr)));
    for (std::size_t t = 3; t < kHours; ++t) CHECK(sol.dr.tsl[t] == 0.0);
  }
}

TEST_CASE("unconstrained response matches the closed forms") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const auto qp = wide_instance(rng);
    building::BuildingParams params;
    params.omega = qp.omega;
    params.vartheta = qp.vartheta;
    params.theta = qp.theta;
    const market::PriceSchedule prices{qp.mu, qp.gamma};
    const auto sol = follower_qp_solve(qp);
    double mean_shift = 0.0;
    for (int h = 1; h <= 24; ++h) mean_shift += game::stationary_response(prices, params, h).tsl / kHours;
    for (int h = 1; h <= 24; ++h) {
      const auto s = game::stationary_response(prices, params, h);
      const auto t = static_cast<std::size_t>(h - 1);
      CHECK(std::abs(sol.dr.tsl[t] - (s.tsl - mean_shift)) <= 1e-6);
      CHECK(std::abs(sol.dr.il[t] - s.il) <= 1e-6);
      CHECK(std::abs(sol.dr.ch[t] - s.ch) <= 1e-6);
    }
  }
}

TEST_CASE("follower QP rejects bad problems") {
  std::mt19937_64 rng(1);
  auto qp = random_instance(rng);
  qp.theta = 0.0;
  CHECK_THROWS_AS(follower_qp_solve(qp), DomainError);
  qp = random_instance(rng);
  qp.tsl_min[0] = qp.tsl_min[1] = qp.tsl_min[2] = 1.0;
  qp.tsl_max[0] = qp.tsl_max[1] = qp.tsl_max[2] = 2.0;
  CHECK_THROWS_AS(follower_qp_solve(qp), DomainError);
}

TEST_CASE("chaotic DE") {
  const std::size_t n = 5;
  Bounds b{std::vector<double>(n, -5.0), std::vector<double>(n, 5.0)};
  auto sphere = [](const Genome& g) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) s += (g[i] - 1.0 - 0.1 * i) * (g[i] - 1.0 - 0.1 * i);
    return -s;
  };
  DEConfig cfg;
  cfg.population = 30;
  cfg.max_iter = 300;
  cfg.seed = 4;

  SUBCASE("converges on a shifted sphere with a monotone trace") {
    const auto r = chaotic_de_optimize(sphere, b, cfg);
    CHECK(r.best_fitness > -1e-8);
    CHECK(r.trace.size() == cfg.max_iter + 1);
    CHECK(r.trace.back() == r.best_fitness);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] >= r.trace[i - 1]);
    CHECK(r.evaluations == cfg.population * (cfg.max_iter + 1));
  }
  SUBCASE("identical across thread counts") {
    cfg.max_iter = 40;
    const auto one = chaotic_de_optimize(sphere, b, cfg);
    cfg.threads = 3;
    const auto three = chaotic_de_optimize(sphere, b, cfg);
    CHECK(one.best == three.best);
    CHECK(one.trace == three.trace);
    cfg.seed = 5;
    CHECK(chaotic_de_optimize(sphere, b, cfg).best != one.best);
  }
  SUBCASE("flat objective") {
    cfg.max_iter = 10;
    const auto r = chaotic_de_optimize([](const Genome&) { return 3.0; }, b, cfg);
    for (double v : r.trace) CHECK(v == 3.0);
  }
  SUBCASE("plateau stop") {
    cfg.plateau_window = 5;
    const auto r = chaotic_de_optimize([](const Genome&) { return 3.0; }, b, cfg);
    CHECK(r.trace.size() < cfg.max_iter + 1);
  }
  SUBCASE("repair runs on every trial") {
    std::size_t calls = 0;
    const auto r = chaotic_de_optimize(
        sphere, b, cfg, [&](Genome& g) {
          ++calls;
          g[0] = -5.0;
        });
    CHECK(calls >= cfg.population * cfg.max_iter);
    CHECK(r.best[0] == -5.0);
  }
  SUBCASE("invalid settings") {
    cfg.cr = 1.5;
    CHECK_THROWS_AS(validate(cfg), DomainError);
    cfg.cr = 0.9;
    cfg.population = 3;
    CHECK_THROWS_AS(validate(cfg), DomainError);
  }
}

TEST_CASE("price repair keeps genomes feasible") {
  const auto sys = io::load_system(std::string(MCIES_DATA_DIR) + "/system.json");
  const auto b = price_bounds(sys.tariff);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    Genome g(kGenes);
    for (std::size_t i = 0; i < kGenes; ++i) g[i] = b.lo[i] + (b.hi[i] - b.lo[i]) * u(rng);
    const auto before = g;
    repair_prices(g, b, sys.tariff);
    CHECK(market::price_check(to_prices(g), sys.tariff).empty());
    for (std::size_t i = 0; i < kGenes; ++i) CHECK(g[i] <= before[i] + 1e-15);
    CHECK(to_genome(to_prices(g)) == g);
  }
  Genome top = b.hi;
  repair_prices(top, b, sys.tariff);
  double mu = 0.0;
  for (std::size_t t = 0; t < kHours; ++t) mu += top[t];
  CHECK(mu == doctest::Approx(kHours * sys.tariff.mu_av).epsilon(1e-12));
}

TEST_CASE("polish never loses fitness") {
  const auto g = bundled_game();
  const auto ctx = dispatch::make_context(g.system, g.dispatch);
  market::PriceSchedule start{g.system.tariff.p_sell, filled(g.system.tariff.gamma_min)};
  for (std::size_t t = 0; t < kHours; ++t) start.mu_sell[t] += 0.04;
  PolishOptions opt;
  opt.min_step = 0.0125;
  REQUIRE(market::price_check(start, g.system.tariff).empty());
  const auto out = polish_prices(g, ctx, start, opt);
  CHECK(market::price_check(out, g.system.tariff).empty());
  CHECK(price_fitness(g, ctx, out) >= price_fitness(g, ctx, start));
  CHECK(polish_prices(g, ctx, start, opt).mu_sell == out.mu_sell);
}
