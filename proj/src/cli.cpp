#include "mcies/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mcies/io.hpp"

namespace mcies::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal().string();
}

template <class T>
T get(const json& j, const char* key, T fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(where + "." + key + ": wrong type");
  }
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      throw InputError(where + ": unknown key '" + k + "'");
    }
  }
}

std::string csv_header(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + ",seed=" + std::to_string(seed) + "\n";
}

json stamp(json j, const std::string& hash, std::uint64_t seed) {
  j["config_hash"] = hash;
  j["seed"] = seed;
  return j;
}

std::string file_token(const std::string& name) {
  std::string out;
  for (char c : name) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    out += keep ? c : '_';
  }
  return out.empty() ? "building" : out;
}

void write_json(const fs::path& path, const json& j) { io::write_text(path.string(), j.dump(2) + "\n"); }

model::SystemModel mode_system(const model::SystemModel& sys, int mode) {
  switch (mode) {
    case 1: return sys;
    case 2: return model::without_flexibility(sys);
    case 3: return model::with_tie_cap(sys, 0.0);
    default: throw InputError("mode must be 1, 2 or 3");
  }
}

struct ModeRun {
  game::StackelbergGame game;
  game::EquilibriumSolution solution;
};

// Mode 2 keeps the mode-1 prices and only re-evaluates the responses and the
// dispatch without flexibility.
ModeRun solve_mode(const game::StackelbergGame& base, const solver::DEConfig& de, int mode,
                   const game::EquilibriumSolution* mode1 = nullptr) {
  ModeRun run{base, {}};
  run.game.system = mode_system(base.system, mode);
  run.game.dispatch.penalty_weight = de.penalty_weight;
  if (mode != 2) {
    run.solution = solver::stackelberg_iterate(run.game, de);
    return run;
  }
  game::EquilibriumSolution first;
  if (!mode1) first = solver::stackelberg_iterate(base, de);
  const auto& leader = mode1 ? *mode1 : first;
  const auto ctx = dispatch::make_context(run.game.system, run.game.dispatch);
  run.solution = solver::evaluate_prices(run.game, ctx, leader.prices);
  run.solution.trace = leader.trace;
  run.solution.user_trace = leader.user_trace;
  run.solution.evaluations = leader.evaluations;
  return run;
}

void print_violations(const Violations& vs, std::size_t limit = 10) {
  for (std::size_t i = 0; i < vs.size() && i < limit; ++i) {
    const auto& v = vs[i];
    std::cerr << "  " << v.constraint;
    if (v.hour) std::cerr << " hour " << v.hour;
    std::cerr << ": " << v.detail << " (" << io::num(v.amount) << ")\n";
  }
  if (vs.size() > limit) std::cerr << "  ... " << vs.size() - limit << " more\n";
}

}  // namespace

RunConfig load_run_config(const std::string& path) {
  const json j = io::read_json(path);
  only_keys(j, {"system", "samples", "scenarios", "seed", "output_dir", "de", "dispatch", "check", "sweep"}, "run");
  RunConfig c;
  c.config_path = path;
  const fs::path base = fs::path(path).parent_path();
  if (!j.contains("system") || !j["system"].is_string()) throw InputError("run: 'system' path is required");
  c.system_path = resolve(base, j["system"].get<std::string>());
  if (j.contains("samples")) {
    const auto& s = j["samples"];
    only_keys(s, {"wt", "pv", "k_min", "k_max", "restarts"}, "samples");
    if (s.contains("wt")) c.wt_samples = resolve(base, get<std::string>(s, "wt", "", "samples"));
    if (s.contains("pv")) c.pv_samples = resolve(base, get<std::string>(s, "pv", "", "samples"));
    c.k_min = get<std::size_t>(s, "k_min", c.k_min, "samples");
    c.k_max = get<std::size_t>(s, "k_max", c.k_max, "samples");
    c.kmeans_restarts = get<std::size_t>(s, "restarts", c.kmeans_restarts, "samples");
  }
  if (j.contains("scenarios")) c.scenarios_path = resolve(base, get<std::string>(j, "scenarios", "", "run"));
  c.seed = get<std::uint64_t>(j, "seed", c.seed, "run");
  c.output_dir = resolve(base, get<std::string>(j, "output_dir", c.output_dir, "run"));
  if (j.contains("de")) {
    const auto& d = j["de"];
    only_keys(d, {"population", "f_min", "f_max", "cr", "chaos_mu", "chaos_z0", "max_iter", "penalty_weight",
                  "plateau_window", "threads", "polish"},
              "de");
    c.de.population = get<std::size_t>(d, "population", c.de.population, "de");
    c.de.f_min = get<double>(d, "f_min", c.de.f_min, "de");
    c.de.f_max = get<double>(d, "f_max", c.de.f_max, "de");
    c.de.cr = get<double>(d, "cr", c.de.cr, "de");
    c.de.chaos_mu = get<double>(d, "chaos_mu", c.de.chaos_mu, "de");
    c.de.chaos_z0 = get<double>(d, "chaos_z0", c.de.chaos_z0, "de");
    c.de.max_iter = get<std::size_t>(d, "max_iter", c.de.max_iter, "de");
    c.de.penalty_weight = get<double>(d, "penalty_weight", c.de.penalty_weight, "de");
    c.de.plateau_window = get<std::size_t>(d, "plateau_window", c.de.plateau_window, "de");
    c.de.threads = get<unsigned>(d, "threads", c.de.threads, "de");
    c.de.polish = get<bool>(d, "polish", c.de.polish, "de");
  }
  c.de.seed = c.seed;
  try {
    solver::validate(c.de);
  } catch (const DomainError& e) {
    throw InputError(std::string("de: ") + e.what());
  }
  if (j.contains("dispatch")) {
    only_keys(j["dispatch"], {"tie_quantum"}, "dispatch");
    c.dispatch.tie_quantum = get<double>(j["dispatch"], "tie_quantum", c.dispatch.tie_quantum, "dispatch");
  }
  c.dispatch.penalty_weight = c.de.penalty_weight;
  if (j.contains("check")) {
    const auto& k = j["check"];
    only_keys(k, {"eps_follower", "eps_leader", "probes"}, "check");
    c.eps_follower = get<double>(k, "eps_follower", c.eps_follower, "check");
    c.eps_leader = get<double>(k, "eps_leader", c.eps_leader, "check");
    c.probes = get<std::size_t>(k, "probes", c.probes, "check");
  }
  if (j.contains("sweep")) {
    only_keys(j["sweep"], {"caps"}, "sweep");
    c.caps = get<std::vector<double>>(j["sweep"], "caps", c.caps, "sweep");
  }

  std::uint64_t h = io::fnv1a(j.dump());
  h = io::fnv1a(slurp(c.system_path), h);
  for (const auto* p : {&c.wt_samples, &c.pv_samples, &c.scenarios_path}) {
    if (!p->empty()) h = io::fnv1a(slurp(*p), h);
  }
  c.hash = io::hex(h);
  return c;
}

std::string output_dir(const RunConfig& config) {
  std::string dir = config.output_dir;
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) dir = env;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

game::StackelbergGame build_game(const RunConfig& config) {
  game::StackelbergGame g;
  g.system = io::load_system(config.system_path);
  g.dispatch = config.dispatch;
  if (!config.scenarios_path.empty()) {
    g.scenarios = io::scenarios_from_json(io::read_json(config.scenarios_path));
  } else if (!config.wt_samples.empty() && !config.pv_samples.empty()) {
    const scenario::KMeansOptions opts{300, config.kmeans_restarts};
    const auto wt = scenario::read_samples_csv(config.wt_samples);
    const auto pv = scenario::read_samples_csv(config.pv_samples);
    const auto sw = scenario::select_cluster_count(wt, config.k_min, config.k_max, config.seed, opts);
    const auto sp = scenario::select_cluster_count(pv, config.k_min, config.k_max, config.seed, opts);
    g.scenarios = scenario::joint_scenarios(sw.best, sp.best);
  } else {
    throw InputError("run: give either 'scenarios' or both 'samples.wt' and 'samples.pv'");
  }
  game::validate(g);
  return g;
}

int cmd_cluster(const RunConfig& config, const ClusterOptions& options) {
  const std::string wt_path = options.wt_samples.value_or(config.wt_samples);
  const std::string pv_path = options.pv_samples.value_or(config.pv_samples);
  const std::size_t k_min = options.k_min.value_or(config.k_min);
  const std::size_t k_max = options.k_max.value_or(config.k_max);
  const std::uint64_t seed = options.seed.value_or(config.seed);
  if (wt_path.empty() && pv_path.empty()) throw InputError("cluster: no sample file given");
  if (k_min < 1 || k_max < k_min) throw InputError("cluster: invalid k range");

  std::uint64_t h = io::fnv1a(config.hash);
  h = io::fnv1a(wt_path + "|" + pv_path + "|" + std::to_string(k_min) + "|" + std::to_string(k_max), h);
  for (const auto& p : {wt_path, pv_path}) {
    if (!p.empty()) h = io::fnv1a(slurp(p), h);
  }
  const std::string hash = io::hex(h);

  const fs::path dir = output_dir(config);
  std::string db = csv_header(hash, seed) + "source,k,db_index\n";
  std::string cent = csv_header(hash, seed) + "source,cluster,count,probability";
  for (std::size_t t = 1; t <= kHours; ++t) cent += ",h" + std::to_string(t);
  cent += "\n";
  json probs = json::object();
  std::vector<scenario::ClusterResult> results;

  const scenario::KMeansOptions opts{300, config.kmeans_restarts};
  for (const auto& path : {wt_path, pv_path}) {
    if (path.empty()) continue;
    const auto samples = scenario::read_samples_csv(path);
    const auto sweep = scenario::select_cluster_count(samples, k_min, k_max, seed, opts);
    const auto& best = sweep.best;
    const std::string src = scenario::to_string(best.source);
    for (std::size_t i = 0; i < sweep.ks.size(); ++i) {
      db += src + "," + std::to_string(sweep.ks[i]) + "," + io::num(sweep.db_values[i]) + "\n";
    }
    for (std::size_t k = 0; k < best.k(); ++k) {
      cent += src + "," + std::to_string(k + 1) + "," + std::to_string(best.counts[k]) + "," +
              io::num(best.probabilities[k]);
      for (double v : best.centroids[k]) cent += "," + io::num(v);
      cent += "\n";
    }
    std::vector<std::string> decimals;
    for (double p : best.probabilities) decimals.push_back(io::num(p));
    probs[src] = {{"k", best.k()},
                  {"samples", best.total},
                  {"counts", best.counts},
                  {"probabilities", decimals},
                  {"db_index", sweep.db_values[sweep.k_best - sweep.ks.front()]}};
    std::cout << src << ": " << samples.size() << " samples, k = " << best.k() << "\n";
    results.push_back(best);
  }
  io::write_text((dir / "db.csv").string(), db);
  io::write_text((dir / "centroids.csv").string(), cent);
  write_json(dir / "probabilities.json", stamp(probs, hash, seed));
  if (results.size() == 2) {
    const auto& wt = results[0].source == scenario::Source::WT ? results[0] : results[1];
    const auto& pv = results[0].source == scenario::Source::WT ? results[1] : results[0];
    if (wt.source == pv.source) throw InputError("cluster: the two sample files carry the same source");
    const auto joint = scenario::joint_scenarios(wt, pv);
    write_json(dir / "scenarios.json", stamp(io::to_json(joint), hash, seed));
    std::cout << "joint scenarios: " << joint.scenarios.size() << "\n";
  }
  return kOk;
}

namespace {

int write_schedule(const RunConfig& config, const ModeRun& run, int mode) {
  const auto& sys = run.game.system;
  const auto& sol = run.solution;
  const fs::path dir = output_dir(config);
  const std::string head = csv_header(config.hash, config.seed);

  json sj = io::to_json(sol, sys);
  sj["mode"] = mode;
  write_json(dir / "solution.json", stamp(sj, config.hash, config.seed));

  std::string prices = head + "hour,mu_sell,gamma_sell,p_buy,p_sell\n";
  for (std::size_t t = 0; t < kHours; ++t) {
    prices += std::to_string(t + 1) + "," + io::num(sol.prices.mu_sell[t]) + "," + io::num(sol.prices.gamma_sell[t]) +
              "," + io::num(sys.tariff.p_buy[t]) + "," + io::num(sys.tariff.p_sell[t]) + "\n";
  }
  io::write_text((dir / "prices.csv").string(), prices);

  for (std::size_t i = 0; i < sys.buildings.size(); ++i) {
    const auto& b = sys.buildings[i];
    const auto& r = sol.responses[i];
    std::string s = head + "hour,p_before,p_after,h_before,h_after,tsl,il,ch\n";
    for (std::size_t t = 0; t < kHours; ++t) {
      s += std::to_string(t + 1) + "," + io::num(b.baseline.p0[t]) + "," + io::num(sol.loads[i].p[t]) + "," +
           io::num(b.baseline.h0[t]) + "," + io::num(sol.loads[i].h[t]) + "," + io::num(r.tsl[t]) + "," +
           io::num(r.il[t]) + "," + io::num(r.ch[t]) + "\n";
    }
    io::write_text((dir / ("loads_" + file_token(b.name) + ".csv")).string(), s);
  }

  std::string trace = head + "iteration,best_fitness";
  for (const auto& b : sys.buildings) trace += "," + b.name + "_cost";
  trace += "\n";
  for (std::size_t g = 0; g < sol.trace.size(); ++g) {
    trace += std::to_string(g) + "," + io::num(sol.trace[g]);
    for (std::size_t i = 0; i < sys.buildings.size(); ++i) {
      trace += ",";
      if (g < sol.user_trace.size() && i < sol.user_trace[g].size()) trace += io::num(sol.user_trace[g][i]);
    }
    trace += "\n";
  }
  io::write_text((dir / "trace.csv").string(), trace);

  const auto& l = sol.ledger;
  std::string ledger = head + "hour,sales_electric,sales_heat,grid,operating,profit\n";
  double tot[4] = {0, 0, 0, 0};
  for (std::size_t t = 0; t < kHours; ++t) {
    const double row[4] = {l.sales_electric[t], l.sales_heat[t], l.grid[t], l.operating[t]};
    ledger += std::to_string(t + 1);
    for (int k = 0; k < 4; ++k) {
      ledger += "," + io::money(row[k]);
      tot[k] += row[k];
    }
    ledger += "," + io::money(row[0] + row[1] + row[2] - row[3]) + "\n";
  }
  ledger += "total," + io::money(tot[0]) + "," + io::money(tot[1]) + "," + io::money(tot[2]) + "," +
            io::money(tot[3]) + "," + io::money(l.profit()) + "\n";
  io::write_text((dir / "ledger.csv").string(), ledger);

  const Violations violations = game::check_solution(run.game, sol);
  json report;
  report["mode"] = mode;
  report["violations"] = io::to_json(violations);
  report["shortfalls"] = io::to_json(sol.shortfalls);
  int code = kOk;
  if (violations.empty()) {
    const auto rep = game::equilibrium_check(run.game, sol, config.eps_follower, config.eps_leader, config.probes,
                                             config.seed);
    report["equilibrium"] = io::to_json(rep);
    report["pass"] = rep.pass();
    std::cout << "mode " << mode << ": profit " << io::money(sol.profit) << ", penalty " << io::money(sol.penalty)
              << ", equilibrium " << (rep.pass() ? "pass" : "fail") << " (worst leader gain "
              << io::num(rep.worst_probe.improvement) << ")\n";
  } else {
    report["pass"] = false;
    code = kViolations;
    std::cerr << "mode " << mode << ": " << violations.size() << " constraint violations\n";
    print_violations(violations);
  }
  write_json(dir / "equilibrium_check.json", stamp(report, config.hash, config.seed));
  return code;
}

}  // namespace

int cmd_schedule(const RunConfig& config, int mode) {
  const auto game = build_game(config);
  const auto run = solve_mode(game, config.de, mode);
  return write_schedule(config, run, mode);
}

int cmd_modes(const RunConfig& config) {
  const auto game = build_game(config);
  const auto m1 = solve_mode(game, config.de, 1);
  const auto m2 = solve_mode(game, config.de, 2, &m1.solution);
  const auto m3 = solve_mode(game, config.de, 3);
  const ModeRun* runs[] = {&m1, &m2, &m3};

  std::string csv = csv_header(config.hash, config.seed) + "mode,profit";
  for (const auto& b : game.system.buildings) csv += "," + b.name + "_cost";
  csv += "\n";
  json modes = json::array();
  int code = kOk;
  for (int m = 0; m < 3; ++m) {
    const auto& s = runs[m]->solution;
    csv += std::to_string(m + 1) + "," + io::money(s.profit);
    json costs = json::object();
    for (std::size_t i = 0; i < s.user_costs.size(); ++i) {
      csv += "," + io::money(s.user_costs[i]);
      costs[game.system.buildings[i].name] = s.user_costs[i];
    }
    csv += "\n";
    const auto violations = game::check_solution(runs[m]->game, s);
    if (!violations.empty()) {
      code = kViolations;
      std::cerr << "mode " << m + 1 << ": " << violations.size() << " constraint violations\n";
      print_violations(violations);
    }
    modes.push_back({{"mode", m + 1},
                     {"profit", s.profit},
                     {"penalty", s.penalty},
                     {"fitness", s.fitness},
                     {"user_costs", costs},
                     {"violations", violations.size()}});
    std::cout << "mode " << m + 1 << ": profit " << io::money(s.profit) << "\n";
  }
  const fs::path dir = output_dir(config);
  io::write_text((dir / "modes.csv").string(), csv);
  write_json(dir / "modes.json", stamp(json{{"modes", modes}}, config.hash, config.seed));
  return code;
}

int cmd_sweep(const RunConfig& config, const std::optional<std::vector<double>>& caps) {
  const auto& list = caps ? *caps : config.caps;
  if (list.empty()) throw InputError("sweep: empty cap list");
  for (double c : list) {
    if (!(c >= 0.0)) throw InputError("sweep: caps must be non-negative");
  }
  const auto game = build_game(config);
  std::string csv = csv_header(config.hash, config.seed) + "cap_kw,profit,fitness\n";
  int code = kOk;
  for (double cap : list) {
    ModeRun run{game, {}};
    run.game.system = model::with_tie_cap(game.system, cap);
    run.game.dispatch.penalty_weight = config.de.penalty_weight;
    run.solution = solver::stackelberg_iterate(run.game, config.de);
    const auto violations = game::check_solution(run.game, run.solution);
    if (!violations.empty()) {
      code = kViolations;
      std::cerr << "cap " << io::num(cap) << ": " << violations.size() << " constraint violations\n";
      print_violations(violations);
    }
    csv += io::num(cap) + "," + io::money(run.solution.profit) + "," + io::money(run.solution.fitness) + "\n";
    std::cout << "cap " << io::num(cap) << " kW: profit " << io::money(run.solution.profit) << "\n";
  }
  io::write_text((fs::path(output_dir(config)) / "sweep.csv").string(), csv);
  return code;
}

int cmd_check(const RunConfig& config, const std::string& solution_path) {
  const json j = io::read_json(solution_path);
  const int mode = j.value("mode", 1);
  auto game = build_game(config);
  game.system = mode_system(game.system, mode);
  game::EquilibriumSolution sol;
  try {
    sol = io::solution_from_json(j);
  } catch (const json::exception& e) {
    throw InputError(solution_path + ": " + e.what());
  }
  const auto violations = game::check_solution(game, sol);
  if (!violations.empty()) {
    std::cerr << solution_path << ": " << violations.size() << " constraint violations\n";
    print_violations(violations);
    return kViolations;
  }
  std::cout << solution_path << ": all constraints hold\n";
  return kOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Stochastic leader-follower scheduling for multi-community energy systems"};
  app.require_subcommand(1);

  std::string config_path, solution_path;
  ClusterOptions cluster;
  std::string wt, pv;
  std::size_t k_min = 0, k_max = 0;
  std::uint64_t seed = 0;
  int mode = 1;
  std::vector<double> caps;

  auto* c = app.add_subcommand("cluster", "Cluster renewable sample paths and build the joint scenario set");
  c->add_option("config", config_path, "Run config JSON")->required();
  auto* o_wt = c->add_option("--wt", wt, "WT sample CSV (overrides the config)");
  auto* o_pv = c->add_option("--pv", pv, "PV sample CSV (overrides the config)");
  auto* o_kmin = c->add_option("--k-min", k_min, "Smallest cluster count")->check(CLI::PositiveNumber);
  auto* o_kmax = c->add_option("--k-max", k_max, "Largest cluster count")->check(CLI::PositiveNumber);
  auto* o_seed = c->add_option("--seed", seed, "Seed (overrides the config)");

  auto* s = app.add_subcommand("schedule", "Solve the pricing game and write the solution files");
  s->add_option("config", config_path, "Run config JSON")->required();
  s->add_option("--mode", mode, "1 full, 2 without flexibility, 3 without tie-lines")->check(CLI::Range(1, 3));

  auto* m = app.add_subcommand("modes", "Compare the three operating modes");
  m->add_option("config", config_path, "Run config JSON")->required();

  auto* w = app.add_subcommand("sweep", "Profit against the tie-line cap");
  w->add_option("config", config_path, "Run config JSON")->required();
  auto* o_caps = w->add_option("--caps", caps, "Comma-separated caps in kW")->delimiter(',');

  auto* k = app.add_subcommand("check", "Re-validate a solution file");
  k->add_option("config", config_path, "Run config JSON")->required();
  k->add_option("solution", solution_path, "solution.json")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    const RunConfig config = load_run_config(config_path);
    if (c->parsed()) {
      if (*o_wt) cluster.wt_samples = wt;
      if (*o_pv) cluster.pv_samples = pv;
      if (*o_kmin) cluster.k_min = k_min;
      if (*o_kmax) cluster.k_max = k_max;
      if (*o_seed) cluster.seed = seed;
      return cmd_cluster(config, cluster);
    }
    if (s->parsed()) return cmd_schedule(config, mode);
    if (m->parsed()) return cmd_modes(config);
    if (w->parsed()) return cmd_sweep(config, *o_caps ? std::optional(caps) : std::nullopt);
    if (k->parsed()) return cmd_check(config, solution_path);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const json::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace mcies::cli
