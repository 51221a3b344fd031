#include "mcies/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace mcies::io {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  if (v == 0.0) return "0";  // folds -0
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string money(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  std::string s = buf;
  if (s == "-0.00") s = "0.00";
  return s;
}

namespace {

const json& at(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw InputError(where + ": missing key '" + key + "'");
  return j.at(key);
}

double number(const json& j, const char* key, const std::string& where) {
  const auto& v = at(j, key, where);
  if (!v.is_number()) throw InputError(where + "." + key + ": expected a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, double fallback, const std::string& where) {
  return j.is_object() && j.contains(key) ? number(j, key, where) : fallback;
}

std::string text_or(const json& j, const char* key, const std::string& fallback, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw InputError(where + "." + key + ": expected a string");
  return j.at(key).get<std::string>();
}

HourlySeries series(const json& j, const char* key, const std::string& where) {
  const auto& v = at(j, key, where);
  if (!v.is_array() || v.size() != kHours) {
    throw InputError(where + "." + key + ": expected an array of " + std::to_string(kHours) + " numbers");
  }
  HourlySeries out{};
  for (std::size_t t = 0; t < kHours; ++t) {
    if (!v[t].is_number()) throw InputError(where + "." + key + "[" + std::to_string(t) + "]: expected a number");
    out[t] = v[t].get<double>();
  }
  return out;
}

json arr(const HourlySeries& s) { return json(std::vector<double>(s.begin(), s.end())); }

devices::StorageDevice storage(const json& j, devices::StorageKind kind, const std::string& w) {
  devices::StorageDevice s;
  s.kind = kind;
  s.c_min = number(j, "c_min", w);
  s.c_max = number(j, "c_max", w);
  s.c_init = number_or(j, "c_init", s.c_min, w);
  s.p_ch_max = number(j, "p_ch_max", w);
  s.p_dc_max = number(j, "p_dc_max", w);
  s.eta_ch = number_or(j, "eta_ch", s.eta_ch, w);
  s.eta_dc = number_or(j, "eta_dc", s.eta_dc, w);
  s.k_loss = number_or(j, "k_loss", s.k_loss, w);
  return s;
}

}  // namespace

model::SystemModel system_from_json(const json& j) {
  model::SystemModel sys;
  const std::string w = "system";
  sys.name = text_or(j, "name", "", w);
  sys.synthetic = j.value("synthetic", false);
  sys.dt_hours = number_or(j, "dt_hours", 1.0, w);
  sys.supply_temperature = number_or(j, "supply_temperature", 80.0, w);
  const std::string rule = text_or(j, "storage_end_rule", "cyclic", w);
  if (rule == "cyclic") sys.storage_end_rule = devices::EndRule::Cyclic;
  else if (rule == "pin_min") sys.storage_end_rule = devices::EndRule::PinMin;
  else throw InputError(w + ".storage_end_rule: expected 'cyclic' or 'pin_min'");
  sys.t_out = series(j, "t_out", w);

  const auto& tj = at(j, "tariff", w);
  sys.tariff.p_buy = series(tj, "p_buy", "tariff");
  sys.tariff.p_sell = series(tj, "p_sell", "tariff");
  sys.tariff.gamma_min = number(tj, "gamma_min", "tariff");
  sys.tariff.gamma_max = number(tj, "gamma_max", "tariff");
  sys.tariff.mu_av = number(tj, "mu_av", "tariff");
  sys.tariff.gamma_av = number(tj, "gamma_av", "tariff");

  const auto& cj = at(j, "costs", w);
  const auto& mt = at(cj, "mt", "costs");
  sys.costs.mt = {number(mt, "a", "costs.mt"), number(mt, "b", "costs.mt"), number(mt, "c_start", "costs.mt")};
  const auto& chp = at(cj, "chp", "costs");
  sys.costs.chp = {number(chp, "a", "costs.chp"), number(chp, "b", "costs.chp"), number(chp, "c", "costs.chp"),
                   number(chp, "d", "costs.chp"), number(chp, "e", "costs.chp"), number(chp, "f", "costs.chp")};
  if (cj.contains("om")) {
    const auto& om = cj.at("om");
    auto& o = sys.costs.om;
    o.wt = number_or(om, "wt", 0.0, "costs.om");
    o.pv = number_or(om, "pv", 0.0, "costs.om");
    o.chp = number_or(om, "chp", 0.0, "costs.om");
    o.mt = number_or(om, "mt", 0.0, "costs.om");
    o.eb = number_or(om, "eb", 0.0, "costs.om");
    o.ees = number_or(om, "ees", 0.0, "costs.om");
    o.hst = number_or(om, "hst", 0.0, "costs.om");
  }

  const auto& tie = at(j, "tie_line", w);
  sys.tie = {number(tie, "p_min", "tie_line"), number(tie, "p_max", "tie_line"), number(tie, "h_min", "tie_line"),
             number(tie, "h_max", "tie_line")};

  for (const auto& pj : at(j, "pipes", w)) {
    devices::HeatPipe p;
    const std::string pw = "pipes." + text_or(pj, "name", "?", "pipes");
    p.name = text_or(pj, "name", "", pw);
    p.length = number(pj, "length_m", pw);
    p.diameter = number(pj, "diameter_m", pw);
    p.flow = number(pj, "flow_kg_s", pw);
    p.lambda = number_or(pj, "lambda", p.lambda, pw);
    p.c_pipe = number_or(pj, "c_pipe", p.c_pipe, pw);
    p.rho_w = number_or(pj, "rho_w", p.rho_w, pw);
    sys.pipes.push_back(p);
  }

  for (const auto& cjs : at(j, "cies", w)) {
    model::CiesConfig c;
    c.name = text_or(cjs, "name", "CIES" + std::to_string(sys.cies.size() + 1), "cies");
    const std::string cw = "cies." + c.name;
    c.wt_capacity = number_or(cjs, "wt_capacity", 0.0, cw);
    c.pv_capacity = number_or(cjs, "pv_capacity", 0.0, cw);
    if (cjs.contains("chp") && !cjs["chp"].is_null()) {
      const auto& u = cjs["chp"];
      devices::CHPUnit d;
      d.c_v = number_or(u, "c_v", d.c_v, cw + ".chp");
      d.p_min = number_or(u, "p_min", d.p_min, cw + ".chp");
      d.p_max = number(u, "p_max", cw + ".chp");
      d.h_max = number(u, "h_max", cw + ".chp");
      d.ramp_down = number(u, "ramp_down", cw + ".chp");
      d.ramp_up = number(u, "ramp_up", cw + ".chp");
      c.chp = d;
    }
    if (cjs.contains("mt") && !cjs["mt"].is_null()) {
      const auto& u = cjs["mt"];
      devices::MicroTurbine d;
      d.p_min = number(u, "p_min", cw + ".mt");
      d.p_max = number(u, "p_max", cw + ".mt");
      d.ramp_down = number(u, "ramp_down", cw + ".mt");
      d.ramp_up = number(u, "ramp_up", cw + ".mt");
      c.mt = d;
      c.mt_initially_on = u.value("initially_on", false);
    }
    if (cjs.contains("eb") && !cjs["eb"].is_null()) {
      c.eb = devices::ElectricBoiler{number(cjs["eb"], "eta", cw + ".eb"), number(cjs["eb"], "p_max", cw + ".eb")};
    }
    if (cjs.contains("ees") && !cjs["ees"].is_null()) c.ees = storage(cjs["ees"], devices::StorageKind::EES, cw + ".ees");
    if (cjs.contains("hst") && !cjs["hst"].is_null()) c.hst = storage(cjs["hst"], devices::StorageKind::HST, cw + ".hst");
    if (cjs.contains("grid")) {
      c.grid = {number(cjs["grid"], "p_min", cw + ".grid"), number(cjs["grid"], "p_max", cw + ".grid")};
    }
    sys.cies.push_back(std::move(c));
  }

  auto find = [](const auto& items, const std::string& name, const std::string& what) {
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (items[i].name == name) return i;
    }
    throw InputError("unknown " + what + " '" + name + "'");
  };
  for (const auto& bj : at(j, "buildings", w)) {
    model::BuildingConfig b;
    b.name = text_or(bj, "name", "User" + std::to_string(sys.buildings.size() + 1), "buildings");
    const std::string bw = "buildings." + b.name;
    b.cies = find(sys.cies, text_or(bj, "cies", "", bw), "community");
    b.pipe = find(sys.pipes, text_or(bj, "pipe", "", bw), "pipe");
    const auto& pj = at(bj, "params", bw);
    auto& p = b.params;
    const std::string pw = bw + ".params";
    p.K = number_or(pj, "K", p.K, pw);
    p.F = number_or(pj, "F", p.F, pw);
    p.V = number_or(pj, "V", p.V, pw);
    p.c_air = number_or(pj, "c_air", p.c_air, pw);
    p.rho_air = number_or(pj, "rho_air", p.rho_air, pw);
    p.M = number_or(pj, "M", p.M, pw);
    p.I_cl = number_or(pj, "I_cl", p.I_cl, pw);
    p.T_s = number_or(pj, "T_s", p.T_s, pw);
    p.omega = number(pj, "omega", pw);
    p.vartheta = number(pj, "vartheta", pw);
    p.theta = number(pj, "theta", pw);
    b.flex_share = number_or(bj, "flex_share", 0.1, bw);
    try {
      b.baseline = building::make_baseline(p, series(bj, "p0", bw), series(bj, "t_in", bw), sys.t_out,
                                           b.flex_share, sys.dt_hours);
    } catch (const DomainError& e) {
      throw InputError(bw + ": " + e.what());
    }
    sys.buildings.push_back(std::move(b));
  }
  model::validate(sys);
  return sys;
}

model::SystemModel load_system(const std::string& path) {
  try {
    return system_from_json(read_json(path));
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

json to_json(const scenario::JointScenarioSet& set) {
  json j;
  j["s_wt"] = set.s_wt;
  j["s_pv"] = set.s_pv;
  j["scenarios"] = json::array();
  for (const auto& s : set.scenarios) {
    j["scenarios"].push_back({{"wt_cluster", s.wt_cluster + 1},
                              {"pv_cluster", s.pv_cluster + 1},
                              {"probability", num(s.probability)},
                              {"numerator", s.numerator},
                              {"denominator", s.denominator},
                              {"wt", arr(s.wt)},
                              {"pv", arr(s.pv)}});
  }
  return j;
}

scenario::JointScenarioSet scenarios_from_json(const json& j) {
  scenario::JointScenarioSet set;
  const std::string w = "scenarios";
  set.s_wt = static_cast<std::size_t>(number(j, "s_wt", w));
  set.s_pv = static_cast<std::size_t>(number(j, "s_pv", w));
  for (const auto& sj : at(j, "scenarios", w)) {
    scenario::JointScenario s;
    s.wt_cluster = static_cast<std::size_t>(number(sj, "wt_cluster", w)) - 1;
    s.pv_cluster = static_cast<std::size_t>(number(sj, "pv_cluster", w)) - 1;
    const auto& pj = at(sj, "probability", w);
    if (pj.is_string()) {
      const auto text = pj.get<std::string>();
      const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), s.probability);
      if (ec != std::errc() || end != text.data() + text.size()) throw InputError(w + ".probability: not a number");
    } else if (pj.is_number()) {
      s.probability = pj.get<double>();
    } else {
      throw InputError(w + ".probability: expected a decimal string");
    }
    s.numerator = sj.value("numerator", std::uint64_t{0});
    s.denominator = sj.value("denominator", std::uint64_t{0});
    s.wt = series(sj, "wt", w);
    s.pv = series(sj, "pv", w);
    set.scenarios.push_back(s);
  }
  return set;
}

json to_json(const market::PriceSchedule& p) { return {{"mu_sell", arr(p.mu_sell)}, {"gamma_sell", arr(p.gamma_sell)}}; }

market::PriceSchedule prices_from_json(const json& j) {
  return {series(j, "mu_sell", "prices"), series(j, "gamma_sell", "prices")};
}

namespace {

const char* const kDispatchFields[] = {"wt",      "pv",     "curtailed", "chp_p",     "chp_h",      "mt_p",
                                       "eb_p",    "eb_h",   "ees_ch",    "ees_dc",    "hst_ch",     "hst_dc",
                                       "grid_buy", "grid_sell", "tie_p", "tie_h",     "unserved_e", "dumped_e",
                                       "unserved_h", "dumped_h"};

HourlySeries* field(market::CiesDispatch& d, std::string_view name) {
  HourlySeries* all[] = {&d.wt,     &d.pv,     &d.curtailed, &d.chp_p,    &d.chp_h,     &d.mt_p,     &d.eb_p,
                         &d.eb_h,   &d.ees_ch, &d.ees_dc,    &d.hst_ch,   &d.hst_dc,    &d.grid_buy, &d.grid_sell,
                         &d.tie_p,  &d.tie_h,  &d.unserved_e, &d.dumped_e, &d.unserved_h, &d.dumped_h};
  for (std::size_t i = 0; i < std::size(all); ++i) {
    if (name == kDispatchFields[i]) return all[i];
  }
  return nullptr;
}

}  // namespace

json to_json(const market::ScenarioDispatch& sd) {
  json out = json::array();
  for (auto d : sd.cies) {
    json c;
    for (const char* name : kDispatchFields) c[name] = arr(*field(d, name));
    c["mt_on"] = std::vector<int>(d.mt_on.begin(), d.mt_on.end());
    c["has_chp"] = d.has_chp;
    c["has_mt"] = d.has_mt;
    c["mt_initially_on"] = d.mt_initially_on;
    out.push_back(std::move(c));
  }
  return out;
}

market::ScenarioDispatch dispatch_from_json(const json& j) {
  market::ScenarioDispatch sd;
  if (!j.is_array()) throw InputError("dispatch: expected an array of communities");
  for (const auto& c : j) {
    market::CiesDispatch d;
    for (const char* name : kDispatchFields) *field(d, name) = series(c, name, "dispatch");
    const auto on = series(c, "mt_on", "dispatch");
    for (std::size_t t = 0; t < kHours; ++t) d.mt_on[t] = static_cast<int>(on[t]);
    d.has_chp = c.value("has_chp", false);
    d.has_mt = c.value("has_mt", false);
    d.mt_initially_on = c.value("mt_initially_on", false);
    sd.cies.push_back(d);
  }
  return sd;
}

json to_json(const market::ProfitLedger& l) {
  return {{"sales_electric", arr(l.sales_electric)},
          {"sales_heat", arr(l.sales_heat)},
          {"grid", arr(l.grid)},
          {"operating", arr(l.operating)},
          {"profit", l.profit()}};
}

json to_json(const Violations& vs) {
  json out = json::array();
  for (const auto& v : vs) {
    out.push_back({{"constraint", v.constraint}, {"hour", v.hour}, {"amount", v.amount}, {"detail", v.detail}});
  }
  return out;
}

json to_json(const game::EquilibriumReport& r) {
  return {{"pass", r.pass()},
          {"follower_pass", r.follower_pass},
          {"follower_improvement", r.follower_improvement},
          {"eps_follower", r.eps_follower},
          {"leader_pass", r.leader_pass},
          {"eps_leader", r.eps_leader},
          {"probes", r.probes},
          {"probe_seed", r.seed},
          {"worst_probe",
           {{"improvement", r.worst_probe.improvement},
            {"fitness", r.worst_probe.fitness},
            {"prices", to_json(r.worst_probe.prices)}}}};
}

json to_json(const game::EquilibriumSolution& s, const model::SystemModel& sys) {
  json j;
  j["prices"] = to_json(s.prices);
  j["profit"] = s.profit;
  j["penalty"] = s.penalty;
  j["fitness"] = s.fitness;
  j["evaluations"] = s.evaluations;
  j["ledger"] = to_json(s.ledger);
  j["users"] = json::array();
  for (std::size_t i = 0; i < s.responses.size(); ++i) {
    j["users"].push_back({{"name", i < sys.buildings.size() ? sys.buildings[i].name : std::to_string(i + 1)},
                          {"cost", s.user_costs.at(i)},
                          {"tsl", arr(s.responses[i].tsl)},
                          {"il", arr(s.responses[i].il)},
                          {"ch", arr(s.responses[i].ch)},
                          {"p", arr(s.loads.at(i).p)},
                          {"h", arr(s.loads.at(i).h)}});
  }
  j["dispatches"] = json::array();
  for (const auto& d : s.dispatches) j["dispatches"].push_back(to_json(d));
  j["shortfalls"] = to_json(s.shortfalls);
  j["trace"] = s.trace;
  return j;
}

game::EquilibriumSolution solution_from_json(const json& j) {
  game::EquilibriumSolution s;
  const std::string w = "solution";
  s.prices = prices_from_json(at(j, "prices", w));
  s.profit = number(j, "profit", w);
  s.penalty = number_or(j, "penalty", 0.0, w);
  s.fitness = number_or(j, "fitness", s.profit - s.penalty, w);
  for (const auto& u : at(j, "users", w)) {
    building::DemandResponse dr{series(u, "tsl", w), series(u, "il", w), series(u, "ch", w)};
    s.responses.push_back(dr);
    s.loads.push_back({series(u, "p", w), series(u, "h", w)});
    s.user_costs.push_back(number_or(u, "cost", 0.0, w));
  }
  for (const auto& d : at(j, "dispatches", w)) s.dispatches.push_back(dispatch_from_json(d));
  if (j.contains("trace")) s.trace = j["trace"].get<std::vector<double>>();
  return s;
}

}  // namespace mcies::io
