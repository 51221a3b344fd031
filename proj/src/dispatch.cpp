#include "mcies/dispatch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcies::dispatch {

void SupplyStack::add(const PriceBlock& block) {
  if (n_blocks == kMaxBlocks) throw DomainError("supply stack is full");
  if (block.lo > block.hi) throw DomainError("price block with lo > hi");
  blocks[n_blocks++] = block;
}

Clearing clear(const SupplyStack& st, double demand) {
  Clearing out;
  const std::size_t n = st.n_blocks;
  // a linear unit behaves like one more block
  const bool quad = st.has_unit && st.a > 0.0;
  std::array<PriceBlock, SupplyStack::kMaxBlocks + 1> blk{};
  std::copy_n(st.blocks.begin(), n, blk.begin());
  std::size_t m = n;
  if (st.has_unit && !quad) blk[m++] = {st.b, st.lo, st.hi};

  std::array<std::size_t, SupplyStack::kMaxBlocks + 1> order{};
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.begin() + static_cast<long>(m),
                   [&](std::size_t x, std::size_t y) { return blk[x].price < blk[y].price; });

  std::array<double, SupplyStack::kMaxBlocks + 1> q{};
  double unit = 0.0;
  const double u_lo = quad ? st.lo : 0.0;
  const double u_hi = quad ? st.hi : 0.0;
  auto unit_at = [&](double price) {
    return quad ? std::clamp((price - st.b) / (2.0 * st.a), st.lo, st.hi) : 0.0;
  };

  double s_min = u_lo;
  double s_max = u_hi;
  for (std::size_t i = 0; i < m; ++i) {
    s_min += blk[i].lo;
    s_max += blk[i].hi;
  }

  if (demand <= s_min) {
    unit = u_lo;
    for (std::size_t i = 0; i < m; ++i) q[i] = blk[i].lo;
    out.surplus = s_min - demand;
  } else if (demand >= s_max) {
    unit = u_hi;
    for (std::size_t i = 0; i < m; ++i) q[i] = blk[i].hi;
    out.shortfall = demand - s_max;
  } else {
    bool done = false;
    std::size_t k = 0;
    while (k < m && !done) {
      const double price = blk[order[k]].price;
      std::size_t k_end = k;
      while (k_end < m && blk[order[k_end]].price == price) ++k_end;
      double below_hi = 0.0;
      double at_lo = 0.0;
      double at_hi = 0.0;
      double above_lo = 0.0;
      for (std::size_t r = 0; r < m; ++r) {
        const auto& b = blk[order[r]];
        if (r < k) below_hi += b.hi;
        else if (r < k_end) {
          at_lo += b.lo;
          at_hi += b.hi;
        } else above_lo += b.lo;
      }
      const double u = unit_at(price);
      if (demand < u + below_hi + at_lo + above_lo) {
        // clears strictly below this price on the unit's cost line
        for (std::size_t r = 0; r < m; ++r) q[order[r]] = r < k ? blk[order[r]].hi : blk[order[r]].lo;
        unit = std::clamp(demand - (below_hi + at_lo + above_lo), u_lo, u_hi);
        done = true;
      } else if (demand <= u + below_hi + at_hi + above_lo) {
        for (std::size_t r = 0; r < m; ++r) {
          if (r < k) q[order[r]] = blk[order[r]].hi;
          else q[order[r]] = blk[order[r]].lo;
        }
        unit = u;
        double rest = demand - u - below_hi - at_lo - above_lo;
        for (std::size_t r = k; r < k_end && rest > 0.0; ++r) {
          const auto& b = blk[order[r]];
          const double take = std::min(rest, b.hi - b.lo);
          q[order[r]] += take;
          rest -= take;
        }
        done = true;
      }
      k = k_end;
    }
    if (!done) {
      double fixed = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        q[i] = blk[i].hi;
        fixed += blk[i].hi;
      }
      unit = std::clamp(demand - fixed, u_lo, u_hi);
    }
  }

  double cost = 0.0;
  if (quad) cost += st.a * unit * unit + st.b * unit;
  for (std::size_t i = 0; i < m; ++i) cost += blk[i].price * q[i];
  if (st.has_unit && !quad) {
    out.unit = q[n];
  } else {
    out.unit = unit;
  }
  for (std::size_t i = 0; i < n; ++i) out.block[i] = q[i];
  cost += st.penalty_weight * (out.shortfall * out.shortfall + out.surplus * out.surplus);
  out.cost = cost;
  return out;
}

HourlySeries allocate_exchange(const std::function<double(std::size_t, double)>& cost, double lo, double hi,
                               double quantum) {
  if (!(quantum > 0.0)) throw DomainError("exchange quantum must be positive");
  if (lo > 0.0 || hi < 0.0) throw DomainError("exchange range must contain zero");
  HourlySeries x{};
  const double reach = std::max(hi, -lo);
  if (reach < quantum) return x;

  constexpr double inf = std::numeric_limits<double>::infinity();
  HourlySeries fx{};
  for (std::size_t t = 0; t < kHours; ++t) fx[t] = cost(t, 0.0);

  int top = 0;
  while (quantum * std::ldexp(1.0, top + 1) <= reach) ++top;

  HourlySeries up{}, dn{};
  for (int level = top; level >= 0; --level) {
    const double step = quantum * std::ldexp(1.0, level);
    auto refresh = [&](std::size_t t) {
      up[t] = x[t] + step <= hi ? cost(t, x[t] + step) - fx[t] : inf;
      dn[t] = x[t] - step >= lo ? cost(t, x[t] - step) - fx[t] : inf;
    };
    for (std::size_t t = 0; t < kHours; ++t) refresh(t);
    for (;;) {
      std::size_t a1 = 0, a2 = 1, b1 = 0, b2 = 1;
      if (up[a2] < up[a1]) std::swap(a1, a2);
      if (dn[b2] < dn[b1]) std::swap(b1, b2);
      for (std::size_t t = 2; t < kHours; ++t) {
        if (up[t] < up[a1]) {
          a2 = a1;
          a1 = t;
        } else if (up[t] < up[a2]) {
          a2 = t;
        }
        if (dn[t] < dn[b1]) {
          b2 = b1;
          b1 = t;
        } else if (dn[t] < dn[b2]) {
          b2 = t;
        }
      }
      std::size_t a = a1, b = b1;
      if (a1 == b1) {
        if (up[a1] + dn[b2] <= up[a2] + dn[b1]) b = b2;
        else a = a2;
      }
      const double gain = up[a] + dn[b];
      if (!(gain < -1e-9)) break;
      x[a] += step;
      x[b] -= step;
      fx[a] = cost(a, x[a]);
      fx[b] = cost(b, x[b]);
      refresh(a);
      refresh(b);
    }
  }
  return x;
}

StoragePlan plan_storage(const devices::StorageDevice& s, const HourlySeries& value, double dt_hours,
                         devices::EndRule rule) {
  StoragePlan plan;
  const double start = rule == devices::EndRule::PinMin ? s.c_min : s.c_init;
  const double vmin = *std::min_element(value.begin(), value.end());
  const double vmax = *std::max_element(value.begin(), value.end());
  std::array<bool, kHours> charge{}, discharge{};
  bool any_charge = false;
  for (std::size_t t = 0; t < kHours; ++t) {
    charge[t] = value[t] <= vmin + 1e-12;
    discharge[t] = value[t] >= vmax - 1e-12 && !charge[t];
    any_charge = any_charge || charge[t];
  }
  if (!any_charge || s.p_ch_max <= 0.0) return plan;
  const bool pays = vmax * s.eta_ch * s.eta_dc > vmin && vmax > vmin;

  auto simulate = [&](double q, double r) {
    std::array<double, kHours + 1> level{};
    level[0] = start;
    for (std::size_t t = 0; t < kHours; ++t) {
      const double ch = charge[t] ? q : 0.0;
      const double dc = discharge[t] ? r : 0.0;
      level[t + 1] = (1.0 - s.k_loss) * level[t] + (s.eta_ch * ch - dc / s.eta_dc) * dt_hours;
    }
    return level;
  };
  const double e00 = simulate(0.0, 0.0)[kHours];
  const double dq = simulate(1.0, 0.0)[kHours] - e00;
  const double dr = simulate(0.0, 1.0)[kHours] - e00;
  if (!(dq > 0.0)) return plan;
  const double q0 = (start - e00) / dq;
  const double q1 = -dr / dq;  // q(r) = q0 + q1 r
  const auto l0 = simulate(q0, 0.0);
  const auto l1 = simulate(q0 + q1, 1.0);

  double r_lo = 0.0;
  double r_hi = pays ? s.p_dc_max : 0.0;
  auto restrict = [&](double c0, double c1, double lower, double upper) {
    // lower <= c0 + c1 r <= upper
    if (std::abs(c1) < 1e-15) {
      if (c0 < lower - 1e-9 || c0 > upper + 1e-9) r_hi = -1.0;
      return;
    }
    double a = (lower - c0) / c1;
    double b = (upper - c0) / c1;
    if (a > b) std::swap(a, b);
    r_lo = std::max(r_lo, a);
    r_hi = std::min(r_hi, b);
  };
  restrict(q0, q1, 0.0, s.p_ch_max);
  for (std::size_t t = 1; t <= kHours; ++t) restrict(l0[t], l1[t] - l0[t], s.c_min, s.c_max);
  if (r_lo > r_hi + 1e-12) return plan;
  const double r = pays ? r_hi : r_lo;
  const double q = std::max(0.0, q0 + q1 * r);
  for (std::size_t t = 0; t < kHours; ++t) {
    plan.ch[t] = charge[t] ? std::min(q, s.p_ch_max) : 0.0;
    plan.dc[t] = discharge[t] ? std::clamp(r, 0.0, s.p_dc_max) : 0.0;
  }
  return plan;
}

DispatchContext make_context(const model::SystemModel& system, const DispatchOptions& options) {
  model::validate(system);
  DispatchContext ctx;
  ctx.system = system;
  ctx.links = model::heat_links(system);
  ctx.served_by = model::served_by(system);
  ctx.grid_limits = model::grid_limits(system);
  ctx.options = options;
  for (const auto& c : system.cies) {
    StoragePlan ees, hst;
    if (c.ees) ees = plan_storage(*c.ees, system.tariff.p_buy, system.dt_hours, system.storage_end_rule);
    if (c.hst && c.eb) {
      HourlySeries value{};
      for (std::size_t t = 0; t < kHours; ++t) value[t] = system.tariff.p_buy[t] / c.eb->eta;
      hst = plan_storage(*c.hst, value, system.dt_hours, system.storage_end_rule);
    }
    ctx.ees_plan.push_back(ees);
    ctx.hst_plan.push_back(hst);
  }
  return ctx;
}

namespace {

// Linear surcharge on unbalanced power while allocating the exchange.
constexpr double kGapCost = 1e6;

std::size_t wrap(std::size_t t, int delay) {
  const auto n = static_cast<long>(kHours);
  const long v = (static_cast<long>(t) + delay) % n;
  return static_cast<std::size_t>(v < 0 ? v + n : v);
}

SupplyStack heat_stack(const DispatchContext& ctx, std::size_t j, std::size_t t) {
  const auto& c = ctx.system.cies[j];
  const auto& cost = ctx.system.costs;
  SupplyStack st;
  st.penalty_weight = ctx.options.penalty_weight;
  if (c.chp) {
    st.has_unit = true;
    st.a = cost.chp.d;
    st.b = cost.chp.e;
    st.lo = 0.0;
    st.hi = c.chp->h_max;
  }
  if (c.eb) {
    st.add({(ctx.system.tariff.p_buy[t] + cost.om.eb) / c.eb->eta, 0.0, c.eb->eta * c.eb->p_max});
  }
  return st;
}

struct ElectricBlocks {
  int wt = -1, pv = -1, sell = -1, buy = -1, mt = -1;
};

SupplyStack electric_stack(const DispatchContext& ctx, std::size_t j, std::size_t t, double chp_heat,
                           double wt_avail, double pv_avail, bool mt_on, double chp_lo, double chp_hi,
                           double mt_lo, double mt_hi, ElectricBlocks& idx) {
  const auto& c = ctx.system.cies[j];
  const auto& cost = ctx.system.costs;
  const auto& tariff = ctx.system.tariff;
  SupplyStack st;
  st.penalty_weight = ctx.options.penalty_weight;
  if (c.chp) {
    st.has_unit = true;
    st.a = cost.chp.a;
    st.b = cost.chp.b + cost.om.chp + cost.chp.f * chp_heat;
    st.lo = chp_lo;
    st.hi = chp_hi;
  }
  idx = {};
  if (wt_avail > 0.0) {
    idx.wt = static_cast<int>(st.n_blocks);
    st.add({cost.om.wt, -wt_avail, 0.0});
  }
  if (pv_avail > 0.0) {
    idx.pv = static_cast<int>(st.n_blocks);
    st.add({cost.om.pv, -pv_avail, 0.0});
  }
  idx.sell = static_cast<int>(st.n_blocks);
  st.add({tariff.p_sell[t], std::min(0.0, c.grid.p_min), 0.0});
  idx.buy = static_cast<int>(st.n_blocks);
  st.add({tariff.p_buy[t], 0.0, std::max(0.0, c.grid.p_max)});
  if (c.mt && mt_on) {
    idx.mt = static_cast<int>(st.n_blocks);
    st.add({cost.mt.b + cost.om.mt, mt_lo, mt_hi});
  }
  return st;
}

}  // namespace

HeatStage heat_stage(const DispatchContext& ctx, std::span<const building::EffectiveLoads> loads) {
  const std::size_t nj = ctx.system.cies.size();
  if (loads.size() != ctx.links.size()) throw DomainError("one load profile per building is required");
  HeatStage out;
  out.chp_h.assign(nj, HourlySeries{});
  out.eb_h.assign(nj, HourlySeries{});
  out.unserved.assign(nj, HourlySeries{});
  out.dumped.assign(nj, HourlySeries{});

  std::vector<HourlySeries> need(nj, HourlySeries{});
  for (std::size_t j = 0; j < nj; ++j) {
    for (std::size_t t = 0; t < kHours; ++t) need[j][t] = ctx.hst_plan[j].ch[t] - ctx.hst_plan[j].dc[t];
  }
  for (std::size_t i = 0; i < loads.size(); ++i) {
    const auto& link = ctx.links[i];
    for (std::size_t t = 0; t < kHours; ++t) {
      const std::size_t at = wrap(t, link.delay);
      need[link.cies][t] += loads[i].h[at] + link.loss[at];
    }
  }

  std::vector<std::array<SupplyStack, kHours>> stacks(nj);
  for (std::size_t j = 0; j < nj; ++j) {
    for (std::size_t t = 0; t < kHours; ++t) stacks[j][t] = heat_stack(ctx, j, t);
  }

  if (nj == 2) {
    const auto& tie = ctx.system.tie;
    const double lo = std::max(tie.h_min, -tie.h_max);
    const double hi = std::min(tie.h_max, -tie.h_min);
    out.tie_into_first = allocate_exchange(
        [&](std::size_t t, double x) {
          return clear(stacks[0][t], need[0][t] - x).cost + clear(stacks[1][t], need[1][t] + x).cost;
        },
        lo, hi, ctx.options.tie_quantum);
  }

  for (std::size_t j = 0; j < nj; ++j) {
    const double sign = j == 0 ? -1.0 : 1.0;
    for (std::size_t t = 0; t < kHours; ++t) {
      const double demand = need[j][t] + sign * out.tie_into_first[t];
      const Clearing cl = clear(stacks[j][t], demand);
      out.chp_h[j][t] = cl.unit;
      out.eb_h[j][t] = ctx.system.cies[j].eb ? cl.block[0] : 0.0;
      out.unserved[j][t] = cl.shortfall;
      out.dumped[j][t] = cl.surplus;
    }
  }
  return out;
}

DispatchResult scenario_dispatch(const DispatchContext& ctx, std::span<const building::EffectiveLoads> loads,
                                 const scenario::JointScenario& sc) {
  return scenario_dispatch(ctx, loads, sc, heat_stage(ctx, loads));
}

DispatchResult scenario_dispatch(const DispatchContext& ctx, std::span<const building::EffectiveLoads> loads,
                                 const scenario::JointScenario& sc, const HeatStage& heat) {
  const auto& sys = ctx.system;
  const std::size_t nj = sys.cies.size();
  if (loads.size() != ctx.served_by.size()) throw DomainError("one load profile per building is required");
  DispatchResult res;
  res.dispatch.cies.assign(nj, market::CiesDispatch{});

  // net electric demand before renewables, tie-line and dispatchable units
  std::vector<HourlySeries> demand(nj, HourlySeries{});
  std::vector<HourlySeries> wt(nj, HourlySeries{}), pv(nj, HourlySeries{});
  for (std::size_t j = 0; j < nj; ++j) {
    const auto& c = sys.cies[j];
    auto& d = res.dispatch.cies[j];
    d.has_chp = c.chp.has_value();
    d.has_mt = c.mt.has_value();
    d.mt_initially_on = c.mt_initially_on;
    d.ees_ch = ctx.ees_plan[j].ch;
    d.ees_dc = ctx.ees_plan[j].dc;
    d.hst_ch = ctx.hst_plan[j].ch;
    d.hst_dc = ctx.hst_plan[j].dc;
    d.chp_h = heat.chp_h[j];
    d.eb_h = heat.eb_h[j];
    d.unserved_h = heat.unserved[j];
    d.dumped_h = heat.dumped[j];
    d.tie_h = heat.tie_into_first;
    if (j == 1) {
      for (auto& v : d.tie_h) v = -v;
    }
    for (std::size_t t = 0; t < kHours; ++t) {
      d.eb_p[t] = c.eb ? d.eb_h[t] / c.eb->eta : 0.0;
      wt[j][t] = c.wt_capacity * sc.wt[t];
      pv[j][t] = c.pv_capacity * sc.pv[t];
      demand[j][t] = d.ees_ch[t] - d.ees_dc[t] + d.eb_p[t] - wt[j][t] - pv[j][t];
    }
  }
  for (std::size_t i = 0; i < loads.size(); ++i) {
    for (std::size_t t = 0; t < kHours; ++t) demand[ctx.served_by[i]][t] += loads[i].p[t];
  }

  // MT commitment: on when buying P_min costs more than making it and the
  // community would otherwise import at least that much, or when the grid
  // alone cannot cover the import
  for (std::size_t j = 0; j < nj; ++j) {
    const auto& c = sys.cies[j];
    auto& d = res.dispatch.cies[j];
    if (!c.mt) continue;
    const auto& mc = sys.costs.mt;
    for (std::size_t t = 0; t < kHours; ++t) {
      const double buy = sys.tariff.p_buy[t];
      double own = 0.0;
      if (c.chp) {
        const double b = sys.costs.chp.b + sys.costs.om.chp + sys.costs.chp.f * d.chp_h[t];
        own += sys.costs.chp.a > 0.0 ? std::clamp((buy - b) / (2.0 * sys.costs.chp.a), c.chp->p_min, c.chp->p_max)
                                     : (buy > b ? c.chp->p_max : c.chp->p_min);
      }
      const bool pays = buy * c.mt->p_min > mc.a + (mc.b + sys.costs.om.mt) * c.mt->p_min;
      const double need = demand[j][t] - own;
      d.mt_on[t] = ((pays && need >= c.mt->p_min) || need > c.grid.p_max) ? 1 : 0;
    }
  }

  auto full_stack = [&](std::size_t j, std::size_t t, ElectricBlocks& idx) {
    const auto& c = sys.cies[j];
    const auto& d = res.dispatch.cies[j];
    return electric_stack(ctx, j, t, d.chp_h[t], wt[j][t], pv[j][t], d.mt_on[t] == 1,
                          c.chp ? c.chp->p_min : 0.0, c.chp ? c.chp->p_max : 0.0, c.mt ? c.mt->p_min : 0.0,
                          c.mt ? c.mt->p_max : 0.0, idx);
  };

  HourlySeries tie_p{};
  if (nj == 2) {
    std::array<std::array<SupplyStack, kHours>, 2> stacks;
    for (std::size_t j = 0; j < 2; ++j) {
      for (std::size_t t = 0; t < kHours; ++t) {
        ElectricBlocks idx;
        stacks[j][t] = full_stack(j, t, idx);
      }
    }
    const auto& tie = sys.tie;
    tie_p = allocate_exchange(
        [&](std::size_t t, double x) {
          const Clearing a = clear(stacks[0][t], demand[0][t] - x);
          const Clearing b = clear(stacks[1][t], demand[1][t] + x);
          return a.cost + b.cost + kGapCost * (a.shortfall + a.surplus + b.shortfall + b.surplus);
        },
        std::max(tie.p_min, -tie.p_max), std::min(tie.p_max, -tie.p_min), ctx.options.tie_quantum);
  }

  // MT output floors: whatever the grid and CHP cannot cover after the
  // exchange, pulled backwards through the ramp-up limit so start-ups begin
  // early enough
  std::vector<HourlySeries> mt_floor(nj, HourlySeries{});
  for (std::size_t j = 0; j < nj; ++j) {
    const auto& c = sys.cies[j];
    auto& d = res.dispatch.cies[j];
    if (!c.mt) continue;
    auto& f = mt_floor[j];
    for (std::size_t t = 0; t < kHours; ++t) {
      const double tie = j == 0 ? tie_p[t] : -tie_p[t];
      f[t] = std::max(0.0, demand[j][t] - tie - std::max(0.0, c.grid.p_max) - (c.chp ? c.chp->p_max : 0.0));
    }
    for (std::size_t t = kHours - 1; t > 0; --t) {
      if (f[t] > c.mt->ramp_up) f[t - 1] = std::max(f[t - 1], f[t] - c.mt->ramp_up);
    }
    for (std::size_t t = 0; t < kHours; ++t) {
      if (f[t] > 0.0) {
        d.mt_on[t] = 1;
        f[t] = std::max(f[t], c.mt->p_min);
      }
    }
  }

  // final pass in time order with ramp windows
  for (std::size_t j = 0; j < nj; ++j) {
    const auto& c = sys.cies[j];
    auto& d = res.dispatch.cies[j];
    double chp_prev = std::numeric_limits<double>::quiet_NaN();
    double mt_prev = c.mt_initially_on && c.mt ? c.mt->p_min : 0.0;
    for (std::size_t t = 0; t < kHours; ++t) {
      d.tie_p[t] = j == 0 ? tie_p[t] : -tie_p[t];
      double chp_lo = 0.0, chp_hi = 0.0, mt_lo = 0.0, mt_hi = 0.0;
      if (c.chp) {
        chp_lo = c.chp->p_min;
        chp_hi = c.chp->p_max;
        if (!std::isnan(chp_prev)) {
          chp_lo = std::max(chp_lo, chp_prev + c.chp->ramp_down);
          chp_hi = std::min(chp_hi, chp_prev + c.chp->ramp_up);
        }
      }
      if (c.mt && d.mt_on[t] == 1) {
        mt_lo = std::max(c.mt->p_min, mt_prev + c.mt->ramp_down);
        mt_hi = std::min(c.mt->p_max, mt_prev + c.mt->ramp_up);
        mt_lo = std::min(std::max(mt_lo, mt_floor[j][t]), mt_hi);
        if (mt_lo > mt_hi) {
          d.mt_on[t] = 0;
        }
      }
      ElectricBlocks idx;
      const SupplyStack st = electric_stack(ctx, j, t, d.chp_h[t], wt[j][t], pv[j][t], d.mt_on[t] == 1, chp_lo,
                                            chp_hi, mt_lo, mt_hi, idx);
      const Clearing cl = clear(st, demand[j][t] - d.tie_p[t]);
      d.chp_p[t] = c.chp ? cl.unit : 0.0;
      const double wt_cut = idx.wt >= 0 ? -cl.block[static_cast<std::size_t>(idx.wt)] : 0.0;
      const double pv_cut = idx.pv >= 0 ? -cl.block[static_cast<std::size_t>(idx.pv)] : 0.0;
      d.wt[t] = wt[j][t] - wt_cut;
      d.pv[t] = pv[j][t] - pv_cut;
      d.curtailed[t] = wt_cut + pv_cut;
      d.grid_sell[t] = -cl.block[static_cast<std::size_t>(idx.sell)];
      d.grid_buy[t] = cl.block[static_cast<std::size_t>(idx.buy)];
      d.mt_p[t] = idx.mt >= 0 ? cl.block[static_cast<std::size_t>(idx.mt)] : 0.0;
      d.unserved_e[t] = cl.shortfall;
      d.dumped_e[t] = cl.surplus;
      chp_prev = d.chp_p[t];
      mt_prev = d.mt_p[t];
    }
  }

  const double w = ctx.options.penalty_weight;
  for (std::size_t j = 0; j < nj; ++j) {
    const auto& d = res.dispatch.cies[j];
    const std::string who = sys.cies[j].name;
    for (std::size_t t = 0; t < kHours; ++t) {
      const int hour = static_cast<int>(t) + 1;
      const std::pair<const char*, double> gaps[] = {{"electric_shortfall", d.unserved_e[t]},
                                                     {"electric_surplus", d.dumped_e[t]},
                                                     {"heat_shortfall", d.unserved_h[t]},
                                                     {"heat_surplus", d.dumped_h[t]}};
      for (const auto& [what, v] : gaps) {
        if (v > 1e-9) {
          res.penalty += w * v * v;
          res.shortfalls.push_back({what, hour, v, who});
        }
      }
    }
  }
  return res;
}

}  // namespace mcies::dispatch
