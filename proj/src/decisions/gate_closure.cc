#include "ts/decisions/gate_closure.h"

#include <algorithm>
#include <future>

#include "nlohmann/json.hpp"

#include "ts/core/error.h"
#include "ts/sim/export.h"

namespace ts::decisions {

sim_summary summarize(sim::sim_result const& r) {
  sim_summary s;
  s.totals = r.totals;
  for (auto i = std::size_t{0}; i != r.stations.size(); ++i) {
    station_summary st{r.stations[i]};
    for (auto const& c : r.platforms[i]) {
      st.waiting_max = std::max(st.waiting_max, c.waiting_max);
      st.left_behind += c.left_behind;
      st.left_behind_unique += c.left_behind_unique;
      st.arrivals += c.arrivals;
    }
    s.stations.push_back(std::move(st));
  }
  return s;
}

what_if_result evaluate_gate_closure(gate_closure_plan const& plan,
                                     sim::sim_config const& config,
                                     sim::demand_table const& demand,
                                     std::vector<sim::train_state> const& trains,
                                     instant sim_start) {
  auto const& topo = config.topology;
  auto const idx = topo.require_index(plan.station);
  auto const start_s = static_cast<double>((plan.close_start - sim_start).count());
  auto const end_s = static_cast<double>((plan.close_end - sim_start).count());
  if (end_s < start_s || start_s < 0.0 || end_s > config.horizon_s) {
    throw config_error{"gate closure window outside the simulation horizon"};
  }

  sim::gate_closure closure{idx, start_s, end_s, plan.handling,
                            plan.divert_fraction, std::nullopt};
  if (plan.handling == sim::closure_handling::divert) {
    if (plan.side == divert_side::upstream) {
      if (idx == 0) {
        throw config_error{"cannot divert upstream of the first station"};
      }
      closure.divert_to = idx - 1;
    } else {
      if (idx + 1 >= topo.size()) {
        throw config_error{"cannot divert downstream of the terminal"};
      }
      closure.divert_to = idx + 1;
    }
  }

  auto treated_cfg = config;
  treated_cfg.closure = closure;
  auto baseline_run = std::async(std::launch::async, [&] {
    return sim::run(config, demand, trains);
  });
  auto const treated = sim::run(treated_cfg, demand, trains);
  auto const baseline = baseline_run.get();

  what_if_result out;
  out.baseline = summarize(baseline);
  out.treated = summarize(treated);
  for (auto s = std::size_t{0}; s != baseline.stations.size(); ++s) {
    for (auto b = 0; b != baseline.n_bins; ++b) {
      auto const& x = baseline.platforms[s][static_cast<std::size_t>(b)];
      auto const& y = treated.platforms[s][static_cast<std::size_t>(b)];
      out.deltas.push_back(station_bin_delta{baseline.stations[s],
                                             baseline.first_bin.index + b,
                                             y.waiting_max - x.waiting_max,
                                             y.left_behind - x.left_behind});
    }
  }

  // Effects at a downstream target show up one trip later.
  auto lag_of = [&](std::size_t target) {
    auto lag = 0.0;
    for (auto i = idx; i < target; ++i) {
      lag += topo.stations[i].dwell_s + topo.run_s[i];
    }
    return lag;
  };
  std::vector<int> window;
  auto bins_for = [&](std::size_t target) {
    std::vector<int> bins;
    auto const to = end_s + lag_of(target);
    for (auto b = 0; b != baseline.n_bins; ++b) {
      auto const from_b = static_cast<double>(b) * baseline.bin_s;
      auto const to_b = from_b + baseline.bin_s;
      if (from_b < std::max(to, start_s + 1e-9) && start_s < to_b) {
        bins.push_back(b);
      }
    }
    return bins;
  };

  std::size_t target = idx;
  if (plan.target) {
    target = topo.require_index(*plan.target);
  } else {
    auto best = std::pair{-1L, -1};
    for (auto s = idx + 1; s < topo.size(); ++s) {
      auto lb = 0L;
      auto wm = 0;
      for (auto const b : bins_for(s)) {
        auto const& c = baseline.platforms[s][static_cast<std::size_t>(b)];
        lb += c.left_behind;
        wm = std::max(wm, c.waiting_max);
      }
      if (std::pair{lb, wm} > best) {
        best = {lb, wm};
        target = s;
      }
    }
  }
  out.target = topo.stations[target].id;
  out.window_bins = bins_for(target);
  auto wm_base = 0, wm_treat = 0;
  auto lb_base = 0L, lb_treat = 0L;
  for (auto const b : out.window_bins) {
    auto const& x = baseline.platforms[target][static_cast<std::size_t>(b)];
    auto const& y = treated.platforms[target][static_cast<std::size_t>(b)];
    wm_base = std::max(wm_base, x.waiting_max);
    wm_treat = std::max(wm_treat, y.waiting_max);
    lb_base += x.left_behind;
    lb_treat += y.left_behind;
  }
  out.target_station_improvement = wm_base - wm_treat;
  out.target_left_behind_improvement = static_cast<double>(lb_base - lb_treat);
  for (auto& b : out.window_bins) {
    b += baseline.first_bin.index;
  }
  return out;
}

gate_closure_plan plan_from_json(nlohmann::json const& j) {
  gate_closure_plan p;
  try {
    p.station = j.at("station").get<std::string>();
    auto const start = parse_iso(j.at("start").get<std::string>());
    auto const end = parse_iso(j.at("end").get<std::string>());
    if (!start || !end) {
      throw config_error{"gate closure plan: bad timestamp"};
    }
    p.close_start = *start;
    p.close_end = *end;
    if (p.close_end < p.close_start) {
      throw config_error{"gate closure plan: end before start"};
    }
    auto const h = j.value("handling", nlohmann::json{{"mode", "defer"}});
    auto const mode = h.value("mode", std::string{"defer"});
    if (mode == "defer") {
      p.handling = sim::closure_handling::defer;
    } else if (mode == "divert") {
      p.handling = sim::closure_handling::divert;
      p.divert_fraction = h.value("fraction", 0.0);
      auto const to = h.value("to", std::string{"upstream"});
      if (to != "upstream" && to != "downstream") {
        throw config_error{"gate closure plan: divert target must be upstream or downstream"};
      }
      p.side = to == "upstream" ? divert_side::upstream : divert_side::downstream;
      if (p.divert_fraction < 0.0 || p.divert_fraction > 1.0) {
        throw config_error{"gate closure plan: divert fraction outside [0, 1]"};
      }
    } else if (mode == "drop") {
      p.handling = sim::closure_handling::drop;
    } else {
      throw config_error{"gate closure plan: unknown handling mode " + mode};
    }
    if (j.contains("target") && !j.at("target").is_null()) {
      p.target = j.at("target").get<std::string>();
    }
  } catch (nlohmann::json::exception const& e) {
    throw config_error{std::string{"gate closure plan: "} + e.what()};
  }
  return p;
}

nlohmann::json to_json(gate_closure_plan const& p) {
  nlohmann::json h;
  switch (p.handling) {
    case sim::closure_handling::defer: h = {{"mode", "defer"}}; break;
    case sim::closure_handling::drop: h = {{"mode", "drop"}}; break;
    case sim::closure_handling::divert:
      h = {{"mode", "divert"},
           {"fraction", p.divert_fraction},
           {"to", p.side == divert_side::upstream ? "upstream" : "downstream"}};
      break;
  }
  nlohmann::json j{{"station", p.station},
                   {"start", format_iso(p.close_start)},
                   {"end", format_iso(p.close_end)},
                   {"handling", h}};
  if (p.target) {
    j["target"] = *p.target;
  }
  return j;
}

nlohmann::json to_json(sim_summary const& s) {
  auto stations = nlohmann::json::array();
  for (auto const& st : s.stations) {
    stations.push_back({{"station", st.station},
                        {"waiting_max", st.waiting_max},
                        {"left_behind", st.left_behind},
                        {"left_behind_unique", st.left_behind_unique},
                        {"arrivals", st.arrivals}});
  }
  return {{"stations", stations}, {"totals", sim::to_json(s.totals)}};
}

nlohmann::json to_json(what_if_result const& r) {
  auto deltas = nlohmann::json::array();
  for (auto const& d : r.deltas) {
    deltas.push_back({{"station", d.station},
                      {"bin", d.bin},
                      {"waiting_max", d.waiting_max},
                      {"left_behind", d.left_behind}});
  }
  return {{"baseline", to_json(r.baseline)},
          {"treated", to_json(r.treated)},
          {"deltas", deltas},
          {"target", r.target},
          {"window_bins", r.window_bins},
          {"target_station_improvement", r.target_station_improvement},
          {"target_left_behind_improvement", r.target_left_behind_improvement}};
}

}  // namespace ts::decisions
