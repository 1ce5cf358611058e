#include "ts/service/engine.h"

#include <algorithm>
#include <numeric>

#include "nlohmann/json.hpp"
#include "spdlog/spdlog.h"

#include "ts/core/error.h"
#include "ts/sim/export.h"
#include "ts/sim/sim.h"

namespace ts::service {

namespace {

constexpr auto max_journey_gap = std::chrono::hours{4};

nlohmann::json bin_json(time_bin const& b) {
  return {{"day", format_date(b.service_day)}, {"index", b.index}};
}

nlohmann::json forecast_json(forecast::arrival_forecast const& f, day_start start) {
  return {{"horizon", f.horizon},
          {"target_bin", bin_json(*f.target_bin)},
          {"target_time", format_iso(bin_end(*f.target_bin, start))},
          {"point", f.point},
          {"clamped_point", f.clamped_point},
          {"variance", f.variance},
          {"baseline", f.baseline}};
}

nlohmann::json od_json(od::od_forecast const& f) {
  auto flows = nlohmann::json::array();
  for (auto const& [d, v] : f.flows) {
    flows.push_back({{"destination", d}, {"flow", v}});
  }
  return {{"horizon", f.horizon},
          {"target_bin", bin_json(*f.target_bin)},
          {"total", f.total},
          {"flows", flows}};
}

}  // namespace

station_cycle const* cycle_snapshot::find(station_id const& s) const {
  for (auto const& st : stations) {
    if (st.station == s) {
      return &st;
    }
  }
  return nullptr;
}

nlohmann::json to_json(cycle_snapshot const& s) {
  auto const start = s.start;
  auto stations = nlohmann::json::array();
  for (auto const& st : s.stations) {
    auto denial = nlohmann::json::array();
    for (auto const& d : st.denial) {
      denial.push_back(decisions::to_json(d));
    }
    stations.push_back({{"station", st.station},
                        {"observed", st.observed},
                        {"cluster", st.cluster},
                        {"distances", st.classification.distances},
                        {"fallback", st.fallback},
                        {"state", forecast::to_json(st.state)},
                        {"arrivals", {forecast_json(st.arrivals[0], start),
                                      forecast_json(st.arrivals[1], start)}},
                        {"od", {od_json(st.od[0]), od_json(st.od[1])}},
                        {"denial", denial}});
  }
  auto alerts = nlohmann::json::array();
  for (auto const& a : s.alerts) {
    alerts.push_back(decisions::to_json(a));
  }
  return {{"seq", s.seq},
          {"cycle_time", format_iso(s.cycle_time)},
          {"observed_bin", bin_json(s.observed_bin)},
          {"model_version", s.model_version},
          {"stations", stations},
          {"sim", sim::to_json(s.sim)},
          {"alerts", alerts}};
}

nlohmann::json arrivals_json(cycle_snapshot const& s, station_cycle const& st,
                             int history) {
  auto hist = nlohmann::json::array();
  std::vector<forecast_record const*> mine;
  for (auto const& r : s.history) {
    if (r.station == st.station && r.horizon == 1) {
      mine.push_back(&r);
    }
  }
  auto const skip = mine.size() > static_cast<std::size_t>(std::max(0, history))
                        ? mine.size() - static_cast<std::size_t>(std::max(0, history))
                        : 0;
  for (auto i = skip; i < mine.size(); ++i) {
    auto const& r = *mine[i];
    hist.push_back({{"target_bin", bin_json(r.target_bin)},
                    {"target_time", format_iso(bin_end(r.target_bin, s.start))},
                    {"predicted", r.clamped_point},
                    {"observed", *r.observed},
                    {"baseline", r.baseline}});
  }
  return {{"station", st.station},
          {"cycle_time", format_iso(s.cycle_time)},
          {"seq", s.seq},
          {"cluster", st.cluster},
          {"fallback", st.fallback},
          {"observed", st.observed},
          {"h1", forecast_json(st.arrivals[0], s.start)},
          {"h2", forecast_json(st.arrivals[1], s.start)},
          {"history", hist}};
}

engine::engine(service_config cfg, line_topology topo, model_store models,
               std::vector<ingest::event_entry> events)
    : cfg_{std::move(cfg)},
      topo_{std::move(topo)},
      models_{std::move(models)},
      events_{std::move(events)},
      periods_{cfg_.od_bins_per_period, bins_per_day(cfg_.bin_minutes)} {
  topo_.validate();
  auto const missing = models_.missing(topo_);
  if (!missing.empty()) {
    std::string names;
    for (auto const& m : missing) {
      names += (names.empty() ? "" : ", ") + m;
    }
    throw config_error{"no fitted models for stations: " + names};
  }
  for (auto const& s : topo_.stations) {
    auto const& cs = models_.stations.at(s.id).clusters;
    if (static_cast<int>(cs.bins()) != bins_per_day(cfg_.bin_minutes)) {
      throw config_error{"cluster set for " + s.id + " does not match bin_minutes"};
    }
    // centroid-only model; observation variance from the mean level
    auto level = 0.0;
    for (auto const& c : cs.centroids) {
      level += std::accumulate(begin(c), end(c), 0.0) / static_cast<double>(c.size());
    }
    fallback_.push_back(forecast::ss_params::fallback(
        topo_.exog_schema.size(), std::max(1.0, level / cs.k())));
    if (!models_.shares.contains(s.id)) {
      models_.shares[s.id] = od::empty_shares(topo_, s.id, periods_, cfg_.od_alpha);
    }
  }
}

forecast::ss_params const& engine::params_for(station_id const& s, int cluster,
                                              bool& fallback) const {
  auto const& sm = models_.stations.at(s);
  auto const it = sm.params.find(cluster);
  fallback = it == end(sm.params);
  return fallback ? fallback_[topo_.require_index(s)] : it->second;
}

void engine::start_day(date d) {
  day_ = d;
  auto const bpd = static_cast<std::size_t>(bins_per_day(cfg_.bin_minutes));
  for (auto const& s : topo_.stations) {
    auto const& cs = models_.stations.at(s.id).clusters;
    auto& rt = runtime_[s.id];
    rt.cluster = cs.largest_cluster();
    auto fb = false;
    rt.state = forecast::filter_state::stationary(params_for(s.id, rt.cluster, fb));
    rt.partial.assign(bpd, 0.0);
  }
}

void engine::update_shares(std::span<ingest::tap_event const> taps) {
  // origin -> period -> destination -> count
  std::map<station_id, std::map<int, std::map<station_id, double>>> fresh;
  for (auto const& t : taps) {
    if (t.dir == ingest::direction::entry) {
      open_entries_[t.card_id] = t;
      continue;
    }
    auto const it = open_entries_.find(t.card_id);
    if (it == end(open_entries_)) {
      continue;
    }
    auto const entry = it->second;
    open_entries_.erase(it);
    if (t.timestamp <= entry.timestamp || t.timestamp - entry.timestamp > max_journey_gap ||
        t.station == entry.station || !topo_.contains(entry.station)) {
      continue;
    }
    auto const b = bin_of(entry.timestamp, cfg_.bin_minutes, cfg_.start);
    fresh[entry.station][periods_.period_of(b.index)][t.station] += 1.0;
  }
  for (auto const& [origin, by_period] : fresh) {
    auto& table = models_.shares.at(origin);
    for (auto const& [period, counts] : by_period) {
      auto const first = periods_.bins_of(period).first;
      auto& ds = table.for_bin(first);
      ds = od::update_shares_online(std::move(ds), counts, cfg_.od_lambda);
    }
  }
}

std::shared_ptr<cycle_snapshot const> engine::run_cycle(
    instant now, std::span<ingest::tap_event const> taps,
    std::vector<ingest::train_position_report> const& positions) {
  auto const bin_s = cfg_.bin_minutes * 60;
  if (bin_start(bin_of(now, cfg_.bin_minutes, cfg_.start), cfg_.start) != now) {
    throw config_error{"run_cycle: " + format_iso(now) + " is not a bin boundary"};
  }
  auto const closed = bin_of(now - std::chrono::seconds{1}, cfg_.bin_minutes, cfg_.start);
  if (!day_ || *day_ != closed.service_day) {
    start_day(closed.service_day);
  }

  auto snap = std::make_shared<cycle_snapshot>();
  snap->seq = ++seq_;
  snap->cycle_time = now;
  snap->observed_bin = closed;
  snap->start = cfg_.start;
  snap->model_version = models_.version;

  // (1) entries per station in the bin that just closed
  std::map<station_id, double> counts;
  std::vector<ingest::tap_event> in_bin;
  for (auto const& t : taps) {
    if (bin_of(t.timestamp, cfg_.bin_minutes, cfg_.start) != closed) {
      continue;
    }
    in_bin.push_back(t);
    if (t.dir == ingest::direction::entry && topo_.contains(t.station)) {
      counts[t.station] += 1.0;
    }
  }
  if (in_bin.size() != taps.size()) {
    spdlog::debug("cycle {}: {} taps outside the closed bin ignored", format_iso(now),
                  taps.size() - in_bin.size());
  }
  std::stable_sort(begin(in_bin), end(in_bin),
                   [](auto const& a, auto const& b) { return a.timestamp < b.timestamp; });

  // (2) join observations onto pending records
  std::vector<forecast_record> still_pending;
  for (auto& r : pending_) {
    if (r.target_bin == closed) {
      r.observed = counts[r.station];
      snap->joined.push_back(r);
    } else if (r.target_bin < closed) {
      spdlog::warn("record {} bin {} never observed, dropped", r.station, r.target_bin.index);
    } else {
      still_pending.push_back(std::move(r));
    }
  }
  pending_ = std::move(still_pending);
  for (auto const& r : snap->joined) {
    completed_.push_back(r);
    auto& q = recent_[r.station];
    q.push_back(r);
    while (q.size() > 2 * static_cast<std::size_t>(cfg_.history_bins)) {
      q.pop_front();
    }
  }

  update_shares(in_bin);

  std::vector<od::od_forecast> od_inputs;
  std::vector<std::vector<double>> dest_weights(topo_.size(),
                                                std::vector<double>(topo_.size(), 0.0));
  for (auto const& s : topo_.stations) {
    auto& rt = runtime_.at(s.id);
    auto const& cs = models_.stations.at(s.id).clusters;
    station_cycle sc;
    sc.station = s.id;
    sc.observed = counts[s.id];

    // (3) classify the day so far
    rt.partial[static_cast<std::size_t>(closed.index)] = sc.observed;
    sc.classification = patterns::classify_partial(
        std::span<double const>{rt.partial.data(), static_cast<std::size_t>(closed.index) + 1},
        cs);
    if (sc.classification.cluster_id != rt.cluster) {
      spdlog::info("cycle {}: {} switches cluster {} -> {}", format_iso(now), s.id,
                   rt.cluster, sc.classification.cluster_id);
      rt.cluster = sc.classification.cluster_id;
    }
    sc.cluster = rt.cluster;

    // (4) filter update, (5) predictions
    auto fb = false;
    auto const* params = &params_for(s.id, rt.cluster, fb);
    sc.fallback = fb;
    try {
      auto const m = patterns::centroid_value(cs, rt.cluster, closed.index);
      auto const x = ingest::exog_at(events_, topo_.exog_schema, s.id, closed, cfg_.start);
      rt.state = forecast::filter_update(rt.state, *params, sc.observed, m, x).state;
    } catch (std::exception const& e) {
      spdlog::error("cycle {}: model for {} failed ({}), centroid fallback",
                    format_iso(now), s.id, e.what());
      params = &fallback_[topo_.require_index(s.id)];
      sc.fallback = true;
      rt.state = forecast::filter_state{0.0, 0.0, {}};
    }
    rt.state.last_bin = closed;
    sc.state = rt.state;

    auto const& table = models_.shares.at(s.id);
    for (auto h = 1; h <= 2; ++h) {
      auto const target = next_bin(closed, h);
      auto const m = patterns::centroid_value(cs, rt.cluster, target.index);
      auto const x = ingest::exog_at(events_, topo_.exog_schema, s.id, target, cfg_.start);
      auto f = forecast::predict(rt.state, *params, m, x, h);
      f.station = s.id;
      pending_.push_back(forecast_record{s.id, target, h, f.point, f.clamped_point,
                                         f.variance, f.baseline, rt.cluster, sc.fallback,
                                         now, std::nullopt});
      // (6) destinations
      auto const& ds = table.for_bin(target.index);
      sc.od[static_cast<std::size_t>(h - 1)] = od::forecast_od(f, ds);
      if (h == 1) {
        auto const o = topo_.require_index(s.id);
        for (auto i = std::size_t{0}; i != ds.destinations.size(); ++i) {
          dest_weights[o][topo_.require_index(ds.destinations[i])] = ds.shares()[i];
        }
      }
      if (h <= cfg_.sim_horizon_bins) {
        od_inputs.push_back(sc.od[static_cast<std::size_t>(h - 1)]);
      }
      sc.arrivals[static_cast<std::size_t>(h - 1)] = std::move(f);
    }
    snap->stations.push_back(std::move(sc));
  }

  // (7) simulate the forecast horizon
  auto& sc = snap->sim_config;
  sc.topology = topo_;
  sc.tick_s = cfg_.sim_tick_s;
  sc.horizon_s = cfg_.sim_horizon_bins * bin_s;
  sc.seed = cfg_.sim_seed;
  sc.mode = cfg_.sim_mode;
  snap->demand = sim::demand_from_od(od_inputs, topo_, next_bin(closed, 1),
                                     cfg_.sim_horizon_bins);
  snap->demand.bin_s = bin_s;
  auto const reports = ingest::latest_positions(
      positions, now, std::chrono::seconds{cfg_.position_window_s});
  snap->trains = sim::init_trains(sim::rounded_topology(topo_, sc.tick_s), sc.horizon_s,
                                  reports, now, dest_weights, sc.tick_s);
  snap->sim = sim::run(sc, snap->demand, snap->trains);

  // (8) decision products
  snap->alerts = decisions::detect_hotspots(snap->sim, cfg_.thresholds);
  std::vector<sim::sim_result> ensemble;
  if (cfg_.ensemble_runs > 0) {
    ensemble = sim::run_ensemble(sc, snap->demand, snap->trains, cfg_.ensemble_runs);
  }
  for (auto& st : snap->stations) {
    for (auto b = 0; b != snap->sim.n_bins; ++b) {
      st.denial.push_back(
          ensemble.empty()
              ? decisions::denial_probability(snap->sim, st.station, b)
              : decisions::denial_probability(std::span<sim::sim_result const>{ensemble},
                                              st.station, b));
    }
  }

  for (auto const& s : topo_.stations) {
    auto const it = recent_.find(s.id);
    if (it != end(recent_)) {
      snap->history.insert(end(snap->history), begin(it->second), end(it->second));
    }
  }
  snap->accuracy = evaluate_accuracy(completed_);
  last_cycle_ = now;
  return snap;
}

nlohmann::json engine::checkpoint() const {
  auto stations = nlohmann::json::object();
  for (auto const& [id, rt] : runtime_) {
    stations[id] = {{"state", forecast::to_json(rt.state)},
                    {"cluster", rt.cluster},
                    {"partial", rt.partial}};
  }
  auto pending = nlohmann::json::array();
  for (auto const& r : pending_) {
    pending.push_back(to_json(r));
  }
  auto shares = nlohmann::json::object();
  for (auto const& [id, t] : models_.shares) {
    shares[id] = od::to_json(t);
  }
  auto open = nlohmann::json::array();
  for (auto const& [card, t] : open_entries_) {
    open.push_back({card, t.station, format_iso(t.timestamp)});
  }
  return {{"day", day_ ? nlohmann::json(format_date(*day_)) : nlohmann::json(nullptr)},
          {"last_cycle",
           last_cycle_ ? nlohmann::json(format_iso(*last_cycle_)) : nlohmann::json(nullptr)},
          {"seq", seq_},
          {"stations", stations},
          {"pending", pending},
          {"shares", shares},
          {"open_entries", open}};
}

void engine::restore(nlohmann::json const& j) {
  try {
    if (j.at("day").is_null()) {
      return;
    }
    auto const d = parse_date(j["day"].get<std::string>());
    if (!d) {
      throw data_error{"checkpoint: bad day"};
    }
    start_day(*d);
    seq_ = j.at("seq").get<std::uint64_t>();
    if (j.contains("last_cycle") && !j["last_cycle"].is_null()) {
      last_cycle_ = parse_iso(j["last_cycle"].get<std::string>());
    }
    for (auto const& [id, v] : j.at("stations").items()) {
      auto const it = runtime_.find(id);
      if (it == end(runtime_)) {
        continue;
      }
      it->second.state = forecast::filter_state_from_json(v.at("state"), cfg_.bin_minutes);
      it->second.cluster = v.at("cluster").get<int>();
      auto partial = v.at("partial").get<std::vector<double>>();
      if (partial.size() == it->second.partial.size()) {
        it->second.partial = std::move(partial);
      }
    }
    pending_.clear();
    for (auto const& r : j.at("pending")) {
      pending_.push_back(record_from_json(r, cfg_.bin_minutes));
    }
    if (j.contains("shares")) {
      for (auto const& [id, v] : j["shares"].items()) {
        if (topo_.contains(id)) {
          models_.shares[id] = od::share_table_from_json(v, topo_);
        }
      }
    }
    open_entries_.clear();
    for (auto const& e : j.value("open_entries", nlohmann::json::array())) {
      auto const ts = parse_iso(e.at(2).get<std::string>());
      if (!ts) {
        throw data_error{"checkpoint: bad open entry timestamp"};
      }
      auto const card = e.at(0).get<std::string>();
      open_entries_[card] = {card, e.at(1).get<std::string>(), ingest::direction::entry, *ts};
    }
  } catch (nlohmann::json::exception const& e) {
    throw data_error{std::string{"checkpoint: "} + e.what()};
  }
}

}  // namespace ts::service
