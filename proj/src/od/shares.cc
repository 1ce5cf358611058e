#include "ts/od/shares.h"

#include <algorithm>

#include "nlohmann/json.hpp"

#include "ts/core/error.h"

namespace ts::od {

int period_def::period_count() const {
  return (bins_per_day + bins_per_period - 1) / bins_per_period;
}

int period_def::period_of(int bin) const { return bin / bins_per_period; }

std::pair<int, int> period_def::bins_of(int period) const {
  auto const first = period * bins_per_period;
  return {first, std::min(first + bins_per_period, bins_per_day) - 1};
}

std::vector<double> destination_shares::shares() const {
  auto total = 0.0;
  for (auto const c : counts) {
    total += c;
  }
  auto const denom = total + alpha * static_cast<double>(counts.size());
  std::vector<double> out;
  out.reserve(counts.size());
  for (auto const c : counts) {
    out.push_back((c + alpha) / denom);
  }
  return out;
}

double destination_shares::share(station_id const& dest) const {
  auto const it = std::find(begin(destinations), end(destinations), dest);
  if (it == end(destinations)) {
    return 0.0;
  }
  return shares()[static_cast<std::size_t>(it - begin(destinations))];
}

destination_shares const& share_table::for_bin(int bin) const {
  for (auto const& p : periods) {
    if (p.covers(bin)) {
      return p;
    }
  }
  throw config_error{"no share period covers bin " + std::to_string(bin) +
                     " for " + origin};
}

destination_shares& share_table::for_bin(int bin) {
  return const_cast<destination_shares&>(
      static_cast<share_table const&>(*this).for_bin(bin));
}

share_table empty_shares(line_topology const& topo, station_id const& origin,
                         period_def const& periods, double alpha) {
  if (!topo.contains(origin)) {
    throw config_error{"unknown origin " + origin};
  }
  if (!(alpha > 0.0)) {
    throw config_error{"share smoothing alpha must be positive"};
  }
  if (periods.bins_per_period <= 0) {
    throw config_error{"bins_per_period must be positive"};
  }
  std::vector<station_id> dests;
  for (auto const& s : topo.stations) {
    if (s.id != origin) {
      dests.push_back(s.id);
    }
  }
  share_table t{origin, alpha, {}};
  for (auto p = 0; p != periods.period_count(); ++p) {
    auto const [first, last] = periods.bins_of(p);
    t.periods.push_back(destination_shares{
        origin, first, last, alpha, dests, std::vector<double>(dests.size())});
  }
  return t;
}

share_table estimate_shares(std::vector<ingest::journey> const& journeys,
                            line_topology const& topo, station_id const& origin,
                            period_def const& periods, double alpha,
                            int bin_minutes, day_start start) {
  auto table = empty_shares(topo, origin, periods, alpha);
  for (auto const& j : journeys) {
    if (j.origin != origin) {
      continue;
    }
    auto& p = table.for_bin(bin_of(j.entry_time, bin_minutes, start).index);
    auto const it = std::find(begin(p.destinations), end(p.destinations),
                              j.destination);
    if (it != end(p.destinations)) {
      p.counts[static_cast<std::size_t>(it - begin(p.destinations))] += 1.0;
    }
  }
  return table;
}

destination_shares update_shares_online(destination_shares shares,
                                        std::map<station_id, double> const& fresh,
                                        double lambda) {
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw config_error{"forgetting factor must lie in (0, 1]"};
  }
  for (auto i = std::size_t{0}; i != shares.counts.size(); ++i) {
    auto const it = fresh.find(shares.destinations[i]);
    shares.counts[i] =
        lambda * shares.counts[i] + (it == end(fresh) ? 0.0 : it->second);
  }
  return shares;
}

od_forecast forecast_od(forecast::arrival_forecast const& arrival,
                        destination_shares const& shares) {
  if (arrival.target_bin && !shares.covers(arrival.target_bin->index)) {
    throw config_error{"forecast_od: share period does not cover target bin"};
  }
  od_forecast f;
  f.origin = shares.origin;
  f.target_bin = arrival.target_bin;
  f.horizon = arrival.horizon;
  f.total = arrival.clamped_point;
  auto const s = shares.shares();
  for (auto i = std::size_t{0}; i != s.size(); ++i) {
    f.flows.emplace_back(shares.destinations[i], f.total * s[i]);
  }
  return f;
}

nlohmann::json to_json(share_table const& t) {
  auto periods = nlohmann::json::array();
  for (auto const& p : t.periods) {
    auto counts = nlohmann::json::object();
    for (auto i = std::size_t{0}; i != p.destinations.size(); ++i) {
      counts[p.destinations[i]] = p.counts[i];
    }
    periods.push_back({{"bins", {p.first_bin, p.last_bin}}, {"counts", counts}});
  }
  return {{"version", 1}, {"origin", t.origin}, {"alpha", t.alpha},
          {"periods", periods}};
}

share_table share_table_from_json(nlohmann::json const& j,
                                  line_topology const& topo) {
  share_table t;
  try {
    t.origin = j.at("origin").get<std::string>();
    t.alpha = j.at("alpha").get<double>();
    if (!topo.contains(t.origin)) {
      throw config_error{"shares: unknown origin " + t.origin};
    }
    if (!(t.alpha > 0.0)) {
      throw config_error{"shares: alpha must be positive"};
    }
    for (auto const& pj : j.at("periods")) {
      destination_shares p;
      p.origin = t.origin;
      p.alpha = t.alpha;
      auto const bins = pj.at("bins").get<std::vector<int>>();
      if (bins.size() != 2 || bins[0] > bins[1]) {
        throw config_error{"shares: bad period bins"};
      }
      p.first_bin = bins[0];
      p.last_bin = bins[1];
      auto const counts = pj.at("counts").get<std::map<std::string, double>>();
      for (auto const& s : topo.stations) {
        if (s.id == t.origin) {
          continue;
        }
        p.destinations.push_back(s.id);
        auto const it = counts.find(s.id);
        p.counts.push_back(it == end(counts) ? 0.0 : it->second);
      }
      t.periods.push_back(std::move(p));
    }
  } catch (nlohmann::json::exception const& e) {
    throw config_error{std::string{"shares: "} + e.what()};
  }
  return t;
}

}  // namespace ts::od
