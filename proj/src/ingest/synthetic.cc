#include "ts/ingest/synthetic.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "nlohmann/json.hpp"

#include "ts/core/error.h"

namespace ts::ingest {

namespace {

std::uint64_t day_number(date d) {
  return static_cast<std::uint64_t>(
      std::chrono::sys_days{d}.time_since_epoch().count());
}

bool boost_applies(event_boost const& b, station_id const& s, date d,
                   int bin) {
  return b.day == d && bin >= b.start_bin && bin < b.end_bin &&
         (b.stations.empty() ||
          std::find(begin(b.stations), end(b.stations), s) != end(b.stations));
}

}  // namespace

void gen_spec::validate(line_topology const& topo) const {
  auto const n_bins = static_cast<std::size_t>(bins_per_day(bin_minutes));
  for (auto const& [id, st] : stations) {
    if (!topo.contains(id)) {
      throw config_error{"generator: unknown station " + id};
    }
    if (st.day_types.empty()) {
      throw config_error{"generator: no day types for " + id};
    }
    for (auto const& dt : st.day_types) {
      if (dt.rates.size() != n_bins) {
        throw config_error{"generator: rates for " + id + " must have " +
                           std::to_string(n_bins) + " entries"};
      }
      for (auto const r : dt.rates) {
        if (!(r >= 0.0)) {
          throw config_error{"generator: negative rate at " + id};
        }
      }
      auto total = 0.0;
      for (auto const& [dest, p] : dt.od_shares) {
        if (!topo.contains(dest) || dest == id) {
          throw config_error{"generator: bad destination " + dest + " for " +
                             id};
        }
        if (!(p >= 0.0)) {
          throw config_error{"generator: negative share at " + id};
        }
        total += p;
      }
      if (!(total > 0.0) &&
          std::any_of(begin(dt.rates), end(dt.rates),
                      [](double r) { return r > 0.0; })) {
        throw config_error{"generator: empty OD shares for " + id};
      }
    }
  }
  for (auto const dt : day_type_by_weekday) {
    if (dt < 0) {
      throw config_error{"generator: negative day type"};
    }
  }
  if (!day_type_by_weekday.empty() && day_type_by_weekday.size() != 7) {
    throw config_error{"generator: day_type_by_weekday needs 7 entries"};
  }
  for (auto const& b : boosts) {
    if (b.multiplier < 0.0 || b.start_bin < 0 ||
        b.end_bin > static_cast<int>(n_bins) || b.end_bin < b.start_bin) {
      throw config_error{"generator: invalid event boost"};
    }
  }
  if (level && (level->sigma < 0.0 || level->phi < 0.0 || level->phi >= 1.0)) {
    throw config_error{"generator: level process needs 0 <= phi < 1, sigma >= 0"};
  }
}

int gen_spec::day_type_of(date d) const {
  if (day_type_by_weekday.empty()) {
    return 0;
  }
  auto const wd = std::chrono::weekday{std::chrono::sys_days{d}};
  return day_type_by_weekday[wd.c_encoding()];
}

gen_spec gen_spec_from_json(nlohmann::json const& j) {
  gen_spec spec;
  try {
    spec.bin_minutes = j.value("bin_minutes", 15);
    if (j.contains("day_start")) {
      auto const s = parse_clock(j.at("day_start").get<std::string>());
      if (!s) {
        throw config_error{"generator: bad day_start"};
      }
      spec.start = *s;
    }
    for (auto const& [id, st] : j.at("stations").items()) {
      station_gen_spec sg;
      for (auto const& dt : st.at("day_types")) {
        day_type_spec d;
        d.rates = dt.at("rates").get<std::vector<double>>();
        if (dt.contains("od_shares")) {
          d.od_shares = dt.at("od_shares").get<std::map<std::string, double>>();
        }
        sg.day_types.push_back(std::move(d));
      }
      if (st.contains("travel_s")) {
        sg.travel_s = st.at("travel_s").get<std::map<std::string, double>>();
      }
      spec.stations.emplace(id, std::move(sg));
    }
    spec.day_type_by_weekday =
        j.value("day_type_by_weekday", std::vector<int>{});
    if (j.contains("level_ar")) {
      spec.level = level_process{j.at("level_ar").at("phi").get<double>(),
                                 j.at("level_ar").at("sigma").get<double>()};
    }
    for (auto const& b : j.value("boosts", nlohmann::json::array())) {
      event_boost eb;
      eb.stations = b.value("stations", std::vector<std::string>{});
      auto const d = parse_date(b.at("date").get<std::string>());
      if (!d) {
        throw config_error{"generator: bad boost date"};
      }
      eb.day = *d;
      eb.start_bin = b.at("start_bin").get<int>();
      eb.end_bin = b.at("end_bin").get<int>();
      eb.multiplier = b.value("multiplier", 1.0);
      eb.add = b.value("add", 0.0);
      if (b.contains("covariate") && !b.at("covariate").is_null()) {
        eb.covariate = b.at("covariate").get<std::string>();
      }
      spec.boosts.push_back(std::move(eb));
    }
  } catch (nlohmann::json::exception const& e) {
    throw config_error{std::string{"generator spec: "} + e.what()};
  }
  return spec;
}

gen_spec load_gen_spec(std::string const& path) {
  std::ifstream in{path};
  if (!in) {
    throw config_error{"cannot open generator spec " + path};
  }
  try {
    return gen_spec_from_json(nlohmann::json::parse(in));
  } catch (nlohmann::json::parse_error const& e) {
    throw config_error{"generator spec " + path + ": " + e.what()};
  }
}

std::vector<tap_event> generate_synthetic_day(gen_spec const& spec,
                                              line_topology const& topo,
                                              date day, std::uint64_t seed) {
  spec.validate(topo);
  auto const n_bins = bins_per_day(spec.bin_minutes);
  auto const bin_s = 60.0 * spec.bin_minutes;
  auto const day_tag = format_date(day);
  auto const type_idx = static_cast<std::size_t>(spec.day_type_of(day));

  std::vector<tap_event> out;
  for (auto const& station : topo.stations) {
    auto const it = spec.stations.find(station.id);
    if (it == end(spec.stations)) {
      continue;
    }
    auto const& sg = it->second;
    auto const& dt = sg.day_types[std::min(type_idx, sg.day_types.size() - 1)];

    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32U),
                      static_cast<std::uint32_t>(day_number(day)),
                      static_cast<std::uint32_t>(topo.require_index(station.id))};
    std::mt19937_64 rng{seq};
    std::uniform_real_distribution<double> unit{0.0, 1.0};

    std::vector<station_id> dests;
    std::vector<double> weights;
    for (auto const& [dest, p] : dt.od_shares) {
      dests.push_back(dest);
      weights.push_back(p);
    }
    std::discrete_distribution<std::size_t> pick_dest{begin(weights),
                                                      end(weights)};

    auto level = 0.0;
    if (spec.level && spec.level->sigma > 0.0) {
      auto const sd = spec.level->sigma /
                      std::sqrt(1.0 - spec.level->phi * spec.level->phi);
      level = std::normal_distribution<double>{0.0, sd}(rng);
    }

    auto const day_begin = bin_start(time_bin{day, 0, spec.bin_minutes}, spec.start);
    auto seq_no = 0;
    for (auto b = 0; b != n_bins; ++b) {
      auto rate = dt.rates[static_cast<std::size_t>(b)];
      for (auto const& boost : spec.boosts) {
        if (boost_applies(boost, station.id, day, b)) {
          rate = rate * boost.multiplier + boost.add;
        }
      }
      if (spec.level && spec.level->sigma > 0.0) {
        if (b != 0) {
          level = spec.level->phi * level +
                  std::normal_distribution<double>{0.0, spec.level->sigma}(rng);
        }
        rate += level;
      }
      rate = std::max(rate, 0.0);
      if (rate == 0.0 || dests.empty()) {
        continue;
      }
      auto const n = std::poisson_distribution<int>{rate}(rng);
      for (auto i = 0; i != n; ++i) {
        auto const offset = std::floor(unit(rng) * bin_s);
        auto const entry_t =
            day_begin + std::chrono::seconds{static_cast<long>(b * bin_s + offset)};
        auto const& dest = dests[pick_dest(rng)];
        auto const tt_it = sg.travel_s.find(dest);
        auto const mean_tt = tt_it == end(sg.travel_s) ? 600.0 : tt_it->second;
        auto const tt = std::max(60.0, std::round(mean_tt * (0.8 + 0.4 * unit(rng))));
        auto card = station.id + "-" + day_tag + "-" + std::to_string(seq_no++);
        out.push_back(tap_event{card, station.id, direction::entry, entry_t});
        out.push_back(tap_event{std::move(card), dest, direction::exit,
                                entry_t + std::chrono::seconds{static_cast<long>(tt)}});
      }
    }
  }
  std::stable_sort(begin(out), end(out), [](auto const& a, auto const& b) {
    return a.timestamp < b.timestamp;
  });
  return out;
}

synthetic_dataset generate_dataset(gen_spec const& spec,
                                   line_topology const& topo, date first_day,
                                   int n_days, std::uint64_t seed) {
  synthetic_dataset ds;
  for (auto i = 0; i != n_days; ++i) {
    auto const day = date{std::chrono::sys_days{first_day} + std::chrono::days{i}};
    auto taps = generate_synthetic_day(spec, topo, day, seed);
    ds.taps.insert(end(ds.taps), std::make_move_iterator(begin(taps)),
                   std::make_move_iterator(end(taps)));
  }
  std::stable_sort(begin(ds.taps), end(ds.taps), [](auto const& a, auto const& b) {
    return a.timestamp < b.timestamp;
  });
  auto const last = date{std::chrono::sys_days{first_day} + std::chrono::days{n_days}};
  for (auto const& b : spec.boosts) {
    if (!b.covariate || b.end_bin <= b.start_bin || b.day < first_day ||
        !(b.day < last)) {
      continue;
    }
    event_entry e;
    e.covariate = *b.covariate;
    e.stations = {begin(b.stations), end(b.stations)};
    e.start = bin_start(time_bin{b.day, b.start_bin, spec.bin_minutes}, spec.start);
    e.end = bin_start(time_bin{b.day, b.end_bin, spec.bin_minutes}, spec.start);
    e.value = 1.0;
    ds.events.push_back(std::move(e));
  }
  return ds;
}

}  // namespace ts::ingest
