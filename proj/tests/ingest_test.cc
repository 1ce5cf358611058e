#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "gtest/gtest.h"

#include "nlohmann/json.hpp"

#include "ts/core/error.h"
#include "ts/ingest/afc.h"
#include "ts/ingest/events.h"
#include "ts/ingest/journeys.h"
#include "ts/ingest/positions.h"
#include "ts/ingest/profiles.h"
#include "ts/ingest/synthetic.h"

#include "test_util.h"

using namespace ts;
using namespace ts::ingest;
using ts::test::at;
using ts::test::ymd;

namespace {

tap_event tap(std::string card, std::string st, direction d, std::string_view t) {
  return tap_event{std::move(card), std::move(st), d, at(t)};
}

auto const in = direction::entry;
auto const out = direction::exit;

}  // namespace

TEST(afc, parses_rows_and_collects_errors) {
  auto const topo = test::line(3);
  std::istringstream s{
      "card_id,station_id,direction,timestamp\n"
      "c1,S1,in,2013-02-05T08:01:02\n"
      "c1,S9,in,2013-02-05T08:01:02\n"
      "c1,S1,in,not-a-time\n"
      "c1,S1,sideways,2013-02-05T08:01:02\n"
      "c2,S2,out,2013-02-05T08:11:00\n"};
  auto const r = parse_afc(s, topo);
  ASSERT_EQ(r.taps.size(), 2U);
  EXPECT_EQ(r.taps[0], tap("c1", "S1", in, "2013-02-05T08:01:02"));
  EXPECT_EQ(r.taps[1].dir, out);
  ASSERT_EQ(r.errors.size(), 3U);
  EXPECT_EQ(r.errors[0].line_no, 3U);
  EXPECT_NE(r.errors[0].reason.find("unknown station"), std::string::npos);
  EXPECT_EQ(r.errors[1].reason, "bad timestamp");
  EXPECT_EQ(r.errors[2].reason, "bad direction");
}

TEST(afc, write_then_parse_is_identity) {
  auto const topo = test::line(3);
  std::vector<tap_event> taps{tap("a", "S1", in, "2013-02-05T08:00:00"),
                              tap("a", "S3", out, "2013-02-05T08:20:00")};
  std::stringstream ss;
  write_afc(ss, taps);
  auto const r = parse_afc(ss, topo);
  EXPECT_TRUE(r.errors.empty());
  EXPECT_EQ(r.taps, taps);
}

TEST(journeys, examples) {
  auto r = link_journeys({tap("c1", "A", in, "2013-02-05T08:00:00"),
                          tap("c1", "B", out, "2013-02-05T08:20:00")});
  ASSERT_EQ(r.journeys.size(), 1U);
  EXPECT_EQ(r.journeys[0].origin, "A");
  EXPECT_EQ(r.journeys[0].destination, "B");

  r = link_journeys({tap("c1", "A", in, "2013-02-05T08:00:00"),
                     tap("c1", "B", out, "2013-02-05T13:00:00")});
  EXPECT_TRUE(r.journeys.empty());
  EXPECT_EQ(r.unlinked.size(), 2U);

  r = link_journeys({tap("c1", "A", in, "2013-02-05T08:00:00"),
                     tap("c1", "A", in, "2013-02-05T09:00:00"),
                     tap("c1", "B", out, "2013-02-05T09:30:00")});
  ASSERT_EQ(r.journeys.size(), 1U);
  EXPECT_EQ(r.journeys[0].entry_time, at("2013-02-05T09:00:00"));
  ASSERT_EQ(r.unlinked.size(), 1U);
  EXPECT_EQ(r.unlinked[0].timestamp, at("2013-02-05T08:00:00"));
}

TEST(journeys, same_station_pairs_are_dropped_and_counted) {
  auto const r = link_journeys({tap("c1", "A", in, "2013-02-05T08:00:00"),
                                tap("c1", "A", out, "2013-02-05T08:05:00")});
  EXPECT_TRUE(r.journeys.empty());
  EXPECT_EQ(r.same_station_pairs, 1U);
  EXPECT_EQ(r.unlinked.size(), 2U);
}

TEST(journeys, unsorted_input_is_sorted) {
  auto const r = link_journeys({tap("c1", "B", out, "2013-02-05T08:20:00"),
                                tap("c1", "A", in, "2013-02-05T08:00:00")});
  EXPECT_EQ(r.journeys.size(), 1U);
}

// Brute force: a journey is any (entry, exit) pair of one card with no other
// tap of that card in between, exit strictly later and within the gap.
TEST(journeys, matches_brute_force_on_small_inputs) {
  std::mt19937 rng{11};
  std::vector<std::string> const stations{"A", "B", "C"};
  auto const max_gap = std::chrono::hours{4};
  for (auto trial = 0; trial != 500; ++trial) {
    auto const n = std::uniform_int_distribution<int>{0, 5}(rng);
    std::vector<tap_event> taps;
    std::vector<int> minutes(24 * 60);
    std::iota(begin(minutes), end(minutes), 0);
    std::shuffle(begin(minutes), end(minutes), rng);
    for (auto i = 0; i != n; ++i) {
      tap_event t;
      t.card_id = rng() % 2 ? "x" : "y";
      t.station = stations[rng() % 3];
      t.dir = rng() % 2 ? in : out;
      t.timestamp = at("2013-02-05T00:00:00") + std::chrono::minutes{minutes[i]};
      taps.push_back(t);
    }

    using key = std::tuple<std::string, std::string, std::string, instant, instant>;
    std::set<key> expected;
    for (auto const& e : taps) {
      for (auto const& x : taps) {
        if (e.card_id != x.card_id || e.dir != in || x.dir != out ||
            !(x.timestamp > e.timestamp) || x.timestamp - e.timestamp > max_gap ||
            e.station == x.station) {
          continue;
        }
        auto const between = std::any_of(begin(taps), end(taps), [&](auto const& o) {
          return o.card_id == e.card_id && o.timestamp > e.timestamp &&
                 o.timestamp < x.timestamp;
        });
        if (!between) {
          expected.emplace(e.card_id, e.station, x.station, e.timestamp, x.timestamp);
        }
      }
    }

    auto const r = link_journeys(taps, max_gap);
    std::set<key> got;
    for (auto const& j : r.journeys) {
      got.emplace(j.card_id, j.origin, j.destination, j.entry_time, j.exit_time);
    }
    ASSERT_EQ(got, expected) << "trial " << trial;
    ASSERT_EQ(2 * r.journeys.size() + r.unlinked.size(), taps.size());
  }
}

TEST(profiles, examples) {
  EXPECT_TRUE(build_daily_profiles({}, "S1", 15).empty());

  auto const p = build_daily_profiles({tap("a", "S1", in, "2013-02-05T08:00:00"),
                                       tap("b", "S1", in, "2013-02-05T08:05:00"),
                                       tap("c", "S1", in, "2013-02-05T08:14:59"),
                                       tap("c", "S2", out, "2013-02-05T08:30:00")},
                                      "S1", 15);
  ASSERT_EQ(p.size(), 1U);
  EXPECT_EQ(p[0].counts.size(), 96U);
  EXPECT_EQ(p[0].counts[32], 3.0);
  EXPECT_EQ(std::accumulate(begin(p[0].counts), end(p[0].counts), 0.0), 3.0);
}

TEST(profiles, midnight_split_matches_independent_recount) {
  std::vector<tap_event> taps;
  std::mt19937 rng{5};
  auto const base = at("2013-02-05T22:00:00");
  for (auto i = 0; i != 300; ++i) {
    taps.push_back(tap_event{"c" + std::to_string(i), rng() % 4 ? "S1" : "S2",
                             rng() % 5 ? in : out,
                             base + std::chrono::seconds{rng() % (4 * 3600)}});
  }
  auto const profiles = build_daily_profiles(taps, "S1", 15);
  ASSERT_EQ(profiles.size(), 2U);
  EXPECT_EQ(profiles[0].service_day, ymd("2013-02-05"));
  EXPECT_EQ(profiles[1].service_day, ymd("2013-02-06"));

  // recount: bucket seconds since a fixed epoch without bin_of
  std::map<std::pair<int, int>, double> recount;
  auto const midnight = at("2013-02-05T00:00:00");
  auto total = 0.0;
  for (auto const& t : taps) {
    if (t.station != "S1" || t.dir != in) continue;
    auto const secs = (t.timestamp - midnight).count();
    recount[{static_cast<int>(secs / 86400), static_cast<int>(secs % 86400 / 900)}] += 1;
    total += 1;
  }
  auto sum = 0.0;
  for (auto d = 0; d != 2; ++d) {
    for (auto b = 0; b != 96; ++b) {
      auto const it = recount.find({d, b});
      EXPECT_EQ(profiles[static_cast<std::size_t>(d)].counts[static_cast<std::size_t>(b)],
                it == end(recount) ? 0.0 : it->second);
      sum += profiles[static_cast<std::size_t>(d)].counts[static_cast<std::size_t>(b)];
    }
  }
  EXPECT_EQ(sum, total);
}

TEST(events, exog_examples) {
  std::vector<std::string> const schema{"major_event_nearby", "planned_closure",
                                        "weather_flag"};
  auto const none = exog_at({}, schema, "S3", {ymd("2013-02-05"), 76, 15});
  EXPECT_EQ(none.values, std::vector<double>(3, 0.0));

  auto const entries = load_events(nlohmann::json::parse(R"([
      {"name":"major_event_nearby","stations":["S3"],
       "start":"2013-02-05T18:00:00","end":"2013-02-05T23:00:00","value":1}])"),
                                   schema);
  auto const hit = exog_at(entries, schema, "S3", {ymd("2013-02-05"), 76, 15});
  EXPECT_EQ(hit.values, (std::vector<double>{1.0, 0.0, 0.0}));
  auto const miss = exog_at(entries, schema, "S1", {ymd("2013-02-05"), 76, 15});
  EXPECT_EQ(miss.values, std::vector<double>(3, 0.0));
  // [start, end) is half open
  auto const after = exog_at(entries, schema, "S3", {ymd("2013-02-05"), 92, 15});
  EXPECT_EQ(after.values[0], 0.0);
}

TEST(events, combine_by_max_and_global_scope) {
  std::vector<std::string> const schema{"weather_flag"};
  auto const entries = load_events(nlohmann::json::parse(R"([
      {"name":"weather_flag","start":"2013-02-05T08:00:00","end":"2013-02-05T09:00:00","value":0.5},
      {"name":"weather_flag","start":"2013-02-05T08:10:00","end":"2013-02-05T08:20:00","value":1}])"),
                                   schema);
  EXPECT_EQ(exog_at(entries, schema, "S7", {ymd("2013-02-05"), 32, 15}).values[0], 1.0);
  EXPECT_EQ(exog_at(entries, schema, "S7", {ymd("2013-02-05"), 34, 15}).values[0], 0.5);
}

TEST(events, unknown_covariate_is_named) {
  try {
    load_events(nlohmann::json::parse(R"([{"name":"parade","start":"2013-02-05T08:00:00",
                                           "end":"2013-02-05T09:00:00"}])"),
                {"weather_flag"});
    FAIL();
  } catch (config_error const& e) {
    EXPECT_NE(std::string{e.what()}.find("parade"), std::string::npos);
  }
}

TEST(positions, parse_json_lines) {
  auto const topo = test::line(3);
  std::istringstream s{
      R"({"train_id":"t7","last_station":"S2","offset_s":30,"load":50,"ts":"2013-02-05T08:00:00"})"
      "\n"
      R"({"train_id":"t8","last_station":"S9","offset_s":0,"ts":"2013-02-05T08:00:00"})"
      "\n"
      "garbage\n"};
  auto const r = parse_positions(s, topo);
  ASSERT_EQ(r.reports.size(), 1U);
  EXPECT_EQ(r.reports[0].train_id, "t7");
  EXPECT_EQ(*r.reports[0].load_estimate, 50);
  EXPECT_EQ(r.errors.size(), 2U);
}

namespace {

gen_spec flat_spec(line_topology const& topo, double rate, int bin) {
  gen_spec spec;
  for (auto const& s : topo.stations) {
    day_type_spec dt;
    dt.rates.assign(96, 0.0);
    if (s.id == "S1") {
      dt.rates[static_cast<std::size_t>(bin)] = rate;
      dt.od_shares = {{"S2", 0.7}, {"S3", 0.2}, {"S4", 0.1}};
    }
    spec.stations[s.id] = station_gen_spec{{dt}, {{"S2", 300}, {"S3", 600}}};
  }
  return spec;
}

}  // namespace

TEST(synthetic, zero_rate_yields_no_taps) {
  auto const topo = test::line(4);
  EXPECT_TRUE(generate_synthetic_day(flat_spec(topo, 0.0, 32), topo,
                                     ymd("2013-02-05"), 1).empty());
}

TEST(synthetic, negative_rate_is_config_error) {
  auto const topo = test::line(4);
  auto spec = flat_spec(topo, 10.0, 32);
  spec.stations["S1"].day_types[0].rates[3] = -1.0;
  EXPECT_THROW(generate_synthetic_day(spec, topo, ymd("2013-02-05"), 1), config_error);
}

TEST(synthetic, poisson_mean_over_replications) {
  auto const topo = test::line(4);
  auto const spec = flat_spec(topo, 100.0, 32);
  auto sum = 0.0, sq = 0.0;
  auto const reps = 1000;
  for (auto r = 0; r != reps; ++r) {
    auto const taps = generate_synthetic_day(spec, topo, ymd("2013-02-05"),
                                             static_cast<std::uint64_t>(r));
    auto const n = static_cast<double>(std::count_if(
        begin(taps), end(taps), [](auto const& t) { return t.dir == direction::entry; }));
    sum += n;
    sq += n * n;
  }
  auto const mean = sum / reps;
  auto const var = sq / reps - mean * mean;
  EXPECT_GE(mean, 95.0);
  EXPECT_LE(mean, 105.0);
  EXPECT_NEAR(var, 100.0, 20.0);
}

TEST(synthetic, deterministic_and_entries_in_their_bin) {
  auto const topo = test::line(4);
  auto const spec = flat_spec(topo, 50.0, 32);
  auto const a = generate_synthetic_day(spec, topo, ymd("2013-02-05"), 9);
  auto const b = generate_synthetic_day(spec, topo, ymd("2013-02-05"), 9);
  std::stringstream sa, sb;
  write_afc(sa, a);
  write_afc(sb, b);
  EXPECT_EQ(sa.str(), sb.str());
  for (auto const& t : a) {
    if (t.dir == direction::entry) {
      EXPECT_EQ(bin_of(t.timestamp, 15).index, 32);
    }
  }
  auto const linked = link_journeys(a);
  EXPECT_EQ(linked.journeys.size() * 2, a.size());
}

TEST(synthetic, destination_frequencies_converge_to_shares) {
  auto const topo = test::line(4);
  auto spec = flat_spec(topo, 12000.0, 40);
  auto const taps = generate_synthetic_day(spec, topo, ymd("2013-02-05"), 3);
  auto const r = link_journeys(taps);
  ASSERT_GE(r.journeys.size(), 10000U);
  std::map<std::string, double> freq;
  for (auto const& j : r.journeys) {
    freq[j.destination] += 1.0 / static_cast<double>(r.journeys.size());
  }
  EXPECT_NEAR(freq["S2"], 0.7, 0.02);
  EXPECT_NEAR(freq["S3"], 0.2, 0.02);
  EXPECT_NEAR(freq["S4"], 0.1, 0.02);
}

TEST(synthetic, dataset_emits_announced_boosts_as_events) {
  auto const topo = test::line(4, 120, 30, 100, 120, {"major_event_nearby"});
  auto spec = flat_spec(topo, 10.0, 32);
  spec.boosts.push_back(event_boost{{"S1"}, ymd("2013-02-06"), 30, 34, 1.0, 40.0,
                                    std::string{"major_event_nearby"}});
  spec.boosts.push_back(event_boost{{"S1"}, ymd("2013-02-06"), 50, 54, 1.0, 40.0,
                                    std::nullopt});
  auto const ds = generate_dataset(spec, topo, ymd("2013-02-05"), 3, 1);
  ASSERT_EQ(ds.events.size(), 1U);
  EXPECT_EQ(ds.events[0].start, at("2013-02-06T07:30:00"));
  EXPECT_EQ(ds.events[0].end, at("2013-02-06T08:30:00"));
  auto const profiles = build_daily_profiles(ds.taps, "S1", 15);
  ASSERT_EQ(profiles.size(), 3U);
  EXPECT_GT(profiles[1].counts[30], 0.0);
}

TEST(synthetic, spec_json_roundtrip_fields) {
  auto const j = nlohmann::json::parse(R"({
    "bin_minutes":15,"day_type_by_weekday":[1,0,0,0,0,0,1],
    "level_ar":{"phi":0.9,"sigma":2},
    "stations":{"S1":{"day_types":[{"rates":[],"od_shares":{"S2":1}}],"travel_s":{"S2":200}}},
    "boosts":[{"stations":["S1"],"date":"2013-02-05","start_bin":1,"end_bin":3,"add":5}]})");
  auto const spec = gen_spec_from_json(j);
  EXPECT_EQ(spec.day_type_of(ymd("2013-02-09")), 1);  // Saturday
  EXPECT_EQ(spec.day_type_of(ymd("2013-02-05")), 0);
  EXPECT_DOUBLE_EQ(spec.level->phi, 0.9);
  EXPECT_FALSE(spec.boosts[0].covariate.has_value());
}
