#include <random>
#include <sstream>

#include "gtest/gtest.h"

#include "nlohmann/json.hpp"

#include "ts/core/error.h"
#include "ts/sim/export.h"
#include "ts/sim/sim.h"

#include "test_util.h"

using namespace ts;
using namespace ts::sim;
using ts::test::at;
using ts::test::ymd;

namespace {

time_bin const first{ymd("2013-02-05"), 32, 15};

sim_config config_for(line_topology topo, int horizon_s = 1800) {
  sim_config c;
  c.topology = std::move(topo);
  c.horizon_s = horizon_s;
  c.audit = true;
  return c;
}

train_state pending_train(std::string id, std::size_t n, double at_s, int cap) {
  return train_state{std::move(id), 0, train_phase::pending, at_s, std::vector<int>(n, 0), cap};
}

platform_state queue_of(std::size_t station,
                        std::vector<std::pair<std::size_t, int>> groups) {
  platform_state p;
  p.station = station;
  auto id = std::uint64_t{1};
  auto t = 0.0;
  for (auto const& [dest, count] : groups) {
    p.queue.push_back(passenger_group{id++, dest, count, t, -1});
    t += 5.0;
  }
  return p;
}

struct oracle_outcome {
  int boarded{0}, alighted{0}, denied{0};
  std::vector<std::uint64_t> boarded_ids;  // one entry per passenger
  std::vector<int> load;
};

// passenger-by-passenger boarding
oracle_outcome board_oracle(train_state const& t, platform_state const& p) {
  oracle_outcome o;
  o.load = t.load_by_dest;
  o.alighted = o.load[t.station];
  o.load[t.station] = 0;
  auto onboard = 0;
  for (auto const v : o.load) onboard += v;
  std::vector<std::pair<std::uint64_t, std::size_t>> pax;
  for (auto const& g : p.queue)
    for (auto i = 0; i != g.count; ++i) pax.emplace_back(g.id, g.destination);
  for (auto const& [id, dest] : pax) {
    if (onboard < t.capacity) {
      ++onboard;
      ++o.load[dest];
      ++o.boarded;
      o.boarded_ids.push_back(id);
    } else {
      ++o.denied;
    }
  }
  return o;
}

int left_behind_total(sim_result const& r, std::size_t s) {
  auto sum = 0;
  for (auto const& b : r.platforms[s]) sum += b.left_behind;
  return sum;
}

}  // namespace

TEST(init_trains, headway_spawn) {
  auto const topo = test::line(3, 120, 30, 100, 120);
  auto const trains = init_trains(topo, 600);
  ASSERT_EQ(trains.size(), 5U);
  for (auto i = std::size_t{0}; i != 5; ++i) {
    EXPECT_EQ(trains[i].event_s, 120.0 * static_cast<double>(i));
    EXPECT_EQ(trains[i].phase, train_phase::pending);
    EXPECT_EQ(trains[i].load(), 0);
  }
}

TEST(init_trains, report_placement_and_split) {
  auto const topo = test::line(4, 120);
  ingest::train_position_report const r{"train7", "S2", 30, 50, at("2013-02-05T08:00:00")};
  std::vector<std::vector<double>> w(4, std::vector<double>(4, 0.0));
  w[1][2] = 0.8;
  w[1][3] = 0.2;
  auto const trains = init_trains(topo, 1800, {r}, at("2013-02-05T08:00:00"), w);
  ASSERT_EQ(trains.size(), 1U);
  EXPECT_EQ(trains[0].station, 1U);
  EXPECT_EQ(trains[0].phase, train_phase::running);
  EXPECT_EQ(trains[0].event_s, 90.0);
  EXPECT_EQ(trains[0].load_by_dest, (std::vector<int>{0, 0, 40, 10}));

  // stale report: 20 s of age moves the arrival forward
  auto const aged = init_trains(topo, 1800, {r}, at("2013-02-05T08:00:20"), w);
  EXPECT_EQ(aged[0].event_s, 70.0);

  ingest::train_position_report const bad{"x", "S9", 0, std::nullopt, {}};
  EXPECT_THROW(init_trains(topo, 1800, {bad}), config_error);
}

TEST(init_trains, report_load_capped_at_capacity) {
  auto const topo = test::line(3, 120, 30, 100);
  ingest::train_position_report const r{"t", "S1", 0, 400, {}};
  EXPECT_EQ(init_trains(topo, 1800, {r})[0].load(), 100);
}

TEST(board_alight, examples) {
  train_state t{"t", 1, train_phase::dwelling, 0.0, {0, 20, 70}, 100};
  auto const r = board_alight(t, queue_of(1, {{2, 40}}));
  EXPECT_EQ(r.alighted, 20);
  EXPECT_EQ(r.boarded, 30);
  EXPECT_EQ(r.denied, 10);
  EXPECT_EQ(r.train.load(), 100);
  EXPECT_EQ(r.platform.waiting(), 10);

  auto const empty_q = board_alight(t, queue_of(1, {}));
  EXPECT_EQ(empty_q.boarded, 0);
  EXPECT_EQ(empty_q.denied, 0);
  EXPECT_EQ(empty_q.train.load(), 70);

  train_state e{"e", 0, train_phase::dwelling, 0.0, {0, 0, 0}, 100};
  auto const big = board_alight(e, queue_of(0, {{1, 60}, {2, 60}, {1, 30}}));
  EXPECT_EQ(big.boarded, 100);
  EXPECT_EQ(big.denied, 50);
  ASSERT_EQ(big.boarded_groups.size(), 2U);
  EXPECT_EQ(big.boarded_groups[0], (std::pair<std::uint64_t, int>{1, 60}));
  EXPECT_EQ(big.boarded_groups[1], (std::pair<std::uint64_t, int>{2, 40}));
  EXPECT_EQ(big.platform.queue.front().id, 2U);
  EXPECT_EQ(big.platform.queue.front().count, 20);
}

TEST(board_alight, matches_passenger_oracle) {
  std::mt19937_64 rng{31};
  for (auto trial = 0; trial != 500; ++trial) {
    auto const n = 3 + rng() % 4;
    auto const s = rng() % (n - 1);
    train_state t{"t", s, train_phase::dwelling, 0.0, std::vector<int>(n, 0),
                  static_cast<int>(1 + rng() % 60)};
    auto room = t.capacity;
    for (auto d = s; d != n && room > 0; ++d) {
      auto const v = static_cast<int>(rng() % static_cast<unsigned>(room + 1));
      t.load_by_dest[d] = v;
      room -= v;
    }
    std::vector<std::pair<std::size_t, int>> groups;
    for (auto g = rng() % 5; g != 0; --g) {
      groups.emplace_back(s + 1 + rng() % (n - s - 1), static_cast<int>(1 + rng() % 25));
    }
    auto const p = queue_of(s, groups);
    auto const got = board_alight(t, p);
    auto const want = board_oracle(t, p);
    EXPECT_EQ(got.alighted, want.alighted);
    EXPECT_EQ(got.boarded, want.boarded);
    EXPECT_EQ(got.denied, want.denied);
    EXPECT_EQ(got.train.load_by_dest, want.load);
    std::vector<std::uint64_t> ids;
    for (auto const& [id, c] : got.boarded_groups)
      for (auto i = 0; i != c; ++i) ids.push_back(id);
    EXPECT_EQ(ids, want.boarded_ids);
  }
}

TEST(run, zero_demand) {
  auto const topo = test::line(4);
  auto const cfg = config_for(topo);
  auto const r = run(cfg, demand_table::zeros(4, 2, first), init_trains(topo, cfg.horizon_s));
  for (auto const& st : r.platforms) {
    for (auto const& b : st) {
      EXPECT_EQ(b.waiting_max, 0);
      EXPECT_EQ(b.left_behind, 0);
      EXPECT_EQ(b.arrivals, 0);
    }
  }
  for (auto const& t : r.train_log) EXPECT_EQ(t.load, 0);
}

TEST(run, one_train_carries_demand) {
  auto const topo = test::line(2, 120, 30, 100);
  auto d = demand_table::zeros(2, 2, first);
  d.flows[0][0][1] = 40.0;
  auto const r = run(config_for(topo), d, {pending_train("T0", 2, 900, 100)});
  ASSERT_EQ(r.train_log.size(), 1U);  // the terminal has no departure
  EXPECT_EQ(r.train_log[0].depart_s, 930.0);
  EXPECT_EQ(r.train_log[0].load, 40);
  EXPECT_EQ(r.totals.alighted, 40);
  EXPECT_EQ(r.totals.onboard, 0);
  EXPECT_EQ(left_behind_total(r, 0), 0);
  EXPECT_EQ(r.platforms[0][0].arrivals, 40);
}

TEST(run, overload_leaves_passengers_behind) {
  auto const topo = test::line(2, 120, 30, 100);
  auto d = demand_table::zeros(2, 2, first);
  d.flows[0][0][1] = 150.0;
  auto const r = run(config_for(topo), d, {pending_train("T0", 2, 900, 100)});
  EXPECT_EQ(r.train_log[0].load, 100);
  EXPECT_EQ(r.platforms[0][1].left_behind, 50);
  EXPECT_EQ(r.platforms[0][0].left_behind, 0);
  EXPECT_EQ(r.totals.waiting, 50);
  EXPECT_EQ(r.totals.generated, r.totals.onboard + r.totals.alighted + r.totals.waiting);
}

TEST(run, horizon_beyond_demand_is_rejected) {
  auto const topo = test::line(2);
  EXPECT_THROW(run(config_for(topo, 2700), demand_table::zeros(2, 2, first), {}),
               config_error);
}

TEST(run, upstream_flows_are_tallied_not_simulated) {
  auto const topo = test::line(3);
  auto d = demand_table::zeros(3, 2, first);
  d.flows[0][2][0] = 25.0;
  auto const r = run(config_for(topo), d, init_trains(topo, 1800));
  EXPECT_EQ(r.totals.generated, 0);
  EXPECT_DOUBLE_EQ(r.totals.out_of_direction, 25.0);
}

namespace {

demand_table random_demand(std::mt19937_64& rng, std::size_t n, int bins, double scale) {
  std::uniform_real_distribution<double> u{0.0, 1.0};
  auto d = demand_table::zeros(n, bins, first);
  for (auto& b : d.flows)
    for (auto o = std::size_t{0}; o != n; ++o)
      for (auto k = o + 1; k < n; ++k) b[o][k] = scale * u(rng);
  return d;
}

}  // namespace

TEST(run, conservation_capacity_and_unique_bound) {
  std::mt19937_64 rng{77};
  for (auto trial = 0; trial != 20; ++trial) {
    auto const topo = test::line(5, 90, 20, 60, 180);
    auto cfg = config_for(topo);
    cfg.mode = trial % 2 ? arrival_mode::poisson_sample : arrival_mode::expected_flow;
    cfg.seed = static_cast<std::uint64_t>(trial);
    auto const d = random_demand(rng, 5, 2, 120.0);
    auto const r = run(cfg, d, init_trains(topo, cfg.horizon_s));  // audit on
    auto const& t = r.totals;
    EXPECT_EQ(t.generated + t.initial_onboard, t.onboard + t.alighted + t.waiting);
    for (auto s = std::size_t{0}; s != 5; ++s) {
      auto arrivals = 0, unique = 0;
      for (auto const& b : r.platforms[s]) {
        arrivals += b.arrivals;
        unique += b.left_behind_unique;
        EXPECT_GE(b.waiting_avg, 0.0);
        EXPECT_LE(b.left_behind_unique, b.left_behind);
      }
      EXPECT_LE(unique, 2 * arrivals);  // at most once per passenger per bin
    }
    for (auto const& rec : r.train_log) EXPECT_LE(rec.load, topo.capacity);
  }
}

TEST(run, deterministic_per_seed) {
  std::mt19937_64 rng{5};
  auto const topo = test::line(4);
  auto const d = random_demand(rng, 4, 2, 80.0);
  for (auto const mode : {arrival_mode::expected_flow, arrival_mode::poisson_sample}) {
    auto cfg = config_for(topo);
    cfg.mode = mode;
    cfg.seed = 99;
    auto const trains = init_trains(topo, cfg.horizon_s);
    EXPECT_EQ(to_json(run(cfg, d, trains)).dump(), to_json(run(cfg, d, trains)).dump());
  }
}

TEST(run, fifo_boarding_order_at_each_platform) {
  std::mt19937_64 rng{8};
  auto const topo = test::line(4, 60, 20, 30, 120);
  auto cfg = config_for(topo);
  cfg.record_trace = true;
  cfg.mode = arrival_mode::poisson_sample;
  auto const r = run(cfg, random_demand(rng, 4, 2, 60.0), init_trains(topo, cfg.horizon_s));
  ASSERT_TRUE(r.trace);
  std::map<std::uint64_t, std::pair<std::size_t, double>> arrival;
  for (auto const& a : r.trace->arrivals) arrival[a.group] = {a.station, a.time_s};
  std::map<std::size_t, double> last_boarded;
  for (auto const& dep : r.trace->departures) {
    for (auto const& [g, c] : dep.boarded_groups) {
      auto const [st, t] = arrival.at(g);
      EXPECT_EQ(st, dep.station);
      EXPECT_GE(t, last_boarded[st]);
      last_boarded[st] = t;
    }
  }
}

TEST(run, monotone_overload) {
  std::mt19937_64 rng{13};
  auto const topo = test::line(4, 90, 20, 50, 240);
  auto const cfg = config_for(topo);
  auto const trains = init_trains(topo, cfg.horizon_s);
  for (auto trial = 0; trial != 30; ++trial) {
    auto d = random_demand(rng, 4, 2, 100.0);
    auto const o = rng() % 3;
    auto const before = left_behind_total(run(cfg, d, trains), o);
    for (auto& b : d.flows)
      for (auto k = o + 1; k < 4; ++k) b[o][k] *= 1.5;
    EXPECT_GE(left_behind_total(run(cfg, d, trains), o), before);
  }
}

TEST(ensemble, single_run_equals_run) {
  auto const topo = test::line(3);
  std::mt19937_64 rng{1};
  auto const d = random_demand(rng, 3, 2, 50.0);
  auto cfg = config_for(topo);
  cfg.mode = arrival_mode::poisson_sample;
  cfg.seed = 4;
  auto const trains = init_trains(topo, cfg.horizon_s);
  auto const e = run_ensemble(cfg, d, trains, 1);
  ASSERT_EQ(e.size(), 1U);
  EXPECT_EQ(to_json(e[0]).dump(), to_json(run(cfg, d, trains)).dump());

  auto const zeros = run_ensemble(cfg, demand_table::zeros(3, 2, first), trains, 5);
  for (auto const& r : zeros) EXPECT_EQ(to_json(r).dump(), to_json(zeros[0]).dump());
}

TEST(ensemble, mean_left_behind_near_expected_flow) {
  auto const topo = test::line(2, 120, 30, 100);
  auto d = demand_table::zeros(2, 2, first);
  d.flows[0][0][1] = 150.0;
  auto const cfg = config_for(topo);
  std::vector<train_state> const trains{pending_train("T0", 2, 900, 100)};
  auto const expected = left_behind_total(run(cfg, d, trains), 0);
  auto const e = run_ensemble(cfg, d, trains, 50);
  auto sum = 0.0;
  for (auto const& r : e) sum += left_behind_total(r, 0);
  EXPECT_NEAR(sum / 50.0, expected, 0.15 * expected);
}

TEST(export_, csv_headers) {
  auto const topo = test::line(2, 120, 30, 100);
  auto d = demand_table::zeros(2, 2, first);
  d.flows[0][0][1] = 40.0;
  auto const r = run(config_for(topo), d, {pending_train("T0", 2, 900, 100)});
  std::ostringstream p, t;
  write_platform_csv(p, r);
  write_train_csv(t, r);
  EXPECT_EQ(p.str().substr(0, p.str().find('\n')),
            "station,bin,waiting_avg,waiting_max,left_behind,arrivals");
  EXPECT_EQ(t.str().substr(0, t.str().find('\n')), "train_id,station,depart_s,load");
  EXPECT_NE(t.str().find("T0,S1,930,40"), std::string::npos);
}

TEST(topology, rounding_to_ticks) {
  auto topo = test::line(3, 125, 34);
  topo.run_s[1] = 3;
  auto const r = rounded_topology(topo, 10);
  EXPECT_EQ(r.run_s[0], 130);
  EXPECT_EQ(r.run_s[1], 10);
  EXPECT_EQ(r.stations[0].dwell_s, 30);
}
