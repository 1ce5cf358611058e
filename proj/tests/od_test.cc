#include <numeric>
#include <random>

#include "gtest/gtest.h"

#include "nlohmann/json.hpp"

#include "ts/core/error.h"
#include "ts/ingest/journeys.h"
#include "ts/ingest/synthetic.h"
#include "ts/od/shares.h"

#include "test_util.h"

using namespace ts;
using namespace ts::od;
using ts::test::at;
using ts::test::ymd;

namespace {

ingest::journey trip(std::string o, std::string d, std::string_view t) {
  return {"c", std::move(o), std::move(d), at(t), at(t) + std::chrono::minutes{10}};
}

destination_shares with_counts(std::vector<double> c, double alpha = 1.0) {
  destination_shares s;
  s.origin = "S1";
  s.first_bin = 32;
  s.last_bin = 35;
  s.alpha = alpha;
  for (auto i = std::size_t{0}; i != c.size(); ++i) {
    s.destinations.push_back("S" + std::to_string(i + 2));
  }
  s.counts = std::move(c);
  return s;
}

forecast::arrival_forecast arrival(double point, int bin = 33) {
  forecast::arrival_forecast f;
  f.station = "S1";
  f.point = point;
  f.clamped_point = std::max(0.0, point);
  f.target_bin = time_bin{ymd("2013-02-05"), bin, 15};
  return f;
}

}  // namespace

TEST(periods, hourly_grouping) {
  period_def const p;
  EXPECT_EQ(p.period_count(), 24);
  EXPECT_EQ(p.period_of(33), 8);
  EXPECT_EQ(p.bins_of(8), (std::pair{32, 35}));
}

TEST(shares, no_journeys_is_uniform) {
  auto const t = estimate_shares({}, test::line(4), "S1", {}, 1.0, 15);
  for (auto const s : t.for_bin(40).shares()) EXPECT_DOUBLE_EQ(s, 1.0 / 3.0);
}

TEST(shares, smoothing_formula) {
  std::vector<ingest::journey> js;
  for (auto i = 0; i != 30; ++i) js.push_back(trip("S1", "S2", "2013-02-05T08:05:00"));
  for (auto i = 0; i != 10; ++i) js.push_back(trip("S1", "S3", "2013-02-05T08:50:00"));
  js.push_back(trip("S1", "S4", "2013-02-05T09:00:00"));  // next period
  js.push_back(trip("S2", "S4", "2013-02-05T08:10:00"));  // other origin
  auto const t = estimate_shares(js, test::line(4), "S1", {}, 1.0, 15);
  auto const s = t.for_bin(33).shares();
  EXPECT_DOUBLE_EQ(s[0], 31.0 / 43.0);
  EXPECT_DOUBLE_EQ(s[1], 11.0 / 43.0);
  EXPECT_DOUBLE_EQ(s[2], 1.0 / 43.0);
  EXPECT_DOUBLE_EQ(t.for_bin(33).share("S3"), 11.0 / 43.0);
}

TEST(shares, vanishing_alpha) {
  std::vector<ingest::journey> js(50, trip("S1", "S2", "2013-02-05T08:05:00"));
  auto const t = estimate_shares(js, test::line(4), "S1", {}, 1e-6, 15);
  EXPECT_NEAR(t.for_bin(32).share("S2"), 1.0, 1e-4);
}

TEST(shares, errors) {
  EXPECT_THROW(estimate_shares({}, test::line(4), "S9", {}, 1.0, 15), config_error);
  EXPECT_THROW(estimate_shares({}, test::line(4), "S1", {}, 0.0, 15), config_error);
  EXPECT_THROW(update_shares_online(with_counts({1, 2}), {}, 0.0), config_error);
}

TEST(online, examples) {
  auto const base = with_counts({30, 10, 0});
  EXPECT_EQ(update_shares_online(base, {}, 1.0).shares(), base.shares());

  auto const up = update_shares_online(base, {{"S4", 43.0}}, 1.0);
  auto const s = up.shares();
  EXPECT_DOUBLE_EQ(s[0], 31.0 / 86.0);
  EXPECT_DOUBLE_EQ(s[1], 11.0 / 86.0);
  EXPECT_DOUBLE_EQ(s[2], 44.0 / 86.0);

  auto const half = update_shares_online(base, {}, 0.5);
  EXPECT_EQ(half.counts, (std::vector<double>{15, 5, 0}));
}

TEST(shares, simplex_and_monotone) {
  std::mt19937_64 rng{12};
  std::uniform_real_distribution<double> u{0.0, 1.0};
  for (auto t = 0; t != 500; ++t) {
    std::vector<double> c(1 + rng() % 6);
    for (auto& v : c) v = std::floor(100 * u(rng));
    auto const alpha = 1e-3 + 5 * u(rng);
    auto const s = with_counts(c, alpha);
    auto const sh = s.shares();
    EXPECT_NEAR(std::accumulate(begin(sh), end(sh), 0.0), 1.0, 1e-12);
    for (auto const v : sh) EXPECT_GT(v, 0.0);
    auto const d = rng() % c.size();
    auto more = s;
    more.counts[d] += 1 + std::floor(10 * u(rng));
    EXPECT_GE(more.shares()[d], sh[d]);
  }
}

TEST(forecast_od, examples) {
  destination_shares s;
  s.first_bin = 32;
  s.last_bin = 35;
  s.destinations = {"S2", "S3"};
  s.counts = {6, 4};
  s.alpha = 1e-12;
  auto const f = forecast_od(arrival(100), s);
  EXPECT_NEAR(f.flows[0].second, 60, 1e-6);
  EXPECT_NEAR(f.flows[1].second, 40, 1e-6);

  auto const zero = forecast_od(arrival(-5), s);
  for (auto const& [d, v] : zero.flows) EXPECT_EQ(v, 0.0);

  auto const exact = forecast_od(arrival(43), with_counts({30, 10, 0}));
  EXPECT_NEAR(exact.flows[0].second, 31, 1e-12);
  EXPECT_NEAR(exact.flows[1].second, 11, 1e-12);
  EXPECT_NEAR(exact.flows[2].second, 1, 1e-12);
  EXPECT_EQ(exact.target_bin->index, 33);

  EXPECT_THROW(forecast_od(arrival(43, 40), with_counts({1, 1})), config_error);
}

TEST(forecast_od, conserves_total) {
  std::mt19937_64 rng{3};
  std::uniform_real_distribution<double> u{0.0, 1.0};
  for (auto t = 0; t != 200; ++t) {
    std::vector<double> c(1 + rng() % 8);
    for (auto& v : c) v = std::floor(50 * u(rng));
    auto const total = 300 * u(rng);
    auto const f = forecast_od(arrival(total), with_counts(c, 0.5));
    auto sum = 0.0;
    for (auto const& [d, v] : f.flows) sum += v;
    EXPECT_NEAR(sum, total, 1e-6);
    EXPECT_NEAR(f.total, total, 1e-6);
  }
}

TEST(shares, converge_on_synthetic_journeys) {
  auto const topo = test::line(4);
  ingest::gen_spec spec;
  for (auto const& st : topo.stations) {
    ingest::day_type_spec dt;
    dt.rates.assign(96, 0.0);
    if (st.id == "S1") {
      for (auto b = 32; b != 36; ++b) dt.rates[static_cast<std::size_t>(b)] = 3000.0;
      dt.od_shares = {{"S2", 0.5}, {"S3", 0.3}, {"S4", 0.2}};
    }
    spec.stations[st.id] = ingest::station_gen_spec{{dt}, {}};
  }
  auto const ds = ingest::generate_dataset(spec, topo, ymd("2013-02-05"), 1, 4);
  auto const linked = ingest::link_journeys(ds.taps);
  ASSERT_GE(linked.journeys.size(), 10000U);
  auto const t = estimate_shares(linked.journeys, topo, "S1", {}, 1.0, 15);
  auto const& p = t.for_bin(32);
  EXPECT_NEAR(p.share("S2"), 0.5, 0.02);
  EXPECT_NEAR(p.share("S3"), 0.3, 0.02);
  EXPECT_NEAR(p.share("S4"), 0.2, 0.02);
}

TEST(shares, json_roundtrip) {
  auto const topo = test::line(4);
  std::vector<ingest::journey> js(7, trip("S1", "S3", "2013-02-05T08:05:00"));
  auto const t = estimate_shares(js, topo, "S1", {}, 0.5, 15);
  auto const back = share_table_from_json(to_json(t), topo);
  EXPECT_EQ(back.periods.size(), t.periods.size());
  EXPECT_EQ(back.for_bin(33).counts, t.for_bin(33).counts);
  EXPECT_EQ(back.alpha, 0.5);
}
