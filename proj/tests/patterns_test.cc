#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "gtest/gtest.h"

#include "nlohmann/json.hpp"

#include "ts/core/error.h"
#include "ts/patterns/cluster_set.h"

#include "test_util.h"

using namespace ts;
using namespace ts::patterns;
using ts::test::ymd;

namespace {

using points_t = std::vector<std::vector<double>>;

ingest::daily_profile profile(int day_offset, std::vector<double> counts) {
  return {"S1",
          date{std::chrono::sys_days{ymd("2013-02-01")} + std::chrono::days{day_offset}},
          std::move(counts)};
}

double sse_of(points_t const& pts, std::vector<int> const& a, int k) {
  auto total = 0.0;
  for (auto c = 0; c != k; ++c) {
    std::vector<double> mean(pts[0].size(), 0.0);
    auto n = 0;
    for (auto i = std::size_t{0}; i != pts.size(); ++i) {
      if (a[i] != c) continue;
      ++n;
      for (auto j = std::size_t{0}; j != mean.size(); ++j) mean[j] += pts[i][j];
    }
    if (n == 0) continue;
    for (auto& m : mean) m /= n;
    for (auto i = std::size_t{0}; i != pts.size(); ++i) {
      if (a[i] != c) continue;
      for (auto j = std::size_t{0}; j != mean.size(); ++j) {
        total += (pts[i][j] - mean[j]) * (pts[i][j] - mean[j]);
      }
    }
  }
  return total;
}

// minimal within-cluster SSE over every split into two non-empty groups
double best_two_partition(points_t const& pts) {
  auto best = std::numeric_limits<double>::infinity();
  auto const n = pts.size();
  for (auto mask = 1U; mask + 1 < (1U << n); ++mask) {
    std::vector<int> a(n);
    for (auto i = std::size_t{0}; i != n; ++i) a[i] = (mask >> i) & 1U;
    best = std::min(best, sse_of(pts, a, 2));
  }
  return best;
}

// three day types, separation 100 against spread <= 5
std::vector<ingest::daily_profile> three_types(int days, std::uint64_t seed,
                                               std::vector<int>& truth) {
  std::mt19937_64 rng{seed};
  std::uniform_real_distribution<double> noise{-5.0, 5.0};
  std::vector<ingest::daily_profile> out;
  truth.clear();
  for (auto d = 0; d != days; ++d) {
    auto const type = static_cast<int>(rng() % 3);
    std::vector<double> c(96);
    for (auto b = 0; b != 96; ++b) {
      c[static_cast<std::size_t>(b)] = 20.0 + 100.0 * type + noise(rng);
    }
    truth.push_back(type);
    out.push_back(profile(d, std::move(c)));
  }
  return out;
}

}  // namespace

TEST(cluster, two_obvious_groups) {
  std::vector<ingest::daily_profile> ps{
      profile(0, std::vector<double>(4, 0.0)), profile(1, std::vector<double>(4, 0.0)),
      profile(2, std::vector<double>(4, 10.0)), profile(3, std::vector<double>(4, 10.0))};
  cluster_options opt;
  opt.k_min = opt.k_max = 2;
  auto const cs = cluster_days(ps, opt);
  ASSERT_EQ(cs.k(), 2);
  EXPECT_EQ(cs.day_count, (std::vector<int>{2, 2}));
  EXPECT_EQ(cs.centroids[0], std::vector<double>(4, 0.0));
  EXPECT_EQ(cs.centroids[1], std::vector<double>(4, 10.0));
  EXPECT_EQ(centroid_value(cs, 1, 0), 10.0);

  points_t pts;
  for (auto const& p : ps) pts.push_back(p.counts);
  std::vector<int> a;
  for (auto const& p : ps) a.push_back(cs.members.at(p.service_day));
  EXPECT_DOUBLE_EQ(sse_of(pts, a, 2), best_two_partition(pts));
}

TEST(cluster, single_cluster_is_elementwise_mean) {
  std::vector<ingest::daily_profile> ps{profile(0, {1, 2, 3}), profile(1, {3, 2, 1}),
                                        profile(2, {5, 5, 5})};
  cluster_options opt;
  opt.k_min = opt.k_max = 1;
  auto const cs = cluster_days(ps, opt);
  ASSERT_EQ(cs.k(), 1);
  EXPECT_EQ(cs.centroids[0], (std::vector<double>{3, 3, 3}));
}

TEST(cluster, identical_profiles_collapse_to_one) {
  std::vector<ingest::daily_profile> ps{profile(0, {4, 4}), profile(1, {4, 4}),
                                        profile(2, {4, 4})};
  auto const cs = cluster_days(ps);
  EXPECT_EQ(cs.k(), 1);
}

TEST(cluster, too_few_profiles) {
  EXPECT_THROW(cluster_days({profile(0, {1})}), config_error);
}

TEST(cluster, kmeans_matches_exhaustive_split_on_separated_sets) {
  std::mt19937_64 rng{3};
  std::normal_distribution<double> noise{0.0, 1.0};
  for (auto trial = 0; trial != 50; ++trial) {
    points_t pts;
    auto const n = 4 + static_cast<int>(rng() % 6);
    for (auto i = 0; i != n; ++i) {
      auto const off = (i % 2) ? 30.0 : 0.0;
      pts.push_back({off + noise(rng), off + noise(rng), noise(rng)});
    }
    auto best = std::numeric_limits<double>::infinity();
    for (auto s = 0U; s != 8U; ++s) best = std::min(best, kmeans(pts, 2, s).sse);
    EXPECT_NEAR(best, best_two_partition(pts), 1e-9) << "trial " << trial;
  }
}

TEST(cluster, centroid_is_member_mean_and_objective_monotone) {
  std::mt19937_64 rng{8};
  std::uniform_real_distribution<double> u{0.0, 50.0};
  for (auto trial = 0; trial != 30; ++trial) {
    points_t pts(25, std::vector<double>(6));
    for (auto& p : pts)
      for (auto& v : p) v = u(rng);
    auto const k = 2 + trial % 4;
    auto const r = kmeans(pts, k, static_cast<std::uint64_t>(trial));
    for (auto i = std::size_t{1}; i < r.objective_trace.size(); ++i) {
      EXPECT_LE(r.objective_trace[i], r.objective_trace[i - 1] + 1e-9);
    }
    for (auto c = 0; c != k; ++c) {
      std::vector<double> mean(6, 0.0);
      auto cnt = 0;
      for (auto i = std::size_t{0}; i != pts.size(); ++i) {
        if (r.assignment[i] != c) continue;
        ++cnt;
        for (auto j = 0; j != 6; ++j) mean[static_cast<std::size_t>(j)] += pts[i][static_cast<std::size_t>(j)];
      }
      ASSERT_GT(cnt, 0);
      for (auto j = 0; j != 6; ++j) {
        EXPECT_NEAR(r.centroids[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)],
                    mean[static_cast<std::size_t>(j)] / cnt, 1e-9);
      }
    }
  }
}

TEST(cluster, recovers_separated_types_and_input_order_is_irrelevant) {
  std::vector<int> truth;
  auto ps = three_types(40, 17, truth);
  auto const cs = cluster_days(ps);
  ASSERT_EQ(cs.k(), 3);
  // partition equality: same-type iff same-cluster
  for (auto i = std::size_t{0}; i != ps.size(); ++i) {
    for (auto j = std::size_t{0}; j != ps.size(); ++j) {
      EXPECT_EQ(truth[i] == truth[j], cs.members.at(ps[i].service_day) ==
                                          cs.members.at(ps[j].service_day));
    }
  }
  auto shuffled = ps;
  std::shuffle(begin(shuffled), end(shuffled), std::mt19937{2});
  auto const cs2 = cluster_days(shuffled);
  EXPECT_EQ(cs2.members, cs.members);
  EXPECT_EQ(cs2.centroids, cs.centroids);

  for (auto const& p : ps) {
    EXPECT_EQ(classify_partial(p.counts, cs).cluster_id, cs.members.at(p.service_day));
  }
}

TEST(cluster, json_roundtrip) {
  std::vector<int> truth;
  auto const cs = cluster_days(three_types(12, 4, truth));
  auto const back = cluster_set_from_json(to_json(cs));
  EXPECT_EQ(back.station, cs.station);
  EXPECT_EQ(back.centroids, cs.centroids);
  EXPECT_EQ(back.members, cs.members);
  EXPECT_EQ(back.day_count, cs.day_count);
}

TEST(classify, examples) {
  cluster_set cs;
  cs.station = "S1";
  cs.centroids = {{0, 0, 0}, {10, 10, 10}};
  cs.day_count = {1, 1};

  std::vector<double> const p{6, 6};
  auto const c = classify_partial(p, cs);
  EXPECT_EQ(c.cluster_id, 1);
  EXPECT_DOUBLE_EQ(c.distances[0], 6.0);
  EXPECT_DOUBLE_EQ(c.distances[1], 4.0);
  EXPECT_EQ(c.bins_observed, 2);

  cs.centroids.push_back({3, 4, 5});
  cs.day_count.push_back(1);
  std::vector<double> const exact{3, 4};
  auto const e = classify_partial(exact, cs);
  EXPECT_EQ(e.cluster_id, 2);
  EXPECT_EQ(e.distances[2], 0.0);

  EXPECT_THROW(classify_partial(std::span<double const>{}, cs), config_error);
  std::vector<double> const too_long(4, 1.0);
  EXPECT_THROW(classify_partial(too_long, cs), config_error);
}

TEST(classify, single_cluster_always_zero) {
  cluster_set cs;
  cs.centroids = {{1, 2, 3}};
  cs.day_count = {5};
  std::vector<double> const p{100, -4};
  EXPECT_EQ(classify_partial(p, cs).cluster_id, 0);
}

TEST(classify, ties_go_to_lowest_id) {
  std::mt19937_64 rng{1};
  for (auto trial = 0; trial != 100; ++trial) {
    auto const v = static_cast<double>(rng() % 20);
    cluster_set cs;
    cs.centroids = {{v + 2, v}, {v - 2, v}, {v, v}, {v + 2, v}};
    cs.day_count = {1, 1, 1, 1};
    std::vector<double> const p{v, v};
    // clusters 0, 1 and 3 are equidistant; 2 is exact
    EXPECT_EQ(classify_partial(p, cs).cluster_id, 2);
    cs.centroids[2] = {v, v + 2};
    EXPECT_EQ(classify_partial(p, cs).cluster_id, 0);
  }
}

TEST(classify, distances_are_non_negative) {
  std::vector<int> truth;
  auto const ps = three_types(15, 9, truth);
  auto const cs = cluster_days(ps);
  std::mt19937_64 rng{2};
  for (auto t = 0; t != 50; ++t) {
    std::vector<double> p(1 + rng() % 96);
    for (auto& v : p) v = static_cast<double>(rng() % 500);
    for (auto const d : classify_partial(p, cs).distances) EXPECT_GE(d, 0.0);
  }
}
