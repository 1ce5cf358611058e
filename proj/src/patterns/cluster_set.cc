#include "ts/patterns/cluster_set.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>

#include "nlohmann/json.hpp"
#include "spdlog/spdlog.h"

#include "ts/core/error.h"

namespace ts::patterns {

namespace {

using point = std::vector<double>;

double sq_dist(point const& a, point const& b) {
  auto sum = 0.0;
  for (auto i = std::size_t{0}; i != a.size(); ++i) {
    auto const d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

std::vector<point> kmeanspp_init(std::vector<point> const& points, int k,
                                 std::mt19937_64& rng) {
  std::vector<point> centers;
  auto const n = points.size();
  centers.push_back(
      points[std::uniform_int_distribution<std::size_t>{0, n - 1}(rng)]);
  std::vector<double> d2(n, std::numeric_limits<double>::max());
  while (static_cast<int>(centers.size()) < k) {
    auto total = 0.0;
    for (auto i = std::size_t{0}; i != n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(points[i], centers.back()));
      total += d2[i];
    }
    if (total == 0.0) {
      // all points coincide with chosen centers
      centers.push_back(centers.back());
      continue;
    }
    auto target = std::uniform_real_distribution<double>{0.0, total}(rng);
    auto chosen = n - 1;
    for (auto i = std::size_t{0}; i != n; ++i) {
      target -= d2[i];
      if (target < 0.0 && d2[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(points[chosen]);
  }
  return centers;
}

// Returns true if any assignment changed.
bool assign(std::vector<point> const& points, std::vector<point> const& centers,
            std::vector<int>& assignment, double& sse) {
  auto changed = false;
  sse = 0.0;
  for (auto i = std::size_t{0}; i != points.size(); ++i) {
    auto best = 0;
    auto best_d = sq_dist(points[i], centers[0]);
    for (auto c = 1; c < static_cast<int>(centers.size()); ++c) {
      auto const d = sq_dist(points[i], centers[static_cast<std::size_t>(c)]);
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    changed |= assignment[i] != best;
    assignment[i] = best;
    sse += best_d;
  }
  return changed;
}

void update_centers(std::vector<point> const& points,
                    std::vector<int> const& assignment,
                    std::vector<point>& centers) {
  auto const dim = points[0].size();
  std::vector<int> count(centers.size(), 0);
  for (auto& c : centers) {
    std::fill(begin(c), end(c), 0.0);
  }
  for (auto i = std::size_t{0}; i != points.size(); ++i) {
    auto& c = centers[static_cast<std::size_t>(assignment[i])];
    for (auto j = std::size_t{0}; j != dim; ++j) {
      c[j] += points[i][j];
    }
    ++count[static_cast<std::size_t>(assignment[i])];
  }
  for (auto c = std::size_t{0}; c != centers.size(); ++c) {
    if (count[c] == 0) {
      continue;
    }
    for (auto& v : centers[c]) {
      v /= count[c];
    }
  }
}

// Moves the point farthest from its center into each empty cluster.
bool fill_empty(std::vector<point> const& points, std::vector<int>& assignment,
                std::vector<point>& centers) {
  auto filled = false;
  for (auto c = 0; c < static_cast<int>(centers.size()); ++c) {
    if (std::find(begin(assignment), end(assignment), c) != end(assignment)) {
      continue;
    }
    auto far = std::size_t{0};
    auto far_d = -1.0;
    for (auto i = std::size_t{0}; i != points.size(); ++i) {
      auto const own = assignment[i];
      if (std::count(begin(assignment), end(assignment), own) < 2) {
        continue;
      }
      auto const d = sq_dist(points[i], centers[static_cast<std::size_t>(own)]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    if (far_d <= 0.0) {
      continue;  // nothing can be moved without loss
    }
    assignment[far] = c;
    centers[static_cast<std::size_t>(c)] = points[far];
    filled = true;
  }
  return filled;
}

int distinct_points(std::vector<point> const& points) {
  std::set<point> s{begin(points), end(points)};
  return static_cast<int>(s.size());
}

}  // namespace

int cluster_set::largest_cluster() const {
  auto best = 0;
  for (auto c = 1; c < static_cast<int>(day_count.size()); ++c) {
    if (day_count[static_cast<std::size_t>(c)] >
        day_count[static_cast<std::size_t>(best)]) {
      best = c;
    }
  }
  return best;
}

kmeans_result kmeans(std::vector<point> const& points, int k,
                     std::uint64_t seed, int max_iterations) {
  if (points.empty() || k < 1 || k > static_cast<int>(points.size())) {
    throw config_error{"kmeans: need 1 <= k <= number of points"};
  }
  std::mt19937_64 rng{seed};
  kmeans_result r;
  r.centroids = kmeanspp_init(points, k, rng);
  r.assignment.assign(points.size(), -1);

  auto sse = 0.0;
  assign(points, r.centroids, r.assignment, sse);
  r.objective_trace.push_back(sse);
  for (r.iterations = 1; r.iterations <= max_iterations; ++r.iterations) {
    update_centers(points, r.assignment, r.centroids);
    if (fill_empty(points, r.assignment, r.centroids)) {
      update_centers(points, r.assignment, r.centroids);
    }
    auto const changed = assign(points, r.centroids, r.assignment, sse);
    r.objective_trace.push_back(sse);
    if (!changed) {
      break;
    }
  }
  update_centers(points, r.assignment, r.centroids);
  r.sse = 0.0;
  for (auto i = std::size_t{0}; i != points.size(); ++i) {
    r.sse += sq_dist(points[i],
                     r.centroids[static_cast<std::size_t>(r.assignment[i])]);
  }
  return r;
}

double mean_silhouette(std::vector<point> const& points,
                       std::vector<int> const& assignment, int k) {
  auto const n = points.size();
  std::vector<int> size(static_cast<std::size_t>(k), 0);
  for (auto const a : assignment) {
    ++size[static_cast<std::size_t>(a)];
  }
  auto total = 0.0;
  for (auto i = std::size_t{0}; i != n; ++i) {
    auto const own = static_cast<std::size_t>(assignment[i]);
    if (size[own] < 2) {
      continue;
    }
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    for (auto j = std::size_t{0}; j != n; ++j) {
      if (i != j) {
        sum[static_cast<std::size_t>(assignment[j])] +=
            std::sqrt(sq_dist(points[i], points[j]));
      }
    }
    auto const a = sum[own] / (size[own] - 1);
    auto b = std::numeric_limits<double>::infinity();
    for (auto c = std::size_t{0}; c != sum.size(); ++c) {
      if (c != own && size[c] > 0) {
        b = std::min(b, sum[c] / size[c]);
      }
    }
    if (!std::isfinite(b)) {
      continue;
    }
    auto const denom = std::max(a, b);
    total += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

cluster_set cluster_days(std::vector<ingest::daily_profile> profiles,
                         cluster_options const& opt) {
  if (profiles.size() < 2) {
    throw config_error{"cluster_days: need at least 2 daily profiles"};
  }
  auto const& station = profiles.front().station;
  auto const dim = profiles.front().counts.size();
  for (auto const& p : profiles) {
    if (p.station != station || p.counts.size() != dim) {
      throw config_error{"cluster_days: profiles must share station and length"};
    }
  }
  std::stable_sort(begin(profiles), end(profiles),
                   [](auto const& a, auto const& b) {
                     return a.service_day < b.service_day;
                   });

  std::vector<point> points;
  for (auto const& p : profiles) {
    points.push_back(p.counts);
  }
  auto const n = static_cast<int>(points.size());

  auto k_max = opt.k_max;
  if (k_max >= n) {
    spdlog::warn("cluster_days({}): k_max {} clamped to {}", station, k_max,
                 n - 1);
    k_max = n - 1;
  }
  auto const k_min = std::max(1, std::min(opt.k_min, k_max));

  auto best_run = [&](int k) {
    kmeans_result best;
    best.sse = std::numeric_limits<double>::infinity();
    for (auto i = 0; i != std::max(1, opt.n_init); ++i) {
      auto r = kmeans(points, k, opt.seed + static_cast<std::uint64_t>(i),
                      opt.max_iterations);
      if (r.sse < best.sse) {
        best = std::move(r);
      }
    }
    return best;
  };

  auto chosen = std::optional<kmeans_result>{};
  auto chosen_k = 1;
  if (distinct_points(points) > 1) {
    auto best_score = -std::numeric_limits<double>::infinity();
    for (auto k = std::max(2, k_min); k <= k_max; ++k) {
      auto r = best_run(k);
      auto const score = mean_silhouette(points, r.assignment, k);
      spdlog::debug("cluster_days({}): k={} silhouette={:.4f}", station, k,
                    score);
      if (score > best_score) {
        best_score = score;
        chosen = std::move(r);
        chosen_k = k;
      }
    }
    auto const single_ok = k_min == 1 || opt.allow_single;
    if (chosen && single_ok && best_score < opt.min_silhouette) {
      chosen.reset();
    }
    if (!chosen && !single_ok && k_max >= 2) {
      chosen = best_run(std::max(2, k_min));
      chosen_k = std::max(2, k_min);
    }
  }
  if (!chosen) {
    chosen = best_run(1);
    chosen_k = 1;
  }

  // Relabel clusters by first appearance in day order for stable ids.
  std::vector<int> relabel(static_cast<std::size_t>(chosen_k), -1);
  auto next = 0;
  for (auto const a : chosen->assignment) {
    if (relabel[static_cast<std::size_t>(a)] == -1) {
      relabel[static_cast<std::size_t>(a)] = next++;
    }
  }
  cluster_set cs;
  cs.station = station;
  cs.centroids.resize(static_cast<std::size_t>(next));
  cs.day_count.assign(static_cast<std::size_t>(next), 0);
  for (auto c = 0; c != chosen_k; ++c) {
    auto const to = relabel[static_cast<std::size_t>(c)];
    if (to >= 0) {
      cs.centroids[static_cast<std::size_t>(to)] =
          chosen->centroids[static_cast<std::size_t>(c)];
    }
  }
  for (auto i = std::size_t{0}; i != profiles.size(); ++i) {
    auto const c = relabel[static_cast<std::size_t>(chosen->assignment[i])];
    cs.members[profiles[i].service_day] = c;
    ++cs.day_count[static_cast<std::size_t>(c)];
  }
  return cs;
}

classification classify_partial(std::span<double const> partial,
                                cluster_set const& cs) {
  auto const b = partial.size();
  if (b == 0) {
    throw config_error{"classify_partial: no observed bins"};
  }
  if (b > cs.bins() || cs.k() == 0) {
    throw config_error{"classify_partial: prefix longer than a day"};
  }
  classification out;
  out.bins_observed = static_cast<int>(b);
  auto best = std::numeric_limits<double>::infinity();
  for (auto c = 0; c != cs.k(); ++c) {
    auto const& centroid = cs.centroids[static_cast<std::size_t>(c)];
    auto sum = 0.0;
    for (auto i = std::size_t{0}; i != b; ++i) {
      auto const d = partial[i] - centroid[i];
      sum += d * d;
    }
    auto const dist = std::sqrt(sum) / std::sqrt(static_cast<double>(b));
    out.distances.push_back(dist);
    if (dist < best) {
      best = dist;
      out.cluster_id = c;
    }
  }
  return out;
}

double centroid_value(cluster_set const& cs, int cluster_id, int bin) {
  if (cluster_id < 0 || cluster_id >= cs.k() || bin < 0 ||
      static_cast<std::size_t>(bin) >= cs.bins()) {
    throw config_error{"centroid_value: cluster or bin out of range"};
  }
  return cs.centroids[static_cast<std::size_t>(cluster_id)]
                     [static_cast<std::size_t>(bin)];
}

nlohmann::json to_json(cluster_set const& cs) {
  auto members = nlohmann::json::object();
  for (auto const& [day, c] : cs.members) {
    members[format_date(day)] = c;
  }
  return {{"version", 1},
          {"station", cs.station},
          {"k", cs.k()},
          {"centroids", cs.centroids},
          {"members", members}};
}

cluster_set cluster_set_from_json(nlohmann::json const& j) {
  cluster_set cs;
  try {
    cs.station = j.at("station").get<std::string>();
    cs.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    cs.day_count.assign(cs.centroids.size(), 0);
    for (auto const& [day, c] : j.at("members").items()) {
      auto const d = parse_date(day);
      auto const id = c.get<int>();
      if (!d || id < 0 || id >= cs.k()) {
        throw config_error{"cluster set: bad member entry " + day};
      }
      cs.members[*d] = id;
      ++cs.day_count[static_cast<std::size_t>(id)];
    }
    if (j.at("k").get<int>() != cs.k() || cs.k() < 1) {
      throw config_error{"cluster set: k does not match centroids"};
    }
  } catch (nlohmann::json::exception const& e) {
    throw config_error{std::string{"cluster set: "} + e.what()};
  }
  return cs;
}

}  // namespace ts::patterns
