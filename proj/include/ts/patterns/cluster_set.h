#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "nlohmann/json_fwd.hpp"

#include "ts/core/time.h"
#include "ts/core/topology.h"
#include "ts/ingest/profiles.h"

namespace ts::patterns {

// Per-station clustering of daily profiles. Centroids double as the
// historical-average series used as forecasting baseline.
struct cluster_set {
  station_id station;
  std::vector<std::vector<double>> centroids;
  std::map<date, int> members;
  std::vector<int> day_count;

  int k() const { return static_cast<int>(centroids.size()); }
  std::size_t bins() const { return centroids.empty() ? 0 : centroids[0].size(); }
  // Cluster with most training days; ties to the lowest id.
  int largest_cluster() const;
};

struct cluster_options {
  int k_min{2};
  int k_max{6};
  // k = 1 is chosen when the best silhouette stays below this threshold.
  bool allow_single{true};
  double min_silhouette{0.25};
  int max_iterations{100};
  int n_init{8};
  std::uint64_t seed{42};
};

struct kmeans_result {
  std::vector<std::vector<double>> centroids;
  std::vector<int> assignment;
  double sse{0.0};
  std::vector<double> objective_trace;  // SSE after every assignment step
  int iterations{0};
};

// Lloyd's algorithm from a seeded k-means++ start. Ties in assignment go to
// the lowest cluster id; final centroids are exact member means.
kmeans_result kmeans(std::vector<std::vector<double>> const& points, int k,
                     std::uint64_t seed, int max_iterations = 100);

// Mean silhouette; singletons score 0. Requires at least 2 clusters.
double mean_silhouette(std::vector<std::vector<double>> const& points,
                       std::vector<int> const& assignment, int k);

// Throws config_error for fewer than 2 profiles or mixed stations/lengths.
cluster_set cluster_days(std::vector<ingest::daily_profile> profiles,
                         cluster_options const& opt = {});

struct classification {
  int cluster_id{0};
  std::vector<double> distances;
  int bins_observed{0};
};

// Nearest centroid on the observed prefix; distance is the per-bin RMS
// difference so values are comparable across prefix lengths.
classification classify_partial(std::span<double const> partial,
                                cluster_set const& cs);

double centroid_value(cluster_set const& cs, int cluster_id, int bin);

nlohmann::json to_json(cluster_set const&);
cluster_set cluster_set_from_json(nlohmann::json const&);

}  // namespace ts::patterns
