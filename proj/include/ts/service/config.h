#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "nlohmann/json_fwd.hpp"

#include "ts/core/time.h"
#include "ts/decisions/hotspots.h"
#include "ts/patterns/cluster_set.h"
#include "ts/sim/types.h"

namespace ts::service {

enum class run_mode { live, replay };

struct service_config {
  int bin_minutes{15};
  day_start start;
  run_mode mode{run_mode::replay};

  std::filesystem::path topology;
  std::filesystem::path model_dir{"models"};
  std::filesystem::path data_dir{"out"};
  bool persist{true};

  // data sources; live mode tails these files
  std::filesystem::path afc;
  std::optional<std::filesystem::path> positions;
  std::optional<std::filesystem::path> events;

  // inclusive training days for `fit`
  std::optional<date> train_from;
  std::optional<date> train_to;
  std::optional<date> replay_from;
  int replay_days{1};
  int replay_pace_ms{0};

  patterns::cluster_options clustering;
  int min_fit_days{5};

  int od_bins_per_period{4};
  double od_alpha{1.0};
  double od_lambda{1.0};

  int sim_tick_s{10};
  int sim_horizon_bins{2};
  std::uint64_t sim_seed{1};
  sim::arrival_mode sim_mode{sim::arrival_mode::expected_flow};
  int ensemble_runs{0};
  int position_window_s{300};

  decisions::hotspot_thresholds thresholds;

  std::string host{"127.0.0.1"};
  int port{8080};
  std::size_t retain_snapshots{96};
  int history_bins{96};

  void validate() const;
};

// Applies TS_* variables onto the raw JSON: TS_HTTP__PORT=9000 sets
// http.port. Values that parse as JSON keep their type, others are strings.
void apply_env_overrides(nlohmann::json& j,
                         std::map<std::string, std::string> const& env);
std::map<std::string, std::string> ts_environment();

// Relative paths resolve against `base`.
service_config config_from_json(nlohmann::json const& j,
                                std::filesystem::path const& base = {});
service_config load_config(std::filesystem::path const& path);

}  // namespace ts::service
