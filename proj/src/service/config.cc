#include "ts/service/config.h"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "nlohmann/json.hpp"

#include "ts/core/error.h"

extern char** environ;

namespace ts::service {

namespace {

std::filesystem::path resolve(std::filesystem::path const& base,
                              std::string const& p) {
  auto const path = std::filesystem::path{p};
  return path.is_absolute() || base.empty() ? path : base / path;
}

date require_date(nlohmann::json const& j, char const* what) {
  auto const d = parse_date(j.get<std::string>());
  if (!d) {
    throw config_error{std::string{"bad date for "} + what};
  }
  return *d;
}

}  // namespace

void service_config::validate() const {
  validate_bin_minutes(bin_minutes);
  if (topology.empty()) {
    throw config_error{"config: topology path is required"};
  }
  if (mode == run_mode::replay && afc.empty()) {
    throw config_error{"config: replay mode requires sources.afc"};
  }
  if (od_alpha <= 0.0) {
    throw config_error{"config: od.alpha must be > 0"};
  }
  if (!(od_lambda > 0.0 && od_lambda <= 1.0)) {
    throw config_error{"config: od.lambda must be in (0, 1]"};
  }
  if (od_bins_per_period < 1 || bins_per_day(bin_minutes) % od_bins_per_period) {
    throw config_error{"config: od.bins_per_period must divide the day"};
  }
  if (sim_tick_s <= 0 || sim_horizon_bins < 1 || sim_horizon_bins > 2) {
    throw config_error{"config: sim.tick_s > 0 and sim.horizon_bins in {1, 2}"};
  }
  if (ensemble_runs < 0 || replay_days < 1 || retain_snapshots == 0) {
    throw config_error{"config: bad ensemble_runs, replay.days or retain_snapshots"};
  }
  if (train_from && train_to && *train_to < *train_from) {
    throw config_error{"config: training.to precedes training.from"};
  }
  thresholds.validate();
}

void apply_env_overrides(nlohmann::json& j,
                         std::map<std::string, std::string> const& env) {
  for (auto const& [key, value] : env) {
    if (key.rfind("TS_", 0) != 0 || key.size() == 3) {
      continue;
    }
    auto* node = &j;
    auto rest = key.substr(3);
    while (true) {
      auto const cut = rest.find("__");
      auto part = rest.substr(0, cut);
      std::transform(begin(part), end(part), begin(part),
                     [](unsigned char c) { return std::tolower(c); });
      if (cut == std::string::npos) {
        auto parsed = nlohmann::json::parse(value, nullptr, false);
        (*node)[part] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
        break;
      }
      if (!(*node)[part].is_object()) {
        (*node)[part] = nlohmann::json::object();
      }
      node = &(*node)[part];
      rest = rest.substr(cut + 2);
    }
  }
}

std::map<std::string, std::string> ts_environment() {
  std::map<std::string, std::string> env;
  for (auto e = environ; e != nullptr && *e != nullptr; ++e) {
    std::string_view const kv{*e};
    auto const eq = kv.find('=');
    if (eq != std::string_view::npos && kv.substr(0, 3) == "TS_") {
      env.emplace(kv.substr(0, eq), kv.substr(eq + 1));
    }
  }
  return env;
}

service_config config_from_json(nlohmann::json const& j,
                                std::filesystem::path const& base) {
  service_config c;
  try {
    c.bin_minutes = j.value("bin_minutes", 15);
    if (j.contains("day_start")) {
      auto const s = parse_clock(j["day_start"].get<std::string>());
      if (!s) {
        throw config_error{"config: bad day_start"};
      }
      c.start = *s;
    }
    auto const mode = j.value("mode", std::string{"replay"});
    if (mode != "live" && mode != "replay") {
      throw config_error{"config: mode must be live or replay"};
    }
    c.mode = mode == "live" ? run_mode::live : run_mode::replay;
    c.topology = resolve(base, j.at("topology").get<std::string>());
    c.model_dir = resolve(base, j.value("model_dir", std::string{"models"}));
    c.data_dir = resolve(base, j.value("data_dir", std::string{"out"}));
    c.persist = j.value("persist", true);

    auto const src = j.value("sources", nlohmann::json::object());
    if (src.contains("afc")) {
      c.afc = resolve(base, src["afc"].get<std::string>());
    }
    if (src.contains("positions") && !src["positions"].is_null()) {
      c.positions = resolve(base, src["positions"].get<std::string>());
    }
    if (src.contains("events") && !src["events"].is_null()) {
      c.events = resolve(base, src["events"].get<std::string>());
    }

    auto const tr = j.value("training", nlohmann::json::object());
    if (tr.contains("from")) c.train_from = require_date(tr["from"], "training.from");
    if (tr.contains("to")) c.train_to = require_date(tr["to"], "training.to");
    c.min_fit_days = tr.value("min_days", 5);

    auto const rp = j.value("replay", nlohmann::json::object());
    if (rp.contains("from")) c.replay_from = require_date(rp["from"], "replay.from");
    c.replay_days = rp.value("days", 1);
    c.replay_pace_ms = rp.value("pace_ms", 0);

    auto const cl = j.value("clustering", nlohmann::json::object());
    c.clustering.k_min = cl.value("k_min", c.clustering.k_min);
    c.clustering.k_max = cl.value("k_max", c.clustering.k_max);
    c.clustering.min_silhouette = cl.value("min_silhouette", c.clustering.min_silhouette);
    c.clustering.seed = cl.value("seed", c.clustering.seed);

    auto const od = j.value("od", nlohmann::json::object());
    c.od_alpha = od.value("alpha", 1.0);
    c.od_lambda = od.value("lambda", 1.0);
    c.od_bins_per_period = od.value("bins_per_period", 4);

    auto const sm = j.value("sim", nlohmann::json::object());
    c.sim_tick_s = sm.value("tick_s", 10);
    c.sim_horizon_bins = sm.value("horizon_bins", 2);
    c.sim_seed = sm.value("seed", std::uint64_t{1});
    auto const am = sm.value("mode", std::string{"expected_flow"});
    if (am != "expected_flow" && am != "poisson") {
      throw config_error{"config: sim.mode must be expected_flow or poisson"};
    }
    c.sim_mode = am == "poisson" ? sim::arrival_mode::poisson_sample
                                 : sim::arrival_mode::expected_flow;
    c.ensemble_runs = sm.value("ensemble_runs", 0);
    c.position_window_s = sm.value("position_window_s", 300);

    c.thresholds = decisions::thresholds_from_json(j.at("thresholds"));

    auto const http = j.value("http", nlohmann::json::object());
    c.host = http.value("host", std::string{"127.0.0.1"});
    c.port = http.value("port", 8080);
    c.retain_snapshots = j.value("retain_snapshots", std::size_t{96});
    c.history_bins = j.value("history_bins", 96);
  } catch (nlohmann::json::exception const& e) {
    throw config_error{std::string{"config: "} + e.what()};
  }
  c.validate();
  return c;
}

service_config load_config(std::filesystem::path const& path) {
  std::ifstream in{path};
  if (!in) {
    throw config_error{"cannot read config " + path.string()};
  }
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw config_error{"config " + path.string() + " is not valid JSON"};
  }
  apply_env_overrides(j, ts_environment());
  return config_from_json(j, path.parent_path());
}

}  // namespace ts::service
