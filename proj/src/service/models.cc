#include "ts/service/models.h"

#include <algorithm>
#include <fstream>
#include <future>

#include "nlohmann/json.hpp"
#include "spdlog/spdlog.h"

#include "ts/core/error.h"
#include "ts/forecast/mle.h"
#include "ts/ingest/journeys.h"
#include "ts/ingest/profiles.h"

namespace ts::service {

namespace fs = std::filesystem;

std::vector<station_id> model_store::missing(line_topology const& topo) const {
  std::vector<station_id> out;
  for (auto const& s : topo.stations) {
    if (!stations.contains(s.id)) {
      out.push_back(s.id);
    }
  }
  return out;
}

namespace {

bool in_training(service_config const& cfg, date d) {
  return (!cfg.train_from || !(d < *cfg.train_from)) &&
         (!cfg.train_to || !(*cfg.train_to < d));
}

struct fit_job {
  station_id station;
  int cluster{0};
  std::vector<forecast::training_day> days;
};

void write_json(fs::path const& p, nlohmann::json const& j) {
  fs::create_directories(p.parent_path());
  auto const tmp = fs::path{p}.concat(".tmp");
  {
    std::ofstream out{tmp};
    out << j.dump(2) << '\n';
    if (!out) {
      throw data_error{"cannot write " + p.string()};
    }
  }
  fs::rename(tmp, p);
}

nlohmann::json read_json(fs::path const& p) {
  std::ifstream in{p};
  if (!in) {
    throw data_error{"cannot read " + p.string()};
  }
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw data_error{p.string() + " is not valid JSON"};
  }
  return j;
}

}  // namespace

model_store fit_models(std::vector<ingest::tap_event> const& taps,
                       std::vector<ingest::event_entry> const& events,
                       line_topology const& topo, service_config const& cfg) {
  std::vector<ingest::tap_event> train;
  std::copy_if(begin(taps), end(taps), std::back_inserter(train), [&](auto const& t) {
    return in_training(cfg, bin_of(t.timestamp, cfg.bin_minutes, cfg.start).service_day);
  });
  if (train.empty()) {
    throw data_error{"fit: no taps in the training period"};
  }

  model_store m;
  std::vector<fit_job> jobs;
  for (auto const& s : topo.stations) {
    auto profiles = ingest::build_daily_profiles(train, s.id, cfg.bin_minutes, cfg.start);
    if (profiles.size() < 2) {
      spdlog::warn("fit: station {} has {} training days, skipped", s.id, profiles.size());
      continue;
    }
    auto cs = patterns::cluster_days(profiles, cfg.clustering);
    spdlog::info("fit: station {} k={} over {} days", s.id, cs.k(), profiles.size());

    std::vector<fit_job> per_cluster(static_cast<std::size_t>(cs.k()));
    for (auto c = 0; c != cs.k(); ++c) {
      per_cluster[static_cast<std::size_t>(c)] = fit_job{s.id, c, {}};
    }
    for (auto const& p : profiles) {
      auto const c = cs.members.at(p.service_day);
      auto const& centroid = cs.centroids[static_cast<std::size_t>(c)];
      forecast::training_day day;
      for (auto b = std::size_t{0}; b != p.counts.size(); ++b) {
        auto const bin = time_bin{p.service_day, static_cast<int>(b), cfg.bin_minutes};
        day.push_back({p.counts[b], centroid[b],
                       ingest::exog_at(events, topo.exog_schema, s.id, bin, cfg.start)});
      }
      per_cluster[static_cast<std::size_t>(c)].days.push_back(std::move(day));
    }
    for (auto& j : per_cluster) {
      jobs.push_back(std::move(j));
    }
    m.stations[s.id].clusters = std::move(cs);
  }

  std::vector<std::future<forecast::fit_result>> results;
  for (auto const& job : jobs) {
    results.push_back(std::async(std::launch::async, [&job, &topo, &cfg] {
      forecast::fit_options opt;
      opt.min_days = cfg.min_fit_days;
      opt.label = job.station + "/" + std::to_string(job.cluster);
      return forecast::fit_mle(job.days, topo.exog_schema.size(), opt);
    }));
  }
  for (auto i = std::size_t{0}; i != jobs.size(); ++i) {
    auto r = results[i].get();
    spdlog::info("fit: {}/{} phi={:.3f} s2_eps={:.2f} s2_eta={:.2f}{}", jobs[i].station,
                 jobs[i].cluster, r.params.phi, r.params.s2_eps, r.params.s2_eta,
                 r.fallback ? " (fallback)" : "");
    m.stations[jobs[i].station].params[jobs[i].cluster] = std::move(r.params);
  }

  auto const journeys = ingest::link_journeys(train).journeys;
  od::period_def const periods{cfg.od_bins_per_period, bins_per_day(cfg.bin_minutes)};
  for (auto const& s : topo.stations) {
    m.shares[s.id] = od::estimate_shares(journeys, topo, s.id, periods, cfg.od_alpha,
                                         cfg.bin_minutes, cfg.start);
  }

  auto const first = bin_of(train.front().timestamp, cfg.bin_minutes, cfg.start);
  auto const last = bin_of(train.back().timestamp, cfg.bin_minutes, cfg.start);
  m.version = "fit-" + format_date(first.service_day) + "-" + format_date(last.service_day);
  return m;
}

void save_models(model_store const& m, fs::path const& dir) {
  nlohmann::json manifest{{"version", m.version}, {"stations", nlohmann::json::array()}};
  for (auto const& [id, sm] : m.stations) {
    manifest["stations"].push_back(id);
    write_json(dir / "clusters" / (id + ".json"), patterns::to_json(sm.clusters));
    for (auto const& [c, p] : sm.params) {
      write_json(dir / "params" / (id + "." + std::to_string(c) + ".json"),
                 forecast::to_json(p));
    }
  }
  for (auto const& [id, t] : m.shares) {
    write_json(dir / "od" / (id + ".json"), od::to_json(t));
  }
  write_json(dir / "manifest.json", manifest);
}

model_store load_models(fs::path const& dir, line_topology const& topo) {
  model_store m;
  if (fs::exists(dir / "manifest.json")) {
    m.version = read_json(dir / "manifest.json").value("version", std::string{});
  }
  od::period_def periods;
  for (auto const& s : topo.stations) {
    auto const cpath = dir / "clusters" / (s.id + ".json");
    if (fs::exists(cpath)) {
      station_model sm;
      sm.clusters = patterns::cluster_set_from_json(read_json(cpath));
      periods.bins_per_day = static_cast<int>(sm.clusters.bins());
      for (auto c = 0; c != sm.clusters.k(); ++c) {
        auto const ppath = dir / "params" / (s.id + "." + std::to_string(c) + ".json");
        if (fs::exists(ppath)) {
          auto p = forecast::params_from_json(read_json(ppath));
          if (p.beta.size() != topo.exog_schema.size()) {
            throw config_error{"params " + ppath.string() + " do not match the exog schema"};
          }
          sm.params[c] = std::move(p);
        } else {
          spdlog::warn("models: no params for {}/{}, centroid fallback", s.id, c);
        }
      }
      m.stations[s.id] = std::move(sm);
    }
    auto const opath = dir / "od" / (s.id + ".json");
    if (fs::exists(opath)) {
      m.shares[s.id] = od::share_table_from_json(read_json(opath), topo);
    }
  }
  return m;
}

}  // namespace ts::service
