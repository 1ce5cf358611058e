#include "ts/service/journal.h"

#include <algorithm>
#include <fstream>

#include "nlohmann/json.hpp"

#include "ts/core/error.h"

namespace ts::service {

namespace fs = std::filesystem;

journal::journal(fs::path dir) : dir_{std::move(dir)} { fs::create_directories(dir_); }

namespace {

void append(fs::path const& p, std::vector<std::string> const& lines) {
  if (lines.empty()) {
    return;
  }
  fs::create_directories(p.parent_path());
  std::ofstream out{p, std::ios::app};
  for (auto const& l : lines) {
    out << l << '\n';
  }
  if (!out) {
    throw data_error{"cannot append to " + p.string()};
  }
}

}  // namespace

void journal::write(cycle_snapshot const& s) {
  auto const day = dir_ / format_date(s.observed_bin.service_day);
  std::vector<std::string> obs;
  for (auto const& st : s.stations) {
    obs.push_back(nlohmann::json{{"station", st.station},
                                 {"day", format_date(s.observed_bin.service_day)},
                                 {"bin", s.observed_bin.index},
                                 {"count", st.observed}}
                      .dump());
  }
  append(day / "observations.jsonl", obs);
  std::vector<std::string> recs;
  for (auto const& r : s.joined) {
    recs.push_back(to_json(r).dump());
  }
  append(day / "forecasts.jsonl", recs);
  append(day / "snapshots.jsonl", {to_json(s).dump()});
}

void journal::checkpoint(nlohmann::json const& j) {
  auto const p = dir_ / "checkpoint.json";
  auto const tmp = dir_ / "checkpoint.json.tmp";
  {
    std::ofstream out{tmp};
    out << j.dump() << '\n';
    if (!out) {
      throw data_error{"cannot write " + tmp.string()};
    }
  }
  fs::rename(tmp, p);
}

std::vector<forecast_record> read_records(fs::path const& root, int bin_minutes) {
  std::vector<fs::path> files;
  if (fs::is_regular_file(root)) {
    files.push_back(root);
  } else if (fs::is_directory(root)) {
    for (auto const& e : fs::recursive_directory_iterator{root}) {
      if (e.is_regular_file() && e.path().filename() == "forecasts.jsonl") {
        files.push_back(e.path());
      }
    }
    std::sort(begin(files), end(files));
  } else {
    throw data_error{"no forecast records at " + root.string()};
  }
  std::vector<forecast_record> out;
  for (auto const& f : files) {
    std::ifstream in{f};
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) {
        continue;
      }
      auto const j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        throw data_error{f.string() + ": malformed line"};
      }
      out.push_back(record_from_json(j, bin_minutes));
    }
  }
  return out;
}

void snapshot_hub::publish(std::shared_ptr<cycle_snapshot const> s) {
  {
    std::lock_guard const lock{mutex_};
    snapshots_.push_back(std::move(s));
    while (snapshots_.size() > retain_) {
      snapshots_.pop_front();
    }
    ++count_;
  }
  cv_.notify_all();
}

std::shared_ptr<cycle_snapshot const> snapshot_hub::latest() const {
  std::lock_guard const lock{mutex_};
  return snapshots_.empty() ? nullptr : snapshots_.back();
}

std::vector<std::shared_ptr<cycle_snapshot const>> snapshot_hub::retained() const {
  std::lock_guard const lock{mutex_};
  return {begin(snapshots_), end(snapshots_)};
}

std::uint64_t snapshot_hub::published() const {
  std::lock_guard const lock{mutex_};
  return count_;
}

bool snapshot_hub::wait_newer(std::uint64_t seen, std::chrono::milliseconds timeout) const {
  std::unique_lock lock{mutex_};
  return cv_.wait_for(lock, timeout, [&] { return count_ > seen; });
}

replay_result replay(engine& e, tap_source& source, date from, int days,
                     std::function<void(std::shared_ptr<cycle_snapshot const>)> const&
                         on_cycle) {
  auto const& cfg = e.config();
  auto const bin = std::chrono::minutes{cfg.bin_minutes};
  auto const first = bin_start(time_bin{from, 0, cfg.bin_minutes}, cfg.start);
  auto const cycles = days * bins_per_day(cfg.bin_minutes);
  replay_result out;
  for (auto k = 1; k <= cycles; ++k) {
    auto const now = first + k * bin;
    auto const taps = source.taps_in(now - bin, now);
    auto snap = e.run_cycle(now, taps, source.positions_until(now));
    ++out.cycles;
    if (on_cycle) {
      on_cycle(std::move(snap));
    }
  }
  out.records = e.completed();
  out.report = evaluate_accuracy(out.records);
  return out;
}

}  // namespace ts::service
