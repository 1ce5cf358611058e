#include "ts/service/sources.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "spdlog/spdlog.h"

#include "ts/core/error.h"

namespace ts::service {

namespace {

template <typename T>
void sort_by_time(std::vector<T>& v) {
  std::stable_sort(begin(v), end(v),
                   [](auto const& a, auto const& b) { return a.timestamp < b.timestamp; });
}

void log_errors(std::string const& what, std::vector<ingest::row_error> const& errors) {
  for (auto const& e : errors) {
    spdlog::warn("{} line {}: {}", what, e.line_no, e.reason);
  }
}

}  // namespace

replay_source::replay_source(std::vector<ingest::tap_event> taps,
                             std::vector<ingest::train_position_report> positions)
    : taps_{std::move(taps)}, positions_{std::move(positions)} {
  sort_by_time(taps_);
  sort_by_time(positions_);
}

std::vector<ingest::tap_event> replay_source::taps_in(instant from, instant to) {
  while (cursor_ < taps_.size() && taps_[cursor_].timestamp < from) {
    ++cursor_;
  }
  std::vector<ingest::tap_event> out;
  while (cursor_ < taps_.size() && taps_[cursor_].timestamp < to) {
    out.push_back(taps_[cursor_++]);
  }
  return out;
}

std::vector<ingest::train_position_report> replay_source::positions_until(instant to) {
  auto const end_it = std::upper_bound(
      begin(positions_), end(positions_), to,
      [](instant t, auto const& r) { return t < r.timestamp; });
  return {begin(positions_), end_it};
}

std::string tail_source::follower::read_new() {
  std::ifstream in{path, std::ios::binary};
  if (!in) {
    return {};
  }
  in.seekg(0, std::ios::end);
  auto const size = static_cast<std::uintmax_t>(in.tellg());
  if (size < offset) {
    spdlog::warn("{} shrank, reading from the start", path.string());
    offset = 0;
    carry.clear();
  }
  in.seekg(static_cast<std::streamoff>(offset));
  std::string chunk(size - offset, '\0');
  in.read(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  offset = size;
  chunk = carry + chunk;
  auto const last_nl = chunk.rfind('\n');
  if (last_nl == std::string::npos) {
    carry = std::move(chunk);
    return {};
  }
  carry = chunk.substr(last_nl + 1);
  chunk.resize(last_nl + 1);
  return chunk;
}

tail_source::tail_source(std::filesystem::path afc,
                         std::optional<std::filesystem::path> positions,
                         line_topology topo)
    : topo_{std::move(topo)}, afc_{std::move(afc), 0, {}} {
  if (positions) {
    positions_ = follower{*positions, 0, {}};
  }
}

void tail_source::poll() {
  auto text = afc_.read_new();
  if (!text.empty()) {
    // parse_afc expects the header on the first line it sees
    if (header_seen_) {
      text = std::string{ingest::afc_header} + "\n" + text;
    }
    header_seen_ = true;
    std::istringstream in{text};
    auto r = ingest::parse_afc(in, topo_);
    log_errors(afc_.path.string(), r.errors);
    taps_.insert(end(taps_), r.taps.begin(), r.taps.end());
    sort_by_time(taps_);
  }
  if (positions_) {
    auto const lines = positions_->read_new();
    if (!lines.empty()) {
      std::istringstream in{lines};
      auto r = ingest::parse_positions(in, topo_);
      log_errors(positions_->path.string(), r.errors);
      reports_.insert(end(reports_), r.reports.begin(), r.reports.end());
      sort_by_time(reports_);
    }
  }
}

std::vector<ingest::tap_event> tail_source::taps_in(instant from, instant to) {
  std::vector<ingest::tap_event> out;
  std::vector<ingest::tap_event> keep;
  for (auto& t : taps_) {
    if (t.timestamp < from) {
      continue;  // late tap for a closed bin
    }
    (t.timestamp < to ? out : keep).push_back(std::move(t));
  }
  taps_ = std::move(keep);
  return out;
}

std::vector<ingest::train_position_report> tail_source::positions_until(instant to) {
  std::vector<ingest::train_position_report> out;
  for (auto const& r : reports_) {
    if (r.timestamp <= to) {
      out.push_back(r);
    }
  }
  std::erase_if(reports_, [&](auto const& r) {
    return r.timestamp + std::chrono::hours{1} < to;
  });
  return out;
}

std::vector<ingest::tap_event> load_afc_file(std::filesystem::path const& path,
                                             line_topology const& topo,
                                             bool strict) {
  std::ifstream in{path};
  if (!in) {
    throw data_error{"cannot read AFC file " + path.string()};
  }
  auto r = ingest::parse_afc(in, topo);
  if (strict) {
    for (auto const& e : r.errors) {
      if (e.reason.rfind("unknown station", 0) == 0) {
        throw data_error{path.string() + ":" + std::to_string(e.line_no) + ": " +
                         e.reason + " (not in topology)"};
      }
    }
  }
  log_errors(path.string(), r.errors);
  if (!r.errors.empty()) {
    spdlog::warn("{}: {} rows rejected", path.string(), r.errors.size());
  }
  return std::move(r.taps);
}

std::vector<ingest::train_position_report> load_positions_file(
    std::filesystem::path const& path, line_topology const& topo) {
  std::ifstream in{path};
  if (!in) {
    throw data_error{"cannot read positions file " + path.string()};
  }
  auto r = ingest::parse_positions(in, topo);
  log_errors(path.string(), r.errors);
  return std::move(r.reports);
}

}  // namespace ts::service
