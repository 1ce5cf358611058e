#include "ts/service/records.h"

#include <cmath>
#include <cstdio>
#include <map>

#include "nlohmann/json.hpp"

#include "ts/core/error.h"

namespace ts::service {

accuracy_row const* accuracy_report::find(station_id const& station,
                                          int horizon) const {
  for (auto const& r : rows) {
    if (r.station == station && r.horizon == horizon) {
      return &r;
    }
  }
  return nullptr;
}

namespace {

struct sums {
  std::size_t n{0};
  double abs{0.0}, sq{0.0}, base_abs{0.0}, base_sq{0.0};

  void add(forecast_record const& r) {
    auto const e = r.clamped_point - *r.observed;
    auto const b = r.baseline - *r.observed;
    ++n;
    abs += std::abs(e);
    sq += e * e;
    base_abs += std::abs(b);
    base_sq += b * b;
  }

  accuracy_row row(station_id s, int h) const {
    auto const dn = static_cast<double>(n);
    accuracy_row r{std::move(s), h, n, abs / dn, std::sqrt(sq / dn),
                   base_abs / dn, std::sqrt(base_sq / dn), std::nullopt};
    if (r.baseline_mae > 0.0) {
      r.ratio = r.mae / r.baseline_mae;
    }
    return r;
  }
};

}  // namespace

accuracy_report evaluate_accuracy(std::span<forecast_record const> records) {
  std::map<std::pair<station_id, int>, sums> by_station;
  std::map<int, sums> overall;
  for (auto const& r : records) {
    if (!r.observed) {
      continue;
    }
    by_station[{r.station, r.horizon}].add(r);
    overall[r.horizon].add(r);
  }
  accuracy_report rep;
  for (auto const& [key, s] : by_station) {
    rep.rows.push_back(s.row(key.first, key.second));
  }
  for (auto const& [h, s] : overall) {
    rep.rows.push_back(s.row("*", h));
  }
  return rep;
}

std::string render_report(accuracy_report const& rep) {
  std::string out =
      "station    h       n       mae      rmse  base_mae base_rmse   ratio\n";
  char line[160];
  for (auto const& r : rep.rows) {
    char ratio[32] = "     n/a";
    if (r.ratio) {
      std::snprintf(ratio, sizeof(ratio), "%8.3f", *r.ratio);
    }
    std::snprintf(line, sizeof(line), "%-8s %3d %7zu %9.3f %9.3f %9.3f %9.3f %s\n",
                  r.station.c_str(), r.horizon, r.n, r.mae, r.rmse, r.baseline_mae,
                  r.baseline_rmse, ratio);
    out += line;
  }
  return out;
}

nlohmann::json to_json(forecast_record const& r) {
  nlohmann::json j{{"station", r.station},
                   {"target_bin", {{"day", format_date(r.target_bin.service_day)},
                                   {"index", r.target_bin.index}}},
                   {"horizon", r.horizon},
                   {"point", r.point},
                   {"clamped_point", r.clamped_point},
                   {"variance", r.variance},
                   {"baseline", r.baseline},
                   {"cluster", r.cluster},
                   {"fallback", r.fallback},
                   {"issue_time", format_iso(r.issue_time)}};
  j["observed"] = r.observed ? nlohmann::json(*r.observed) : nlohmann::json(nullptr);
  return j;
}

forecast_record record_from_json(nlohmann::json const& j, int bin_minutes) {
  try {
    forecast_record r;
    r.station = j.at("station").get<std::string>();
    auto const d = parse_date(j.at("target_bin").at("day").get<std::string>());
    auto const t = parse_iso(j.at("issue_time").get<std::string>());
    if (!d || !t) {
      throw data_error{"forecast record: bad date"};
    }
    r.target_bin = time_bin{*d, j["target_bin"].at("index").get<int>(), bin_minutes};
    r.horizon = j.at("horizon").get<int>();
    r.point = j.at("point").get<double>();
    r.clamped_point = j.at("clamped_point").get<double>();
    r.variance = j.at("variance").get<double>();
    r.baseline = j.at("baseline").get<double>();
    r.cluster = j.value("cluster", 0);
    r.fallback = j.value("fallback", false);
    r.issue_time = *t;
    if (j.contains("observed") && !j["observed"].is_null()) {
      r.observed = j["observed"].get<double>();
    }
    return r;
  } catch (nlohmann::json::exception const& e) {
    throw data_error{std::string{"forecast record: "} + e.what()};
  }
}

nlohmann::json to_json(accuracy_report const& rep) {
  auto rows = nlohmann::json::array();
  for (auto const& r : rep.rows) {
    rows.push_back({{"station", r.station},
                    {"horizon", r.horizon},
                    {"n", r.n},
                    {"mae", r.mae},
                    {"rmse", r.rmse},
                    {"baseline_mae", r.baseline_mae},
                    {"baseline_rmse", r.baseline_rmse},
                    {"ratio", r.ratio ? nlohmann::json(*r.ratio) : nlohmann::json(nullptr)}});
  }
  return {{"rows", rows}};
}

}  // namespace ts::service
