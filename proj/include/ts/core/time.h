#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace ts {

// Timestamps are naive local time (the AFC feed carries no zone), stored on
// the system clock's epoch with second resolution.
using instant = std::chrono::sys_seconds;
using date = std::chrono::year_month_day;

constexpr int minutes_per_day = 1440;

// Offset of the service-day start from local midnight, in minutes.
struct day_start {
  int minutes{0};
  friend auto operator<=>(day_start, day_start) = default;
};

struct time_bin {
  date service_day{};
  int index{0};
  int bin_minutes{15};

  int bins_per_day() const { return minutes_per_day / bin_minutes; }
  friend auto operator<=>(time_bin const&, time_bin const&) = default;
};

// Throws config_error unless bin_minutes divides 1440.
void validate_bin_minutes(int bin_minutes);
int bins_per_day(int bin_minutes);

time_bin bin_of(instant t, int bin_minutes, day_start start = {});
instant bin_start(time_bin const& b, day_start start = {});
instant bin_end(time_bin const& b, day_start start = {});

// Next/previous bin, rolling over service-day boundaries.
time_bin next_bin(time_bin const& b, int n = 1);

std::optional<instant> parse_iso(std::string_view s);
std::optional<date> parse_date(std::string_view s);
// "HH:MM" -> day_start
std::optional<day_start> parse_clock(std::string_view s);

std::string format_iso(instant t);
std::string format_date(date d);
std::string format_clock(day_start s);

}  // namespace ts
