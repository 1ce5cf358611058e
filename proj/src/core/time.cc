#include "ts/core/time.h"

#include <charconv>
#include <cstdio>

#include "ts/core/error.h"

namespace ts {

namespace {

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) {
    return false;
  }
  auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

void validate_bin_minutes(int bin_minutes) {
  if (bin_minutes <= 0 || minutes_per_day % bin_minutes != 0) {
    throw config_error{"bin_minutes must divide 1440, got " +
                       std::to_string(bin_minutes)};
  }
}

int bins_per_day(int bin_minutes) {
  validate_bin_minutes(bin_minutes);
  return minutes_per_day / bin_minutes;
}

time_bin bin_of(instant t, int bin_minutes, day_start start) {
  validate_bin_minutes(bin_minutes);
  using namespace std::chrono;
  auto const shifted = t - minutes{start.minutes};
  auto const day = floor<days>(shifted);
  auto const since = duration_cast<seconds>(shifted - day).count();
  return time_bin{year_month_day{day},
                  static_cast<int>(since / (60L * bin_minutes)), bin_minutes};
}

instant bin_start(time_bin const& b, day_start start) {
  using namespace std::chrono;
  return instant{sys_days{b.service_day}} + minutes{start.minutes} +
         minutes{b.index * b.bin_minutes};
}

instant bin_end(time_bin const& b, day_start start) {
  return bin_start(b, start) + std::chrono::minutes{b.bin_minutes};
}

time_bin next_bin(time_bin const& b, int n) {
  using namespace std::chrono;
  auto const per_day = b.bins_per_day();
  auto idx = b.index + n;
  auto day = sys_days{b.service_day};
  while (idx >= per_day) {
    idx -= per_day;
    day += days{1};
  }
  while (idx < 0) {
    idx += per_day;
    day -= days{1};
  }
  return time_bin{year_month_day{day}, idx, b.bin_minutes};
}

std::optional<date> parse_date(std::string_view s) {
  using namespace std::chrono;
  int y = 0, m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
      !parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), m) ||
      !parse_int(s.substr(8, 2), d)) {
    return std::nullopt;
  }
  auto const ymd = year{y} / month{static_cast<unsigned>(m)} /
                   day{static_cast<unsigned>(d)};
  if (!ymd.ok()) {
    return std::nullopt;
  }
  return ymd;
}

std::optional<instant> parse_iso(std::string_view s) {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SS, 'T' or ' ' separator; seconds optional
  if (s.size() != 19 && s.size() != 16) {
    return std::nullopt;
  }
  auto const d = parse_date(s.substr(0, 10));
  if (!d || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') {
    return std::nullopt;
  }
  int hh = 0, mm = 0, ss = 0;
  if (!parse_int(s.substr(11, 2), hh) || !parse_int(s.substr(14, 2), mm)) {
    return std::nullopt;
  }
  if (s.size() == 19 && (s[16] != ':' || !parse_int(s.substr(17, 2), ss))) {
    return std::nullopt;
  }
  if (hh > 23 || mm > 59 || ss > 60) {
    return std::nullopt;
  }
  return instant{sys_days{*d}} + hours{hh} + minutes{mm} + seconds{ss};
}

std::optional<day_start> parse_clock(std::string_view s) {
  int hh = 0, mm = 0;
  if (s.size() != 5 || s[2] != ':' || !parse_int(s.substr(0, 2), hh) ||
      !parse_int(s.substr(3, 2), mm) || hh > 23 || mm > 59) {
    return std::nullopt;
  }
  return day_start{hh * 60 + mm};
}

std::string format_date(date d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

std::string format_iso(instant t) {
  using namespace std::chrono;
  auto const day = floor<days>(t);
  auto const tod = hh_mm_ss<seconds>{t - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "T%02d:%02d:%02d",
                static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return format_date(year_month_day{day}) + buf;
}

std::string format_clock(day_start s) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02d:%02d", s.minutes / 60, s.minutes % 60);
  return buf;
}

}  // namespace ts
