#include "copref/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

#include "copref/error.hpp"

namespace copref {

namespace {

bool parse_int(std::string_view s, std::int64_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

TimestampMs parse_timestamp(std::string_view text) {
  std::int64_t ms = 0;
  if (parse_int(text, ms)) return ms;

  using namespace std::chrono;
  const std::string s(text);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0, frac = 0;
  int consumed = 0;
  bool ok = false;
  if (s.size() == 10) {
    ok = std::sscanf(s.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) == 3 &&
         consumed == 10;
  } else if (s.size() == 20) {
    ok = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2dZ%n", &y, &mo, &d, &h,
                     &mi, &sec, &consumed) == 6 &&
         consumed == 20;
  } else if (s.size() == 24) {
    ok = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d.%3dZ%n", &y, &mo, &d,
                     &h, &mi, &sec, &frac, &consumed) == 7 &&
         consumed == 24;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ok || !ymd.ok() || h > 23 || mi > 59 || sec > 60) {
    fail(ErrorCode::InvalidArgument, "invalid timestamp: '" + s + "'");
  }
  const auto tp = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} +
                  milliseconds{frac};
  return time_point_cast<milliseconds>(tp).time_since_epoch().count();
}

std::string format_timestamp(TimestampMs at) {
  using namespace std::chrono;
  const sys_time<milliseconds> tp{milliseconds{at}};
  const auto day_point = floor<days>(tp);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{tp - day_point};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()),
                static_cast<int>(hms.subseconds().count()));
  return buf;
}

TimestampMs system_now() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch())
      .count();
}

}  // namespace copref
