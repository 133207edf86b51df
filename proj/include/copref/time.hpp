#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace copref {

/// Milliseconds since the Unix epoch (UTC). Durations use the same unit.
using TimestampMs = std::int64_t;
using DurationMs = std::int64_t;

inline constexpr DurationMs kMillisPerDay = 86'400'000;

/// Accepts integer milliseconds, `YYYY-MM-DD`, or `YYYY-MM-DDTHH:MM:SS[.mmm]Z`.
TimestampMs parse_timestamp(std::string_view text);

std::string format_timestamp(TimestampMs at);

TimestampMs system_now();

}  // namespace copref
