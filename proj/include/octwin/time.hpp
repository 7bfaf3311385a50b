#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace octwin {

using Millis = std::chrono::milliseconds;
using Instant = std::chrono::sys_time<Millis>;

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff][Z|+HH:MM]". A space is accepted in
/// place of 'T'; a missing zone designator means UTC.
Instant parse_rfc3339(std::string_view text);

/// Always UTC with millisecond precision, e.g. "2021-12-20T09:00:00.000Z".
std::string format_rfc3339(Instant t);

inline double to_seconds(Millis d) { return static_cast<double>(d.count()) / 1000.0; }
inline Millis from_seconds(double s) { return Millis{static_cast<Millis::rep>(s * 1000.0 + (s >= 0 ? 0.5 : -0.5))}; }

inline constexpr Millis kDay = std::chrono::hours{24};

// Maps abstract integer steps onto wall-clock instants.
struct StepClock {
  Instant origin;
  Millis scale = kDay;

  Instant at(long long step) const { return origin + scale * step; }
  double step_of(Instant t) const {
    return static_cast<double>((t - origin).count()) / static_cast<double>(scale.count());
  }
};

/// 09:00 on 20-12-2021, one step per 24 hours.
StepClock default_step_clock();

}  // namespace octwin
