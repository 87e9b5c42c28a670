#pragma once

#include <cstdint>
#include <string>

// Working-calendar arithmetic. All timestamps are UTC milliseconds since the
// Unix epoch; the plant calendar is 08:00-17:00, Monday through Friday.

namespace pmtk {

using Millis = std::int64_t;

inline constexpr Millis kMillisPerSecond = 1000;
inline constexpr Millis kMillisPerMinute = 60 * kMillisPerSecond;
inline constexpr Millis kMillisPerHour = 60 * kMillisPerMinute;
inline constexpr Millis kMillisPerDay = 24 * kMillisPerHour;
inline constexpr Millis kWorkStart = 8 * kMillisPerHour;
inline constexpr Millis kWorkEnd = 17 * kMillisPerHour;
inline constexpr Millis kWorkDayLength = kWorkEnd - kWorkStart;

/// Day-of-week, 0 = Sunday.
int day_of_week(Millis t);

bool is_workday(Millis t);

/// True if t falls inside the working window (boundary 17:00 counts as
/// inside so that a task finishing at end of day stays on-calendar).
bool in_working_hours(Millis t);

/// Earliest instant >= t at which work can start (inside [08:00, 17:00)
/// on a workday).
Millis align_to_calendar(Millis t);

/// Advance t by `worked` milliseconds of working time, skipping nights and
/// weekends. The result may land exactly on 17:00.
Millis add_worked(Millis t, Millis worked);

/// Working milliseconds contained in the wall-clock interval [a, b].
Millis worked_between(Millis a, Millis b);

struct CivilDate {
  int year;
  int month;  // 1..12
  int day;    // 1..31
};

CivilDate civil_from_millis(Millis t);
Millis millis_from_civil(int year, int month, int day);

/// Formats as ISO-8601 "YYYY-MM-DDTHH:MM:SS.mmmZ".
std::string format_timestamp(Millis t);

struct TimestampError {
  std::string message;
};

/// Parses a timestamp. With an empty format string, accepts ISO-8601
/// ("YYYY-MM-DD", "YYYY-MM-DD HH:MM:SS", "YYYY-MM-DDTHH:MM:SS[.fff][Z]").
/// Otherwise the format may use %Y %m %d %H %M %S %f tokens; other
/// characters must match literally. Date-only input maps to midnight UTC.
/// Throws TimestampError on malformed input.
Millis parse_timestamp(const std::string& text, const std::string& format = "");

}  // namespace pmtk
