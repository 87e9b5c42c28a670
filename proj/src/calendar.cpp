#include "pmtk/calendar.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

namespace pmtk {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if (a % b != 0 && (a < 0) != (b < 0)) --q;
  return q;
}

std::int64_t floor_mod(std::int64_t a, std::int64_t b) {
  return a - floor_div(a, b) * b;
}

// Howard Hinnant's civil-date algorithms.
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = floor_div(y, 400);
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = floor_div(z, 146097);
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), static_cast<int>(m),
                   static_cast<int>(d)};
}

}  // namespace

int day_of_week(Millis t) {
  const std::int64_t day = floor_div(t, kMillisPerDay);
  return static_cast<int>(floor_mod(day + 4, 7));  // 1970-01-01 was Thursday
}

bool is_workday(Millis t) {
  const int dow = day_of_week(t);
  return dow >= 1 && dow <= 5;
}

bool in_working_hours(Millis t) {
  if (!is_workday(t)) return false;
  const Millis tod = floor_mod(t, kMillisPerDay);
  return tod >= kWorkStart && tod <= kWorkEnd;
}

Millis align_to_calendar(Millis t) {
  for (;;) {
    const Millis day = floor_div(t, kMillisPerDay) * kMillisPerDay;
    const Millis tod = t - day;
    if (!is_workday(t) || tod >= kWorkEnd) {
      t = day + kMillisPerDay + kWorkStart;
      continue;
    }
    if (tod < kWorkStart) {
      t = day + kWorkStart;
      continue;
    }
    return t;
  }
}

Millis add_worked(Millis t, Millis worked) {
  t = align_to_calendar(t);
  while (worked > 0) {
    const Millis day = floor_div(t, kMillisPerDay) * kMillisPerDay;
    const Millis room = day + kWorkEnd - t;
    if (worked <= room) return t + worked;
    worked -= room;
    t = align_to_calendar(day + kWorkEnd);
  }
  return t;
}

Millis worked_between(Millis a, Millis b) {
  if (b <= a) return 0;
  Millis total = 0;
  Millis t = align_to_calendar(a);
  while (t < b) {
    const Millis day = floor_div(t, kMillisPerDay) * kMillisPerDay;
    const Millis segment_end = day + kWorkEnd;
    if (b <= segment_end) {
      total += b - t;
      break;
    }
    total += segment_end - t;
    t = align_to_calendar(segment_end);
  }
  return total;
}

CivilDate civil_from_millis(Millis t) {
  return civil_from_days(floor_div(t, kMillisPerDay));
}

Millis millis_from_civil(int year, int month, int day) {
  return days_from_civil(year, month, day) * kMillisPerDay;
}

std::string format_timestamp(Millis t) {
  const CivilDate d = civil_from_millis(t);
  const Millis tod = floor_mod(t, kMillisPerDay);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                d.year, d.month, d.day,
                static_cast<int>(tod / kMillisPerHour),
                static_cast<int>(tod / kMillisPerMinute % 60),
                static_cast<int>(tod / kMillisPerSecond % 60),
                static_cast<int>(tod % 1000));
  return buf;
}

namespace {

struct Cursor {
  const std::string& s;
  std::size_t pos = 0;
  bool eof() const { return pos >= s.size(); }
  char peek() const { return s[pos]; }
};

int read_int(Cursor& c, int min_digits, int max_digits) {
  int value = 0;
  int digits = 0;
  while (!c.eof() && digits < max_digits &&
         std::isdigit(static_cast<unsigned char>(c.peek()))) {
    value = value * 10 + (c.peek() - '0');
    ++c.pos;
    ++digits;
  }
  if (digits < min_digits) throw TimestampError{"expected digits"};
  return value;
}

Millis assemble(int y, int mo, int d, int h, int mi, int s, int ms) {
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) {
    throw TimestampError{"field out of range"};
  }
  const Millis t = millis_from_civil(y, mo, d);
  const CivilDate back = civil_from_millis(t);
  if (back.year != y || back.month != mo || back.day != d) {
    throw TimestampError{"no such calendar day"};
  }
  return t + h * kMillisPerHour + mi * kMillisPerMinute +
         s * kMillisPerSecond + ms;
}

Millis parse_iso(const std::string& text) {
  Cursor c{text};
  const int y = read_int(c, 4, 4);
  if (c.eof() || c.peek() != '-') throw TimestampError{"expected '-'"};
  ++c.pos;
  const int mo = read_int(c, 2, 2);
  if (c.eof() || c.peek() != '-') throw TimestampError{"expected '-'"};
  ++c.pos;
  const int d = read_int(c, 2, 2);
  int h = 0, mi = 0, s = 0, ms = 0;
  if (!c.eof()) {
    if (c.peek() != 'T' && c.peek() != ' ') throw TimestampError{"expected 'T'"};
    ++c.pos;
    h = read_int(c, 2, 2);
    if (c.eof() || c.peek() != ':') throw TimestampError{"expected ':'"};
    ++c.pos;
    mi = read_int(c, 2, 2);
    if (!c.eof() && c.peek() == ':') {
      ++c.pos;
      s = read_int(c, 2, 2);
      if (!c.eof() && c.peek() == '.') {
        ++c.pos;
        int digits = 0;
        int frac = 0;
        while (!c.eof() && std::isdigit(static_cast<unsigned char>(c.peek()))) {
          if (digits < 3) frac = frac * 10 + (c.peek() - '0');
          ++digits;
          ++c.pos;
        }
        if (digits == 0) throw TimestampError{"expected fraction"};
        while (digits < 3) {
          frac *= 10;
          ++digits;
        }
        ms = frac;
      }
    }
    if (!c.eof() && (c.peek() == 'Z' || c.peek() == 'z')) ++c.pos;
  }
  if (!c.eof()) throw TimestampError{"trailing characters"};
  return assemble(y, mo, d, h, mi, s, ms);
}

}  // namespace

Millis parse_timestamp(const std::string& text, const std::string& format) {
  if (format.empty()) return parse_iso(text);
  Cursor c{text};
  int y = 1970, mo = 1, d = 1, h = 0, mi = 0, s = 0, ms = 0;
  for (std::size_t i = 0; i < format.size(); ++i) {
    if (format[i] == '%' && i + 1 < format.size()) {
      ++i;
      switch (format[i]) {
        case 'Y': y = read_int(c, 4, 4); break;
        case 'm': mo = read_int(c, 1, 2); break;
        case 'd': d = read_int(c, 1, 2); break;
        case 'H': h = read_int(c, 1, 2); break;
        case 'M': mi = read_int(c, 1, 2); break;
        case 'S': s = read_int(c, 1, 2); break;
        case 'f': ms = read_int(c, 1, 3); break;
        case '%':
          if (c.eof() || c.peek() != '%') throw TimestampError{"expected '%'"};
          ++c.pos;
          break;
        default:
          throw TimestampError{"unknown format token"};
      }
    } else {
      if (c.eof() || c.peek() != format[i]) {
        throw TimestampError{"literal mismatch"};
      }
      ++c.pos;
    }
  }
  if (!c.eof()) throw TimestampError{"trailing characters"};
  return assemble(y, mo, d, h, mi, s, ms);
}

}  // namespace pmtk
