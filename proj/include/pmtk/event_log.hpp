#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pmtk/calendar.hpp"

// Flat event-log data model and interchange. Logs are immutable after
// construction; every operation returns a new value.

namespace pmtk {

enum class Lifecycle { start, complete };

std::string to_string(Lifecycle lc);
Lifecycle lifecycle_from_string(const std::string& s);

/// Timestamp-valued attribute, distinct from plain integers.
struct Instant {
  Millis value = 0;
  auto operator<=>(const Instant&) const = default;
};

using AttrValue = std::variant<std::string, std::int64_t, double, Instant>;

enum class AttrType { string, integer, real, instant };

std::string to_string(AttrType t);
AttrType attr_type_of(const AttrValue& v);
std::string attr_to_string(const AttrValue& v);

struct Event {
  std::string event_id;
  std::string activity;
  Millis timestamp = 0;
  Lifecycle lifecycle = Lifecycle::complete;
  std::optional<std::string> resource;
  std::optional<std::string> case_id;
  std::map<std::string, AttrValue> attrs;
};

struct EventLog {
  std::vector<Event> events;
  std::map<std::string, AttrType> schema;
};

struct TraceLog {
  std::map<std::string, std::vector<Event>> traces;

  std::size_t total_events() const;
};

struct LogError {
  std::string message;
  std::vector<std::string> event_ids;
};

struct RowError {
  std::string message;
  std::size_t line = 0;  // 1-based data line in the source file
};

/// Column roles for CSV ingestion. Unmapped columns become event attrs.
struct CsvMapping {
  std::string case_column = "case";
  std::string activity_column = "activity";
  std::string timestamp_column = "timestamp";
  std::string lifecycle_column;  // empty: use "lifecycle" when present
  std::string resource_column;   // empty: use "resource" when present
  std::string timestamp_format;  // empty = ISO-8601
};

/// One event per data row, file order preserved. Missing mapped columns are
/// fatal (LogError); a malformed timestamp raises RowError with its line.
EventLog parse_csv_log(const std::string& bytes, const CsvMapping& mapping);

/// Serializes with columns case,activity,timestamp,lifecycle,resource plus
/// one column per schema attribute.
std::string event_log_to_csv(const EventLog& log,
                             const CsvMapping& mapping = {});

/// JSON interchange: {"schema": {...}, "events": [...]}.
std::string event_log_to_json(const EventLog& log);
EventLog event_log_from_json(const std::string& text);

/// Groups events by the case attribute ("case" uses Event::case_id) and
/// sorts each trace by (timestamp, lifecycle start<complete, event_id).
TraceLog build_traces(const EventLog& log, const std::string& case_attr = "case");

/// Keeps events satisfying the predicate, order preserved. The predicate
/// language is conjunctions of comparisons:
///   activity = GA5 and year(timestamp) = 2017 and color != white
/// Operators: = == != < <= > >=; functions on instants: year month day hour;
/// bare "true" / "false" are accepted.
EventLog filter_events(const EventLog& log, const std::string& predicate);

/// Looks up an attribute on an event; the built-ins activity, timestamp,
/// lifecycle, resource and case are always available.
std::optional<AttrValue> event_attribute(const Event& e, const std::string& name);

/// One execution of an activity within a trace: a start/complete pair when
/// both lifecycles are present, otherwise a lone complete event.
struct ActivityInstance {
  std::string activity;
  std::optional<Millis> start;
  Millis complete = 0;
  std::optional<std::string> resource;
};

/// Pairs start events with the next complete of the same activity. Lone
/// completes become start-less instances; `unpaired_starts`, when given,
/// receives the count of starts without a matching complete.
std::vector<ActivityInstance> activity_instances(
    const std::vector<Event>& trace, std::size_t* unpaired_starts = nullptr);

/// The trace's activity labels in completion order (falls back to all
/// events when the trace has no complete events).
std::vector<std::string> activity_sequence(const std::vector<Event>& trace);

}  // namespace pmtk
