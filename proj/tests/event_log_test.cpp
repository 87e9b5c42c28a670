#include <doctest.h>

#include <algorithm>

#include "pmtk/event_log.hpp"

using namespace pmtk;

namespace {

Event make_event(std::string id, std::string act, Millis t,
                 Lifecycle lc = Lifecycle::complete,
                 std::string case_id = "c1") {
  Event e;
  e.event_id = std::move(id);
  e.activity = std::move(act);
  e.timestamp = t;
  e.lifecycle = lc;
  e.case_id = std::move(case_id);
  return e;
}

const Millis kBase = millis_from_civil(2023, 1, 2) + kWorkStart;

}  // namespace

TEST_CASE("parse_csv_log maps columns and keeps extras as attrs") {
  const std::string csv =
      "case,activity,timestamp,lifecycle,resource,color\n"
      "c1,GA1,2023-01-02T08:00:00Z,start,op_1,red\n"
      "c1,GA1,2023-01-02T08:10:00Z,complete,op_1,red\n";
  const EventLog log = parse_csv_log(csv, CsvMapping{});
  REQUIRE(log.events.size() == 2);
  CHECK(log.events[0].activity == "GA1");
  CHECK(log.events[0].lifecycle == Lifecycle::start);
  CHECK(log.events[1].timestamp - log.events[0].timestamp ==
        10 * kMillisPerMinute);
  CHECK(log.events[0].case_id == "c1");
  CHECK(log.events[0].resource == "op_1");
  CHECK(log.schema.count("color") == 1);
  CHECK(std::get<std::string>(log.events[0].attrs.at("color")) == "red");
}

TEST_CASE("parse_csv_log errors carry context") {
  CHECK_THROWS_AS(parse_csv_log("case,activity\nc1,GA1\n", CsvMapping{}),
                  LogError);  // no timestamp column
  try {
    parse_csv_log(
        "case,activity,timestamp\nc1,GA1,2023-01-02\nc1,GA2,bogus\n",
        CsvMapping{});
    FAIL("expected RowError");
  } catch (const RowError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("csv and json round trips preserve the log") {
  EventLog log;
  Event e = make_event("e1", "GA1", kBase, Lifecycle::start);
  e.resource = "op_1";
  e.attrs["color"] = std::string("red");
  e.attrs["ordinal"] = std::int64_t{7};
  e.attrs["score"] = 2.5;
  e.attrs["due"] = Instant{kBase + kMillisPerDay};
  log.events.push_back(e);
  e.event_id = "e2";
  e.lifecycle = Lifecycle::complete;
  e.timestamp += 5 * kMillisPerMinute;
  log.events.push_back(e);
  log.schema = {{"color", AttrType::string},
                {"ordinal", AttrType::integer},
                {"score", AttrType::real},
                {"due", AttrType::instant}};

  const EventLog from_json = event_log_from_json(event_log_to_json(log));
  REQUIRE(from_json.events.size() == 2);
  CHECK(from_json.schema == log.schema);
  CHECK(from_json.events[0].attrs == log.events[0].attrs);
  CHECK(from_json.events[1].timestamp == log.events[1].timestamp);

  // CSV keeps values; attribute types survive via the schema-typed reparse.
  const std::string csv = event_log_to_csv(log);
  const EventLog from_csv = parse_csv_log(csv, CsvMapping{});
  REQUIRE(from_csv.events.size() == 2);
  CHECK(from_csv.events[0].timestamp == log.events[0].timestamp);
  CHECK(attr_to_string(from_csv.events[0].attrs.at("ordinal")) == "7");
}

TEST_CASE("build_traces groups and orders") {
  EventLog log;
  // Deliberately shuffled input order.
  log.events.push_back(make_event("e4", "B", kBase + 20, Lifecycle::complete, "c2"));
  log.events.push_back(make_event("e2", "A", kBase + 10, Lifecycle::complete, "c1"));
  log.events.push_back(make_event("e1", "A", kBase, Lifecycle::start, "c1"));
  log.events.push_back(make_event("e3", "B", kBase + 10, Lifecycle::start, "c2"));
  const TraceLog traces = build_traces(log);
  REQUIRE(traces.traces.size() == 2);
  CHECK(traces.total_events() == 4);
  const auto& c1 = traces.traces.at("c1");
  CHECK(c1[0].event_id == "e1");
  CHECK(c1[1].event_id == "e2");
  // Equal timestamps: start sorts before complete.
  const auto& c2 = traces.traces.at("c2");
  CHECK(c2[0].lifecycle == Lifecycle::start);
}

TEST_CASE("build_traces by a custom case attribute") {
  EventLog log;
  Event a = make_event("e1", "A", kBase);
  a.attrs["order"] = std::string("o1");
  Event b = make_event("e2", "B", kBase + 1, Lifecycle::complete, "c2");
  b.attrs["order"] = std::string("o1");
  log.events = {a, b};
  const TraceLog by_order = build_traces(log, "order");
  REQUIRE(by_order.traces.size() == 1);
  CHECK(by_order.traces.at("o1").size() == 2);
}

TEST_CASE("build_traces rejects events without a case") {
  EventLog log;
  Event e = make_event("e1", "A", kBase);
  e.case_id.reset();
  log.events = {e};
  CHECK_THROWS_AS(build_traces(log), LogError);
}

TEST_CASE("filter_events evaluates predicates") {
  EventLog log;
  Event a = make_event("e1", "GA5", kBase);
  a.attrs["color"] = std::string("white");
  Event b = make_event("e2", "GA6", kBase + kMillisPerDay * 370);
  b.attrs["color"] = std::string("red");
  log.events = {a, b};
  log.schema["color"] = AttrType::string;

  CHECK(filter_events(log, "activity = GA5").events.size() == 1);
  CHECK(filter_events(log, "color != white").events[0].event_id == "e2");
  CHECK(filter_events(log, "year(timestamp) = 2024").events.size() == 1);
  CHECK(filter_events(log, "activity = GA5 and color = white").events.size() == 1);
  CHECK(filter_events(log, "activity = GA5 and color = red").events.empty());
  CHECK(filter_events(log, "true").events.size() == 2);
  CHECK(filter_events(log, "false").events.empty());
  CHECK_THROWS(filter_events(log, "activity ~ GA5"));
}

TEST_CASE("event_attribute exposes built-ins") {
  Event e = make_event("e1", "GA5", kBase, Lifecycle::start);
  e.resource = "op_1";
  e.attrs["color"] = std::string("red");
  CHECK(std::get<std::string>(*event_attribute(e, "activity")) == "GA5");
  CHECK(std::get<Instant>(*event_attribute(e, "timestamp")).value == kBase);
  CHECK(std::get<std::string>(*event_attribute(e, "lifecycle")) == "start");
  CHECK(std::get<std::string>(*event_attribute(e, "resource")) == "op_1");
  CHECK(std::get<std::string>(*event_attribute(e, "case")) == "c1");
  CHECK(std::get<std::string>(*event_attribute(e, "color")) == "red");
  CHECK(!event_attribute(e, "nope").has_value());
}

TEST_CASE("activity_instances pairs starts with completes") {
  std::vector<Event> trace = {
      make_event("e1", "A", kBase, Lifecycle::start),
      make_event("e2", "A", kBase + 10, Lifecycle::complete),
      make_event("e3", "B", kBase + 20, Lifecycle::complete),  // lone complete
      make_event("e4", "A", kBase + 30, Lifecycle::start),     // unpaired start
  };
  std::size_t unpaired = 0;
  const auto instances = activity_instances(trace, &unpaired);
  REQUIRE(instances.size() == 2);
  CHECK(instances[0].activity == "A");
  CHECK(*instances[0].start == kBase);
  CHECK(instances[0].complete == kBase + 10);
  CHECK(instances[1].activity == "B");
  CHECK(!instances[1].start.has_value());
  CHECK(unpaired == 1);
}

TEST_CASE("activity_sequence uses completion order") {
  std::vector<Event> trace = {
      make_event("e1", "A", kBase, Lifecycle::start),
      make_event("e2", "B", kBase + 5, Lifecycle::start),
      make_event("e3", "B", kBase + 9, Lifecycle::complete),
      make_event("e4", "A", kBase + 10, Lifecycle::complete),
  };
  CHECK(activity_sequence(trace) == std::vector<std::string>{"B", "A"});
  // Start-only traces fall back to event order.
  std::vector<Event> starts = {
      make_event("e1", "A", kBase, Lifecycle::start),
      make_event("e2", "B", kBase + 5, Lifecycle::start),
  };
  CHECK(activity_sequence(starts) == std::vector<std::string>{"A", "B"});
}
