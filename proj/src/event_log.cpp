#include "pmtk/event_log.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <set>
#include <sstream>

#include "pmtk/csv.hpp"
#include <json.hpp>

namespace pmtk {

using nlohmann::json;

std::string to_string(Lifecycle lc) {
  return lc == Lifecycle::start ? "start" : "complete";
}

Lifecycle lifecycle_from_string(const std::string& s) {
  if (s == "start") return Lifecycle::start;
  if (s == "complete") return Lifecycle::complete;
  throw LogError{"unknown lifecycle value: " + s, {}};
}

std::string to_string(AttrType t) {
  switch (t) {
    case AttrType::string: return "string";
    case AttrType::integer: return "integer";
    case AttrType::real: return "real";
    case AttrType::instant: return "instant";
  }
  return "string";
}

AttrType attr_type_of(const AttrValue& v) {
  return static_cast<AttrType>(v.index());
}

std::string attr_to_string(const AttrValue& v) {
  switch (v.index()) {
    case 0: return std::get<std::string>(v);
    case 1: return std::to_string(std::get<std::int64_t>(v));
    case 2: {
      std::ostringstream oss;
      oss << std::get<double>(v);
      return oss.str();
    }
    default: return format_timestamp(std::get<Instant>(v).value);
  }
}

std::size_t TraceLog::total_events() const {
  std::size_t n = 0;
  for (const auto& [id, trace] : traces) n += trace.size();
  return n;
}

EventLog parse_csv_log(const std::string& bytes, const CsvMapping& mapping) {
  CsvTable table;
  try {
    table = parse_csv(bytes);
  } catch (const CsvError& e) {
    throw RowError{e.message, e.line};
  }

  const int case_col = table.column(mapping.case_column);
  const int act_col = table.column(mapping.activity_column);
  const int ts_col = table.column(mapping.timestamp_column);
  if (case_col < 0) throw LogError{"missing mapped column: " + mapping.case_column, {}};
  if (act_col < 0) throw LogError{"missing mapped column: " + mapping.activity_column, {}};
  if (ts_col < 0) throw LogError{"missing mapped column: " + mapping.timestamp_column, {}};
  // With no explicit mapping these roles fall back to their conventional
  // column names, and are simply absent when the file lacks them; an explicit
  // name that is missing is an error.
  const int lc_col = mapping.lifecycle_column.empty()
                         ? table.column("lifecycle")
                         : table.column(mapping.lifecycle_column);
  if (!mapping.lifecycle_column.empty() && lc_col < 0) {
    throw LogError{"missing mapped column: " + mapping.lifecycle_column, {}};
  }
  const int res_col = mapping.resource_column.empty()
                          ? table.column("resource")
                          : table.column(mapping.resource_column);
  if (!mapping.resource_column.empty() && res_col < 0) {
    throw LogError{"missing mapped column: " + mapping.resource_column, {}};
  }

  EventLog log;
  std::vector<int> attr_cols;
  for (int i = 0; i < static_cast<int>(table.header.size()); ++i) {
    if (i == case_col || i == act_col || i == ts_col || i == lc_col ||
        i == res_col) {
      continue;
    }
    attr_cols.push_back(i);
    log.schema[table.header[i]] = AttrType::string;
  }

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    Event e;
    e.event_id = "e" + std::to_string(r + 1);
    e.case_id = row[case_col];
    e.activity = row[act_col];
    try {
      e.timestamp = parse_timestamp(row[ts_col], mapping.timestamp_format);
    } catch (const TimestampError& te) {
      throw RowError{"malformed timestamp '" + row[ts_col] + "': " + te.message,
                     r + 2};  // header is line 1
    }
    if (lc_col >= 0 && !row[lc_col].empty()) {
      e.lifecycle = lifecycle_from_string(row[lc_col]);
    }
    if (res_col >= 0 && !row[res_col].empty()) e.resource = row[res_col];
    for (int c : attr_cols) e.attrs[table.header[c]] = row[c];
    log.events.push_back(std::move(e));
  }
  return log;
}

std::string event_log_to_csv(const EventLog& log, const CsvMapping& mapping) {
  CsvTable table;
  table.header = {mapping.case_column, mapping.activity_column,
                  mapping.timestamp_column,
                  mapping.lifecycle_column.empty() ? "lifecycle"
                                                   : mapping.lifecycle_column,
                  mapping.resource_column.empty() ? "resource"
                                                  : mapping.resource_column};
  for (const auto& [name, type] : log.schema) table.header.push_back(name);
  for (const Event& e : log.events) {
    std::vector<std::string> row;
    row.push_back(e.case_id.value_or(""));
    row.push_back(e.activity);
    row.push_back(format_timestamp(e.timestamp));
    row.push_back(to_string(e.lifecycle));
    row.push_back(e.resource.value_or(""));
    for (const auto& [name, type] : log.schema) {
      auto it = e.attrs.find(name);
      row.push_back(it == e.attrs.end() ? "" : attr_to_string(it->second));
    }
    table.rows.push_back(std::move(row));
  }
  return to_csv(table);
}

namespace {

json attr_to_json(const AttrValue& v) {
  switch (v.index()) {
    case 0: return std::get<std::string>(v);
    case 1: return std::get<std::int64_t>(v);
    case 2: return std::get<double>(v);
    default: return format_timestamp(std::get<Instant>(v).value);
  }
}

AttrValue attr_from_json(const json& j, AttrType type) {
  switch (type) {
    case AttrType::string: return j.get<std::string>();
    case AttrType::integer: return j.get<std::int64_t>();
    case AttrType::real: return j.get<double>();
    case AttrType::instant: return Instant{parse_timestamp(j.get<std::string>())};
  }
  return std::string{};
}

AttrType attr_type_from_string(const std::string& s) {
  if (s == "string") return AttrType::string;
  if (s == "integer") return AttrType::integer;
  if (s == "real") return AttrType::real;
  if (s == "instant") return AttrType::instant;
  throw LogError{"unknown attribute type: " + s, {}};
}

}  // namespace

std::string event_log_to_json(const EventLog& log) {
  json schema = json::object();
  for (const auto& [name, type] : log.schema) schema[name] = to_string(type);
  json events = json::array();
  for (const Event& e : log.events) {
    json je;
    je["id"] = e.event_id;
    je["activity"] = e.activity;
    je["time"] = format_timestamp(e.timestamp);
    je["lifecycle"] = to_string(e.lifecycle);
    if (e.resource) je["resource"] = *e.resource;
    if (e.case_id) je["case"] = *e.case_id;
    json attrs = json::object();
    for (const auto& [name, value] : e.attrs) attrs[name] = attr_to_json(value);
    je["attrs"] = std::move(attrs);
    events.push_back(std::move(je));
  }
  json root;
  root["schema"] = std::move(schema);
  root["events"] = std::move(events);
  return root.dump(2) + "\n";
}

EventLog event_log_from_json(const std::string& text) {
  const json root = json::parse(text);
  EventLog log;
  for (const auto& [name, type] : root.at("schema").items()) {
    log.schema[name] = attr_type_from_string(type.get<std::string>());
  }
  for (const json& je : root.at("events")) {
    Event e;
    e.event_id = je.at("id").get<std::string>();
    e.activity = je.at("activity").get<std::string>();
    e.timestamp = parse_timestamp(je.at("time").get<std::string>());
    e.lifecycle = lifecycle_from_string(je.at("lifecycle").get<std::string>());
    if (je.contains("resource")) e.resource = je["resource"].get<std::string>();
    if (je.contains("case")) e.case_id = je["case"].get<std::string>();
    if (je.contains("attrs")) {
      for (const auto& [name, value] : je["attrs"].items()) {
        auto it = log.schema.find(name);
        if (it == log.schema.end()) {
          throw LogError{"attribute not in schema: " + name, {e.event_id}};
        }
        e.attrs[name] = attr_from_json(value, it->second);
      }
    }
    log.events.push_back(std::move(e));
  }
  return log;
}

std::optional<AttrValue> event_attribute(const Event& e, const std::string& name) {
  if (name == "activity") return AttrValue{e.activity};
  if (name == "timestamp") return AttrValue{Instant{e.timestamp}};
  if (name == "lifecycle") return AttrValue{to_string(e.lifecycle)};
  if (name == "resource") {
    if (!e.resource) return std::nullopt;
    return AttrValue{*e.resource};
  }
  if (name == "case") {
    if (!e.case_id) return std::nullopt;
    return AttrValue{*e.case_id};
  }
  auto it = e.attrs.find(name);
  if (it == e.attrs.end()) return std::nullopt;
  return it->second;
}

TraceLog build_traces(const EventLog& log, const std::string& case_attr) {
  std::vector<std::string> missing;
  TraceLog out;
  for (const Event& e : log.events) {
    auto value = event_attribute(e, case_attr);
    if (!value) {
      missing.push_back(e.event_id);
      continue;
    }
    out.traces[attr_to_string(*value)].push_back(e);
  }
  if (!missing.empty()) {
    throw LogError{"events missing case attribute '" + case_attr + "'",
                   std::move(missing)};
  }
  for (auto& [case_id, trace] : out.traces) {
    std::stable_sort(trace.begin(), trace.end(),
                     [](const Event& a, const Event& b) {
                       if (a.timestamp != b.timestamp) {
                         return a.timestamp < b.timestamp;
                       }
                       if (a.lifecycle != b.lifecycle) {
                         return a.lifecycle == Lifecycle::start;
                       }
                       return a.event_id < b.event_id;
                     });
    for (Event& e : trace) e.case_id = case_id;
  }
  return out;
}

std::vector<ActivityInstance> activity_instances(const std::vector<Event>& trace,
                                                 std::size_t* unpaired_starts) {
  std::vector<ActivityInstance> out;
  std::map<std::string, std::vector<const Event*>> pending;
  bool any_complete = false;
  for (const Event& e : trace) {
    if (e.lifecycle == Lifecycle::start) {
      pending[e.activity].push_back(&e);
      continue;
    }
    any_complete = true;
    ActivityInstance inst;
    inst.activity = e.activity;
    inst.complete = e.timestamp;
    inst.resource = e.resource;
    auto it = pending.find(e.activity);
    if (it != pending.end() && !it->second.empty()) {
      const Event* s = it->second.front();
      it->second.erase(it->second.begin());
      inst.start = s->timestamp;
      if (!inst.resource) inst.resource = s->resource;
    }
    out.push_back(std::move(inst));
  }
  if (!any_complete) {
    // Start-only log: treat each event as its own instance.
    out.clear();
    for (const Event& e : trace) {
      out.push_back(ActivityInstance{e.activity, std::nullopt, e.timestamp,
                                     e.resource});
    }
    if (unpaired_starts) *unpaired_starts = 0;
    return out;
  }
  if (unpaired_starts) {
    std::size_t n = 0;
    for (const auto& [act, starts] : pending) n += starts.size();
    *unpaired_starts = n;
  }
  return out;
}

std::vector<std::string> activity_sequence(const std::vector<Event>& trace) {
  std::vector<std::string> out;
  for (const ActivityInstance& inst : activity_instances(trace)) {
    out.push_back(inst.activity);
  }
  return out;
}

// --- predicate mini-language -------------------------------------------------

namespace {

struct Comparison {
  std::string attribute;
  std::string function;  // "", "year", "month", "day", "hour"
  std::string op;
  std::string rhs;
};

struct Predicate {
  bool constant_true = false;
  bool constant_false = false;
  std::vector<Comparison> terms;
};

void skip_ws(const std::string& s, std::size_t& i) {
  while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
         c == '-' || c == ':';
}

std::string read_token(const std::string& s, std::size_t& i) {
  skip_ws(s, i);
  if (i >= s.size()) throw LogError{"unexpected end of predicate", {}};
  if (s[i] == '\'' || s[i] == '"') {
    const char quote = s[i++];
    std::string out;
    while (i < s.size() && s[i] != quote) out.push_back(s[i++]);
    if (i >= s.size()) throw LogError{"unterminated string in predicate", {}};
    ++i;
    return out;
  }
  std::string out;
  while (i < s.size() && ident_char(s[i])) out.push_back(s[i++]);
  if (out.empty()) throw LogError{"unexpected character in predicate", {}};
  return out;
}

Predicate parse_predicate(const std::string& text) {
  Predicate p;
  std::size_t i = 0;
  skip_ws(text, i);
  for (;;) {
    std::size_t save = i;
    std::string tok = read_token(text, i);
    if (p.terms.empty() && (tok == "true" || tok == "false")) {
      skip_ws(text, i);
      if (i != text.size()) throw LogError{"trailing predicate text", {}};
      p.constant_true = tok == "true";
      p.constant_false = tok == "false";
      return p;
    }
    Comparison c;
    skip_ws(text, i);
    if (i < text.size() && text[i] == '(') {
      c.function = tok;
      if (c.function != "year" && c.function != "month" && c.function != "day" &&
          c.function != "hour") {
        throw LogError{"unknown predicate function: " + c.function, {}};
      }
      ++i;
      c.attribute = read_token(text, i);
      skip_ws(text, i);
      if (i >= text.size() || text[i] != ')') {
        throw LogError{"expected ')' in predicate", {}};
      }
      ++i;
    } else {
      c.attribute = tok;
      (void)save;
    }
    skip_ws(text, i);
    static const std::vector<std::string> ops = {"==", "!=", "<=", ">=",
                                                 "=",  "<",  ">"};
    for (const auto& op : ops) {
      if (text.compare(i, op.size(), op) == 0) {
        c.op = op;
        i += op.size();
        break;
      }
    }
    if (c.op.empty()) throw LogError{"expected comparison operator", {}};
    c.rhs = read_token(text, i);
    p.terms.push_back(std::move(c));
    skip_ws(text, i);
    if (i >= text.size()) break;
    if (text.compare(i, 3, "and") == 0) {
      i += 3;
    } else if (text.compare(i, 2, "&&") == 0) {
      i += 2;
    } else if (text.compare(i, 3, "∧") == 0) {  // ∧
      i += 3;
    } else {
      throw LogError{"expected 'and' in predicate", {}};
    }
  }
  return p;
}

int instant_field(Millis t, const std::string& fn) {
  const CivilDate d = civil_from_millis(t);
  if (fn == "year") return d.year;
  if (fn == "month") return d.month;
  if (fn == "day") return d.day;
  // hour
  return static_cast<int>((t % kMillisPerDay) / kMillisPerHour);
}

bool numeric(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [p, ec] = std::from_chars(begin, end, out);
  return ec == std::errc{} && p == end;
}

bool compare_values(const AttrValue& lhs, const std::string& op,
                    const std::string& rhs) {
  int cmp;
  double lnum = 0, rnum = 0;
  bool lhs_numeric = false;
  switch (lhs.index()) {
    case 1: lnum = static_cast<double>(std::get<std::int64_t>(lhs)); lhs_numeric = true; break;
    case 2: lnum = std::get<double>(lhs); lhs_numeric = true; break;
    case 3: lnum = static_cast<double>(std::get<Instant>(lhs).value); break;
    default: break;
  }
  if (lhs.index() == 3) {
    // Compare instants against parsed timestamps.
    const double r = static_cast<double>(parse_timestamp(rhs));
    cmp = lnum < r ? -1 : (lnum > r ? 1 : 0);
  } else if (lhs_numeric && numeric(rhs, rnum)) {
    cmp = lnum < rnum ? -1 : (lnum > rnum ? 1 : 0);
  } else {
    const std::string l = attr_to_string(lhs);
    cmp = l.compare(rhs);
    cmp = cmp < 0 ? -1 : (cmp > 0 ? 1 : 0);
  }
  if (op == "=" || op == "==") return cmp == 0;
  if (op == "!=") return cmp != 0;
  if (op == "<") return cmp < 0;
  if (op == "<=") return cmp <= 0;
  if (op == ">") return cmp > 0;
  return cmp >= 0;
}

}  // namespace

EventLog filter_events(const EventLog& log, const std::string& predicate) {
  const Predicate p = parse_predicate(predicate);
  for (const Comparison& c : p.terms) {
    static const std::set<std::string> builtins = {
        "activity", "timestamp", "lifecycle", "resource", "case"};
    if (!builtins.count(c.attribute) && !log.schema.count(c.attribute)) {
      throw LogError{"unknown attribute in predicate: " + c.attribute, {}};
    }
  }
  EventLog out;
  out.schema = log.schema;
  if (p.constant_false) return out;
  for (const Event& e : log.events) {
    bool keep = true;
    for (const Comparison& c : p.terms) {
      auto value = event_attribute(e, c.attribute);
      if (!value) {
        keep = false;
        break;
      }
      AttrValue v = *value;
      if (!c.function.empty()) {
        if (attr_type_of(v) != AttrType::instant) {
          throw LogError{"function " + c.function + " needs an instant", {}};
        }
        v = static_cast<std::int64_t>(
            instant_field(std::get<Instant>(v).value, c.function));
      }
      if (!compare_values(v, c.op, c.rhs)) {
        keep = false;
        break;
      }
    }
    if (keep) out.events.push_back(e);
  }
  return out;
}

}  // namespace pmtk
