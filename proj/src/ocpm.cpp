#include "pmtk/ocpm.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace pmtk {

using nlohmann::json;

std::set<std::string> ObjectCentricLog::object_types() const {
  std::set<std::string> types;
  for (const auto& [id, obj] : objects) types.insert(obj.type);
  return types;
}

void ObjectCentricLog::validate() const {
  Millis prev = std::numeric_limits<Millis>::min();
  for (const auto& e : events) {
    if (e.timestamp < prev) {
      throw OcError("events out of time order at " + e.event_id);
    }
    prev = e.timestamp;
    if (e.omap.empty()) throw OcError("event with empty omap: " + e.event_id);
    for (const auto& [type, ids] : e.omap) {
      for (const auto& id : ids) {
        auto it = objects.find(id);
        if (it == objects.end()) {
          throw OcError("event " + e.event_id + " references unknown object " + id);
        }
        if (it->second.type != type) {
          throw OcError("object " + id + " is not of type " + type);
        }
      }
    }
  }
}

TraceLog flatten(const ObjectCentricLog& oclog, const std::string& type) {
  bool known = false;
  for (const auto& [id, obj] : oclog.objects) {
    if (obj.type == type) {
      known = true;
      break;
    }
  }
  if (!known) throw OcError("unknown object type: " + type);

  TraceLog out;
  for (const auto& e : oclog.events) {
    auto it = e.omap.find(type);
    if (it == e.omap.end()) continue;
    for (const auto& obj_id : it->second) {
      Event ev;
      ev.event_id = e.event_id;
      ev.activity = e.activity;
      ev.timestamp = e.timestamp;
      ev.lifecycle = Lifecycle::complete;
      ev.case_id = obj_id;
      ev.attrs = e.attrs;
      out.traces[obj_id].push_back(std::move(ev));
    }
  }
  return out;
}

FlatteningMetrics flattening_metrics(const ObjectCentricLog& oclog,
                                     const std::string& type) {
  FlatteningMetrics m;
  m.type = type;
  const TraceLog flat = flatten(oclog, type);
  std::map<std::string, const OCEvent*> by_id;
  for (const auto& e : oclog.events) {
    by_id[e.event_id] = &e;
    auto it = e.omap.find(type);
    if (it == e.omap.end() || it->second.empty()) {
      m.dropped_events++;
    } else {
      m.original_events++;
      m.flattened_events += it->second.size();
    }
  }
  m.replication_factor =
      m.original_events == 0
          ? 1.0
          : static_cast<double>(m.flattened_events) /
                static_cast<double>(m.original_events);

  // Divergence: directly-following pairs in a flattened trace whose object
  // references outside the case type are disjoint — independent events that
  // flattening makes look causally related.
  for (const auto& [case_id, trace] : flat.traces) {
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
      const OCEvent* a = by_id.at(trace[i].event_id);
      const OCEvent* b = by_id.at(trace[i + 1].event_id);
      bool any_other = false;
      bool shared = false;
      for (const auto& [t, ids_a] : a->omap) {
        if (t == type) continue;
        auto it = b->omap.find(t);
        if (it == b->omap.end()) continue;
        any_other = true;
        for (const auto& id : ids_a) {
          if (std::find(it->second.begin(), it->second.end(), id) !=
              it->second.end()) {
            shared = true;
            break;
          }
        }
        if (shared) break;
      }
      if (any_other && !shared) m.divergence_count++;
    }
  }
  return m;
}

Dfg DFMultigraph::project(const std::string& type) const {
  Dfg dfg;
  for (const auto& [key, stats] : arcs) {
    const auto& [from, to, t] = key;
    if (t != type) continue;
    dfg.arcs[{from, to}] = stats;
    if (from != kDfgSource) dfg.activities.insert(from);
    if (to != kDfgSink) dfg.activities.insert(to);
  }
  return dfg;
}

DFMultigraph discover_multigraph(const ObjectCentricLog& oclog) {
  if (oclog.events.empty()) throw OcError("empty object-centric log");
  DFMultigraph graph;
  for (const auto& type : oclog.object_types()) {
    const Dfg dfg = discover_dfg(flatten(oclog, type));
    graph.activities.insert(dfg.activities.begin(), dfg.activities.end());
    for (const auto& [key, stats] : dfg.arcs) {
      graph.arcs[{key.first, key.second, type}] = stats;
    }
  }
  return graph;
}

// --- interchange -----------------------------------------------------------------

std::string oclog_to_json(const ObjectCentricLog& oclog) {
  json objects = json::object();
  for (const auto& [id, obj] : oclog.objects) {
    json attrs = json::object();
    for (const auto& [k, v] : obj.attrs) attrs[k] = attr_to_string(v);
    objects[id] = json{{"type", obj.type}, {"attrs", std::move(attrs)}};
  }
  json events = json::array();
  for (const auto& e : oclog.events) {
    json vmap = json::object();
    for (const auto& [k, v] : e.attrs) vmap[k] = attr_to_string(v);
    events.push_back(json{{"id", e.event_id},
                          {"activity", e.activity},
                          {"time", format_timestamp(e.timestamp)},
                          {"omap", e.omap},
                          {"vmap", std::move(vmap)}});
  }
  return json{{"objects", std::move(objects)}, {"events", std::move(events)}}
             .dump(2) +
         "\n";
}

ObjectCentricLog oclog_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw OcError(std::string("invalid object-centric log JSON: ") + e.what());
  }
  ObjectCentricLog log;
  try {
    for (const auto& [id, obj] : j.at("objects").items()) {
      OCObject o;
      o.type = obj.at("type").get<std::string>();
      // value() returns by value; keep the temporary alive across items().
      const json attrs = obj.value("attrs", json::object());
      for (const auto& [k, v] : attrs.items()) {
        o.attrs[k] = v.get<std::string>();
      }
      log.objects[id] = std::move(o);
    }
    for (const auto& e : j.at("events")) {
      OCEvent ev;
      ev.event_id = e.at("id").get<std::string>();
      ev.activity = e.at("activity").get<std::string>();
      ev.timestamp = parse_timestamp(e.at("time").get<std::string>(), "");
      ev.omap =
          e.at("omap")
              .get<std::map<std::string, std::vector<std::string>>>();
      const json vmap = e.value("vmap", json::object());
      for (const auto& [k, v] : vmap.items()) {
        ev.attrs[k] = v.get<std::string>();
      }
      log.events.push_back(std::move(ev));
    }
  } catch (const json::exception& e) {
    throw OcError(std::string("malformed object-centric log: ") + e.what());
  } catch (const TimestampError& e) {
    throw OcError("malformed event time: " + e.message);
  }
  log.validate();
  return log;
}

std::string multigraph_to_dot(const DFMultigraph& graph) {
  static const char* palette[] = {"black",  "blue",   "red",   "darkgreen",
                                  "orange", "purple", "brown", "teal"};
  std::ostringstream out;
  out << "digraph ocdfg {\n  rankdir=LR;\n";
  for (const auto& a : graph.activities) {
    out << "  \"" << a << "\" [shape=box];\n";
  }
  std::map<std::string, std::size_t> type_color;
  for (const auto& [key, stats] : graph.arcs) {
    const auto& [from, to, type] = key;
    const auto [it, _] = type_color.emplace(type, type_color.size());
    out << "  \"" << from << "\" -> \"" << to << "\" [color="
        << palette[it->second % 8] << " label=\"" << type << ":"
        << stats.frequency << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

void build_object_centric_cube(const ObjectCentricLog&) {
  throw OcError(
      "process cubes over object-centric logs are not supported: an event "
      "belongs to several case notions at once, so the cube's disjoint-cell "
      "law has no single interpretation; flatten to one type first");
}

}  // namespace pmtk
