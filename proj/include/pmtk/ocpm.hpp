#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmtk/discovery.hpp"
#include "pmtk/event_log.hpp"

// Object-centric event logs: flattening to a chosen case notion,
// convergence/divergence metrics, and directly-follows multigraphs.

namespace pmtk {

struct OcError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OCEvent {
  std::string event_id;
  std::string activity;
  Millis timestamp = 0;
  // object type -> referenced object ids (ordered for determinism)
  std::map<std::string, std::vector<std::string>> omap;
  std::map<std::string, AttrValue> attrs;
};

struct OCObject {
  std::string type;
  std::map<std::string, AttrValue> attrs;
};

struct ObjectCentricLog {
  std::vector<OCEvent> events;  // global time order
  std::map<std::string, OCObject> objects;

  std::set<std::string> object_types() const;
  /// Throws OcError when an omap entry references an unknown object or the
  /// events are not time-ordered.
  void validate() const;
};

struct FlatteningMetrics {
  std::string type;
  std::size_t original_events = 0;   // events referencing >= 1 object of type
  std::size_t flattened_events = 0;  // after replication
  double replication_factor = 1.0;   // flattened / original
  std::size_t dropped_events = 0;    // events without type references
  std::size_t divergence_count = 0;  // see flattening_metrics
};

struct DFMultigraph {
  std::set<std::string> activities;
  // (from, to, object type) -> stats; artificial start/end nodes per type.
  std::map<std::tuple<std::string, std::string, std::string>, DfgArcStats> arcs;

  Dfg project(const std::string& type) const;
};

/// One trace per object of the chosen type; every event referencing the
/// object appears in its trace (complete lifecycle), so events with several
/// objects of the type are replicated.
TraceLog flatten(const ObjectCentricLog& oclog, const std::string& type);

/// Replication factor quantifies convergence. Divergence counts the ordered
/// pairs of events that become directly-following inside some flattened
/// trace although their object sets outside the case type are disjoint
/// (independent work made to look causally related).
FlatteningMetrics flattening_metrics(const ObjectCentricLog& oclog,
                                     const std::string& type);

DFMultigraph discover_multigraph(const ObjectCentricLog& oclog);

std::string oclog_to_json(const ObjectCentricLog& oclog);
ObjectCentricLog oclog_from_json(const std::string& text);
std::string multigraph_to_dot(const DFMultigraph& graph);

/// Process-cube semantics over object-centric logs are intentionally
/// unsupported; this always throws OcError explaining the limitation.
[[noreturn]] void build_object_centric_cube(const ObjectCentricLog& oclog);

}  // namespace pmtk
