#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmtk/event_log.hpp"

// Process cubes: event-level multidimensional indexing with slice, dice,
// roll-up, drill-down, and per-cell sublog materialization.

namespace pmtk {

struct CubeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionLevel {
  std::string name;
  // child value -> value at this level; empty mapping = identity over the
  // previous level's values.
  std::map<std::string, std::string> mapping;
};

struct Dimension {
  std::string name;
  std::string attribute;  // source event attribute
  // levels[0] is the finest granularity (raw attribute rendering); further
  // levels coarsen through their mappings.
  std::vector<DimensionLevel> levels;
  std::size_t current_level = 0;

  /// Built-in calendar hierarchy day -> month -> year over an instant
  /// attribute; `start_level` names the initial granularity.
  static Dimension time(const std::string& attribute,
                        const std::string& start_level = "day");
  /// Flat dimension over a categorical attribute, optional child->parent
  /// hierarchy appended as a second level.
  static Dimension categorical(const std::string& attribute,
                               std::map<std::string, std::string> rollup = {},
                               const std::string& rollup_name = "group");
};

struct ProcessCube {
  EventLog base;
  std::vector<Dimension> dimensions;                 // active dimensions
  std::map<std::string, std::set<std::string>> kept; // dice filters per dim
  // Dimensions removed by slicing, with the value binding still enforced.
  std::vector<std::pair<Dimension, std::set<std::string>>> removed;

  /// Value of the event under a dimension at its current level.
  std::string coordinate(const Event& e, const Dimension& dim) const;
  /// Events passing every dice filter and every recorded slice binding.
  std::vector<const Event*> active_events() const;
  /// Cell coordinates (one per active dimension, in dimension order) ->
  /// event ids, a disjoint exhaustive partition of active_events().
  std::map<std::vector<std::string>, std::vector<std::string>> cells() const;
};

ProcessCube build_cube(const EventLog& log, std::vector<Dimension> dims);
ProcessCube slice(const ProcessCube& cube, const std::string& dim,
                  const std::set<std::string>& values);
ProcessCube dice(const ProcessCube& cube,
                 const std::map<std::string, std::set<std::string>>& filters);
ProcessCube roll_up(const ProcessCube& cube, const std::string& dim);
ProcessCube drill_down(const ProcessCube& cube, const std::string& dim);

/// Sublog of one cell; empty cells give an empty log.
TraceLog materialize(const ProcessCube& cube,
                     const std::vector<std::string>& coordinates,
                     const std::string& case_attr = "case");

/// child,parent CSV -> mapping usable as a hierarchy step.
std::map<std::string, std::string> hierarchy_from_csv(const std::string& bytes);

std::string cube_summary_csv(const ProcessCube& cube);

}  // namespace pmtk
