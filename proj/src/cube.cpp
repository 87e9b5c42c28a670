#include "pmtk/cube.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "pmtk/csv.hpp"

namespace pmtk {

namespace {

std::string render_instant(Millis t, const std::string& level) {
  const CivilDate d = civil_from_millis(t);
  char buf[16];
  if (level == "year") {
    std::snprintf(buf, sizeof(buf), "%04d", d.year);
  } else if (level == "month") {
    std::snprintf(buf, sizeof(buf), "%04d-%02d", d.year, d.month);
  } else {
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
  }
  return buf;
}

}  // namespace

Dimension Dimension::time(const std::string& attribute,
                          const std::string& start_level) {
  Dimension d;
  d.name = attribute;
  d.attribute = attribute;
  d.levels = {DimensionLevel{"day", {}}, DimensionLevel{"month", {}},
              DimensionLevel{"year", {}}};
  for (std::size_t i = 0; i < d.levels.size(); ++i) {
    if (d.levels[i].name == start_level) d.current_level = i;
  }
  return d;
}

Dimension Dimension::categorical(const std::string& attribute,
                                 std::map<std::string, std::string> rollup,
                                 const std::string& rollup_name) {
  Dimension d;
  d.name = attribute;
  d.attribute = attribute;
  d.levels = {DimensionLevel{attribute, {}}};
  if (!rollup.empty()) {
    d.levels.push_back(DimensionLevel{rollup_name, std::move(rollup)});
  }
  return d;
}

std::string ProcessCube::coordinate(const Event& e, const Dimension& dim) const {
  const auto value = event_attribute(e, dim.attribute);
  if (!value) throw CubeError("event lacks attribute " + dim.attribute);
  std::string v;
  if (const auto* inst = std::get_if<Instant>(&*value)) {
    // Calendar levels render directly at the requested granularity.
    v = render_instant(inst->value,
                       dim.levels.empty() ? "day"
                                          : dim.levels[dim.current_level].name);
    if (dim.levels.empty() || dim.levels[dim.current_level].mapping.empty()) {
      return v;
    }
  } else {
    v = attr_to_string(*value);
  }
  for (std::size_t i = 1; i <= dim.current_level && i < dim.levels.size(); ++i) {
    const auto& mapping = dim.levels[i].mapping;
    if (mapping.empty()) continue;
    auto it = mapping.find(v);
    if (it == mapping.end()) {
      throw CubeError("hierarchy level " + dim.levels[i].name +
                      " has no mapping for value " + v);
    }
    v = it->second;
  }
  return v;
}

std::vector<const Event*> ProcessCube::active_events() const {
  std::vector<const Event*> out;
  for (const Event& e : base.events) {
    bool ok = true;
    for (const auto& dim : dimensions) {
      auto it = kept.find(dim.name);
      if (it != kept.end() && !it->second.count(coordinate(e, dim))) {
        ok = false;
        break;
      }
    }
    if (ok) {
      for (const auto& [dim, values] : removed) {
        if (!values.count(coordinate(e, dim))) {
          ok = false;
          break;
        }
      }
    }
    if (ok) out.push_back(&e);
  }
  return out;
}

std::map<std::vector<std::string>, std::vector<std::string>> ProcessCube::cells()
    const {
  std::map<std::vector<std::string>, std::vector<std::string>> out;
  for (const Event* e : active_events()) {
    std::vector<std::string> coords;
    coords.reserve(dimensions.size());
    for (const auto& dim : dimensions) coords.push_back(coordinate(*e, dim));
    out[std::move(coords)].push_back(e->event_id);
  }
  return out;
}

ProcessCube build_cube(const EventLog& log, std::vector<Dimension> dims) {
  ProcessCube cube;
  cube.base = log;
  cube.dimensions = std::move(dims);
  for (const auto& dim : cube.dimensions) {
    if (dim.levels.empty()) throw CubeError("dimension without levels: " + dim.name);
    // Probe attribute existence and hierarchy totality up front.
    for (const Event& e : cube.base.events) {
      (void)cube.coordinate(e, dim);
    }
  }
  return cube;
}

namespace {

const Dimension& find_dimension(const ProcessCube& cube, const std::string& dim) {
  for (const auto& d : cube.dimensions) {
    if (d.name == dim) return d;
  }
  throw CubeError("unknown dimension: " + dim);
}

void check_values(const ProcessCube& cube, const Dimension& dim,
                  const std::set<std::string>& values) {
  std::set<std::string> observed;
  for (const Event* e : cube.active_events()) {
    observed.insert(cube.coordinate(*e, dim));
  }
  for (const auto& v : values) {
    if (!observed.count(v)) {
      throw CubeError("value " + v + " not observed on dimension " + dim.name);
    }
  }
}

}  // namespace

ProcessCube slice(const ProcessCube& cube, const std::string& dim,
                  const std::set<std::string>& values) {
  const Dimension& d = find_dimension(cube, dim);
  check_values(cube, d, values);
  ProcessCube out = cube;
  out.removed.emplace_back(d, values);
  out.kept.erase(dim);
  out.dimensions.erase(
      std::remove_if(out.dimensions.begin(), out.dimensions.end(),
                     [&](const Dimension& x) { return x.name == dim; }),
      out.dimensions.end());
  return out;
}

ProcessCube dice(const ProcessCube& cube,
                 const std::map<std::string, std::set<std::string>>& filters) {
  ProcessCube out = cube;
  for (const auto& [dim, values] : filters) {
    const Dimension& d = find_dimension(cube, dim);
    check_values(cube, d, values);
    auto& slot = out.kept[dim];
    if (slot.empty()) {
      slot = values;
    } else {
      std::set<std::string> merged;
      for (const auto& v : values) {
        if (slot.count(v)) merged.insert(v);
      }
      slot = std::move(merged);
    }
  }
  return out;
}

namespace {

ProcessCube relevel(const ProcessCube& cube, const std::string& dim, int delta) {
  ProcessCube out = cube;
  for (auto& d : out.dimensions) {
    if (d.name != dim) continue;
    const int next = static_cast<int>(d.current_level) + delta;
    if (next < 0 || next >= static_cast<int>(d.levels.size())) {
      throw CubeError(delta > 0 ? "dimension already at coarsest level: " + dim
                                : "dimension already at finest level: " + dim);
    }
    if (out.kept.count(dim)) {
      // Filters were expressed at the old granularity; re-key them.
      std::set<std::string> rekeyed;
      const Dimension old = d;
      d.current_level = static_cast<std::size_t>(next);
      for (const Event* e : cube.active_events()) {
        if (cube.kept.at(dim).count(cube.coordinate(*e, old))) {
          rekeyed.insert(out.coordinate(*e, d));
        }
      }
      out.kept[dim] = std::move(rekeyed);
    } else {
      d.current_level = static_cast<std::size_t>(next);
    }
    return out;
  }
  throw CubeError("unknown dimension: " + dim);
}

}  // namespace

ProcessCube roll_up(const ProcessCube& cube, const std::string& dim) {
  return relevel(cube, dim, +1);
}

ProcessCube drill_down(const ProcessCube& cube, const std::string& dim) {
  return relevel(cube, dim, -1);
}

TraceLog materialize(const ProcessCube& cube,
                     const std::vector<std::string>& coordinates,
                     const std::string& case_attr) {
  if (coordinates.size() != cube.dimensions.size()) {
    throw CubeError("expected " + std::to_string(cube.dimensions.size()) +
                    " coordinates, got " + std::to_string(coordinates.size()));
  }
  EventLog sub;
  sub.schema = cube.base.schema;
  for (const Event* e : cube.active_events()) {
    bool match = true;
    for (std::size_t i = 0; i < cube.dimensions.size(); ++i) {
      if (cube.coordinate(*e, cube.dimensions[i]) != coordinates[i]) {
        match = false;
        break;
      }
    }
    if (match) sub.events.push_back(*e);
  }
  return build_traces(sub, case_attr);
}

std::map<std::string, std::string> hierarchy_from_csv(const std::string& bytes) {
  const CsvTable table = parse_csv(bytes);
  if (table.header.size() != 2) {
    throw CubeError("hierarchy CSV must have exactly two columns (child,parent)");
  }
  std::map<std::string, std::string> mapping;
  for (const auto& row : table.rows) {
    mapping[row[0]] = row[1];
  }
  return mapping;
}

std::string cube_summary_csv(const ProcessCube& cube) {
  std::ostringstream out;
  for (const auto& dim : cube.dimensions) out << dim.name << ',';
  out << "events\n";
  for (const auto& [coords, ids] : cube.cells()) {
    for (const auto& c : coords) out << csv_escape(c) << ',';
    out << ids.size() << '\n';
  }
  return out.str();
}

}  // namespace pmtk
