// pmtk: process-mining toolkit CLI. Every subcommand reads/writes plain
// data files (CSV/JSON/DOT) and is deterministic given its inputs and seed.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmtk/compare.hpp"
#include "pmtk/conformance.hpp"
#include "pmtk/csv.hpp"
#include "pmtk/cube.hpp"
#include "pmtk/discovery.hpp"
#include "pmtk/drift.hpp"
#include "pmtk/event_log.hpp"
#include "pmtk/line_sim.hpp"
#include "pmtk/ocpm.hpp"
#include "pmtk/performance.hpp"
#include "pmtk/sd.hpp"

namespace {

namespace fs = std::filesystem;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << bytes;
    if (!out.flush()) throw DataError("short write to " + tmp.string());
  }
  fs::rename(tmp, target);
}

pmtk::EventLog load_log(const std::string& path) {
  const std::string bytes = read_file(path);
  if (!bytes.empty() && bytes.front() == '{') {
    return pmtk::event_log_from_json(bytes);
  }
  return pmtk::parse_csv_log(bytes, pmtk::CsvMapping{});
}

pmtk::TraceLog load_traces(const std::string& path) {
  return pmtk::build_traces(load_log(path));
}

pmtk::LineConfig load_config(const std::string& config_path,
                             const std::string& preset) {
  if (!config_path.empty()) return pmtk::config_from_json(read_file(config_path));
  return pmtk::preset_config(preset.empty() ? "default" : preset);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

pmtk::BufferSpec parse_buffer(const std::string& text) {
  const auto parts = split(text, ':');
  if (parts.size() != 2) throw DataError("expected STATION:CAPACITY, got " + text);
  return pmtk::BufferSpec{parts[0], std::stoll(parts[1])};
}

// --- subcommand bodies -------------------------------------------------------

void cmd_simulate(const std::string& config_path, const std::string& preset,
                  std::uint64_t seed, std::int64_t cars, const std::string& out,
                  const std::string& oclog_out, std::int64_t products_per_order) {
  pmtk::LineConfig config = load_config(config_path, preset);
  if (products_per_order > 0) {
    config.object_layer.products_per_order = products_per_order;
  }
  const pmtk::SimulationResult result = pmtk::simulate(config, seed, cars);
  write_file_atomic(out, pmtk::event_log_to_csv(result.log));
  if (!oclog_out.empty()) {
    write_file_atomic(oclog_out, pmtk::oclog_to_json(result.oclog));
  }
}

void cmd_discover(const std::string& log_path, const std::string& type,
                  double noise, const std::string& out) {
  const pmtk::TraceLog traces = load_traces(log_path);
  if (type == "dfg") {
    write_file_atomic(out, pmtk::dfg_to_dot(pmtk::discover_dfg(traces)));
  } else if (type == "tree") {
    write_file_atomic(out, pmtk::tree_to_json(pmtk::discover_tree(traces, noise)));
  } else if (type == "tree-dot") {
    write_file_atomic(out, pmtk::tree_to_dot(pmtk::discover_tree(traces, noise)));
  } else {
    throw DataError("unknown model type: " + type);
  }
}

void cmd_conform(const std::string& log_path, const std::string& model_path,
                 const std::string& line_config, const std::string& preset,
                 const std::string& out) {
  const pmtk::TraceLog traces = load_traces(log_path);
  pmtk::ConformanceReport report;
  if (!model_path.empty()) {
    const pmtk::ProcessTree tree = pmtk::tree_from_json(read_file(model_path));
    report = pmtk::check_log(pmtk::TreeModel(tree), traces);
  } else {
    const pmtk::LineConfig config = load_config(line_config, preset);
    report = pmtk::check_log(pmtk::LineModel(config), traces);
  }
  write_file_atomic(out, pmtk::conformance_to_json(report));
}

void cmd_perf(const std::string& log_path, const std::string& out,
              const std::string& format, const std::string& rolling_station,
              std::size_t window, const std::string& rolling_out) {
  const pmtk::TraceLog traces = load_traces(log_path);
  const pmtk::StationStats stats = pmtk::station_stats(traces);
  write_file_atomic(out, format == "csv" ? pmtk::stats_to_csv(stats)
                                         : pmtk::stats_to_json(stats));
  if (!rolling_station.empty()) {
    if (rolling_out.empty()) throw DataError("--rolling requires --rolling-out");
    write_file_atomic(rolling_out, pmtk::series_to_csv(pmtk::rolling_sojourn(
                                       traces, rolling_station, window)));
  }
}

void cmd_dotted(const std::string& log_path, const std::string& sort,
                const std::string& out) {
  const pmtk::TraceLog traces = load_traces(log_path);
  const pmtk::DottedSort mode = sort == "duration" ? pmtk::DottedSort::duration
                                                   : pmtk::DottedSort::first_event;
  write_file_atomic(out, pmtk::dotted_chart_to_csv(pmtk::dotted_chart(traces, mode)));
}

void cmd_cube(const std::string& log_path,
              const std::vector<std::string>& dims,
              const std::string& time_attr,
              const std::vector<std::string>& hierarchies,
              const std::vector<std::string>& query, const std::string& out,
              const std::vector<std::string>& cell,
              const std::string& cell_out) {
  const pmtk::EventLog log = load_log(log_path);
  std::map<std::string, std::map<std::string, std::string>> maps;
  for (const auto& h : hierarchies) {
    const auto parts = split(h, '=');
    if (parts.size() != 2) throw DataError("expected DIM=hierarchy.csv, got " + h);
    maps[parts[0]] = pmtk::hierarchy_from_csv(read_file(parts[1]));
  }
  std::vector<pmtk::Dimension> dimensions;
  for (const auto& d : dims) {
    auto it = maps.find(d);
    dimensions.push_back(pmtk::Dimension::categorical(
        d, it == maps.end() ? std::map<std::string, std::string>{} : it->second));
  }
  if (!time_attr.empty()) dimensions.push_back(pmtk::Dimension::time(time_attr));
  pmtk::ProcessCube cube = pmtk::build_cube(log, std::move(dimensions));

  // Mini-language: "slice dim=v1,v2" | "dice dim=v1,v2" | "rollup dim" |
  // "drilldown dim", one operation per --query flag.
  for (const auto& q : query) {
    std::istringstream in(q);
    std::string op, rest;
    in >> op;
    std::getline(in, rest);
    while (!rest.empty() && rest.front() == ' ') rest.erase(rest.begin());
    if (op == "rollup") {
      cube = pmtk::roll_up(cube, rest);
    } else if (op == "drilldown") {
      cube = pmtk::drill_down(cube, rest);
    } else if (op == "slice" || op == "dice") {
      const auto parts = split(rest, '=');
      if (parts.size() != 2) throw DataError("expected dim=values in: " + q);
      std::set<std::string> values;
      for (const auto& v : split(parts[1], ',')) values.insert(v);
      if (op == "slice") {
        cube = pmtk::slice(cube, parts[0], values);
      } else {
        cube = pmtk::dice(cube, {{parts[0], values}});
      }
    } else {
      throw DataError("unknown cube operation: " + op);
    }
  }
  write_file_atomic(out, pmtk::cube_summary_csv(cube));
  if (!cell.empty()) {
    if (cell_out.empty()) throw DataError("--cell requires --cell-out");
    const pmtk::TraceLog sub = pmtk::materialize(cube, cell);
    pmtk::EventLog flat;
    flat.schema = log.schema;
    for (const auto& [case_id, trace] : sub.traces) {
      flat.events.insert(flat.events.end(), trace.begin(), trace.end());
    }
    write_file_atomic(cell_out, pmtk::event_log_to_csv(flat));
  }
}

void cmd_drift(const std::string& log_path, const std::string& stations,
               const pmtk::DriftParams& params, const std::string& out) {
  const pmtk::TraceLog traces = load_traces(log_path);
  const auto list = split(stations, ',');
  write_file_atomic(out,
                    pmtk::drift_to_json(pmtk::drift_report(traces, list, params)));
}

void cmd_compare(const std::string& a_path, const std::string& b_path,
                 const std::string& pairs, const std::string& out,
                 const std::string& pair_csv) {
  const pmtk::TraceLog a = load_traces(a_path);
  const pmtk::TraceLog b = load_traces(b_path);
  std::vector<std::pair<std::string, std::string>> station_pairs;
  if (!pairs.empty()) {
    for (const auto& p : split(pairs, ',')) {
      const auto xy = split(p, ':');
      if (xy.size() != 2) throw DataError("expected X:Y pair, got " + p);
      station_pairs.emplace_back(xy[0], xy[1]);
    }
  }
  const pmtk::ComparisonReport report = pmtk::compare_report(a, b, station_pairs);
  write_file_atomic(out, pmtk::comparison_to_json(report));
  if (!pair_csv.empty() && !report.pairs.empty()) {
    write_file_atomic(pair_csv, pmtk::pair_table_to_csv(report.pairs.front()));
  }
}

void cmd_ocdfg(const std::string& oclog_path, const std::string& out) {
  const pmtk::ObjectCentricLog oclog = pmtk::oclog_from_json(read_file(oclog_path));
  write_file_atomic(out, pmtk::multigraph_to_dot(pmtk::discover_multigraph(oclog)));
}

void cmd_flattenstats(const std::string& oclog_path, const std::string& type,
                      const std::string& out) {
  const pmtk::ObjectCentricLog oclog = pmtk::oclog_from_json(read_file(oclog_path));
  std::ostringstream body;
  body << "{\n";
  std::vector<std::string> types;
  if (type.empty()) {
    for (const auto& t : oclog.object_types()) types.push_back(t);
  } else {
    types.push_back(type);
  }
  for (std::size_t i = 0; i < types.size(); ++i) {
    const pmtk::FlatteningMetrics m = pmtk::flattening_metrics(oclog, types[i]);
    body << "  \"" << types[i] << "\": {\"original_events\": " << m.original_events
         << ", \"flattened_events\": " << m.flattened_events
         << ", \"replication_factor\": " << m.replication_factor
         << ", \"dropped_events\": " << m.dropped_events
         << ", \"divergence_count\": " << m.divergence_count << "}"
         << (i + 1 < types.size() ? ",\n" : "\n");
  }
  body << "}\n";
  write_file_atomic(out, body.str());
}

void cmd_sdlog(const std::string& log_path, double window_hours,
               const std::string& out, const std::string& model_out) {
  const pmtk::TraceLog traces = load_traces(log_path);
  const pmtk::SDLog sdlog = pmtk::extract_sdlog(
      traces, static_cast<pmtk::Millis>(window_hours * pmtk::kMillisPerHour));
  write_file_atomic(out, pmtk::sdlog_to_csv(sdlog));
  if (!model_out.empty()) {
    write_file_atomic(model_out, pmtk::model_to_json(pmtk::build_stock_flow(sdlog)));
  }
}

void cmd_whatif(const std::string& model_path, const std::string& buffer,
                const std::string& config_path, const std::string& preset,
                std::uint64_t seed, std::int64_t cars, std::size_t steps,
                double window_hours, const std::string& out) {
  const pmtk::StockFlowModel baseline = pmtk::model_from_json(read_file(model_path));
  const pmtk::BufferSpec spec = parse_buffer(buffer);
  const pmtk::LineConfig config = load_config(config_path, preset);
  const pmtk::WhatIfResult result = pmtk::whatif_buffer(
      baseline, spec, config, seed, cars, steps,
      static_cast<pmtk::Millis>(window_hours * pmtk::kMillisPerHour));
  write_file_atomic(out, pmtk::run_to_csv(result.baseline_run,
                                          &result.scenario_run));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pmtk: process mining toolkit for the car production line"};
  app.require_subcommand(1);

  // simulate
  std::string config_path, preset, out, oclog_out;
  std::uint64_t seed = 1;
  std::int64_t cars = 100, products_per_order = 0;
  auto* sim = app.add_subcommand("simulate", "Generate event logs from a line config");
  sim->add_option("--config", config_path, "Line config JSON");
  sim->add_option("--preset", preset, "Named preset: default, drift, nl, be");
  sim->add_option("--seed", seed, "Random seed");
  sim->add_option("--cars", cars, "Number of cars to release");
  sim->add_option("--out", out, "Flat CSV log path")->required();
  sim->add_option("--oclog", oclog_out, "Object-centric JSON log path");
  sim->add_option("--products-per-order", products_per_order,
                  "Enable the object layer with this order size");

  // discover
  std::string d_log, d_type = "dfg", d_out;
  double d_noise = 0.0;
  auto* dis = app.add_subcommand("discover", "Discover a DFG or process tree");
  dis->add_option("--log", d_log, "Event log CSV/JSON")->required();
  dis->add_option("--type", d_type, "dfg | tree | tree-dot");
  dis->add_option("--noise", d_noise, "Noise threshold for tree discovery");
  dis->add_option("--out", d_out, "Output path (DOT or JSON)")->required();

  // conform
  std::string c_log, c_model, c_config, c_preset, c_out;
  auto* con = app.add_subcommand("conform", "Alignment-based conformance check");
  con->add_option("--log", c_log, "Event log CSV/JSON")->required();
  con->add_option("--model", c_model, "Process tree JSON");
  con->add_option("--line-config", c_config, "Align against a line config instead");
  con->add_option("--preset", c_preset, "Align against a named preset");
  con->add_option("--out", c_out, "Report JSON path")->required();

  // perf
  std::string p_log, p_out, p_format = "json", p_station, p_rolling_out;
  std::size_t p_window = 10;
  auto* perf = app.add_subcommand("perf", "Station performance statistics");
  perf->add_option("--log", p_log, "Event log CSV/JSON")->required();
  perf->add_option("--out", p_out, "Stats output path")->required();
  perf->add_option("--format", p_format, "json | csv");
  perf->add_option("--rolling", p_station, "Also emit a rolling sojourn series");
  perf->add_option("--window", p_window, "Rolling window (cars)");
  perf->add_option("--rolling-out", p_rolling_out, "Rolling series CSV path");

  // dotted
  std::string dc_log, dc_sort = "first", dc_out;
  auto* dot = app.add_subcommand("dotted", "Dotted-chart extraction");
  dot->add_option("--log", dc_log, "Event log CSV/JSON")->required();
  dot->add_option("--sort", dc_sort, "first | duration");
  dot->add_option("--out", dc_out, "Chart CSV path")->required();

  // cube
  std::string q_log, q_time, q_out, q_cell_out;
  std::vector<std::string> q_dims, q_hier, q_query, q_cell;
  auto* cube = app.add_subcommand("cube", "Process-cube operations");
  cube->add_option("--log", q_log, "Event log CSV/JSON")->required();
  cube->add_option("--dim", q_dims, "Categorical dimension attribute (repeatable)");
  cube->add_option("--time", q_time, "Instant attribute for a day/month/year dim");
  cube->add_option("--hierarchy", q_hier, "DIM=child_parent.csv roll-up mapping");
  cube->add_option("--query", q_query,
                   "slice d=v1,v2 | dice d=v1,v2 | rollup d | drilldown d");
  cube->add_option("--out", q_out, "Cell summary CSV path")->required();
  cube->add_option("--cell", q_cell, "Cell coordinates to materialize");
  cube->add_option("--cell-out", q_cell_out, "Materialized cell log CSV path");

  // drift
  std::string dr_log, dr_stations, dr_out;
  pmtk::DriftParams dr_params;
  auto* drift = app.add_subcommand("drift", "Change-point detection per station");
  drift->add_option("--log", dr_log, "Event log CSV/JSON")->required();
  drift->add_option("--stations", dr_stations, "Comma-separated station list")
      ->required();
  drift->add_option("--window", dr_params.window, "Cars per test window");
  drift->add_option("--threshold", dr_params.threshold, "|z| exceedance level");
  drift->add_option("--min-segment", dr_params.min_segment,
                    "Minimum cars between change points");
  drift->add_option("--consecutive", dr_params.consecutive,
                    "Required consecutive exceedances");
  drift->add_option("--out", dr_out, "Report JSON path")->required();

  // compare
  std::string cp_a, cp_b, cp_pairs, cp_out, cp_pair_csv;
  auto* cmp = app.add_subcommand("compare", "Two-log EMD comparison report");
  cmp->add_option("--a", cp_a, "First event log")->required();
  cmp->add_option("--b", cp_b, "Second event log")->required();
  cmp->add_option("--pairs", cp_pairs, "Station pairs X:Y,U:V for pair tables");
  cmp->add_option("--out", cp_out, "Report JSON path")->required();
  cmp->add_option("--pair-csv", cp_pair_csv, "First pair table CSV path");

  // ocdfg
  std::string oc_log, oc_out;
  auto* ocdfg = app.add_subcommand("ocdfg", "Directly-follows multigraph DOT");
  ocdfg->add_option("--oclog", oc_log, "Object-centric JSON log")->required();
  ocdfg->add_option("--out", oc_out, "DOT output path")->required();

  // flattenstats
  std::string fl_log, fl_type, fl_out;
  auto* fl = app.add_subcommand("flattenstats",
                                "Convergence/divergence metrics per case notion");
  fl->add_option("--oclog", fl_log, "Object-centric JSON log")->required();
  fl->add_option("--type", fl_type, "Object type (default: all)");
  fl->add_option("--out", fl_out, "Metrics JSON path")->required();

  // sdlog
  std::string sd_log, sd_out, sd_model_out;
  double sd_window_hours = 24.0;
  auto* sdl = app.add_subcommand("sdlog", "Aggregate a log into an SD-log");
  sdl->add_option("--log", sd_log, "Event log CSV/JSON")->required();
  sdl->add_option("--window-hours", sd_window_hours, "Window length in hours");
  sdl->add_option("--out", sd_out, "SD-log CSV path")->required();
  sdl->add_option("--model-out", sd_model_out, "Fitted stock-flow model JSON");

  // whatif
  std::string wi_model, wi_buffer, wi_config, wi_preset, wi_out;
  std::uint64_t wi_seed = 1;
  std::int64_t wi_cars = 300;
  std::size_t wi_steps = 30;
  double wi_window_hours = 24.0;
  auto* wi = app.add_subcommand("whatif", "Buffer what-if on the SD model");
  wi->add_option("--sdmodel", wi_model, "Baseline stock-flow model JSON")->required();
  wi->add_option("--buffer", wi_buffer, "STATION:CAPACITY, e.g. SA7:3")->required();
  wi->add_option("--config", wi_config, "Line config for refitting");
  wi->add_option("--preset", wi_preset, "Preset for refitting");
  wi->add_option("--seed", wi_seed, "Seed for the refitting run");
  wi->add_option("--cars", wi_cars, "Cars in the refitting run");
  wi->add_option("--steps", wi_steps, "SD steps to simulate");
  wi->add_option("--window-hours", wi_window_hours, "SD window length in hours");
  wi->add_option("--out", wi_out, "Scenario comparison CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) {
      cmd_simulate(config_path, preset, seed, cars, out, oclog_out,
                   products_per_order);
    } else if (dis->parsed()) {
      cmd_discover(d_log, d_type, d_noise, d_out);
    } else if (con->parsed()) {
      cmd_conform(c_log, c_model, c_config, c_preset, c_out);
    } else if (perf->parsed()) {
      cmd_perf(p_log, p_out, p_format, p_station, p_window, p_rolling_out);
    } else if (dot->parsed()) {
      cmd_dotted(dc_log, dc_sort, dc_out);
    } else if (cube->parsed()) {
      cmd_cube(q_log, q_dims, q_time, q_hier, q_query, q_out, q_cell, q_cell_out);
    } else if (drift->parsed()) {
      cmd_drift(dr_log, dr_stations, dr_params, dr_out);
    } else if (cmp->parsed()) {
      cmd_compare(cp_a, cp_b, cp_pairs, cp_out, cp_pair_csv);
    } else if (ocdfg->parsed()) {
      cmd_ocdfg(oc_log, oc_out);
    } else if (fl->parsed()) {
      cmd_flattenstats(fl_log, fl_type, fl_out);
    } else if (sdl->parsed()) {
      cmd_sdlog(sd_log, sd_window_hours, sd_out, sd_model_out);
    } else if (wi->parsed()) {
      cmd_whatif(wi_model, wi_buffer, wi_config, wi_preset, wi_seed, wi_cars,
                 wi_steps, wi_window_hours, wi_out);
    }
  } catch (const pmtk::LogError& e) {
    std::cerr << "error: " << e.message << "\n";
    return 2;
  } catch (const pmtk::RowError& e) {
    std::cerr << "error: " << e.message << " (line " << e.line << ")\n";
    return 2;
  } catch (const pmtk::CsvError& e) {
    std::cerr << "error: " << e.message << " (line " << e.line << ")\n";
    return 2;
  } catch (const pmtk::TimestampError& e) {
    std::cerr << "error: " << e.message << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    // Module errors (config, conformance, cube, drift, compare, oc, sd).
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
