#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmtk/event_log.hpp"
#include "pmtk/line_sim.hpp"

// System-dynamics layer: aggregate a log into an SD-log, mine lagged
// relations, fit the stock-flow template (cars in the line as the stock,
// arrival and production rates as flows), and run what-if scenarios.

namespace pmtk {

struct SdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SDRow {
  Millis window_start = 0;
  double arrival_rate = 0.0;     // new cases per window
  double production_rate = 0.0;  // completed cases per window
  double avg_service_s = 0.0;    // mean worked service of instances completing
  double avg_wip = 0.0;          // time-weighted in-flight cases
};

struct SDLog {
  Millis window_ms = kMillisPerDay;
  std::vector<SDRow> rows;
};

struct Relation {
  std::string source;
  std::string target;
  std::size_t lag = 0;    // windows by which source leads target
  double strength = 0.0;  // Pearson correlation
};

struct DetectedRelations {
  std::vector<Relation> relations;
  std::vector<std::string> notices;  // skipped constant series etc.
};

/// Fig.-15 template instance: stock fed by the arrival series and drained by
/// production = min(capacity, stock / avg_production_duration).
struct StockFlowModel {
  double initial_stock = 0.0;            // cars in the line
  std::vector<double> arrival_series;    // cars per window, replayed per step
  double mean_arrival = 0.0;             // used past the series' end
  double capacity = 0.0;                 // max cars per window
  double avg_production_duration = 1.0;  // windows per car
};

struct SdStep {
  std::size_t step = 0;
  double arrival = 0.0;
  double production = 0.0;
  double stock = 0.0;  // after the step
  bool clamped = false;
};

struct SdRun {
  std::vector<SdStep> steps;
  std::size_t clamp_events = 0;
};

struct WhatIfResult {
  StockFlowModel scenario;
  SdRun baseline_run;
  SdRun scenario_run;
  // Backlog reduction: sum over steps of (baseline stock - scenario stock).
  // Positive when the buffered line carries less work-in-progress.
  double total_delta = 0.0;
};

SDLog extract_sdlog(const TraceLog& log, Millis window_ms = kMillisPerDay);

DetectedRelations detect_relations(const SDLog& sdlog, std::size_t max_lag,
                                   double threshold);

StockFlowModel build_stock_flow(const SDLog& sdlog,
                                const std::vector<Relation>& relations = {});

/// Forward Euler, dt = one window; overrides replace model fields by name
/// ("capacity", "avg_production_duration", "initial_stock", "mean_arrival").
SdRun simulate_sd(const StockFlowModel& model, std::size_t steps,
                  const std::map<std::string, double>& scenario = {});

/// Refits the production-duration variable from a buffered run of the line
/// simulator and contrasts both SD runs over `steps` windows.
WhatIfResult whatif_buffer(const StockFlowModel& baseline,
                           const BufferSpec& buffer, const LineConfig& config,
                           std::uint64_t seed, std::int64_t horizon_cars,
                           std::size_t steps, Millis window_ms = kMillisPerDay);

std::string sdlog_to_csv(const SDLog& sdlog);
std::string model_to_json(const StockFlowModel& model);
StockFlowModel model_from_json(const std::string& text);
std::string run_to_csv(const SdRun& baseline, const SdRun* scenario = nullptr);

}  // namespace pmtk
