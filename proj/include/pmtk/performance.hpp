#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pmtk/event_log.hpp"

// Per-station service / waiting / sojourn statistics and drift-inspection
// series. All durations are seconds of worked (calendar) time for service
// and wall-clock time for waiting.

namespace pmtk {

struct DurationSummary {
  std::size_t count = 0;
  double mean_s = 0.0;
  double median_s = 0.0;
  double p95_s = 0.0;
};

struct StationEntry {
  DurationSummary service;  // worked time start -> complete
  DurationSummary waiting;  // upstream complete -> start, wall clock
  DurationSummary sojourn;  // waiting + service, per visit
  std::size_t unpaired = 0;  // visits without a start/complete pair
};

struct StationStats {
  std::map<std::string, StationEntry> stations;
};

struct RollingSeries {
  std::string station;
  std::size_t window = 10;
  // (car ordinal in station completion order, rolling mean sojourn seconds)
  std::vector<std::pair<std::size_t, double>> points;
};

StationStats station_stats(const TraceLog& log);

/// Stations ordered descending by the chosen metric's mean; ties by label.
/// metric is one of "service", "waiting", "sojourn".
std::vector<std::string> bottleneck_ranking(const StationStats& stats,
                                            const std::string& metric);

/// Sliding mean of per-visit sojourn at one station over the station's
/// completion order. Returns an empty series when fewer visits than window.
RollingSeries rolling_sojourn(const TraceLog& log, const std::string& station,
                              std::size_t window = 10);

/// Per-visit sojourn values at one station, in station completion order.
std::vector<double> sojourn_series(const TraceLog& log,
                                   const std::string& station);

/// Per-visit service (worked) durations at one station, in station completion
/// order; the raw series the drift detector consumes. Service is used rather
/// than sojourn because waiting time is dominated by upstream congestion and
/// would smear a sharp local change across half the line.
std::vector<double> service_series(const TraceLog& log,
                                   const std::string& station);

std::string stats_to_json(const StationStats& stats);
std::string stats_to_csv(const StationStats& stats);
std::string series_to_csv(const RollingSeries& series);

}  // namespace pmtk
