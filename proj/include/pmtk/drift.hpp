#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmtk/event_log.hpp"
#include "pmtk/performance.hpp"

// Change-point detection over per-car station series: sliding two-window
// rank-sum statistic, robust to the heavy tails blocking produces. Reports
// are computed over service durations, which localize a station's change;
// sojourn would smear upstream congestion across half the line.

namespace pmtk {

struct DriftError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ChangePoint {
  std::string station;
  std::size_t ordinal = 0;  // series index (1-based car ordinal at station)
  std::string direction;    // "increase" | "decrease"
  double magnitude = 1.0;   // post-segment mean / pre-segment mean
  double statistic = 0.0;   // |z| of the rank-sum test at the ordinal
  std::string kind;         // "sudden" | "gradual" (best effort)
};

struct DriftParams {
  std::size_t window = 50;         // cars per side
  double threshold = 3.5;          // |z| exceedance level
  std::size_t min_segment = 100;   // minimum cars between reported points
  std::size_t consecutive = 5;     // required consecutive exceedances
};

/// Slides a split point over the series; at each index the window cars
/// before are rank-tested against the window cars after. Each maximal run
/// of >= consecutive exceedances yields one change point at the argmax of
/// |z|; points closer than min_segment to a stronger point are dropped.
std::vector<ChangePoint> detect_change_points(const std::vector<double>& series,
                                              const DriftParams& params = {});

struct DriftReport {
  std::map<std::string, std::vector<ChangePoint>> change_points;
  std::map<std::string, RollingSeries> rolling;  // window-10 sojourn series
};

DriftReport drift_report(const TraceLog& log,
                         const std::vector<std::string>& stations,
                         const DriftParams& params = {});

std::string drift_to_json(const DriftReport& report);

}  // namespace pmtk
