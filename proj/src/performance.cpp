#include "pmtk/performance.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace pmtk {

using nlohmann::json;

namespace {

double percentile(std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double idx = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

DurationSummary summarize(std::vector<double> samples) {
  DurationSummary s;
  s.count = samples.size();
  if (samples.empty()) return s;
  double total = 0.0;
  for (double v : samples) total += v;
  s.mean_s = total / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  s.median_s = percentile(samples, 0.5);
  s.p95_s = percentile(samples, 0.95);
  return s;
}

struct Visit {
  double service_s = 0.0;
  double waiting_s = 0.0;
  Millis complete = 0;
  std::string case_id;
};

/// Per-station visits across the whole log, with waiting measured from the
/// car's release by the previous activity instance in the trace.
std::map<std::string, std::vector<Visit>> collect_visits(
    const TraceLog& log, std::map<std::string, std::size_t>* unpaired) {
  std::map<std::string, std::vector<Visit>> visits;
  for (const auto& [case_id, trace] : log.traces) {
    if (trace.empty()) continue;
    const auto instances = activity_instances(trace);
    const Millis case_start = trace.front().timestamp;
    Millis prev_complete = case_start;
    for (const auto& inst : instances) {
      if (!inst.start) {
        if (unpaired) (*unpaired)[inst.activity]++;
        prev_complete = inst.complete;
        continue;
      }
      Visit v;
      v.service_s = static_cast<double>(worked_between(*inst.start, inst.complete)) /
                    kMillisPerSecond;
      v.waiting_s =
          static_cast<double>(std::max<Millis>(0, *inst.start - prev_complete)) /
          kMillisPerSecond;
      v.complete = inst.complete;
      v.case_id = case_id;
      visits[inst.activity].push_back(std::move(v));
      prev_complete = inst.complete;
    }
  }
  // Station completion order, stable across input trace order.
  for (auto& [station, vs] : visits) {
    std::stable_sort(vs.begin(), vs.end(), [](const Visit& a, const Visit& b) {
      if (a.complete != b.complete) return a.complete < b.complete;
      return a.case_id < b.case_id;
    });
  }
  return visits;
}

}  // namespace

StationStats station_stats(const TraceLog& log) {
  StationStats stats;
  std::map<std::string, std::size_t> unpaired;
  const auto visits = collect_visits(log, &unpaired);
  for (const auto& [station, vs] : visits) {
    StationEntry entry;
    std::vector<double> service, waiting, sojourn;
    service.reserve(vs.size());
    for (const Visit& v : vs) {
      service.push_back(v.service_s);
      waiting.push_back(v.waiting_s);
      sojourn.push_back(v.service_s + v.waiting_s);
    }
    entry.service = summarize(std::move(service));
    entry.waiting = summarize(std::move(waiting));
    entry.sojourn = summarize(std::move(sojourn));
    entry.unpaired = unpaired.count(station) ? unpaired.at(station) : 0;
    stats.stations[station] = std::move(entry);
  }
  for (const auto& [station, count] : unpaired) {
    if (!stats.stations.count(station)) {
      StationEntry entry;
      entry.unpaired = count;
      stats.stations[station] = entry;
    }
  }
  return stats;
}

std::vector<std::string> bottleneck_ranking(const StationStats& stats,
                                            const std::string& metric) {
  auto pick = [&](const StationEntry& e) -> double {
    if (metric == "service") return e.service.mean_s;
    if (metric == "waiting") return e.waiting.mean_s;
    if (metric == "sojourn") return e.sojourn.mean_s;
    throw std::invalid_argument("unknown metric: " + metric);
  };
  std::vector<std::string> order;
  for (const auto& [station, entry] : stats.stations) order.push_back(station);
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) {
                     const double va = pick(stats.stations.at(a));
                     const double vb = pick(stats.stations.at(b));
                     if (va != vb) return va > vb;
                     return a < b;
                   });
  return order;
}

std::vector<double> sojourn_series(const TraceLog& log,
                                   const std::string& station) {
  const auto visits = collect_visits(log, nullptr);
  std::vector<double> series;
  auto it = visits.find(station);
  if (it == visits.end()) return series;
  series.reserve(it->second.size());
  for (const Visit& v : it->second) series.push_back(v.service_s + v.waiting_s);
  return series;
}

std::vector<double> service_series(const TraceLog& log,
                                   const std::string& station) {
  const auto visits = collect_visits(log, nullptr);
  std::vector<double> series;
  auto it = visits.find(station);
  if (it == visits.end()) return series;
  series.reserve(it->second.size());
  for (const Visit& v : it->second) series.push_back(v.service_s);
  return series;
}

RollingSeries rolling_sojourn(const TraceLog& log, const std::string& station,
                              std::size_t window) {
  RollingSeries out;
  out.station = station;
  out.window = window;
  const auto series = sojourn_series(log, station);
  if (window == 0 || series.size() < window) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    sum += series[i];
    if (i + 1 > window) sum -= series[i + 1 - window - 1];
    if (i + 1 >= window) {
      out.points.emplace_back(i + 1, sum / static_cast<double>(window));
    }
  }
  return out;
}

std::string stats_to_json(const StationStats& stats) {
  auto summary = [](const DurationSummary& s) {
    return json{{"count", s.count},
                {"mean_s", s.mean_s},
                {"median_s", s.median_s},
                {"p95_s", s.p95_s}};
  };
  json j = json::object();
  for (const auto& [station, e] : stats.stations) {
    j[station] = json{{"service", summary(e.service)},
                      {"waiting", summary(e.waiting)},
                      {"sojourn", summary(e.sojourn)},
                      {"unpaired", e.unpaired}};
  }
  return j.dump(2) + "\n";
}

std::string stats_to_csv(const StationStats& stats) {
  std::ostringstream out;
  out << "station,count,service_mean_s,service_median_s,service_p95_s,"
         "waiting_mean_s,waiting_median_s,waiting_p95_s,"
         "sojourn_mean_s,sojourn_median_s,sojourn_p95_s,unpaired\n";
  for (const auto& [station, e] : stats.stations) {
    out << station << ',' << e.service.count << ',' << e.service.mean_s << ','
        << e.service.median_s << ',' << e.service.p95_s << ','
        << e.waiting.mean_s << ',' << e.waiting.median_s << ','
        << e.waiting.p95_s << ',' << e.sojourn.mean_s << ','
        << e.sojourn.median_s << ',' << e.sojourn.p95_s << ',' << e.unpaired
        << '\n';
  }
  return out.str();
}

std::string series_to_csv(const RollingSeries& series) {
  std::ostringstream out;
  out << "car,rolling_mean_sojourn_s\n";
  for (const auto& [car, v] : series.points) {
    out << car << ',' << v << '\n';
  }
  return out.str();
}

}  // namespace pmtk
