#include "pmtk/sd.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace pmtk {

using nlohmann::json;

SDLog extract_sdlog(const TraceLog& log, Millis window_ms) {
  if (window_ms < kMillisPerHour) throw SdError("window must be >= 1 hour");
  SDLog sdlog;
  sdlog.window_ms = window_ms;
  if (log.traces.empty()) return sdlog;

  Millis lo = std::numeric_limits<Millis>::max();
  Millis hi = std::numeric_limits<Millis>::min();
  for (const auto& [case_id, trace] : log.traces) {
    if (trace.empty()) continue;
    lo = std::min(lo, trace.front().timestamp);
    hi = std::max(hi, trace.back().timestamp);
  }
  if (lo > hi) return sdlog;
  const std::size_t n_windows =
      static_cast<std::size_t>((hi - lo) / window_ms) + 1;
  sdlog.rows.resize(n_windows);
  for (std::size_t i = 0; i < n_windows; ++i) {
    sdlog.rows[i].window_start = lo + static_cast<Millis>(i) * window_ms;
  }
  auto window_of = [&](Millis t) {
    return static_cast<std::size_t>((t - lo) / window_ms);
  };

  std::vector<double> service_sum(n_windows, 0.0);
  std::vector<std::size_t> service_count(n_windows, 0);
  for (const auto& [case_id, trace] : log.traces) {
    if (trace.empty()) continue;
    const Millis first = trace.front().timestamp;
    const Millis last = trace.back().timestamp;
    sdlog.rows[window_of(first)].arrival_rate += 1.0;
    sdlog.rows[window_of(last)].production_rate += 1.0;
    for (const auto& inst : activity_instances(trace)) {
      if (!inst.start) continue;
      const std::size_t w = window_of(inst.complete);
      service_sum[w] +=
          static_cast<double>(worked_between(*inst.start, inst.complete)) /
          kMillisPerSecond;
      service_count[w]++;
    }
    // Time-weighted WIP contribution: overlap of [first, last] per window.
    const std::size_t w0 = window_of(first);
    const std::size_t w1 = window_of(last);
    for (std::size_t w = w0; w <= w1; ++w) {
      const Millis ws = lo + static_cast<Millis>(w) * window_ms;
      const Millis we = ws + window_ms;
      const Millis overlap = std::min(we, last) - std::max(ws, first);
      if (overlap > 0) {
        sdlog.rows[w].avg_wip +=
            static_cast<double>(overlap) / static_cast<double>(window_ms);
      }
    }
  }
  for (std::size_t w = 0; w < n_windows; ++w) {
    if (service_count[w] > 0) {
      sdlog.rows[w].avg_service_s =
          service_sum[w] / static_cast<double>(service_count[w]);
    }
  }
  return sdlog;
}

namespace {

const std::vector<std::pair<std::string, double SDRow::*>>& sd_variables() {
  static const std::vector<std::pair<std::string, double SDRow::*>> vars = {
      {"arrival_rate", &SDRow::arrival_rate},
      {"production_rate", &SDRow::production_rate},
      {"avg_service_s", &SDRow::avg_service_s},
      {"avg_wip", &SDRow::avg_wip},
  };
  return vars;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

DetectedRelations detect_relations(const SDLog& sdlog, std::size_t max_lag,
                                   double threshold) {
  if (sdlog.rows.size() < max_lag + 10) {
    throw SdError("SD-log too short for the requested lag range");
  }
  DetectedRelations out;
  const auto& vars = sd_variables();
  std::map<std::string, std::vector<double>> series;
  for (const auto& [name, member] : vars) {
    auto& s = series[name];
    s.reserve(sdlog.rows.size());
    for (const auto& row : sdlog.rows) s.push_back(row.*member);
  }
  for (const auto& [src, xs] : series) {
    if (std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) ==
        xs.end()) {
      out.notices.push_back("constant series skipped: " + src);
    }
  }
  for (const auto& [src, xs] : series) {
    for (const auto& [dst, ys] : series) {
      double best = 0.0;
      std::size_t best_lag = 0;
      bool found = false;
      for (std::size_t lag = 0; lag <= max_lag; ++lag) {
        if (src == dst && lag == 0) continue;  // trivially r = 1
        const std::size_t n = xs.size() - lag;
        std::vector<double> a(xs.begin(), xs.begin() + static_cast<long>(n));
        std::vector<double> b(ys.begin() + static_cast<long>(lag), ys.end());
        const double r = pearson(a, b);
        if (std::isnan(r)) continue;
        if (std::abs(r) >= threshold && std::abs(r) > std::abs(best)) {
          best = r;
          best_lag = lag;
          found = true;
        }
      }
      if (found) {
        out.relations.push_back(Relation{src, dst, best_lag, best});
      }
    }
  }
  return out;
}

StockFlowModel build_stock_flow(const SDLog& sdlog,
                                const std::vector<Relation>&) {
  if (sdlog.rows.empty()) throw SdError("empty SD-log");
  StockFlowModel m;
  m.initial_stock = sdlog.rows.front().avg_wip;
  double arrivals = 0.0;
  double duration_sum = 0.0;
  std::size_t duration_count = 0;
  for (const auto& row : sdlog.rows) {
    m.arrival_series.push_back(row.arrival_rate);
    arrivals += row.arrival_rate;
    m.capacity = std::max(m.capacity, row.production_rate);
    if (row.production_rate > 0) {
      // Little's law per window: duration (windows) = WIP / throughput.
      duration_sum += row.avg_wip / row.production_rate;
      duration_count++;
    }
  }
  m.mean_arrival = arrivals / static_cast<double>(sdlog.rows.size());
  if (duration_count == 0) throw SdError("no completed cases to fit from");
  m.avg_production_duration =
      std::max(1e-9, duration_sum / static_cast<double>(duration_count));
  if (m.capacity <= 0) throw SdError("no production observed");
  return m;
}

SdRun simulate_sd(const StockFlowModel& model, std::size_t steps,
                  const std::map<std::string, double>& scenario) {
  if (steps < 1) throw SdError("steps must be >= 1");
  StockFlowModel m = model;
  for (const auto& [key, value] : scenario) {
    if (key == "capacity") m.capacity = value;
    else if (key == "avg_production_duration") m.avg_production_duration = value;
    else if (key == "initial_stock") m.initial_stock = value;
    else if (key == "mean_arrival") m.mean_arrival = value;
    else throw SdError("unknown scenario override: " + key);
  }
  SdRun run;
  double stock = m.initial_stock;
  for (std::size_t t = 0; t < steps; ++t) {
    SdStep s;
    s.step = t;
    s.arrival = t < m.arrival_series.size() ? m.arrival_series[t] : m.mean_arrival;
    const double desired = std::min(m.capacity, stock / m.avg_production_duration);
    if (!std::isfinite(desired) || !std::isfinite(stock)) {
      throw SdError("non-finite value during SD simulation");
    }
    // The recorded outflow is what actually left the stock, so the balance
    // stock' = stock + in - out holds exactly; a clamp event marks steps where
    // the desired rate would have driven the stock negative.
    s.production = std::min(desired, stock + s.arrival);
    if (s.production < desired) {
      s.clamped = true;
      run.clamp_events++;
    }
    stock += s.arrival - s.production;
    s.stock = stock;
    run.steps.push_back(s);
  }
  return run;
}

WhatIfResult whatif_buffer(const StockFlowModel& baseline,
                           const BufferSpec& buffer, const LineConfig& config,
                           std::uint64_t seed, std::int64_t horizon_cars,
                           std::size_t steps, Millis window_ms) {
  WhatIfResult result;
  // Run the line twice on the same seed, with and without the buffer, and
  // scale the baseline model by the observed throughput ratio. Pairing the
  // runs cancels seed-level noise that would otherwise swamp the buffer's
  // effect; refitting the buffered run in isolation is unreliable because the
  // buffer deliberately holds extra work-in-progress, which inflates any
  // WIP-based duration estimate.
  const SimulationResult base_sim = simulate(config, seed, horizon_cars);
  const SimulationResult buf_sim =
      simulate(apply_injection(config, buffer), seed, horizon_cars);
  auto worked_makespan = [&](const SimulationResult& sim) {
    if (sim.log.events.empty()) throw SdError("what-if run produced nothing");
    Millis last = sim.log.events.front().timestamp;
    for (const auto& e : sim.log.events) last = std::max(last, e.timestamp);
    const Millis span = worked_between(config.start_time, last);
    if (span <= 0) throw SdError("what-if run has an empty makespan");
    return static_cast<double>(span);
  };
  const double ratio =
      std::max(1.0, worked_makespan(base_sim) / worked_makespan(buf_sim));

  result.scenario = baseline;
  // A buffer relaxes a blocking constraint: it can raise effective capacity
  // and speed up effective production, but never slow the stations themselves.
  result.scenario.capacity = baseline.capacity * ratio;
  result.scenario.avg_production_duration =
      baseline.avg_production_duration / ratio;

  result.baseline_run = simulate_sd(baseline, steps);
  result.scenario_run = simulate_sd(result.scenario, steps);
  // Total production converges to the same number once both runs have drained
  // the backlog, so the interesting contrast is how much less work sits in
  // the line along the way: the sum over steps of the stock reduction.
  double delta = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    delta += result.baseline_run.steps[t].stock - result.scenario_run.steps[t].stock;
  }
  result.total_delta = delta;
  return result;
}

std::string sdlog_to_csv(const SDLog& sdlog) {
  std::ostringstream out;
  out << "window_start,arrival_rate,production_rate,avg_service_s,avg_wip\n";
  for (const auto& row : sdlog.rows) {
    out << format_timestamp(row.window_start) << ',' << row.arrival_rate << ','
        << row.production_rate << ',' << row.avg_service_s << ','
        << row.avg_wip << '\n';
  }
  return out.str();
}

std::string model_to_json(const StockFlowModel& model) {
  json j;
  j["stocks"] = {{"cars_in_line", {{"initial", model.initial_stock}}}};
  j["flows"] = {
      {"arrival_rate",
       {{"into", "cars_in_line"}, {"series", model.arrival_series},
        {"fallback", model.mean_arrival}}},
      {"production_rate",
       {{"out_of", "cars_in_line"},
        {"equation", "min(capacity, cars_in_line / avg_production_duration)"}}}};
  j["variables"] = {
      {"capacity", model.capacity},
      {"avg_production_duration", model.avg_production_duration}};
  j["links"] = json::array(
      {json{{"from", "avg_production_duration"}, {"to", "production_rate"}},
       json{{"from", "cars_in_line"}, {"to", "production_rate"}}});
  return j.dump(2) + "\n";
}

StockFlowModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SdError(std::string("invalid model JSON: ") + e.what());
  }
  StockFlowModel m;
  try {
    m.initial_stock =
        j.at("stocks").at("cars_in_line").at("initial").get<double>();
    const auto& inflow = j.at("flows").at("arrival_rate");
    m.arrival_series = inflow.at("series").get<std::vector<double>>();
    m.mean_arrival = inflow.at("fallback").get<double>();
    m.capacity = j.at("variables").at("capacity").get<double>();
    m.avg_production_duration =
        j.at("variables").at("avg_production_duration").get<double>();
  } catch (const json::exception& e) {
    throw SdError(std::string("malformed model: ") + e.what());
  }
  return m;
}

std::string run_to_csv(const SdRun& baseline, const SdRun* scenario) {
  std::ostringstream out;
  if (scenario) {
    out << "step,arrival,production_baseline,production_scenario,delta,"
           "stock_baseline,stock_scenario\n";
    for (std::size_t i = 0; i < baseline.steps.size(); ++i) {
      const SdStep& a = baseline.steps[i];
      const SdStep& b = scenario->steps[i];
      out << a.step << ',' << a.arrival << ',' << a.production << ','
          << b.production << ',' << b.production - a.production << ','
          << a.stock << ',' << b.stock << '\n';
    }
  } else {
    out << "step,arrival,production,stock,clamped\n";
    for (const SdStep& s : baseline.steps) {
      out << s.step << ',' << s.arrival << ',' << s.production << ','
          << s.stock << ',' << (s.clamped ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

}  // namespace pmtk
