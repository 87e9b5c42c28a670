#include <doctest.h>

#include <cmath>

#include "pmtk/sd.hpp"

using namespace pmtk;

namespace {

Event ev(const std::string& activity, Millis t, Lifecycle lc) {
  Event e;
  e.activity = activity;
  e.timestamp = t;
  e.lifecycle = lc;
  return e;
}

const Millis kMon8 = millis_from_civil(2023, 1, 2) + kWorkStart;
const Millis kH = kMillisPerHour;

/// Three one-activity cases inside one working Monday: c1 08:00-09:00,
/// c2 08:30-11:30, c3 10:00-10:30. Hourly windows.
TraceLog tiny_log() {
  TraceLog log;
  log.traces["c1"] = {ev("work", kMon8, Lifecycle::start),
                      ev("work", kMon8 + kH, Lifecycle::complete)};
  log.traces["c2"] = {ev("work", kMon8 + kH / 2, Lifecycle::start),
                      ev("work", kMon8 + 7 * kH / 2, Lifecycle::complete)};
  log.traces["c3"] = {ev("work", kMon8 + 2 * kH, Lifecycle::start),
                      ev("work", kMon8 + 5 * kH / 2, Lifecycle::complete)};
  return log;
}

}  // namespace

TEST_CASE("extract_sdlog counts arrivals, completions and overlap WIP") {
  const SDLog sdlog = extract_sdlog(tiny_log(), kH);
  // Span 08:00..11:30 -> 4 hourly windows starting 08:00.
  REQUIRE(sdlog.rows.size() == 4);
  CHECK(sdlog.window_ms == kH);
  CHECK(sdlog.rows[0].window_start == kMon8);
  CHECK(sdlog.rows[3].window_start == kMon8 + 3 * kH);

  CHECK(sdlog.rows[0].arrival_rate == doctest::Approx(2));  // c1, c2
  CHECK(sdlog.rows[2].arrival_rate == doctest::Approx(1));  // c3
  CHECK(sdlog.rows[1].production_rate == doctest::Approx(1));  // c1 at 09:00
  CHECK(sdlog.rows[2].production_rate == doctest::Approx(1));  // c3 at 10:30
  CHECK(sdlog.rows[3].production_rate == doctest::Approx(1));  // c2 at 11:30

  // Worked service of the case completing in each window (seconds).
  CHECK(sdlog.rows[1].avg_service_s == doctest::Approx(3600));
  CHECK(sdlog.rows[2].avg_service_s == doctest::Approx(1800));
  CHECK(sdlog.rows[3].avg_service_s == doctest::Approx(3 * 3600));

  // WIP: window 08:00-09:00 holds c1 fully (1.0) and half of c2 (0.5).
  CHECK(sdlog.rows[0].avg_wip == doctest::Approx(1.5));
  // 09:00-10:00: only c2 (c1 completes exactly at the boundary).
  CHECK(sdlog.rows[1].avg_wip == doctest::Approx(1.0));
  // 10:00-11:00: c2 plus half an hour of c3.
  CHECK(sdlog.rows[2].avg_wip == doctest::Approx(1.5));
  // 11:00-11:30: half an hour of c2.
  CHECK(sdlog.rows[3].avg_wip == doctest::Approx(0.5));
}

TEST_CASE("extract_sdlog validates the window and tolerates empty logs") {
  CHECK_THROWS_AS(extract_sdlog(tiny_log(), kH - 1), SdError);
  CHECK(extract_sdlog(TraceLog{}, kH).rows.empty());
  // A window longer than the whole span still yields one row.
  const SDLog wide = extract_sdlog(tiny_log(), kMillisPerDay);
  REQUIRE(wide.rows.size() == 1);
  CHECK(wide.rows[0].arrival_rate == doctest::Approx(3));
  CHECK(wide.rows[0].production_rate == doctest::Approx(3));
}

TEST_CASE("detect_relations finds the lag and flags constant series") {
  // Arrivals lead production by exactly 2 windows; service time constant.
  SDLog sdlog;
  sdlog.window_ms = kH;
  const std::vector<double> arrivals = {5, 9, 2, 7, 4, 8, 3, 6, 5, 9,
                                        2, 7, 4, 8, 3, 6, 5, 9, 2, 7};
  sdlog.rows.resize(arrivals.size());
  for (std::size_t i = 0; i < arrivals.size(); ++i) {
    sdlog.rows[i].window_start = kMon8 + static_cast<Millis>(i) * kH;
    sdlog.rows[i].arrival_rate = arrivals[i];
    sdlog.rows[i].production_rate = i >= 2 ? arrivals[i - 2] : 1.0;
    sdlog.rows[i].avg_service_s = 42.0;
    sdlog.rows[i].avg_wip = arrivals[i] * 0.5;
  }
  const DetectedRelations found = detect_relations(sdlog, 3, 0.8);
  bool lead_found = false;
  for (const Relation& r : found.relations) {
    if (r.source == "arrival_rate" && r.target == "production_rate") {
      lead_found = true;
      CHECK(r.lag == 2);
      CHECK(r.strength > 0.8);
    }
  }
  CHECK(lead_found);
  REQUIRE(found.notices.size() == 1);
  CHECK(found.notices[0].find("avg_service_s") != std::string::npos);

  CHECK_THROWS_AS(detect_relations(sdlog, 15, 0.8), SdError);
}

TEST_CASE("build_stock_flow fits the template from the SD-log") {
  SDLog sdlog;
  sdlog.window_ms = kMillisPerDay;
  sdlog.rows.resize(4);
  const double arr[] = {4, 6, 2, 8};
  const double prod[] = {2, 4, 4, 5};
  const double wip[] = {6, 8, 4, 10};
  for (std::size_t i = 0; i < 4; ++i) {
    sdlog.rows[i].arrival_rate = arr[i];
    sdlog.rows[i].production_rate = prod[i];
    sdlog.rows[i].avg_wip = wip[i];
  }
  const StockFlowModel m = build_stock_flow(sdlog);
  CHECK(m.initial_stock == doctest::Approx(6));
  CHECK(m.arrival_series == std::vector<double>{4, 6, 2, 8});
  CHECK(m.mean_arrival == doctest::Approx(5));
  CHECK(m.capacity == doctest::Approx(5));
  // Little's law per window, averaged: (6/2 + 8/4 + 4/4 + 10/5) / 4 = 2.
  CHECK(m.avg_production_duration == doctest::Approx(2.0));

  CHECK_THROWS_AS(build_stock_flow(SDLog{}), SdError);
  SDLog idle = sdlog;
  for (auto& row : idle.rows) row.production_rate = 0;
  CHECK_THROWS_AS(build_stock_flow(idle), SdError);
}

TEST_CASE("simulate_sd follows the stock-flow equations") {
  StockFlowModel m;
  m.initial_stock = 10;
  m.arrival_series = {4, 0};
  m.mean_arrival = 2;
  m.capacity = 6;
  m.avg_production_duration = 2;
  const SdRun run = simulate_sd(m, 4);
  REQUIRE(run.steps.size() == 4);
  // t0: prod = min(6, 10/2) = 5, stock 10+4-5 = 9.
  CHECK(run.steps[0].production == doctest::Approx(5));
  CHECK(run.steps[0].stock == doctest::Approx(9));
  // t1: prod = min(6, 9/2) = 4.5, stock 9+0-4.5 = 4.5.
  CHECK(run.steps[1].production == doctest::Approx(4.5));
  CHECK(run.steps[1].stock == doctest::Approx(4.5));
  // t2 and beyond use the mean arrival (2 per window): prod = min(6, 4.5/2).
  CHECK(run.steps[2].arrival == doctest::Approx(2));
  CHECK(run.steps[2].production == doctest::Approx(2.25));
  CHECK(run.clamp_events == 0);

  // The balance stock' = stock + in - out holds exactly at every step.
  double stock = m.initial_stock;
  for (const SdStep& s : run.steps) {
    stock += s.arrival - s.production;
    CHECK(s.stock == stock);  // bitwise: same additions in the same order
  }
}

TEST_CASE("simulate_sd clamps production to the available stock") {
  StockFlowModel m;
  m.initial_stock = 1;
  m.mean_arrival = 0;
  m.capacity = 100;
  m.avg_production_duration = 0.25;  // desires 4x the stock per window
  const SdRun run = simulate_sd(m, 3);
  CHECK(run.steps[0].production == doctest::Approx(1));
  CHECK(run.steps[0].stock == doctest::Approx(0));
  CHECK(run.steps[0].clamped);
  // Once the stock is empty the desired rate is 0 too, so no further clamps.
  CHECK(run.clamp_events == 1);
  for (const SdStep& s : run.steps) CHECK(s.stock >= 0);
}

TEST_CASE("simulate_sd scenario overrides and validation") {
  StockFlowModel m;
  m.initial_stock = 8;
  m.mean_arrival = 1;
  m.capacity = 4;
  m.avg_production_duration = 2;
  const SdRun run = simulate_sd(m, 2, {{"capacity", 2.0}, {"initial_stock", 6.0}});
  CHECK(run.steps[0].production == doctest::Approx(2));  // capacity-bound now
  CHECK(run.steps[0].stock == doctest::Approx(5));

  CHECK_THROWS_AS(simulate_sd(m, 0), SdError);
  CHECK_THROWS_AS(simulate_sd(m, 2, {{"speed", 2.0}}), SdError);
  StockFlowModel bad = m;
  bad.initial_stock = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(simulate_sd(bad, 2), SdError);
}

TEST_CASE("model JSON round trip") {
  StockFlowModel m;
  m.initial_stock = 12.5;
  m.arrival_series = {3, 4, 5};
  m.mean_arrival = 4;
  m.capacity = 7.25;
  m.avg_production_duration = 1.75;
  const StockFlowModel back = model_from_json(model_to_json(m));
  CHECK(back.initial_stock == m.initial_stock);
  CHECK(back.arrival_series == m.arrival_series);
  CHECK(back.mean_arrival == m.mean_arrival);
  CHECK(back.capacity == m.capacity);
  CHECK(back.avg_production_duration == m.avg_production_duration);
  CHECK_THROWS_AS(model_from_json("{]"), SdError);
  CHECK_THROWS_AS(model_from_json("{\"stocks\": {}}"), SdError);
}

TEST_CASE("sdlog_to_csv and run_to_csv render their columns") {
  const SDLog sdlog = extract_sdlog(tiny_log(), kH);
  const std::string csv = sdlog_to_csv(sdlog);
  CHECK(csv.find("window_start,arrival_rate,production_rate") == 0);
  CHECK(csv.find("2023-01-02T08:00:00.000Z,2,0,") != std::string::npos);

  StockFlowModel m;
  m.initial_stock = 4;
  m.mean_arrival = 1;
  m.capacity = 2;
  m.avg_production_duration = 2;
  const SdRun a = simulate_sd(m, 3);
  const SdRun b = simulate_sd(m, 3, {{"capacity", 3.0}});
  const std::string solo = run_to_csv(a);
  CHECK(solo.find("step,arrival,production,stock,clamped") == 0);
  CHECK(std::count(solo.begin(), solo.end(), '\n') == 4);
  const std::string paired = run_to_csv(a, &b);
  CHECK(paired.find("production_scenario") != std::string::npos);
  CHECK(std::count(paired.begin(), paired.end(), '\n') == 4);
}

TEST_CASE("whatif_buffer contrasts paired line runs through the SD model") {
  LineConfig cfg = default_config();
  const TraceLog log = build_traces(simulate(cfg, 11, 120).log);
  const StockFlowModel baseline = build_stock_flow(extract_sdlog(log));
  const BufferSpec buffer{"SA7", 3};
  const WhatIfResult result =
      whatif_buffer(baseline, buffer, cfg, 11, 120, 30);
  // Relaxing a blocking constraint never slows the line.
  CHECK(result.scenario.capacity >= baseline.capacity);
  CHECK(result.scenario.avg_production_duration <=
        baseline.avg_production_duration);
  CHECK(result.baseline_run.steps.size() == 30);
  CHECK(result.scenario_run.steps.size() == 30);
  CHECK(result.total_delta >= 0);

  // A zero-capacity buffer leaves the simulation untouched: the scenario
  // collapses onto the baseline.
  const WhatIfResult noop =
      whatif_buffer(baseline, BufferSpec{"SA7", 0}, cfg, 11, 120, 30);
  CHECK(noop.scenario.capacity == doctest::Approx(baseline.capacity));
  CHECK(noop.total_delta == doctest::Approx(0));
}
