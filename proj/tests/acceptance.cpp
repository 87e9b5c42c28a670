// Acceptance gate: twelve end-to-end checks over the whole toolkit, one
// pass/fail line each. Exits non-zero if any criterion fails. Statistical
// criteria (5, 10, 11) run 20 seeds and state their required hit counts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "pmtk/compare.hpp"
#include "pmtk/conformance.hpp"
#include "pmtk/cube.hpp"
#include "pmtk/drift.hpp"
#include "pmtk/line_sim.hpp"
#include "pmtk/ocpm.hpp"
#include "pmtk/sd.hpp"

using namespace pmtk;

namespace {

int failures = 0;

void report(int number, const std::string& name, bool passed,
            const std::string& detail = "") {
  std::printf("%-4s criterion %2d: %s%s%s\n", passed ? "PASS" : "FAIL", number,
              name.c_str(), detail.empty() ? "" : " — ", detail.c_str());
  if (!passed) failures++;
}

// --- criterion 4 helpers: random LTS and an independent alignment oracle ----

Lts random_lts(std::mt19937& rng, std::size_t max_states) {
  const std::vector<std::string> alphabet = {"A", "B", "C", "D"};
  while (true) {
    const std::size_t n = 2 + rng() % (max_states - 1);
    Lts lts;
    lts.transitions.resize(n);
    lts.final_states.assign(n, false);
    lts.final_states[n - 1] = true;
    const std::size_t arcs = n + rng() % (2 * n);
    for (std::size_t i = 0; i < arcs; ++i) {
      const int from = static_cast<int>(rng() % n);
      const int to = static_cast<int>(rng() % n);
      lts.transitions[from].push_back(
          Lts::Arc{alphabet[rng() % alphabet.size()], to});
    }
    if (lts.final_reachable()) return lts;
  }
}

/// Bellman fixed-point recurrence over (trace position, LTS state) —
/// deliberately a different algorithm than the Dijkstra search under test.
std::size_t oracle_cost(const Lts& lts, const std::vector<std::string>& trace) {
  const std::size_t n = lts.num_states();
  const std::size_t m = trace.size();
  const std::size_t inf = SIZE_MAX / 2;
  std::vector<std::vector<std::size_t>> d(m + 1,
                                          std::vector<std::size_t>(n, inf));
  d[0][lts.initial] = 0;
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i <= m; ++i) {
      for (std::size_t s = 0; s < n; ++s) {
        if (d[i][s] >= inf) continue;
        const std::size_t base = d[i][s];
        if (i < m && base + 1 < d[i + 1][s]) {
          d[i + 1][s] = base + 1;  // log move
          changed = true;
        }
        for (const Lts::Arc& arc : lts.transitions[s]) {
          if (base + 1 < d[i][arc.to]) {
            d[i][arc.to] = base + 1;  // model move
            changed = true;
          }
          if (i < m && *arc.label == trace[i] && base < d[i + 1][arc.to]) {
            d[i + 1][arc.to] = base;  // synchronous move
            changed = true;
          }
        }
      }
    }
  }
  std::size_t best = inf;
  for (std::size_t s = 0; s < n; ++s) {
    if (lts.final_states[s]) best = std::min(best, d[m][s]);
  }
  return best;
}

// --- criterion 6 helper: EMD via the min-cost-flow LP -----------------------

double lp_emd(const std::vector<double>& a, const std::vector<double>& b) {
  const std::int64_t na = static_cast<std::int64_t>(a.size());
  const std::int64_t nb = static_cast<std::int64_t>(b.size());
  std::vector<std::int64_t> supplies(a.size(), nb), demands(b.size(), na);
  std::vector<std::vector<std::int64_t>> cost(
      a.size(), std::vector<std::int64_t>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      cost[i][j] = std::llround(std::abs(a[i] - b[j]) * 1000.0);
    }
  }
  const std::int64_t total = min_cost_flow(supplies, demands, cost);
  return static_cast<double>(total) / (1000.0 * static_cast<double>(na * nb));
}

// --- criterion 9 helper: random categorical logs ----------------------------

EventLog random_cube_log(std::mt19937& rng) {
  const std::vector<std::string> v0 = {"a", "b", "c"};
  const std::vector<std::string> v1 = {"x", "y"};
  const std::vector<std::string> v2 = {"p", "q", "r", "s"};
  const Millis base = millis_from_civil(2023, 1, 2) + kWorkStart;
  EventLog log;
  log.schema = {{"d0", AttrType::string},
                {"d1", AttrType::string},
                {"d2", AttrType::string}};
  const std::size_t n = 50 + rng() % 950;
  for (std::size_t i = 0; i < n; ++i) {
    Event e;
    e.event_id = "e" + std::to_string(i + 1);
    e.activity = "A" + std::to_string(rng() % 3);
    e.timestamp = base + static_cast<Millis>(rng() % 5000) * kMillisPerMinute;
    e.case_id = "c" + std::to_string(rng() % 9);
    e.attrs["d0"] = v0[rng() % v0.size()];
    e.attrs["d1"] = v1[rng() % v1.size()];
    e.attrs["d2"] = v2[rng() % v2.size()];
    log.events.push_back(std::move(e));
  }
  return log;
}

// --- criterion 12 helpers ----------------------------------------------------

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool run_cli(const std::string& args) {
  const std::string command = std::string(PMTK_CLI_PATH) + " " + args;
  return std::system(command.c_str()) == 0;
}

}  // namespace

// -----------------------------------------------------------------------------

int main() {
  const LineConfig baseline_cfg = default_config();
  const TraceLog baseline_50 =
      build_traces(simulate(baseline_cfg, 1, 50).log);

  // 1. Trace completeness: every conforming trace visits exactly 61 stations.
  {
    bool ok = baseline_50.traces.size() == 50;
    for (const auto& [car, trace] : baseline_50.traces) {
      std::set<std::string> stations;
      for (const Event& e : trace) stations.insert(e.activity);
      if (stations.size() != 61) ok = false;
    }
    report(1, "50-car baseline traces visit exactly 61 distinct stations", ok);
  }

  // 2. Calendar confinement: no event outside 08:00-17:00 Mon-Fri.
  {
    std::size_t outside = 0;
    for (const auto& [car, trace] : baseline_50.traces) {
      for (const Event& e : trace) {
        if (!in_working_hours(e.timestamp)) outside++;
      }
    }
    report(2, "zero events outside working hours", outside == 0,
           outside ? std::to_string(outside) + " stray events" : "");
  }

  // 3. Deviation counting: SA4 skipped with certainty for exactly 27 cars.
  {
    LineConfig cfg = baseline_cfg;
    cfg = apply_injection(cfg, DeviationSpec{"SA4", 1.0, 10});
    cfg = apply_injection(cfg, DeviationSpec{"SA4", 0.0, 37});
    const TraceLog skipped = build_traces(simulate(cfg, 4, 50).log);
    const ConformanceReport conf = check_log(LineModel(baseline_cfg), skipped);
    const auto it = conf.model_moves.find("SA4");
    const std::int64_t moves = it == conf.model_moves.end() ? 0 : it->second;
    report(3, "27 forced SA4 skips produce model_moves(SA4) = 27", moves == 27,
           "got " + std::to_string(moves));
  }

  // 4. Alignment optimality: 500 random instances against the DP oracle.
  {
    std::mt19937 rng(20230104);
    const std::vector<std::string> alphabet = {"A", "B", "C", "D", "E"};
    std::size_t agree = 0;
    for (int round = 0; round < 500; ++round) {
      const Lts lts = random_lts(rng, 8);
      std::vector<std::string> trace(rng() % 7);
      for (auto& a : trace) a = alphabet[rng() % alphabet.size()];
      if (align_trace(LtsModel(lts), trace).cost == oracle_cost(lts, trace)) {
        agree++;
      }
    }
    report(4, "500 random alignments equal the DP oracle", agree == 500,
           std::to_string(agree) + "/500");
  }

  // 5. Drift recovery: GA4@350 and GA5@600 found within +/-50, GA6 clean.
  {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      LineConfig cfg = preset_config("drift");
      cfg = apply_injection(cfg, DriftSpec{"GA4", 350, 1.35});
      cfg = apply_injection(cfg, DriftSpec{"GA5", 600, 1.4});
      const TraceLog traces = build_traces(simulate(cfg, seed, 1000).log);
      DriftReport rep = drift_report(traces, {"GA4", "GA5", "GA6"});
      const auto& c4 = rep.change_points["GA4"];
      const auto& c5 = rep.change_points["GA5"];
      const bool ok =
          c4.size() == 1 && c5.size() == 1 && rep.change_points["GA6"].empty() &&
          std::llabs(static_cast<long long>(c4[0].ordinal) - 350) <= 50 &&
          std::llabs(static_cast<long long>(c5[0].ordinal) - 600) <= 50;
      if (ok) hits++;
    }
    report(5, "drift detector recovers GA4@350 / GA5@600, GA6 unflagged",
           hits >= 19, std::to_string(hits) + "/20 seeds (need 19)");
  }

  // 6. EMD correctness: LP agreement within 1e-9 plus metric axioms.
  {
    std::mt19937 rng(20230106);
    auto sample = [&](std::size_t max_n) {
      std::vector<double> xs(1 + rng() % max_n);
      for (auto& x : xs) x = static_cast<double>(rng() % 20000) / 1000.0;
      return xs;
    };
    auto dd = [](std::vector<double> xs) {
      return DurationDistribution{"S", std::move(xs)};
    };
    bool lp_ok = true;
    for (int round = 0; round < 200; ++round) {
      const auto a = sample(12);
      const auto b = sample(12);
      if (std::abs(duration_emd(dd(a), dd(b)) - lp_emd(a, b)) > 1e-9) {
        lp_ok = false;
      }
    }
    bool axioms_ok = true;
    for (int round = 0; round < 1000; ++round) {
      const auto a = dd(sample(8));
      const auto b = dd(sample(8));
      const auto c = dd(sample(8));
      const double ab = duration_emd(a, b);
      if (ab < 0 || std::abs(ab - duration_emd(b, a)) > 1e-12 ||
          ab > duration_emd(a, c) + duration_emd(c, b) + 1e-9 ||
          duration_emd(a, a) > 1e-12) {
        axioms_ok = false;
      }
    }
    report(6, "duration EMD matches the transportation LP and is a metric",
           lp_ok && axioms_ok);
  }

  // 7. Convergence: one order of 10 products replicates place-order 10x.
  LineConfig oc_cfg = baseline_cfg;
  oc_cfg.object_layer.products_per_order = 10;
  const ObjectCentricLog oclog = simulate(oc_cfg, 7, 10).oclog;
  {
    const TraceLog by_product = flatten(oclog, "product");
    std::size_t replications = 0;
    for (const auto& [product, trace] : by_product.traces) {
      for (const Event& e : trace) {
        if (e.activity == "place planned order") replications++;
      }
    }
    report(7, "flatten-by-product replicates the place-order event 10x",
           by_product.traces.size() == 10 && replications == 10,
           std::to_string(replications) + " replications");
  }

  // 8. Multigraph projection equals the DFG of the flattening, bitwise.
  {
    const DFMultigraph graph = discover_multigraph(oclog);
    bool ok = true;
    for (const std::string& type : oclog.object_types()) {
      const Dfg projected = graph.project(type);
      const Dfg direct = discover_dfg(flatten(oclog, type));
      if (projected.activities != direct.activities ||
          projected.arcs.size() != direct.arcs.size()) {
        ok = false;
        continue;
      }
      for (const auto& [arc, stats] : direct.arcs) {
        const auto it = projected.arcs.find(arc);
        if (it == projected.arcs.end() ||
            it->second.frequency != stats.frequency ||
            it->second.mean_duration_s != stats.mean_duration_s) {
          ok = false;
        }
      }
    }
    report(8, "per-type multigraph projection equals the flattened DFG", ok);
  }

  // 9. Cube laws on 100 random 3-D cubes.
  {
    std::mt19937 rng(20230109);
    bool ok = true;
    for (int round = 0; round < 100 && ok; ++round) {
      const EventLog log = random_cube_log(rng);
      std::map<std::string, std::string> grouping = {
          {"p", "early"}, {"q", "early"}, {"r", "late"}, {"s", "late"}};
      const ProcessCube cube =
          build_cube(log, {Dimension::categorical("d0"),
                           Dimension::categorical("d1"),
                           Dimension::categorical("d2", grouping)});
      // Partition: disjoint and exhaustive over all events.
      std::set<std::string> seen;
      for (const auto& [coord, ids] : cube.cells()) {
        if (coord.size() != 3 || ids.empty()) ok = false;
        for (const auto& id : ids) {
          if (!seen.insert(id).second) ok = false;  // overlap
        }
      }
      if (seen.size() != log.events.size()) ok = false;
      // Slice/slice commutation on observed values.
      const Event& probe = log.events[rng() % log.events.size()];
      const std::string u = std::get<std::string>(probe.attrs.at("d0"));
      const std::string v = std::get<std::string>(probe.attrs.at("d1"));
      const auto ab = slice(slice(cube, "d0", {u}), "d1", {v}).cells();
      const auto ba = slice(slice(cube, "d1", {v}), "d0", {u}).cells();
      if (ab != ba) ok = false;
      // Roll-up conserves the event count.
      std::size_t before = 0, after = 0;
      for (const auto& [coord, ids] : cube.cells()) before += ids.size();
      for (const auto& [coord, ids] : roll_up(cube, "d2").cells()) {
        after += ids.size();
      }
      if (before != after) ok = false;
    }
    report(9, "cube partition, slice commutation and roll-up conservation",
           ok);
  }

  // 10. Two-factory comparison: NL rework coupling vs the BE control.
  {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const TraceLog nl =
          build_traces(simulate(preset_config("nl"), seed, 300).log);
      const TraceLog be =
          build_traces(simulate(preset_config("be"), seed + 1000, 300).log);
      const RankCorrelation r_nl = spearman(pair_table(nl, "GA4", "GA5"));
      const RankCorrelation r_be = spearman(pair_table(be, "GA4", "GA5"));
      auto tail = [](std::vector<double> xs) {
        std::sort(xs.begin(), xs.end());
        return xs[static_cast<std::size_t>(0.95 * (xs.size() - 1))] /
               xs[xs.size() / 2];
      };
      const double tail_nl = tail(station_durations(nl, "GA5").samples);
      const double tail_be = tail(station_durations(be, "GA5").samples);
      const std::size_t peaks_nl =
          histogram_peak_count(station_durations(nl, "GA4").samples);
      const bool ok = r_nl.rho < -r_nl.bound_95 &&
                      std::abs(r_be.rho) <= r_be.bound_95 &&
                      tail_nl > tail_be && peaks_nl == 2;
      if (ok) hits++;
    }
    report(10, "NL/BE comparison: correlation, tail ratio and bimodality",
           hits >= 18, std::to_string(hits) + "/20 seeds (need 18)");
  }

  // 11. SD conservation plus the SA7 buffer what-if direction.
  {
    bool identity_ok = true;
    {
      const TraceLog log = build_traces(simulate(baseline_cfg, 2, 200).log);
      const StockFlowModel model = build_stock_flow(extract_sdlog(log));
      const SdRun run = simulate_sd(model, 60);
      double stock = model.initial_stock;
      for (const SdStep& s : run.steps) {
        stock += s.arrival - s.production;
        if (std::abs(s.stock - stock) > 1e-12 || s.stock < -1e-12) {
          identity_ok = false;
        }
        stock = s.stock;
      }
    }
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const SimulationResult base = simulate(baseline_cfg, seed, 300);
      const SimulationResult buffered = simulate(
          apply_injection(baseline_cfg, BufferSpec{"SA7", 3}), seed, 300);
      auto mean_completion = [](const EventLog& log) {
        const TraceLog traces = build_traces(log);
        double sum = 0;
        for (const auto& [car, t] : traces.traces) {
          sum += static_cast<double>(t.back().timestamp);
        }
        return sum / static_cast<double>(traces.traces.size());
      };
      const double sim_delta =
          mean_completion(base.log) - mean_completion(buffered.log);
      const SDLog sdlog = extract_sdlog(build_traces(base.log));
      const WhatIfResult wi =
          whatif_buffer(build_stock_flow(sdlog), BufferSpec{"SA7", 3},
                        baseline_cfg, seed, 300, sdlog.rows.size());
      if (sim_delta > 0 && wi.total_delta > 0) hits++;
    }
    report(11, "SD stock identity exact; SA7 buffer delta sign-matched",
           identity_ok && hits >= 18,
           std::string(identity_ok ? "identity ok" : "identity BROKEN") +
               ", " + std::to_string(hits) + "/20 seeds (need 18)");
  }

  // 12. CLI determinism: every subcommand re-run is byte-identical.
  {
    namespace fs = std::filesystem;
    const fs::path dir =
        fs::temp_directory_path() / "pmtk_acceptance";
    bool ok = true;
    std::string detail;
    for (const char* round : {"r1", "r2"}) {
      const fs::path d = dir / round;
      fs::create_directories(d);
      const std::string p = (d / "").string();
      const std::vector<std::string> commands = {
          "simulate --preset default --seed 3 --cars 30 --products-per-order 5"
          " --out " + p + "log.csv --oclog " + p + "oclog.json",
          "simulate --preset be --seed 4 --cars 30 --out " + p + "be.csv",
          "discover --log " + p + "log.csv --type dfg --out " + p + "dfg.dot",
          "discover --log " + p + "log.csv --type tree --out " + p + "tree.json",
          "conform --log " + p + "log.csv --preset default --out " + p +
              "conform.json",
          "perf --log " + p + "log.csv --out " + p + "perf.json --rolling GA4"
          " --rolling-out " + p + "rolling.csv",
          "dotted --log " + p + "log.csv --out " + p + "dotted.csv",
          "cube --log " + p + "log.csv --dim color --dim city --query"
          " \"slice color=red\" --out " + p + "cube.csv",
          "drift --log " + p + "log.csv --stations GA4,GA5 --out " + p +
              "drift.json",
          "compare --a " + p + "log.csv --b " + p + "be.csv --pairs GA4:GA5"
          " --out " + p + "compare.json --pair-csv " + p + "pairs.csv",
          "ocdfg --oclog " + p + "oclog.json --out " + p + "ocdfg.dot",
          "flattenstats --oclog " + p + "oclog.json --type product --out " +
              p + "flatten.json",
          "sdlog --log " + p + "log.csv --out " + p + "sdlog.csv --model-out " +
              p + "model.json",
          "whatif --sdmodel " + p + "model.json --buffer SA7:3 --preset default"
          " --seed 3 --cars 60 --steps 10 --out " + p + "whatif.csv",
      };
      for (const std::string& c : commands) {
        if (!run_cli(c)) {
          ok = false;
          detail = "command failed: " + c;
        }
      }
    }
    if (ok) {
      for (const auto& entry : fs::directory_iterator(dir / "r1")) {
        const fs::path twin = dir / "r2" / entry.path().filename();
        if (!fs::exists(twin) ||
            read_bytes(entry.path()) != read_bytes(twin)) {
          ok = false;
          detail = "differs: " + entry.path().filename().string();
        }
      }
    }
    report(12, "every CLI subcommand re-runs byte-identically", ok, detail);
    fs::remove_all(dir);
  }

  if (failures > 0) {
    std::printf("%d criterion(s) FAILED\n", failures);
    return 1;
  }
  std::printf("all 12 criteria passed\n");
  return 0;
}
