#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "pmtk/conformance.hpp"
#include "pmtk/discovery.hpp"

using namespace pmtk;

namespace {

ProcessTree seq_abc() {
  return ProcessTree::make(TreeOp::sequence,
                           {ProcessTree::leaf("A"), ProcessTree::leaf("B"),
                            ProcessTree::leaf("C")});
}

std::size_t count_kind(const Alignment& a, MoveKind k) {
  return static_cast<std::size_t>(
      std::count_if(a.moves.begin(), a.moves.end(),
                    [&](const Move& m) { return m.kind == k; }));
}

/// Random label-only LTS (no silent arcs) with a reachable final state.
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

/// Minimal edit distance between the trace and any accepted run of the LTS,
/// by plain iteration of the Bellman recurrence until a fixed point. This is
/// deliberately a different algorithm from the Dijkstra search under test.
std::size_t oracle_cost(const Lts& lts, const std::vector<std::string>& trace) {
  const std::size_t n = lts.num_states();
  const std::size_t m = trace.size();
  const std::size_t inf = SIZE_MAX / 2;
  // d[i][s]: cheapest way to consume i trace symbols and sit in state s.
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
        if (i < m && base + 1 < d[i + 1][s]) {  // log move
          d[i + 1][s] = base + 1;
          changed = true;
        }
        for (const Lts::Arc& arc : lts.transitions[s]) {
          const std::size_t move_cost = base + 1;  // model move
          if (move_cost < d[i][arc.to]) {
            d[i][arc.to] = move_cost;
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
  std::size_t bestv = inf;
  for (std::size_t s = 0; s < n; ++s) {
    if (lts.final_states[s]) bestv = std::min(bestv, d[m][s]);
  }
  return bestv;
}

}  // namespace

TEST_CASE("perfectly fitting trace aligns with zero cost") {
  const TreeModel model(seq_abc());
  const Alignment a = align_trace(model, {"A", "B", "C"});
  CHECK(a.cost == 0);
  CHECK(a.fitness == doctest::Approx(1.0));
  CHECK(count_kind(a, MoveKind::synchronous) == 3);
  CHECK(count_kind(a, MoveKind::log) == 0);
  CHECK(count_kind(a, MoveKind::model) == 0);
}

TEST_CASE("missing activity becomes a model move") {
  const Alignment a = align_trace(TreeModel(seq_abc()), {"A", "C"});
  CHECK(a.cost == 1);
  CHECK(count_kind(a, MoveKind::model) == 1);
  // fitness = 1 - 1 / (2 + 3)
  CHECK(a.fitness == doctest::Approx(0.8));
  // The model move names the skipped activity.
  bool found = false;
  for (const Move& m : a.moves) {
    if (m.kind == MoveKind::model) {
      CHECK(m.activity == "B");
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("extra activity becomes a log move") {
  const Alignment a = align_trace(TreeModel(seq_abc()), {"A", "X", "B", "C"});
  CHECK(a.cost == 1);
  CHECK(count_kind(a, MoveKind::log) == 1);
  CHECK(a.fitness == doctest::Approx(1.0 - 1.0 / 7.0));
}

TEST_CASE("empty trace costs the shortest model run") {
  const Alignment a = align_trace(TreeModel(seq_abc()), {});
  CHECK(a.cost == 3);
  CHECK(a.fitness == doctest::Approx(0.0));
}

TEST_CASE("silent moves are free") {
  // xor(tau, A): empty trace fits via the tau branch.
  const ProcessTree t = ProcessTree::make(
      TreeOp::exclusive, {ProcessTree::tau(), ProcessTree::leaf("A")});
  const Alignment a = align_trace(TreeModel(t), {});
  CHECK(a.cost == 0);
  CHECK(a.fitness == doctest::Approx(1.0));
}

TEST_CASE("alignment_to_string shows move pairs") {
  const Alignment a = align_trace(TreeModel(seq_abc()), {"A", "X", "C"});
  const std::string s = alignment_to_string(a);
  CHECK(s.find("[A]") != std::string::npos);       // synchronous
  CHECK(s.find("[X|>>]") != std::string::npos);    // log move
  CHECK(s.find("[>>|B]") != std::string::npos);    // model move
}

TEST_CASE("align_trace matches the fixed-point oracle on random models") {
  std::mt19937 rng(2023);
  const std::vector<std::string> alphabet = {"A", "B", "C", "D"};
  for (int round = 0; round < 300; ++round) {
    const Lts lts = random_lts(rng, 8);
    std::vector<std::string> trace(rng() % 7);
    for (auto& a : trace) a = alphabet[rng() % alphabet.size()];
    const LtsModel model(lts);
    const Alignment got = align_trace(model, trace);
    CHECK(got.cost == oracle_cost(lts, trace));
    // The reported moves replay to the reported cost.
    std::size_t paid = count_kind(got, MoveKind::log) +
                       count_kind(got, MoveKind::model);
    CHECK(paid == got.cost);
    // Log projection of the alignment equals the trace.
    std::vector<std::string> projected;
    for (const Move& m : got.moves) {
      if (m.kind == MoveKind::synchronous || m.kind == MoveKind::log) {
        projected.push_back(m.activity);
      }
    }
    CHECK(projected == trace);
  }
}

TEST_CASE("align_trace is deterministic") {
  std::mt19937 rng(5);
  const Lts lts = random_lts(rng, 8);
  const std::vector<std::string> trace = {"A", "B", "A", "C"};
  const LtsModel model(lts);
  const Alignment first = align_trace(model, trace);
  for (int i = 0; i < 5; ++i) {
    const Alignment again = align_trace(model, trace);
    CHECK(again.cost == first.cost);
    REQUIRE(again.moves.size() == first.moves.size());
    for (std::size_t k = 0; k < first.moves.size(); ++k) {
      CHECK(again.moves[k].kind == first.moves[k].kind);
      CHECK(again.moves[k].activity == first.moves[k].activity);
    }
  }
}

TEST_CASE("model without accepting runs is rejected") {
  Lts lts;
  lts.transitions.resize(2);
  lts.final_states = {false, false};
  lts.transitions[0].push_back(Lts::Arc{"A", 1});
  CHECK_THROWS_AS(align_trace(LtsModel(lts), {"A"}), ConformanceError);
}

TEST_CASE("check_log aggregates per-activity move counts") {
  TraceLog log;
  auto ev = [](std::string id, std::string act, Millis t, std::string c) {
    Event e;
    e.event_id = std::move(id);
    e.activity = std::move(act);
    e.timestamp = t;
    e.case_id = c;
    return e;
  };
  const Millis t0 = millis_from_civil(2023, 1, 2) + kWorkStart;
  log.traces["c1"] = {ev("e1", "A", t0, "c1"), ev("e2", "B", t0 + 1, "c1"),
                      ev("e3", "C", t0 + 2, "c1")};
  log.traces["c2"] = {ev("e4", "A", t0, "c2"), ev("e5", "C", t0 + 1, "c2")};
  log.traces["c3"] = {ev("e6", "A", t0, "c3"), ev("e7", "X", t0 + 1, "c3"),
                      ev("e8", "B", t0 + 2, "c3"), ev("e9", "C", t0 + 3, "c3")};

  const ConformanceReport report = check_log(TreeModel(seq_abc()), log);
  REQUIRE(report.traces.size() == 3);
  CHECK(report.traces[0].case_id == "c1");
  CHECK(report.total_cost == 2);
  CHECK(report.model_moves.at("B") == 1);
  CHECK(report.log_moves.at("X") == 1);
  const double expected_mean =
      (1.0 + (1.0 - 1.0 / 5.0) + (1.0 - 1.0 / 7.0)) / 3.0;
  CHECK(report.mean_fitness == doctest::Approx(expected_mean));
  const std::string j = conformance_to_json(report);
  CHECK(j.find("mean_fitness") != std::string::npos);
}
