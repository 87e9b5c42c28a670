#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmtk/discovery.hpp"
#include "pmtk/event_log.hpp"

// Alignment-based conformance checking over any model exposing the lazy
// model interface (TreeModel, LtsModel, or the simulator's line model).

namespace pmtk {

struct ConformanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class MoveKind { synchronous, model, log, silent };

struct Move {
  MoveKind kind = MoveKind::synchronous;
  std::string activity;  // empty for silent moves
};

struct Alignment {
  std::vector<Move> moves;
  std::size_t cost = 0;      // unit cost of log/model moves
  double fitness = 1.0;      // 1 - cost / (|trace| + shortest model run)
};

/// Optimal alignment of one activity sequence against a model, shortest-path
/// search over the synchronous product with unit costs (synchronous and
/// silent moves are free). Throws ConformanceError when the model accepts no
/// run at all.
template <typename Model>
Alignment align_trace(const Model& model, const std::vector<std::string>& trace);

struct TraceConformance {
  std::string case_id;
  Alignment alignment;
};

struct ConformanceReport {
  std::vector<TraceConformance> traces;  // ordered by case id
  double mean_fitness = 1.0;
  std::size_t total_cost = 0;
  std::map<std::string, std::int64_t> log_moves;    // activity -> count
  std::map<std::string, std::int64_t> model_moves;  // activity -> count
};

/// Aligns every trace's completion-ordered activity sequence.
template <typename Model>
ConformanceReport check_log(const Model& model, const TraceLog& log);

std::string conformance_to_json(const ConformanceReport& report);
std::string alignment_to_string(const Alignment& alignment);

// --- implementation -----------------------------------------------------------

template <typename Model>
Alignment align_trace(const Model& model, const std::vector<std::string>& trace) {
  const std::size_t min_run = model.shortest_run_length();
  if (min_run == SIZE_MAX) {
    throw ConformanceError("model has no accepting run");
  }
  using MState = typename Model::State;
  struct Key {
    std::size_t pos;
    MState state;
    bool operator<(const Key& other) const {
      if (pos != other.pos) return pos < other.pos;
      return state < other.state;
    }
  };
  struct Pending {
    std::size_t cost;
    std::uint64_t seq;  // insertion order for deterministic tie-breaking
    Key key;
    bool operator>(const Pending& other) const {
      if (cost != other.cost) return cost > other.cost;
      return seq > other.seq;
    }
  };
  struct Back {
    std::size_t cost = SIZE_MAX;
    Key prev{};
    Move move{};
    bool has_prev = false;
  };

  std::map<Key, Back> best;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> pq;
  std::uint64_t seq = 0;

  const Key start{0, model.initial()};
  best[start] = Back{0, {}, {}, false};
  pq.push(Pending{0, seq++, start});

  std::vector<std::pair<std::optional<std::string>, MState>> succs;
  std::optional<Key> goal;

  while (!pq.empty()) {
    const Pending top = pq.top();
    pq.pop();
    auto it = best.find(top.key);
    if (it == best.end() || top.cost > it->second.cost) continue;
    const Key cur = top.key;
    const std::size_t cost = top.cost;
    if (cur.pos == trace.size() && model.is_final(cur.state)) {
      goal = cur;
      break;
    }
    auto relax = [&](Key next, std::size_t ncost, Move move) {
      auto [slot, inserted] = best.try_emplace(std::move(next));
      if (ncost < slot->second.cost) {
        slot->second = Back{ncost, cur, std::move(move), true};
        pq.push(Pending{ncost, seq++, slot->first});
      }
    };
    model.successors(cur.state, succs);
    // Synchronous and silent moves first so zero-cost paths dominate ties.
    for (const auto& [label, next_state] : succs) {
      if (!label) {
        relax(Key{cur.pos, next_state}, cost, Move{MoveKind::silent, ""});
      } else if (cur.pos < trace.size() && *label == trace[cur.pos]) {
        relax(Key{cur.pos + 1, next_state}, cost,
              Move{MoveKind::synchronous, *label});
      }
    }
    for (const auto& [label, next_state] : succs) {
      if (label) {
        relax(Key{cur.pos, next_state}, cost + 1, Move{MoveKind::model, *label});
      }
    }
    if (cur.pos < trace.size()) {
      relax(Key{cur.pos + 1, cur.state}, cost + 1,
            Move{MoveKind::log, trace[cur.pos]});
    }
  }

  if (!goal) throw ConformanceError("alignment search exhausted without a goal");

  Alignment result;
  result.cost = best.at(*goal).cost;
  for (Key k = *goal; best.at(k).has_prev; k = best.at(k).prev) {
    result.moves.push_back(best.at(k).move);
  }
  std::reverse(result.moves.begin(), result.moves.end());
  const double denom = static_cast<double>(trace.size() + min_run);
  result.fitness =
      denom == 0 ? 1.0 : 1.0 - static_cast<double>(result.cost) / denom;
  return result;
}

template <typename Model>
ConformanceReport check_log(const Model& model, const TraceLog& log) {
  ConformanceReport report;
  double fitness_sum = 0.0;
  for (const auto& [case_id, trace] : log.traces) {
    TraceConformance tc;
    tc.case_id = case_id;
    tc.alignment = align_trace(model, activity_sequence(trace));
    fitness_sum += tc.alignment.fitness;
    report.total_cost += tc.alignment.cost;
    for (const Move& m : tc.alignment.moves) {
      if (m.kind == MoveKind::log) report.log_moves[m.activity]++;
      if (m.kind == MoveKind::model) report.model_moves[m.activity]++;
    }
    report.traces.push_back(std::move(tc));
  }
  report.mean_fitness =
      report.traces.empty()
          ? 1.0
          : fitness_sum / static_cast<double>(report.traces.size());
  return report;
}

}  // namespace pmtk
