#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pmtk/event_log.hpp"

// Model discovery: annotated directly-follows graphs, block-structured
// process trees (inductive style), labeled transition systems, and
// dotted-chart extraction.

namespace pmtk {

inline constexpr const char* kDfgSource = "▶";  // artificial start
inline constexpr const char* kDfgSink = "■";    // artificial end

struct DfgArcStats {
  std::int64_t frequency = 0;
  double mean_duration_s = 0.0;
};

struct Dfg {
  std::set<std::string> activities;  // excluding artificial nodes
  std::map<std::pair<std::string, std::string>, DfgArcStats> arcs;

  std::int64_t frequency(const std::string& from, const std::string& to) const;
};

/// Arc (a,b) counts the directly-follows occurrences of b after a across all
/// traces; arc durations average the complete(a)->start(b) gap when start
/// lifecycles exist, else the complete-to-complete gap. The artificial
/// source connects to each trace's first activity and the last activity to
/// the sink. An empty log gives an empty DFG.
Dfg discover_dfg(const TraceLog& log);
Dfg discover_dfg(const std::vector<std::vector<std::string>>& traces);

// --- process trees -----------------------------------------------------------

enum class TreeOp { activity, silent, sequence, exclusive, parallel, loop };

struct ProcessTree {
  TreeOp op = TreeOp::silent;
  std::string label;  // for activity leaves
  std::vector<ProcessTree> children;

  static ProcessTree leaf(std::string activity);
  static ProcessTree tau();
  static ProcessTree make(TreeOp op, std::vector<ProcessTree> children);

  /// Minimal number of labeled activities in any accepted run.
  std::size_t shortest_run_length() const;
  std::string to_string() const;
};

/// Inductive discovery with the cut order exclusive-choice, sequence,
/// parallel, loop; arcs with relative frequency below noise_threshold are
/// filtered before cut detection; fall-through is a flower model.
ProcessTree discover_tree(const TraceLog& log, double noise_threshold = 0.0);
ProcessTree discover_tree(const std::vector<std::vector<std::string>>& traces,
                          double noise_threshold = 0.0);

std::string tree_to_json(const ProcessTree& tree);
ProcessTree tree_from_json(const std::string& text);

// --- labeled transition systems ----------------------------------------------

struct Lts {
  struct Arc {
    std::optional<std::string> label;  // nullopt = silent step
    int to = 0;
  };
  int initial = 0;
  std::vector<bool> final_states;
  std::vector<std::vector<Arc>> transitions;

  std::size_t num_states() const { return transitions.size(); }
  bool final_reachable() const;
};

/// Explicit LTS whose language equals the tree's trace language. Silent
/// steps mark operator entry/exit choices.
Lts tree_to_lts(const ProcessTree& tree);

/// Lazy execution semantics of a process tree, usable as an alignment
/// model without materializing the interleaving state space.
class TreeModel {
 public:
  using State = std::vector<std::uint8_t>;

  explicit TreeModel(const ProcessTree& tree);

  State initial() const;
  bool is_final(const State& s) const;
  /// Successors as (label, next state); silent steps carry no label.
  /// Deterministically ordered: silent first, then by label.
  void successors(const State& s,
                  std::vector<std::pair<std::optional<std::string>, State>>& out)
      const;
  std::size_t shortest_run_length() const { return min_run_; }

 private:
  struct Node {
    TreeOp op;
    std::string label;
    std::vector<int> children;
  };
  void flatten(const ProcessTree& t);
  // Phase values per node: 0 = pending, then operator-specific progress,
  // final phase = done.
  bool node_done(const State& s, int node) const;
  void node_steps(State& s, int node,
                  std::vector<std::pair<std::optional<std::string>, State>>& out)
      const;

  std::vector<Node> nodes_;
  int root_ = 0;
  std::size_t min_run_ = 0;
};

/// Adapter exposing an explicit LTS through the alignment model interface.
class LtsModel {
 public:
  explicit LtsModel(const Lts& lts);

  using State = int;
  State initial() const { return lts_->initial; }
  bool is_final(State s) const { return lts_->final_states[s]; }
  void successors(
      State s,
      std::vector<std::pair<std::optional<std::string>, State>>& out) const;
  std::size_t shortest_run_length() const { return min_run_; }

 private:
  const Lts* lts_;
  std::size_t min_run_ = 0;
};

// --- dotted chart --------------------------------------------------------------

enum class DottedSort { first_event, duration };

struct DottedChart {
  struct Point {
    std::size_t row = 0;
    Millis t = 0;
    std::string activity;
  };
  std::vector<std::string> rows;  // case ids, one per chart row
  std::vector<Point> points;      // one per event
};

/// Rows sorted descending by case duration (duration sort) or ascending by
/// first event time. Exactly one point per event.
DottedChart dotted_chart(const TraceLog& log, DottedSort sort);

// --- exports -------------------------------------------------------------------

std::string dfg_to_dot(const Dfg& dfg);
std::string tree_to_dot(const ProcessTree& tree);
std::string dotted_chart_to_csv(const DottedChart& chart);

}  // namespace pmtk
