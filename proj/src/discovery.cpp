#include "pmtk/discovery.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <queue>
#include <sstream>

#include <json.hpp>

namespace pmtk {

using nlohmann::json;

std::int64_t Dfg::frequency(const std::string& from, const std::string& to) const {
  auto it = arcs.find({from, to});
  return it == arcs.end() ? 0 : it->second.frequency;
}

namespace {

struct ArcAccum {
  std::int64_t frequency = 0;
  double total_gap_s = 0.0;
};

Dfg finish_dfg(std::map<std::pair<std::string, std::string>, ArcAccum>& accum,
               std::set<std::string> activities) {
  Dfg dfg;
  dfg.activities = std::move(activities);
  for (auto& [key, acc] : accum) {
    dfg.arcs[key] = DfgArcStats{
        acc.frequency,
        acc.frequency > 0 ? acc.total_gap_s / static_cast<double>(acc.frequency)
                          : 0.0};
  }
  return dfg;
}

}  // namespace

Dfg discover_dfg(const TraceLog& log) {
  std::map<std::pair<std::string, std::string>, ArcAccum> accum;
  std::set<std::string> activities;
  for (const auto& [case_id, trace] : log.traces) {
    const auto instances = activity_instances(trace);
    if (instances.empty()) continue;
    for (const auto& inst : instances) activities.insert(inst.activity);
    accum[{kDfgSource, instances.front().activity}].frequency++;
    for (std::size_t i = 0; i + 1 < instances.size(); ++i) {
      const auto& prev = instances[i];
      const auto& next = instances[i + 1];
      auto& arc = accum[{prev.activity, next.activity}];
      arc.frequency++;
      const Millis next_ref = next.start ? *next.start : next.complete;
      arc.total_gap_s +=
          static_cast<double>(next_ref - prev.complete) / kMillisPerSecond;
    }
    accum[{instances.back().activity, kDfgSink}].frequency++;
  }
  return finish_dfg(accum, std::move(activities));
}

Dfg discover_dfg(const std::vector<std::vector<std::string>>& traces) {
  std::map<std::pair<std::string, std::string>, ArcAccum> accum;
  std::set<std::string> activities;
  for (const auto& trace : traces) {
    if (trace.empty()) continue;
    for (const auto& a : trace) activities.insert(a);
    accum[{kDfgSource, trace.front()}].frequency++;
    for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
      accum[{trace[i], trace[i + 1]}].frequency++;
    }
    accum[{trace.back(), kDfgSink}].frequency++;
  }
  return finish_dfg(accum, std::move(activities));
}

// --- process tree basics -------------------------------------------------------

ProcessTree ProcessTree::leaf(std::string activity) {
  ProcessTree t;
  t.op = TreeOp::activity;
  t.label = std::move(activity);
  return t;
}

ProcessTree ProcessTree::tau() {
  ProcessTree t;
  t.op = TreeOp::silent;
  return t;
}

ProcessTree ProcessTree::make(TreeOp op, std::vector<ProcessTree> children) {
  ProcessTree t;
  t.op = op;
  t.children = std::move(children);
  return t;
}

std::size_t ProcessTree::shortest_run_length() const {
  switch (op) {
    case TreeOp::activity: return 1;
    case TreeOp::silent: return 0;
    case TreeOp::sequence:
    case TreeOp::parallel: {
      std::size_t total = 0;
      for (const auto& c : children) total += c.shortest_run_length();
      return total;
    }
    case TreeOp::exclusive: {
      std::size_t best = SIZE_MAX;
      for (const auto& c : children) {
        best = std::min(best, c.shortest_run_length());
      }
      return children.empty() ? 0 : best;
    }
    case TreeOp::loop:
      return children.empty() ? 0 : children.front().shortest_run_length();
  }
  return 0;
}

std::string ProcessTree::to_string() const {
  switch (op) {
    case TreeOp::activity: return label;
    case TreeOp::silent: return "tau";
    default: break;
  }
  const char* name = op == TreeOp::sequence ? "seq"
                     : op == TreeOp::exclusive ? "xor"
                     : op == TreeOp::parallel ? "and"
                                              : "loop";
  std::string out = std::string(name) + "(";
  for (std::size_t i = 0; i < children.size(); ++i) {
    if (i) out += ", ";
    out += children[i].to_string();
  }
  out += ")";
  return out;
}

namespace {

const char* op_name(TreeOp op) {
  switch (op) {
    case TreeOp::activity: return "activity";
    case TreeOp::silent: return "silent";
    case TreeOp::sequence: return "sequence";
    case TreeOp::exclusive: return "exclusive";
    case TreeOp::parallel: return "parallel";
    case TreeOp::loop: return "loop";
  }
  return "silent";
}

TreeOp op_from_name(const std::string& s) {
  for (TreeOp op : {TreeOp::activity, TreeOp::silent, TreeOp::sequence,
                    TreeOp::exclusive, TreeOp::parallel, TreeOp::loop}) {
    if (s == op_name(op)) return op;
  }
  throw LogError{"unknown tree operator: " + s, {}};
}

json tree_to_json_impl(const ProcessTree& t) {
  json j;
  j["op"] = op_name(t.op);
  if (t.op == TreeOp::activity) j["label"] = t.label;
  if (!t.children.empty()) {
    json children = json::array();
    for (const auto& c : t.children) children.push_back(tree_to_json_impl(c));
    j["children"] = std::move(children);
  }
  return j;
}

ProcessTree tree_from_json_impl(const json& j) {
  ProcessTree t;
  t.op = op_from_name(j.at("op").get<std::string>());
  if (t.op == TreeOp::activity) t.label = j.at("label").get<std::string>();
  if (j.contains("children")) {
    for (const json& c : j["children"]) {
      t.children.push_back(tree_from_json_impl(c));
    }
  }
  return t;
}

}  // namespace

std::string tree_to_json(const ProcessTree& tree) {
  return tree_to_json_impl(tree).dump(2) + "\n";
}

ProcessTree tree_from_json(const std::string& text) {
  return tree_from_json_impl(json::parse(text));
}

// --- inductive discovery -------------------------------------------------------

namespace {

using Seq = std::vector<std::string>;

struct CutGraph {
  std::vector<std::string> acts;
  std::map<std::string, int> index;
  std::vector<std::vector<std::int64_t>> freq;  // directly-follows counts
  std::vector<bool> is_start, is_end;

  int n() const { return static_cast<int>(acts.size()); }
  bool follows(int a, int b) const { return freq[a][b] > 0; }
};

CutGraph build_cut_graph(const std::vector<Seq>& traces, double threshold) {
  CutGraph g;
  for (const auto& t : traces) {
    for (const auto& a : t) {
      if (!g.index.count(a)) {
        g.index[a] = g.n();
        g.acts.push_back(a);
      }
    }
  }
  g.freq.assign(g.n(), std::vector<std::int64_t>(g.n(), 0));
  g.is_start.assign(g.n(), false);
  g.is_end.assign(g.n(), false);
  for (const auto& t : traces) {
    if (t.empty()) continue;
    g.is_start[g.index[t.front()]] = true;
    g.is_end[g.index[t.back()]] = true;
    for (std::size_t i = 0; i + 1 < t.size(); ++i) {
      g.freq[g.index[t[i]]][g.index[t[i + 1]]]++;
    }
  }
  if (threshold > 0) {
    for (int a = 0; a < g.n(); ++a) {
      std::int64_t max_out = 0;
      for (int b = 0; b < g.n(); ++b) max_out = std::max(max_out, g.freq[a][b]);
      for (int b = 0; b < g.n(); ++b) {
        if (g.freq[a][b] > 0 &&
            static_cast<double>(g.freq[a][b]) < threshold * max_out) {
          g.freq[a][b] = 0;
        }
      }
    }
  }
  return g;
}

std::vector<int> undirected_components(const CutGraph& g,
                                       const std::vector<bool>& keep) {
  std::vector<int> comp(g.n(), -1);
  int next = 0;
  for (int s = 0; s < g.n(); ++s) {
    if (!keep[s] || comp[s] >= 0) continue;
    comp[s] = next;
    std::deque<int> q{s};
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int v = 0; v < g.n(); ++v) {
        if (!keep[v] || comp[v] >= 0) continue;
        if (g.follows(u, v) || g.follows(v, u)) {
          comp[v] = next;
          q.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

// Tarjan-free SCC via Kosaraju (n is small).
std::vector<int> strongly_connected(const CutGraph& g) {
  const int n = g.n();
  std::vector<int> order;
  std::vector<bool> seen(n, false);
  std::vector<std::pair<int, int>> stack;
  for (int s = 0; s < n; ++s) {
    if (seen[s]) continue;
    stack.push_back({s, 0});
    seen[s] = true;
    while (!stack.empty()) {
      auto& [u, i] = stack.back();
      if (i == n) {
        order.push_back(u);
        stack.pop_back();
        continue;
      }
      const int v = i++;
      if (g.follows(u, v) && !seen[v]) {
        seen[v] = true;
        stack.push_back({v, 0});
      }
    }
  }
  std::vector<int> comp(n, -1);
  int next = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[*it] >= 0) continue;
    std::deque<int> q{*it};
    comp[*it] = next;
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int v = 0; v < n; ++v) {
        if (comp[v] < 0 && g.follows(v, u)) {
          comp[v] = next;
          q.push_back(v);
        }
      }
    }
    ++next;
  }
  return comp;
}

struct Cut {
  std::vector<std::vector<std::string>> groups;
};

std::optional<Cut> exclusive_cut(const CutGraph& g) {
  std::vector<bool> keep(g.n(), true);
  const auto comp = undirected_components(g, keep);
  const int k = comp.empty() ? 0 : *std::max_element(comp.begin(), comp.end()) + 1;
  if (k < 2) return std::nullopt;
  Cut cut;
  cut.groups.assign(k, {});
  for (int a = 0; a < g.n(); ++a) cut.groups[comp[a]].push_back(g.acts[a]);
  return cut;
}

std::optional<Cut> sequence_cut(const CutGraph& g) {
  const int n = g.n();
  if (n < 2) return std::nullopt;
  const auto scc = strongly_connected(g);
  const int k = *std::max_element(scc.begin(), scc.end()) + 1;
  if (k < 2) return std::nullopt;

  // Reachability between SCCs.
  std::vector<std::vector<bool>> reach(k, std::vector<bool>(k, false));
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (g.follows(a, b)) reach[scc[a]][scc[b]] = true;
    }
  }
  for (int c = 0; c < k; ++c) reach[c][c] = true;
  for (int m = 0; m < k; ++m) {
    for (int a = 0; a < k; ++a) {
      if (!reach[a][m]) continue;
      for (int b = 0; b < k; ++b) {
        if (reach[m][b]) reach[a][b] = true;
      }
    }
  }

  // Merge pairwise-unordered components, then close under the merges until
  // the groups are totally ordered.
  std::vector<int> group(k);
  std::iota(group.begin(), group.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (group[x] != x) x = group[x] = group[group[x]];
    return x;
  };
  auto unite = [&](int a, int b) { group[find(a)] = find(b); };
  bool changed = true;
  while (changed) {
    changed = false;
    for (int a = 0; a < k; ++a) {
      for (int b = a + 1; b < k; ++b) {
        if (find(a) == find(b)) continue;
        const bool ab = reach[a][b];
        const bool ba = reach[b][a];
        if (ab == ba) {  // unordered or mutually reachable across groups
          unite(a, b);
          changed = true;
        }
      }
    }
    // Order must also be consistent across merged groups.
    for (int a = 0; a < k && !changed; ++a) {
      for (int b = 0; b < k && !changed; ++b) {
        for (int c = 0; c < k; ++c) {
          if (find(a) == find(b) && find(a) != find(c) && reach[a][c] &&
              reach[c][b]) {
            unite(a, c);
            changed = true;
            break;
          }
        }
      }
    }
  }

  std::map<int, std::vector<int>> merged;  // representative -> sccs
  for (int c = 0; c < k; ++c) merged[find(c)].push_back(c);
  if (merged.size() < 2) return std::nullopt;

  // Topological order of merged groups by reachability.
  std::vector<std::pair<int, std::vector<int>>> groups(merged.begin(),
                                                       merged.end());
  std::sort(groups.begin(), groups.end(),
            [&](const auto& x, const auto& y) {
              return reach[x.second.front()][y.second.front()] &&
                     !reach[y.second.front()][x.second.front()];
            });
  Cut cut;
  for (const auto& [rep, sccs] : groups) {
    std::vector<std::string> acts;
    for (int a = 0; a < n; ++a) {
      if (std::find(sccs.begin(), sccs.end(), scc[a]) != sccs.end()) {
        acts.push_back(g.acts[a]);
      }
    }
    cut.groups.push_back(std::move(acts));
  }
  return cut;
}

std::optional<Cut> parallel_cut(const CutGraph& g) {
  const int n = g.n();
  if (n < 2) return std::nullopt;
  // Same group when the pair is NOT doubly connected.
  std::vector<int> comp(n, -1);
  int next = 0;
  for (int s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    comp[s] = next;
    std::deque<int> q{s};
    while (!q.empty()) {
      int u = q.front();
      q.pop_front();
      for (int v = 0; v < n; ++v) {
        if (comp[v] >= 0) continue;
        if (!(g.follows(u, v) && g.follows(v, u))) {
          comp[v] = next;
          q.push_back(v);
        }
      }
    }
    ++next;
  }
  if (next < 2) return std::nullopt;
  // Every group needs a start and an end activity.
  std::vector<bool> has_start(next, false), has_end(next, false);
  for (int a = 0; a < n; ++a) {
    if (g.is_start[a]) has_start[comp[a]] = true;
    if (g.is_end[a]) has_end[comp[a]] = true;
  }
  for (int c = 0; c < next; ++c) {
    if (!has_start[c] || !has_end[c]) return std::nullopt;
  }
  Cut cut;
  cut.groups.assign(next, {});
  for (int a = 0; a < n; ++a) cut.groups[comp[a]].push_back(g.acts[a]);
  return cut;
}

std::optional<Cut> loop_cut(const CutGraph& g) {
  const int n = g.n();
  if (n < 2) return std::nullopt;
  std::vector<bool> body(n, false);
  for (int a = 0; a < n; ++a) {
    if (g.is_start[a] || g.is_end[a]) body[a] = true;
  }
  // Components of the non-body remainder are redo candidates; pull a
  // candidate into the body when its boundary arcs violate the loop shape.
  for (;;) {
    std::vector<bool> rest(n);
    for (int a = 0; a < n; ++a) rest[a] = !body[a];
    const auto comp = undirected_components(g, rest);
    int k = 0;
    for (int a = 0; a < n; ++a) {
      if (!body[a]) k = std::max(k, comp[a] + 1);
    }
    if (k == 0) return std::nullopt;
    bool changed = false;
    for (int c = 0; c < k && !changed; ++c) {
      for (int a = 0; a < n && !changed; ++a) {
        if (body[a] || comp[a] != c) continue;
        for (int b = 0; b < n; ++b) {
          if (!body[b]) continue;
          // body -> redo arcs only from end activities,
          // redo -> body arcs only to start activities.
          if ((g.follows(b, a) && !g.is_end[b]) ||
              (g.follows(a, b) && !g.is_start[b])) {
            for (int x = 0; x < n; ++x) {
              if (!body[x] && comp[x] == c) body[x] = true;
            }
            changed = true;
            break;
          }
        }
      }
    }
    if (changed) continue;
    Cut cut;
    std::vector<std::string> body_acts;
    for (int a = 0; a < n; ++a) {
      if (body[a]) body_acts.push_back(g.acts[a]);
    }
    if (body_acts.size() == static_cast<std::size_t>(n)) return std::nullopt;
    cut.groups.push_back(std::move(body_acts));
    for (int c = 0; c < k; ++c) {
      std::vector<std::string> acts;
      for (int a = 0; a < n; ++a) {
        if (!body[a] && comp[a] == c) acts.push_back(g.acts[a]);
      }
      if (!acts.empty()) cut.groups.push_back(std::move(acts));
    }
    if (cut.groups.size() < 2) return std::nullopt;
    return cut;
  }
}

std::map<std::string, int> group_index(const Cut& cut) {
  std::map<std::string, int> idx;
  for (std::size_t gi = 0; gi < cut.groups.size(); ++gi) {
    for (const auto& a : cut.groups[gi]) idx[a] = static_cast<int>(gi);
  }
  return idx;
}

ProcessTree im(std::vector<Seq> traces, double threshold);

ProcessTree im_recurse(TreeOp op, const Cut& cut,
                       std::vector<std::vector<Seq>> sublogs, double threshold) {
  std::vector<ProcessTree> children;
  children.reserve(sublogs.size());
  for (auto& sub : sublogs) children.push_back(im(std::move(sub), threshold));
  return ProcessTree::make(op, std::move(children));
}

ProcessTree im(std::vector<Seq> traces, double threshold) {
  bool any_empty = false;
  std::vector<Seq> nonempty;
  for (auto& t : traces) {
    if (t.empty()) any_empty = true;
    else nonempty.push_back(std::move(t));
  }
  if (nonempty.empty()) return ProcessTree::tau();

  std::set<std::string> alphabet;
  bool any_multi = false;
  for (const auto& t : nonempty) {
    for (const auto& a : t) alphabet.insert(a);
    if (t.size() > 1) any_multi = true;
  }
  if (alphabet.size() == 1) {
    const std::string a = *alphabet.begin();
    if (!any_empty && !any_multi) return ProcessTree::leaf(a);
    if (any_empty && !any_multi) {
      return ProcessTree::make(TreeOp::exclusive,
                               {ProcessTree::leaf(a), ProcessTree::tau()});
    }
    if (!any_empty && any_multi) {
      return ProcessTree::make(TreeOp::loop,
                               {ProcessTree::leaf(a), ProcessTree::tau()});
    }
    return ProcessTree::make(TreeOp::loop,
                             {ProcessTree::tau(), ProcessTree::leaf(a)});
  }
  if (any_empty) {
    return ProcessTree::make(
        TreeOp::exclusive,
        {ProcessTree::tau(), im(std::move(nonempty), threshold)});
  }

  const CutGraph g = build_cut_graph(nonempty, threshold);

  if (auto cut = exclusive_cut(g)) {
    const auto idx = group_index(*cut);
    std::vector<std::vector<Seq>> sublogs(cut->groups.size());
    for (const auto& t : nonempty) {
      std::vector<int> votes(cut->groups.size(), 0);
      for (const auto& a : t) votes[idx.at(a)]++;
      const int gi = static_cast<int>(
          std::max_element(votes.begin(), votes.end()) - votes.begin());
      Seq projected;
      for (const auto& a : t) {
        if (idx.at(a) == gi) projected.push_back(a);
      }
      sublogs[gi].push_back(std::move(projected));
    }
    return im_recurse(TreeOp::exclusive, *cut, std::move(sublogs), threshold);
  }

  if (auto cut = sequence_cut(g)) {
    const auto idx = group_index(*cut);
    std::vector<std::vector<Seq>> sublogs(cut->groups.size());
    for (const auto& t : nonempty) {
      std::vector<Seq> parts(cut->groups.size());
      int cur = 0;
      for (const auto& a : t) {
        const int gi = idx.at(a);
        if (gi >= cur) {
          cur = gi;
          parts[cur].push_back(a);
        }
        // Activities from earlier groups are noise here and are dropped.
      }
      for (std::size_t i = 0; i < parts.size(); ++i) {
        sublogs[i].push_back(std::move(parts[i]));
      }
    }
    return im_recurse(TreeOp::sequence, *cut, std::move(sublogs), threshold);
  }

  if (auto cut = parallel_cut(g)) {
    const auto idx = group_index(*cut);
    std::vector<std::vector<Seq>> sublogs(cut->groups.size());
    for (const auto& t : nonempty) {
      std::vector<Seq> parts(cut->groups.size());
      for (const auto& a : t) parts[idx.at(a)].push_back(a);
      for (std::size_t i = 0; i < parts.size(); ++i) {
        sublogs[i].push_back(std::move(parts[i]));
      }
    }
    return im_recurse(TreeOp::parallel, *cut, std::move(sublogs), threshold);
  }

  if (auto cut = loop_cut(g)) {
    const auto idx = group_index(*cut);
    std::vector<std::vector<Seq>> sublogs(cut->groups.size());
    for (const auto& t : nonempty) {
      int cur = 0;
      Seq segment;
      for (const auto& a : t) {
        const int gi = idx.at(a);
        if (gi != cur) {
          sublogs[cur].push_back(std::move(segment));
          segment.clear();
          cur = gi;
        }
        segment.push_back(a);
      }
      sublogs[cur].push_back(std::move(segment));
      if (cur != 0) sublogs[0].push_back({});  // run must end in the body
    }
    return im_recurse(TreeOp::loop, *cut, std::move(sublogs), threshold);
  }

  // Fall-through: flower model over the remaining alphabet.
  std::vector<ProcessTree> children{ProcessTree::tau()};
  for (const auto& a : alphabet) children.push_back(ProcessTree::leaf(a));
  return ProcessTree::make(TreeOp::loop, std::move(children));
}

}  // namespace

ProcessTree discover_tree(const std::vector<std::vector<std::string>>& traces,
                          double noise_threshold) {
  return im(traces, noise_threshold);
}

ProcessTree discover_tree(const TraceLog& log, double noise_threshold) {
  std::vector<Seq> traces;
  traces.reserve(log.traces.size());
  for (const auto& [case_id, trace] : log.traces) {
    traces.push_back(activity_sequence(trace));
  }
  if (traces.empty()) throw LogError{"cannot discover a tree from an empty log", {}};
  return im(std::move(traces), noise_threshold);
}

// --- tree semantics ------------------------------------------------------------

TreeModel::TreeModel(const ProcessTree& tree) {
  flatten(tree);
  min_run_ = tree.shortest_run_length();
}

void TreeModel::flatten(const ProcessTree& t) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{t.op, t.label, {}});
  for (const auto& c : t.children) {
    const int child = static_cast<int>(nodes_.size());
    nodes_[id].children.push_back(child);
    flatten(c);
  }
}

TreeModel::State TreeModel::initial() const {
  return State(nodes_.size(), 0);
}

bool TreeModel::node_done(const State& s, int node) const {
  const Node& n = nodes_[node];
  switch (n.op) {
    case TreeOp::activity:
    case TreeOp::silent:
      return s[node] == 1;
    case TreeOp::sequence:
      return s[node] == n.children.size();
    case TreeOp::exclusive:
      return s[node] > 0 && node_done(s, n.children[s[node] - 1]);
    case TreeOp::parallel:
      for (int c : n.children) {
        if (!node_done(s, c)) return false;
      }
      return true;
    case TreeOp::loop:
      return s[node] == n.children.size() + 1;
  }
  return false;
}

bool TreeModel::is_final(const State& s) const { return node_done(s, root_); }

namespace {

void reset_subtree(std::vector<std::uint8_t>& s, int node,
                   const std::vector<int>& subtree_sizes) {
  for (int i = 0; i < subtree_sizes[node]; ++i) s[node + i] = 0;
}

}  // namespace

void TreeModel::node_steps(
    State& s, int node,
    std::vector<std::pair<std::optional<std::string>, State>>& out) const {
  const Node& n = nodes_[node];
  // Subtree size for resets: nodes are stored preorder, so a subtree is a
  // contiguous id range.
  auto subtree_end = [&](int x) {
    int end = x + 1;
    std::vector<int> stack{x};
    while (!stack.empty()) {
      int u = stack.back();
      stack.pop_back();
      for (int c : nodes_[u].children) {
        end = std::max(end, c + 1);
        stack.push_back(c);
      }
    }
    return end;
  };
  auto reset = [&](State& st, int x) {
    const int end = subtree_end(x);
    for (int i = x; i < end; ++i) st[i] = 0;
  };
  auto normalize = [&](State& st) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        const Node& m = nodes_[i];
        if (m.op == TreeOp::sequence) {
          while (st[i] < m.children.size() && node_done(st, m.children[st[i]])) {
            st[i]++;
            changed = true;
          }
        } else if (m.op == TreeOp::loop) {
          const std::uint8_t phase = st[i];
          if (phase >= 2 && phase <= m.children.size() &&
              node_done(st, m.children[phase - 1])) {
            // Redo finished: restart the body.
            reset(st, m.children[0]);
            st[i] = 1;
            changed = true;
          }
        }
      }
    }
  };
  auto emit = [&](std::optional<std::string> label, State st) {
    normalize(st);
    out.emplace_back(std::move(label), std::move(st));
  };

  switch (n.op) {
    case TreeOp::activity:
      if (s[node] == 0) {
        State next = s;
        next[node] = 1;
        emit(n.label, std::move(next));
      }
      break;
    case TreeOp::silent:
      if (s[node] == 0) {
        State next = s;
        next[node] = 1;
        emit(std::nullopt, std::move(next));
      }
      break;
    case TreeOp::sequence:
      if (s[node] < n.children.size()) {
        node_steps(s, n.children[s[node]], out);
      }
      break;
    case TreeOp::exclusive:
      if (s[node] == 0) {
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          State base = s;
          base[node] = static_cast<std::uint8_t>(i + 1);
          std::vector<std::pair<std::optional<std::string>, State>> sub;
          node_steps(base, n.children[i], sub);
          for (auto& [label, st] : sub) out.emplace_back(label, std::move(st));
        }
      } else if (!node_done(s, n.children[s[node] - 1])) {
        node_steps(s, n.children[s[node] - 1], out);
      }
      break;
    case TreeOp::parallel:
      for (int c : n.children) {
        if (!node_done(s, c)) node_steps(s, c, out);
      }
      break;
    case TreeOp::loop: {
      const std::uint8_t phase = s[node];
      const std::uint8_t done_phase =
          static_cast<std::uint8_t>(n.children.size() + 1);
      if (phase == done_phase) break;
      if (phase == 0) {
        State base = s;
        base[node] = 1;
        node_steps(base, n.children[0], out);
        if (node_done(base, n.children[0])) {
          // Body accepts immediately (e.g. tau body): allow exit and redos.
          node_steps(base, node, out);
        }
        break;
      }
      const int active =
          phase == 1 ? n.children[0] : n.children[phase - 1];
      if (!node_done(s, active)) {
        node_steps(s, active, out);
        break;
      }
      if (phase == 1) {
        // Body finished: exit silently, or start one of the redo parts.
        State exit_state = s;
        exit_state[node] = done_phase;
        emit(std::nullopt, std::move(exit_state));
        for (std::size_t i = 1; i < n.children.size(); ++i) {
          State base = s;
          reset(base, n.children[i]);
          base[node] = static_cast<std::uint8_t>(i + 1);
          node_steps(base, n.children[i], out);
        }
      }
      break;
    }
  }
}

void TreeModel::successors(
    const State& s,
    std::vector<std::pair<std::optional<std::string>, State>>& out) const {
  out.clear();
  State scratch = s;
  node_steps(scratch, root_, out);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.first.has_value() != b.first.has_value()) return !a.first.has_value();
    if (a.first.has_value() && *a.first != *b.first) return *a.first < *b.first;
    return a.second < b.second;
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

// --- explicit LTS --------------------------------------------------------------

bool Lts::final_reachable() const {
  std::vector<bool> seen(num_states(), false);
  std::deque<int> q{initial};
  seen[initial] = true;
  while (!q.empty()) {
    int u = q.front();
    q.pop_front();
    if (final_states[u]) return true;
    for (const Arc& arc : transitions[u]) {
      if (!seen[arc.to]) {
        seen[arc.to] = true;
        q.push_back(arc.to);
      }
    }
  }
  return false;
}

Lts tree_to_lts(const ProcessTree& tree) {
  constexpr std::size_t kStateCap = 200000;
  const TreeModel model(tree);
  std::map<TreeModel::State, int> ids;
  std::deque<TreeModel::State> frontier;
  Lts lts;
  auto intern = [&](const TreeModel::State& s) {
    auto [it, inserted] = ids.emplace(s, static_cast<int>(ids.size()));
    if (inserted) {
      if (ids.size() > kStateCap) {
        throw LogError{"tree state space exceeds explicit LTS cap", {}};
      }
      frontier.push_back(s);
      lts.transitions.emplace_back();
      lts.final_states.push_back(model.is_final(s));
    }
    return it->second;
  };
  lts.initial = intern(model.initial());
  std::vector<std::pair<std::optional<std::string>, TreeModel::State>> succs;
  while (!frontier.empty()) {
    const TreeModel::State s = frontier.front();
    frontier.pop_front();
    const int from = ids.at(s);
    model.successors(s, succs);
    for (auto& [label, next] : succs) {
      // intern() may grow lts.transitions, so take the id before indexing.
      const int to = intern(next);
      lts.transitions[from].push_back(Lts::Arc{label, to});
    }
  }
  return lts;
}

LtsModel::LtsModel(const Lts& lts) : lts_(&lts) {
  // Shortest accepted run (labeled steps cost 1, silent steps cost 0).
  using Entry = std::pair<std::size_t, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
  std::vector<std::size_t> dist(lts.num_states(), SIZE_MAX);
  dist[lts.initial] = 0;
  pq.push({0, lts.initial});
  std::size_t best = SIZE_MAX;
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (lts.final_states[u]) {
      best = d;
      break;
    }
    for (const Lts::Arc& arc : lts.transitions[u]) {
      const std::size_t nd = d + (arc.label ? 1 : 0);
      if (nd < dist[arc.to]) {
        dist[arc.to] = nd;
        pq.push({nd, arc.to});
      }
    }
  }
  min_run_ = best;
}

void LtsModel::successors(
    State s, std::vector<std::pair<std::optional<std::string>, State>>& out)
    const {
  out.clear();
  for (const Lts::Arc& arc : lts_->transitions[s]) {
    out.emplace_back(arc.label, arc.to);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.first.has_value() != b.first.has_value()) return !a.first.has_value();
    if (a.first.has_value() && *a.first != *b.first) return *a.first < *b.first;
    return a.second < b.second;
  });
}

// --- dotted chart --------------------------------------------------------------

DottedChart dotted_chart(const TraceLog& log, DottedSort sort) {
  struct CaseInfo {
    std::string id;
    Millis first;
    Millis duration;
  };
  std::vector<CaseInfo> cases;
  for (const auto& [case_id, trace] : log.traces) {
    if (trace.empty()) continue;
    cases.push_back(CaseInfo{case_id, trace.front().timestamp,
                             trace.back().timestamp - trace.front().timestamp});
  }
  if (sort == DottedSort::duration) {
    std::sort(cases.begin(), cases.end(), [](const auto& a, const auto& b) {
      if (a.duration != b.duration) return a.duration > b.duration;
      return a.id < b.id;
    });
  } else {
    std::sort(cases.begin(), cases.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.id < b.id;
    });
  }
  DottedChart chart;
  std::map<std::string, std::size_t> row_of;
  for (const auto& c : cases) {
    row_of[c.id] = chart.rows.size();
    chart.rows.push_back(c.id);
  }
  for (const auto& [case_id, trace] : log.traces) {
    if (trace.empty()) continue;
    const std::size_t row = row_of.at(case_id);
    for (const Event& e : trace) {
      chart.points.push_back(DottedChart::Point{row, e.timestamp, e.activity});
    }
  }
  return chart;
}

// --- exports -------------------------------------------------------------------

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string dfg_to_dot(const Dfg& dfg) {
  std::ostringstream out;
  out << "digraph dfg {\n  rankdir=LR;\n";
  out << "  \"" << kDfgSource << "\" [shape=circle];\n";
  out << "  \"" << kDfgSink << "\" [shape=doublecircle];\n";
  for (const auto& a : dfg.activities) {
    out << "  \"" << dot_escape(a) << "\" [shape=box];\n";
  }
  for (const auto& [key, stats] : dfg.arcs) {
    out << "  \"" << dot_escape(key.first) << "\" -> \""
        << dot_escape(key.second) << "\" [label=\"" << stats.frequency << " ("
        << stats.mean_duration_s << "s)\"];\n";
  }
  out << "}\n";
  return out.str();
}

namespace {

void tree_dot_rec(const ProcessTree& t, int& next_id, int my_id,
                  std::ostringstream& out) {
  const std::string label =
      t.op == TreeOp::activity ? t.label
      : t.op == TreeOp::silent ? "tau"
      : t.op == TreeOp::sequence ? "->"
      : t.op == TreeOp::exclusive ? "x"
      : t.op == TreeOp::parallel ? "+" : "*";
  out << "  n" << my_id << " [label=\"" << dot_escape(label) << "\"";
  if (t.op == TreeOp::activity) out << " shape=box";
  out << "];\n";
  for (const auto& c : t.children) {
    const int cid = next_id++;
    out << "  n" << my_id << " -> n" << cid << ";\n";
    tree_dot_rec(c, next_id, cid, out);
  }
}

}  // namespace

std::string tree_to_dot(const ProcessTree& tree) {
  std::ostringstream out;
  out << "digraph tree {\n";
  int next_id = 1;
  tree_dot_rec(tree, next_id, 0, out);
  out << "}\n";
  return out.str();
}

std::string dotted_chart_to_csv(const DottedChart& chart) {
  std::ostringstream out;
  out << "row,case,timestamp,activity\n";
  for (const auto& p : chart.points) {
    out << p.row << ',' << chart.rows[p.row] << ',' << format_timestamp(p.t)
        << ',' << p.activity << '\n';
  }
  return out.str();
}

}  // namespace pmtk
