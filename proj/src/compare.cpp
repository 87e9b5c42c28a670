#include "pmtk/compare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "pmtk/csv.hpp"

namespace pmtk {

using nlohmann::json;

double duration_emd(const DurationDistribution& a,
                    const DurationDistribution& b) {
  if (a.samples.empty() || b.samples.empty()) {
    throw CompareError("duration_emd requires non-empty sample sets");
  }
  std::vector<double> xs = a.samples;
  std::vector<double> ys = b.samples;
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const std::size_t na = xs.size();
  const std::size_t nb = ys.size();
  // Integrate |F_a^-1 - F_b^-1| over the merged quantile grid: exact for
  // equal-weight empirical distributions of any sizes.
  double total = 0.0;
  double q = 0.0;
  std::size_t ia = 0, ib = 0;
  while (ia < na && ib < nb) {
    const double qa = static_cast<double>(ia + 1) / static_cast<double>(na);
    const double qb = static_cast<double>(ib + 1) / static_cast<double>(nb);
    const double qn = std::min(qa, qb);
    total += (qn - q) * std::abs(xs[ia] - ys[ib]);
    q = qn;
    if (qa <= qn) ++ia;
    if (qb <= qn) ++ib;
  }
  return total;
}

double normalized_levenshtein(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0 && m == 0) return 0.0;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[m]) / static_cast<double>(std::max(n, m));
}

// --- min-cost flow (successive shortest paths with potentials) ------------------

std::int64_t min_cost_flow(const std::vector<std::int64_t>& supplies,
                           const std::vector<std::int64_t>& demands,
                           const std::vector<std::vector<std::int64_t>>& cost) {
  const std::size_t n = supplies.size();
  const std::size_t m = demands.size();
  if (cost.size() != n || (n > 0 && cost[0].size() != m)) {
    throw CompareError("cost matrix shape mismatch");
  }
  const std::int64_t total_supply =
      std::accumulate(supplies.begin(), supplies.end(), std::int64_t{0});
  const std::int64_t total_demand =
      std::accumulate(demands.begin(), demands.end(), std::int64_t{0});
  if (total_supply != total_demand) {
    throw CompareError("transport instance is unbalanced");
  }

  // Node layout: 0 = source, 1..n = supplies, n+1..n+m = demands, n+m+1 = sink.
  struct Edge {
    std::size_t to;
    std::int64_t cap;
    std::int64_t cost;
    std::size_t rev;
  };
  const std::size_t V = n + m + 2;
  const std::size_t source = 0, sink = V - 1;
  std::vector<std::vector<Edge>> g(V);
  auto add_edge = [&](std::size_t u, std::size_t v, std::int64_t cap,
                      std::int64_t c) {
    g[u].push_back(Edge{v, cap, c, g[v].size()});
    g[v].push_back(Edge{u, 0, -c, g[u].size() - 1});
  };
  for (std::size_t i = 0; i < n; ++i) add_edge(source, 1 + i, supplies[i], 0);
  for (std::size_t j = 0; j < m; ++j) add_edge(1 + n + j, sink, demands[j], 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (cost[i][j] < 0) throw CompareError("negative transport cost");
      add_edge(1 + i, 1 + n + j, total_supply, cost[i][j]);
    }
  }

  std::vector<std::int64_t> potential(V, 0);
  std::int64_t flow_left = total_supply;
  std::int64_t result = 0;
  const std::int64_t INF = std::numeric_limits<std::int64_t>::max() / 4;
  while (flow_left > 0) {
    std::vector<std::int64_t> dist(V, INF);
    std::vector<std::pair<std::size_t, std::size_t>> parent(V, {SIZE_MAX, 0});
    using Entry = std::pair<std::int64_t, std::size_t>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> pq;
    dist[source] = 0;
    pq.push({0, source});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u]) continue;
      for (std::size_t ei = 0; ei < g[u].size(); ++ei) {
        const Edge& e = g[u][ei];
        if (e.cap <= 0) continue;
        const std::int64_t nd = d + e.cost + potential[u] - potential[e.to];
        if (nd < dist[e.to]) {
          dist[e.to] = nd;
          parent[e.to] = {u, ei};
          pq.push({nd, e.to});
        }
      }
    }
    if (dist[sink] >= INF) throw CompareError("transport instance infeasible");
    for (std::size_t v = 0; v < V; ++v) {
      if (dist[v] < INF) potential[v] += dist[v];
    }
    std::int64_t push = flow_left;
    for (std::size_t v = sink; v != source;) {
      const auto [u, ei] = parent[v];
      push = std::min(push, g[u][ei].cap);
      v = u;
    }
    for (std::size_t v = sink; v != source;) {
      const auto [u, ei] = parent[v];
      g[u][ei].cap -= push;
      g[g[u][ei].to][g[u][ei].rev].cap += push;
      result += push * g[u][ei].cost;
      v = u;
    }
    flow_left -= push;
  }
  return result;
}

double variant_emd(const VariantDistribution& a, const VariantDistribution& b) {
  constexpr double kScale = 1e9;
  auto check = [](const VariantDistribution& d) {
    double sum = 0.0;
    for (const auto& [v, p] : d.variants) {
      if (p < 0) throw CompareError("negative variant frequency");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
      throw CompareError("variant distribution is not normalized");
    }
  };
  check(a);
  check(b);

  auto masses = [&](const VariantDistribution& d) {
    std::vector<const std::vector<std::string>*> keys;
    std::vector<std::int64_t> mass;
    for (const auto& [v, p] : d.variants) {
      const std::int64_t m = std::llround(p * kScale);
      if (m > 0) {
        keys.push_back(&v);
        mass.push_back(m);
      }
    }
    // Absorb rounding drift into the heaviest variant so sums match exactly.
    const std::int64_t sum =
        std::accumulate(mass.begin(), mass.end(), std::int64_t{0});
    if (!mass.empty()) {
      const auto it = std::max_element(mass.begin(), mass.end());
      *it += static_cast<std::int64_t>(kScale) - sum;
    }
    return std::make_pair(std::move(keys), std::move(mass));
  };
  auto [keys_a, mass_a] = masses(a);
  auto [keys_b, mass_b] = masses(b);
  if (keys_a.empty() || keys_b.empty()) {
    throw CompareError("variant distribution is empty");
  }

  std::vector<std::vector<std::int64_t>> cost(
      keys_a.size(), std::vector<std::int64_t>(keys_b.size(), 0));
  for (std::size_t i = 0; i < keys_a.size(); ++i) {
    for (std::size_t j = 0; j < keys_b.size(); ++j) {
      cost[i][j] = std::llround(
          normalized_levenshtein(*keys_a[i], *keys_b[j]) * kScale);
    }
  }
  const std::int64_t flow_cost = min_cost_flow(mass_a, mass_b, cost);
  return static_cast<double>(flow_cost) / (kScale * kScale);
}

// --- log accessors ---------------------------------------------------------------

DurationDistribution station_durations(const TraceLog& log,
                                       const std::string& station) {
  DurationDistribution d;
  d.station = station;
  for (const auto& [case_id, trace] : log.traces) {
    for (const auto& inst : activity_instances(trace)) {
      if (inst.activity != station || !inst.start) continue;
      d.samples.push_back(
          static_cast<double>(worked_between(*inst.start, inst.complete)) /
          kMillisPerSecond);
    }
  }
  return d;
}

VariantDistribution variant_distribution(const TraceLog& log) {
  VariantDistribution d;
  if (log.traces.empty()) return d;
  std::map<std::vector<std::string>, std::size_t> counts;
  for (const auto& [case_id, trace] : log.traces) {
    counts[activity_sequence(trace)]++;
  }
  const double total = static_cast<double>(log.traces.size());
  for (const auto& [variant, count] : counts) {
    d.variants[variant] = static_cast<double>(count) / total;
  }
  return d;
}

PairTable pair_table(const TraceLog& log, const std::string& x,
                     const std::string& y) {
  PairTable table;
  table.station_x = x;
  table.station_y = y;
  for (const auto& [case_id, trace] : log.traces) {
    double dx = 0.0, dy = 0.0;
    bool has_x = false, has_y = false;
    for (const auto& inst : activity_instances(trace)) {
      if (!inst.start) continue;
      const double s =
          static_cast<double>(worked_between(*inst.start, inst.complete)) /
          kMillisPerSecond;
      if (inst.activity == x) {
        dx += s;
        has_x = true;
      } else if (inst.activity == y) {
        dy += s;
        has_y = true;
      }
    }
    if (has_x && has_y) {
      table.rows.emplace_back(case_id, dx, dy);
    } else if (has_x || has_y) {
      table.excluded_cases++;
    }
  }
  return table;
}

namespace {

std::vector<double> ranks_of(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(values.size(), 0.0);
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

}  // namespace

RankCorrelation spearman(const PairTable& table) {
  RankCorrelation rc;
  rc.n = table.rows.size();
  if (rc.n < 2) return rc;
  std::vector<double> xs, ys;
  xs.reserve(rc.n);
  ys.reserve(rc.n);
  for (const auto& [id, x, y] : table.rows) {
    xs.push_back(x);
    ys.push_back(y);
  }
  const auto rx = ranks_of(xs);
  const auto ry = ranks_of(ys);
  const double mean = (static_cast<double>(rc.n) + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rc.n; ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  rc.rho = sxx == 0 || syy == 0 ? 0.0 : sxy / std::sqrt(sxx * syy);
  rc.bound_95 = 1.96 / std::sqrt(static_cast<double>(rc.n) - 1.0);
  return rc;
}

std::size_t histogram_peak_count(const std::vector<double>& samples) {
  if (samples.empty()) return 0;
  std::vector<double> xs = samples;
  std::sort(xs.begin(), xs.end());
  const double lo = xs.front();
  const double hi = xs.back();
  if (lo == hi) return 1;
  const double q1 = xs[xs.size() / 4];
  const double q3 = xs[(3 * xs.size()) / 4];
  const double iqr = q3 - q1;
  const double fd_width =
      2.0 * iqr / std::cbrt(static_cast<double>(xs.size()));
  if (fd_width <= 0) return 1;
  // Freedman-Diaconis alone under-resolves well separated modes (the IQR of a
  // bimodal sample spans both modes), so never use fewer than 16 bins; the
  // width is recomputed from the final bin count so the grid stays aligned
  // with the sample range.
  const std::size_t bins = std::clamp<std::size_t>(
      static_cast<std::size_t>((hi - lo) / fd_width) + 1, 16, 128);
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<double> counts(bins, 0.0);
  for (double v : xs) {
    std::size_t b = static_cast<std::size_t>((v - lo) / width);
    if (b >= bins) b = bins - 1;
    counts[b] += 1.0;
  }
  // Sampling noise in raw bin counts produces spurious one-bin modes, so
  // smooth with a small binomial kernel before looking for maxima.
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> next(bins, 0.0);
    for (std::size_t i = 0; i < bins; ++i) {
      const double l = i > 0 ? counts[i - 1] : counts[i];
      const double r = i + 1 < bins ? counts[i + 1] : counts[i];
      next[i] = 0.25 * l + 0.5 * counts[i] + 0.25 * r;
    }
    counts = std::move(next);
  }
  const double tallest = *std::max_element(counts.begin(), counts.end());
  // Candidate peaks: maximal plateaus that dominate both neighbours and
  // carry at least a fifth of the tallest mode.
  std::vector<std::size_t> candidates;
  std::size_t i = 0;
  while (i < bins) {
    std::size_t j = i;
    while (j + 1 < bins && counts[j + 1] == counts[i]) ++j;
    const bool above = counts[i] >= 0.2 * tallest;
    const bool left_ok = i == 0 || counts[i - 1] < counts[i];
    const bool right_ok = j + 1 == bins || counts[j + 1] < counts[i];
    if (above && left_ok && right_ok) candidates.push_back(i);
    i = j + 1;
  }
  // Two candidates only count separately when a genuine valley lies between
  // them; otherwise keep the taller one.
  std::vector<std::size_t> kept;
  for (std::size_t c : candidates) {
    if (kept.empty()) {
      kept.push_back(c);
      continue;
    }
    const std::size_t prev = kept.back();
    double valley = counts[prev];
    for (std::size_t k = prev; k <= c; ++k) valley = std::min(valley, counts[k]);
    const double lower = std::min(counts[prev], counts[c]);
    if (valley < 0.6 * lower) {
      kept.push_back(c);
    } else if (counts[c] > counts[prev]) {
      kept.back() = c;
    }
  }
  return kept.size();
}

ComparisonReport compare_report(
    const TraceLog& a, const TraceLog& b,
    const std::vector<std::pair<std::string, std::string>>& station_pairs) {
  ComparisonReport report;
  std::map<std::string, DurationDistribution> da, db;
  auto gather = [](const TraceLog& log,
                   std::map<std::string, DurationDistribution>& out) {
    for (const auto& [case_id, trace] : log.traces) {
      for (const auto& inst : activity_instances(trace)) {
        if (!inst.start) continue;
        auto& d = out[inst.activity];
        d.station = inst.activity;
        d.samples.push_back(
            static_cast<double>(worked_between(*inst.start, inst.complete)) /
            kMillisPerSecond);
      }
    }
  };
  gather(a, da);
  gather(b, db);
  for (const auto& [station, dist_a] : da) {
    auto it = db.find(station);
    if (it == db.end()) continue;
    StationComparison sc;
    sc.station = station;
    sc.emd_s = duration_emd(dist_a, it->second);
    auto tail = [](std::vector<double> xs) {
      std::sort(xs.begin(), xs.end());
      const double p50 = xs[xs.size() / 2];
      const double p95 = xs[static_cast<std::size_t>(
          0.95 * static_cast<double>(xs.size() - 1))];
      return p50 == 0 ? 0.0 : p95 / p50;
    };
    sc.tail_ratio_a = tail(dist_a.samples);
    sc.tail_ratio_b = tail(it->second.samples);
    sc.peaks_a = histogram_peak_count(dist_a.samples);
    sc.peaks_b = histogram_peak_count(it->second.samples);
    report.stations.push_back(std::move(sc));
  }
  report.variant_emd_value =
      variant_emd(variant_distribution(a), variant_distribution(b));
  for (const auto& [x, y] : station_pairs) {
    // One table per log, a first, so correlations can be contrasted.
    for (const TraceLog* log : {&a, &b}) {
      PairTable t = pair_table(*log, x, y);
      report.pair_correlations.push_back(spearman(t));
      report.pairs.push_back(std::move(t));
    }
  }
  return report;
}

std::string comparison_to_json(const ComparisonReport& report) {
  json stations = json::array();
  for (const auto& sc : report.stations) {
    stations.push_back(json{{"station", sc.station},
                            {"emd_s", sc.emd_s},
                            {"tail_ratio_a", sc.tail_ratio_a},
                            {"tail_ratio_b", sc.tail_ratio_b},
                            {"peaks_a", sc.peaks_a},
                            {"peaks_b", sc.peaks_b}});
  }
  json pairs = json::array();
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    const auto& t = report.pairs[i];
    const auto& rc = report.pair_correlations[i];
    pairs.push_back(json{{"station_x", t.station_x},
                         {"station_y", t.station_y},
                         {"log", i % 2 == 0 ? "a" : "b"},
                         {"rows", t.rows.size()},
                         {"excluded_cases", t.excluded_cases},
                         {"spearman_rho", rc.rho},
                         {"bound_95", rc.bound_95},
                         {"significant", rc.significant()}});
  }
  return json{{"stations", std::move(stations)},
              {"variant_emd", report.variant_emd_value},
              {"pairs", std::move(pairs)}}
             .dump(2) +
         "\n";
}

std::string pair_table_to_csv(const PairTable& table) {
  std::ostringstream out;
  out << "case," << table.station_x << "_s," << table.station_y << "_s\n";
  for (const auto& [id, x, y] : table.rows) {
    out << csv_escape(id) << ',' << x << ',' << y << '\n';
  }
  return out.str();
}

}  // namespace pmtk
