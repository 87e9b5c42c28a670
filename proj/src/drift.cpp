#include "pmtk/drift.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace pmtk {

using nlohmann::json;

namespace {

/// Two-sample rank-sum z statistic (B against A), tie-corrected.
double rank_z(const double* a, const double* b, std::size_t w) {
  const std::size_t n = 2 * w;
  std::vector<std::pair<double, int>> pooled;
  pooled.reserve(n);
  for (std::size_t i = 0; i < w; ++i) pooled.emplace_back(a[i], 0);
  for (std::size_t i = 0; i < w; ++i) pooled.emplace_back(b[i], 1);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  double rank_sum_b = 0.0;
  double tie_term = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second == 1) rank_sum_b += avg_rank;
    }
    i = j;
  }
  const double nw = static_cast<double>(w);
  const double nn = static_cast<double>(n);
  const double mean = nw * (nn + 1.0) / 2.0;
  const double var =
      nw * nw / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  if (var <= 0.0) return 0.0;
  return (rank_sum_b - mean) / std::sqrt(var);
}

double mean_of(const double* v, std::size_t count) {
  return std::accumulate(v, v + count, 0.0) / static_cast<double>(count);
}

}  // namespace

std::vector<ChangePoint> detect_change_points(const std::vector<double>& series,
                                              const DriftParams& params) {
  const std::size_t w = params.window;
  if (w < 5) throw DriftError("window must be >= 5");
  if (series.size() < 2 * w) {
    throw DriftError("series shorter than two windows");
  }

  // z[i] compares the w cars before split i with the w cars after.
  const std::size_t first = w;
  const std::size_t last = series.size() - w;  // exclusive split bound + 1
  std::vector<double> z(series.size(), 0.0);
  for (std::size_t i = first; i <= last; ++i) {
    z[i - 1] = rank_z(series.data() + i - w, series.data() + i, w);
  }

  struct Candidate {
    std::size_t split;  // 0-based index of the first post-change element
    double stat;
  };
  std::vector<Candidate> candidates;
  std::size_t run_start = 0;
  std::size_t run_len = 0;
  std::size_t best_idx = 0;
  double best_abs = 0.0;
  auto close_run = [&]() {
    if (run_len >= params.consecutive) {
      candidates.push_back(Candidate{best_idx + 1, z[best_idx]});
    }
    run_len = 0;
    best_abs = 0.0;
  };
  for (std::size_t i = first; i <= last; ++i) {
    const double stat = std::abs(z[i - 1]);
    if (stat >= params.threshold) {
      if (run_len == 0) run_start = i;
      (void)run_start;
      ++run_len;
      if (stat > best_abs) {
        best_abs = stat;
        best_idx = i - 1;
      }
    } else {
      close_run();
    }
  }
  close_run();

  // Strongest first; drop points too close to an already accepted one.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) {
                     return std::abs(a.stat) > std::abs(b.stat);
                   });
  std::vector<Candidate> accepted;
  for (const auto& c : candidates) {
    const bool crowded = std::any_of(
        accepted.begin(), accepted.end(), [&](const Candidate& o) {
          const std::size_t d =
              c.split > o.split ? c.split - o.split : o.split - c.split;
          return d < params.min_segment;
        });
    if (!crowded) accepted.push_back(c);
  }
  std::sort(accepted.begin(), accepted.end(),
            [](const Candidate& a, const Candidate& b) { return a.split < b.split; });

  std::vector<ChangePoint> out;
  for (const auto& c : accepted) {
    ChangePoint cp;
    cp.ordinal = c.split + 1;  // 1-based ordinal of the first changed car
    cp.statistic = std::abs(c.stat);
    const double pre = mean_of(series.data() + c.split - w, w);
    const double post = mean_of(series.data() + c.split, w);
    cp.direction = post >= pre ? "increase" : "decrease";
    cp.magnitude = pre == 0.0 ? 1.0 : post / pre;
    // Best-effort kind: a sizable trend inside the post window reads as
    // gradual, a flat post window as sudden.
    const std::size_t half = w / 2;
    const double post_a = mean_of(series.data() + c.split, half);
    const double post_b = mean_of(series.data() + c.split + w - half, half);
    cp.kind = std::abs(post_b - post_a) > 0.25 * std::abs(post - pre)
                  ? "gradual"
                  : "sudden";
    out.push_back(std::move(cp));
  }
  return out;
}

DriftReport drift_report(const TraceLog& log,
                         const std::vector<std::string>& stations,
                         const DriftParams& params) {
  DriftReport report;
  for (const auto& station : stations) {
    const auto series = service_series(log, station);
    std::vector<ChangePoint> cps;
    if (series.size() >= 2 * params.window) {
      cps = detect_change_points(series, params);
      for (auto& cp : cps) cp.station = station;
    }
    report.change_points[station] = std::move(cps);
    report.rolling[station] = rolling_sojourn(log, station, 10);
  }
  return report;
}

std::string drift_to_json(const DriftReport& report) {
  json points = json::array();
  for (const auto& [station, cps] : report.change_points) {
    for (const auto& cp : cps) {
      points.push_back(json{{"station", station},
                            {"ordinal", cp.ordinal},
                            {"direction", cp.direction},
                            {"magnitude", cp.magnitude},
                            {"statistic", cp.statistic},
                            {"kind", cp.kind}});
    }
  }
  json rolling = json::object();
  for (const auto& [station, series] : report.rolling) {
    json pts = json::array();
    for (const auto& [car, v] : series.points) {
      pts.push_back(json::array({car, v}));
    }
    rolling[station] = std::move(pts);
  }
  return json{{"change_points", std::move(points)},
              {"rolling_sojourn", std::move(rolling)}}
             .dump(2) +
         "\n";
}

}  // namespace pmtk
