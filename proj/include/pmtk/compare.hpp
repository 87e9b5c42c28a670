#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmtk/event_log.hpp"

// Log comparison: Earth Mover's Distance on duration and variant
// distributions, paired inter-station duration tables, and the combined
// two-factory comparison report.

namespace pmtk {

struct CompareError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DurationDistribution {
  std::string station;
  std::vector<double> samples;  // seconds, non-negative
};

struct VariantDistribution {
  // activity sequence -> relative frequency (sums to 1)
  std::map<std::vector<std::string>, double> variants;
};

struct PairTable {
  std::string station_x, station_y;
  // (case id, service seconds at x, service seconds at y)
  std::vector<std::tuple<std::string, double, double>> rows;
  std::size_t excluded_cases = 0;  // cases missing either station
};

/// Exact 1-D Wasserstein-1 between equal-weight sample sets (quantile
/// integral; handles different sample counts). Throws on empty input.
double duration_emd(const DurationDistribution& a, const DurationDistribution& b);

/// Optimal transport between variant distributions, ground metric =
/// Levenshtein distance / max sequence length; exact min-cost flow with
/// costs at 1e-9 integer resolution. Result in [0, 1].
double variant_emd(const VariantDistribution& a, const VariantDistribution& b);

double normalized_levenshtein(const std::vector<std::string>& a,
                              const std::vector<std::string>& b);

/// Per-case service durations (seconds) at a station.
DurationDistribution station_durations(const TraceLog& log,
                                       const std::string& station);
VariantDistribution variant_distribution(const TraceLog& log);
PairTable pair_table(const TraceLog& log, const std::string& x,
                     const std::string& y);

/// Spearman rank correlation of the paired columns, with a crude 95%
/// significance bound of 1.96/sqrt(n-1).
struct RankCorrelation {
  double rho = 0.0;
  double bound_95 = 0.0;
  std::size_t n = 0;
  bool significant() const { return n >= 3 && std::abs(rho) > bound_95; }
};
RankCorrelation spearman(const PairTable& table);

/// Histogram modality estimate: Freedman-Diaconis bin count (at least 16),
/// binomial smoothing, then significant local maxima separated by genuine
/// valleys. Unimodal data gives 1; two well-separated modes give 2.
std::size_t histogram_peak_count(const std::vector<double>& samples);

struct StationComparison {
  std::string station;
  double emd_s = 0.0;           // duration EMD between the two logs
  double tail_ratio_a = 0.0;    // p95/p50 in log a
  double tail_ratio_b = 0.0;
  std::size_t peaks_a = 0;      // histogram modality hints
  std::size_t peaks_b = 0;
};

struct ComparisonReport {
  std::vector<StationComparison> stations;  // stations present in both logs
  double variant_emd_value = 0.0;
  std::vector<PairTable> pairs;             // for configured station pairs
  std::vector<RankCorrelation> pair_correlations;  // parallel to pairs
};

ComparisonReport compare_report(
    const TraceLog& a, const TraceLog& b,
    const std::vector<std::pair<std::string, std::string>>& station_pairs = {});

std::string comparison_to_json(const ComparisonReport& report);
std::string pair_table_to_csv(const PairTable& table);

// Exact min-cost flow on a bipartite transport instance (successive
// shortest paths with potentials); exposed as the LP oracle for the EMD
// tests. supplies/demands are integer masses, cost[i][j] per unit.
std::int64_t min_cost_flow(const std::vector<std::int64_t>& supplies,
                           const std::vector<std::int64_t>& demands,
                           const std::vector<std::vector<std::int64_t>>& cost);

}  // namespace pmtk
