#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pmtk/calendar.hpp"
#include "pmtk/event_log.hpp"
#include "pmtk/ocpm.hpp"

// Discrete-event generator for the car production line: one main general
// assembly line plus parallel sub-assembly chains whose outputs specific GA
// stations consume. Produces a flat event log and, optionally, an
// object-centric order/product/component/delivery layer.

namespace pmtk {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ServiceParams {
  double mean_minutes = 8.0;
  double sd_minutes = 2.0;
};

/// Cars at ordinals >= onset skip the station with skip_probability. For a
/// station with several specs, the spec with the latest onset <= ordinal
/// wins, so a bounded window is expressed as (p, onset=a) + (0, onset=b).
struct DeviationSpec {
  std::string station;
  double skip_probability = 0.0;
  std::int64_t onset = 1;  // 1-based car ordinal
};

struct DriftSpec {
  std::string station;
  std::int64_t onset = 1;
  double service_scale = 1.0;  // latest onset <= ordinal wins
};

/// Lets a sub-assembly supplier work ahead of its consumers. Capacity 0 (the
/// default for every supplier) means the supplier may only start car n once
/// each consumer completed car n-1; capacity k allows k extra finished
/// components to queue.
struct BufferSpec {
  std::string sa_station;
  std::int64_t capacity = 0;
};

using Injection = std::variant<DeviationSpec, DriftSpec, BufferSpec>;

struct OperatorSpec {
  std::string id;
  double speed = 1.0;  // drawn service duration is divided by this
  std::map<std::string, double> preference;  // station -> weight (default 1)
};

/// When `trigger_operator` handles `trigger_station` for a car, that car's
/// service at `affected_station` is scaled — hurried work upstream causing
/// rework downstream.
struct ReworkCoupling {
  std::string trigger_station;
  std::string trigger_operator;
  std::string affected_station;
  double scale = 1.0;
};

struct SectionSpec {
  std::vector<std::string> stations;
  std::vector<OperatorSpec> operators;
  std::vector<ReworkCoupling> rework;
};

struct ObjectLayerConfig {
  std::int64_t products_per_order = 0;  // 0 disables the object layer
  std::int64_t components_per_product = 2;
};

struct LineConfig {
  std::vector<std::string> ga_stations;              // main line order
  std::vector<std::vector<std::string>> sa_chains;   // parallel chains
  std::map<std::string, std::vector<std::string>> prerequisites;  // GA -> SAs
  std::map<std::string, ServiceParams> service;      // per station
  double arrival_mean_minutes = 7.0;                 // exponential release
  Millis start_time = 0;                             // first possible release
  std::vector<SectionSpec> sections;
  std::vector<Injection> injections;
  ObjectLayerConfig object_layer;
  std::vector<std::string> colors;  // per-car attribute pools
  std::vector<std::string> cities;

  std::vector<std::string> all_stations() const;  // GA order then chains
};

/// The invented default topology: GA0..GA27 on the main line, SA1..SA33 in
/// eight chains, prerequisite taps documented in the README.
LineConfig default_config();
/// Named scenario presets: "default", "drift", "nl", "be".
LineConfig preset_config(const std::string& name);

/// Structural validation: service params for every station, prerequisites
/// from SA chain members to GA stations only, probabilities/scales in range,
/// operator speeds > 0. Throws ConfigError.
void validate_config(const LineConfig& config);

/// Returns a copy with the spec appended; the original is untouched.
LineConfig apply_injection(const LineConfig& config, const Injection& spec);

std::string config_to_json(const LineConfig& config);
LineConfig config_from_json(const std::string& text);

struct SimulationResult {
  EventLog log;
  ObjectCentricLog oclog;  // empty unless the object layer is enabled
};

/// Pure function of (config, seed, horizon). Per-car random streams make
/// trace prefixes horizon-invariant and paired-seed scenario runs coupled.
SimulationResult simulate(const LineConfig& config, std::uint64_t seed,
                          std::int64_t horizon_cars);

/// Lazy alignment model of the line's conforming behavior: interleavings of
/// the chain orders restricted by the prerequisite taps.
class LineModel {
 public:
  explicit LineModel(const LineConfig& config);

  using State = std::vector<std::uint8_t>;  // per-chain next position
  State initial() const;
  bool is_final(const State& s) const;
  void successors(const State& s,
                  std::vector<std::pair<std::optional<std::string>, State>>& out)
      const;
  std::size_t shortest_run_length() const { return total_stations_; }

 private:
  // chains_[0] is the main line; prereq_[chain][pos] lists (chain, pos)
  // pairs that must already be passed.
  std::vector<std::vector<std::string>> chains_;
  std::vector<std::vector<std::vector<std::pair<int, int>>>> prereq_;
  std::size_t total_stations_ = 0;
};

}  // namespace pmtk
