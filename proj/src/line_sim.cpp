#include "pmtk/line_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

#include <json.hpp>

namespace pmtk {

using nlohmann::json;

std::vector<std::string> LineConfig::all_stations() const {
  std::vector<std::string> out = ga_stations;
  for (const auto& chain : sa_chains) {
    out.insert(out.end(), chain.begin(), chain.end());
  }
  return out;
}

// --- defaults and presets --------------------------------------------------

LineConfig default_config() {
  LineConfig c;
  for (int i = 0; i < 28; ++i) c.ga_stations.push_back("GA" + std::to_string(i));
  c.sa_chains = {
      {"SA1", "SA2", "SA3", "SA4", "SA5"},
      {"SA6", "SA7", "SA8"},
      {"SA9", "SA10", "SA11"},
      {"SA12", "SA13", "SA14", "SA15", "SA16"},
      {"SA17", "SA18", "SA19", "SA20", "SA21"},
      {"SA22", "SA23", "SA24", "SA25", "SA26"},
      {"SA27", "SA28", "SA29", "SA30"},
      {"SA31", "SA32", "SA33"},
  };
  c.prerequisites = {
      {"GA5", {"SA16"}},  {"GA10", {"SA21"}}, {"GA14", {"SA1"}},
      {"GA16", {"SA4", "SA5"}}, {"GA17", {"SA9"}},  {"GA18", {"SA11"}},
      {"GA20", {"SA26"}}, {"GA22", {"SA30"}}, {"GA24", {"SA7"}},
      {"GA25", {"SA8"}},  {"GA26", {"SA33"}},
  };
  for (const auto& s : c.ga_stations) c.service[s] = ServiceParams{8.0, 2.0};
  c.service["GA3"] = ServiceParams{10.0, 2.5};
  c.service["GA4"] = ServiceParams{10.0, 2.5};
  c.service["GA5"] = ServiceParams{10.0, 2.5};
  for (const auto& chain : c.sa_chains) {
    for (const auto& s : chain) c.service[s] = ServiceParams{6.0, 1.5};
  }
  // SA7 is deliberately the slowest subassembly step: paired with GA24 it is
  // the tightest hand-to-hand coupling on the line, which is what makes
  // buffering it worthwhile in the what-if scenario.
  c.service["SA7"] = ServiceParams{14.0, 2.0};
  c.service["SA8"] = ServiceParams{7.0, 1.5};
  c.arrival_mean_minutes = 7.0;
  c.start_time = millis_from_civil(2023, 1, 2) + 8 * kMillisPerHour;
  c.colors = {"white", "black", "blue", "red"};
  c.cities = {"Amsterdam", "Rotterdam", "Brussels", "Antwerp"};
  SectionSpec paint;
  paint.stations = {"GA3"};
  paint.operators = {OperatorSpec{"op_a", 1.1, {}},
                     OperatorSpec{"op_b", 0.95, {}}};
  c.sections.push_back(std::move(paint));
  return c;
}

LineConfig preset_config(const std::string& name) {
  LineConfig c = default_config();
  if (name == "default") return c;
  if (name == "drift") {
    c.arrival_mean_minutes = 15.0;
    c.sections.clear();
    return c;
  }
  if (name == "nl" || name == "be") {
    c.arrival_mean_minutes = 10.0;
    c.sections.clear();
    SectionSpec s;
    s.stations = {"GA4", "GA5"};
    if (name == "nl") {
      c.cities = {"Amsterdam", "Rotterdam"};
      s.operators = {OperatorSpec{"nl_fast", 1.5, {}},
                     OperatorSpec{"nl_steady", 0.7, {}}};
      s.rework = {ReworkCoupling{"GA4", "nl_fast", "GA5", 1.9}};
      // Tight base spread at GA4 so the two operator speeds show up as two
      // clearly separated modes rather than one smeared hump.
      c.service["GA4"] = ServiceParams{10.0, 1.2};
    } else {
      c.cities = {"Brussels", "Antwerp"};
      s.operators = {OperatorSpec{"be_1", 1.0, {}},
                     OperatorSpec{"be_2", 1.0, {}}};
    }
    c.sections.push_back(std::move(s));
    return c;
  }
  throw ConfigError("unknown preset: " + name);
}

// --- validation --------------------------------------------------------------

void validate_config(const LineConfig& config) {
  if (config.ga_stations.empty()) throw ConfigError("no general assembly stations");
  std::set<std::string> ga(config.ga_stations.begin(), config.ga_stations.end());
  std::set<std::string> sa;
  for (const auto& chain : config.sa_chains) {
    if (chain.empty()) throw ConfigError("empty sub-assembly chain");
    for (const auto& s : chain) {
      if (ga.count(s) || !sa.insert(s).second) {
        throw ConfigError("duplicate station label: " + s);
      }
    }
  }
  if (ga.size() != config.ga_stations.size()) {
    throw ConfigError("duplicate general assembly station label");
  }
  for (const auto& [consumer, suppliers] : config.prerequisites) {
    if (!ga.count(consumer)) {
      // SA-to-SA or GA-to-SA taps would allow same-car cycles between
      // chains; rejecting non-GA consumers keeps the topology acyclic.
      throw ConfigError("prerequisite consumer is not a GA station: " + consumer);
    }
    for (const auto& s : suppliers) {
      if (!sa.count(s)) {
        throw ConfigError("prerequisite supplier is not an SA chain member: " + s);
      }
    }
  }
  for (const auto& s : config.all_stations()) {
    auto it = config.service.find(s);
    if (it == config.service.end()) {
      throw ConfigError("missing service parameters for station " + s);
    }
    if (it->second.mean_minutes <= 0 || it->second.sd_minutes < 0) {
      throw ConfigError("invalid service parameters for station " + s);
    }
  }
  if (config.arrival_mean_minutes <= 0) {
    throw ConfigError("arrival mean must be positive");
  }
  std::set<std::string> covered;
  for (const auto& section : config.sections) {
    if (section.operators.empty()) throw ConfigError("section without operators");
    for (const auto& s : section.stations) {
      if (!ga.count(s) && !sa.count(s)) {
        throw ConfigError("section references unknown station " + s);
      }
      if (!covered.insert(s).second) {
        throw ConfigError("station in more than one section: " + s);
      }
    }
    for (const auto& op : section.operators) {
      if (op.speed <= 0) throw ConfigError("operator speed must be positive");
      for (const auto& [st, w] : op.preference) {
        if (w < 0) throw ConfigError("negative preference weight");
      }
    }
  }
  for (const auto& inj : config.injections) {
    if (const auto* d = std::get_if<DeviationSpec>(&inj)) {
      if (!ga.count(d->station) && !sa.count(d->station)) {
        throw ConfigError("deviation references unknown station " + d->station);
      }
      if (d->skip_probability < 0 || d->skip_probability > 1) {
        throw ConfigError("skip probability out of [0,1]");
      }
    } else if (const auto* d = std::get_if<DriftSpec>(&inj)) {
      if (!ga.count(d->station) && !sa.count(d->station)) {
        throw ConfigError("drift references unknown station " + d->station);
      }
      if (d->service_scale <= 0) throw ConfigError("drift scale must be positive");
    } else if (const auto* b = std::get_if<BufferSpec>(&inj)) {
      if (!sa.count(b->sa_station)) {
        throw ConfigError("buffer references unknown SA station " + b->sa_station);
      }
      if (b->capacity < 0) throw ConfigError("buffer capacity must be >= 0");
    }
  }
  if (config.object_layer.products_per_order < 0 ||
      config.object_layer.components_per_product < 1) {
    throw ConfigError("invalid object layer parameters");
  }
}

LineConfig apply_injection(const LineConfig& config, const Injection& spec) {
  LineConfig out = config;
  out.injections.push_back(spec);
  validate_config(out);
  return out;
}

// --- config JSON ---------------------------------------------------------------

namespace {

json service_to_json(const std::map<std::string, ServiceParams>& m) {
  json j = json::object();
  for (const auto& [k, v] : m) {
    j[k] = json{{"mean_minutes", v.mean_minutes}, {"sd_minutes", v.sd_minutes}};
  }
  return j;
}

json injection_to_json(const Injection& inj) {
  json j;
  if (const auto* d = std::get_if<DeviationSpec>(&inj)) {
    j = {{"kind", "deviation"},
         {"station", d->station},
         {"skip_probability", d->skip_probability},
         {"onset", d->onset}};
  } else if (const auto* d = std::get_if<DriftSpec>(&inj)) {
    j = {{"kind", "drift"},
         {"station", d->station},
         {"onset", d->onset},
         {"service_scale", d->service_scale}};
  } else {
    const auto& b = std::get<BufferSpec>(inj);
    j = {{"kind", "buffer"},
         {"sa_station", b.sa_station},
         {"capacity", b.capacity}};
  }
  return j;
}

Injection injection_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "deviation") {
    return DeviationSpec{j.at("station").get<std::string>(),
                         j.at("skip_probability").get<double>(),
                         j.at("onset").get<std::int64_t>()};
  }
  if (kind == "drift") {
    return DriftSpec{j.at("station").get<std::string>(),
                     j.at("onset").get<std::int64_t>(),
                     j.at("service_scale").get<double>()};
  }
  if (kind == "buffer") {
    return BufferSpec{j.at("sa_station").get<std::string>(),
                      j.at("capacity").get<std::int64_t>()};
  }
  throw ConfigError("unknown injection kind: " + kind);
}

}  // namespace

std::string config_to_json(const LineConfig& config) {
  json j;
  j["ga_stations"] = config.ga_stations;
  j["sa_chains"] = config.sa_chains;
  j["prerequisites"] = config.prerequisites;
  j["service"] = service_to_json(config.service);
  j["arrival_mean_minutes"] = config.arrival_mean_minutes;
  j["start_time"] = format_timestamp(config.start_time);
  json sections = json::array();
  for (const auto& s : config.sections) {
    json ops = json::array();
    for (const auto& op : s.operators) {
      ops.push_back(json{{"id", op.id},
                         {"speed", op.speed},
                         {"preference", op.preference}});
    }
    json rework = json::array();
    for (const auto& r : s.rework) {
      rework.push_back(json{{"trigger_station", r.trigger_station},
                            {"trigger_operator", r.trigger_operator},
                            {"affected_station", r.affected_station},
                            {"scale", r.scale}});
    }
    sections.push_back(json{{"stations", s.stations},
                            {"operators", std::move(ops)},
                            {"rework", std::move(rework)}});
  }
  j["sections"] = std::move(sections);
  json injections = json::array();
  for (const auto& inj : config.injections) injections.push_back(injection_to_json(inj));
  j["injections"] = std::move(injections);
  j["object_layer"] = {
      {"products_per_order", config.object_layer.products_per_order},
      {"components_per_product", config.object_layer.components_per_product}};
  j["colors"] = config.colors;
  j["cities"] = config.cities;
  return j.dump(2) + "\n";
}

LineConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  LineConfig c;
  try {
    c.ga_stations = j.at("ga_stations").get<std::vector<std::string>>();
    c.sa_chains = j.at("sa_chains").get<std::vector<std::vector<std::string>>>();
    c.prerequisites =
        j.at("prerequisites")
            .get<std::map<std::string, std::vector<std::string>>>();
    for (const auto& [k, v] : j.at("service").items()) {
      c.service[k] = ServiceParams{v.at("mean_minutes").get<double>(),
                                   v.at("sd_minutes").get<double>()};
    }
    c.arrival_mean_minutes = j.at("arrival_mean_minutes").get<double>();
    c.start_time = parse_timestamp(j.at("start_time").get<std::string>(), "");
    for (const auto& s : j.value("sections", json::array())) {
      SectionSpec section;
      section.stations = s.at("stations").get<std::vector<std::string>>();
      for (const auto& op : s.at("operators")) {
        section.operators.push_back(OperatorSpec{
            op.at("id").get<std::string>(), op.at("speed").get<double>(),
            op.value("preference", std::map<std::string, double>{})});
      }
      for (const auto& r : s.value("rework", json::array())) {
        section.rework.push_back(
            ReworkCoupling{r.at("trigger_station").get<std::string>(),
                           r.at("trigger_operator").get<std::string>(),
                           r.at("affected_station").get<std::string>(),
                           r.at("scale").get<double>()});
      }
      c.sections.push_back(std::move(section));
    }
    for (const auto& inj : j.value("injections", json::array())) {
      c.injections.push_back(injection_from_json(inj));
    }
    if (j.contains("object_layer")) {
      c.object_layer.products_per_order =
          j["object_layer"].value("products_per_order", std::int64_t{0});
      c.object_layer.components_per_product =
          j["object_layer"].value("components_per_product", std::int64_t{2});
    }
    c.colors = j.value("colors", std::vector<std::string>{"white"});
    c.cities = j.value("cities", std::vector<std::string>{"Aachen"});
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  } catch (const TimestampError& e) {
    throw ConfigError(std::string("malformed start_time: ") + e.message);
  }
  validate_config(c);
  return c;
}

// --- randomness ------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct CarStream {
  std::uint64_t state;

  CarStream(std::uint64_t seed, std::int64_t car) {
    std::uint64_t s = seed;
    std::uint64_t mix = splitmix64(s) ^ (0xD1342543DE82EF95ULL *
                                         static_cast<std::uint64_t>(car));
    state = mix;
    (void)splitmix64(state);  // decorrelate neighboring cars
  }

  double uniform() {  // in (0, 1)
    return (static_cast<double>(splitmix64(state) >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {  // Box-Muller, two fixed draws
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }
};

struct StationDraws {
  double z = 0.0;       // standard normal for the service time
  double u_op = 0.0;    // operator choice
  double u_skip = 0.0;  // deviation roll
};

double lognormal_minutes(const ServiceParams& p, double z) {
  if (p.sd_minutes <= 0) return p.mean_minutes;
  const double ratio = p.sd_minutes / p.mean_minutes;
  const double sigma2 = std::log(1.0 + ratio * ratio);
  const double mu = std::log(p.mean_minutes) - sigma2 / 2.0;
  return std::exp(mu + std::sqrt(sigma2) * z);
}

}  // namespace

// --- simulation ------------------------------------------------------------------

namespace {

struct StationRef {
  int chain = 0;  // 0 = main line
  int pos = 0;
};

struct SimTopology {
  std::vector<std::vector<std::string>> chains;  // chains[0] = GA line
  std::vector<std::string> stations;             // canonical draw order
  std::map<std::string, int> index;              // label -> canonical index
  std::vector<StationRef> refs;                  // canonical index -> position
  std::vector<std::vector<int>> chain_station;   // chain/pos -> canonical index
  std::vector<std::vector<int>> prereq;          // consumer -> supplier indices
  std::vector<std::vector<int>> consumers;       // supplier -> consumer indices
  std::vector<std::int64_t> buffer_capacity;     // per supplier index
};

SimTopology build_topology(const LineConfig& config) {
  SimTopology t;
  t.chains.push_back(config.ga_stations);
  for (const auto& chain : config.sa_chains) t.chains.push_back(chain);
  t.stations = config.all_stations();
  for (std::size_t i = 0; i < t.stations.size(); ++i) {
    t.index[t.stations[i]] = static_cast<int>(i);
  }
  t.chain_station.resize(t.chains.size());
  for (std::size_t c = 0; c < t.chains.size(); ++c) {
    for (std::size_t p = 0; p < t.chains[c].size(); ++p) {
      const int idx = t.index.at(t.chains[c][p]);
      t.chain_station[c].push_back(idx);
    }
  }
  t.refs.resize(t.stations.size());
  for (std::size_t c = 0; c < t.chains.size(); ++c) {
    for (std::size_t p = 0; p < t.chains[c].size(); ++p) {
      t.refs[t.chain_station[c][p]] =
          StationRef{static_cast<int>(c), static_cast<int>(p)};
    }
  }
  t.prereq.resize(t.stations.size());
  t.consumers.resize(t.stations.size());
  t.buffer_capacity.assign(t.stations.size(), 0);
  for (const auto& [consumer, suppliers] : config.prerequisites) {
    const int ci = t.index.at(consumer);
    for (const auto& s : suppliers) {
      const int si = t.index.at(s);
      t.prereq[ci].push_back(si);
      t.consumers[si].push_back(ci);
    }
  }
  for (const auto& inj : config.injections) {
    if (const auto* b = std::get_if<BufferSpec>(&inj)) {
      t.buffer_capacity[t.index.at(b->sa_station)] = b->capacity;
    }
  }
  return t;
}

struct StationOverrides {
  // (onset, value) sorted ascending; the entry with the largest onset <=
  // ordinal applies.
  std::vector<std::pair<std::int64_t, double>> skip_prob;
  std::vector<std::pair<std::int64_t, double>> drift_scale;

  static double lookup(const std::vector<std::pair<std::int64_t, double>>& v,
                       std::int64_t ordinal, double fallback) {
    double value = fallback;
    for (const auto& [onset, x] : v) {
      if (onset <= ordinal) value = x;
      else break;
    }
    return value;
  }
};

struct SectionBinding {
  const SectionSpec* section = nullptr;
};

}  // namespace

SimulationResult simulate(const LineConfig& config, std::uint64_t seed,
                          std::int64_t horizon_cars) {
  validate_config(config);
  SimulationResult result;
  result.log.schema = {{"color", AttrType::string},
                       {"city", AttrType::string},
                       {"ordinal", AttrType::integer}};
  if (horizon_cars <= 0) return result;

  const SimTopology topo = build_topology(config);
  const int num_stations = static_cast<int>(topo.stations.size());
  const std::int64_t n_cars = horizon_cars;

  std::vector<StationOverrides> over(num_stations);
  for (const auto& inj : config.injections) {
    if (const auto* d = std::get_if<DeviationSpec>(&inj)) {
      over[topo.index.at(d->station)].skip_prob.emplace_back(
          d->onset, d->skip_probability);
    } else if (const auto* d = std::get_if<DriftSpec>(&inj)) {
      over[topo.index.at(d->station)].drift_scale.emplace_back(
          d->onset, d->service_scale);
    }
  }
  for (auto& o : over) {
    std::stable_sort(o.skip_prob.begin(), o.skip_prob.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::stable_sort(o.drift_scale.begin(), o.drift_scale.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
  }

  std::vector<SectionBinding> section_of(num_stations);
  for (const auto& section : config.sections) {
    for (const auto& s : section.stations) {
      section_of[topo.index.at(s)].section = &section;
    }
  }
  std::map<std::string, std::vector<std::pair<Millis, Millis>>> operator_busy;

  // Full history so supplier buffers and blocking can look back.
  const std::size_t n = static_cast<std::size_t>(n_cars);
  std::vector<std::vector<Millis>> start_t(n, std::vector<Millis>(num_stations, 0));
  std::vector<std::vector<Millis>> complete_t = start_t;
  std::vector<std::vector<std::uint8_t>> skipped(
      n, std::vector<std::uint8_t>(num_stations, 0));
  std::vector<Millis> arrival(n, 0);
  std::vector<std::string> car_color(n), car_city(n);
  std::vector<std::string> car_operator(n * num_stations);

  // Chain processing order: sub-assembly chains first, then the main line,
  // so same-car prerequisite completions exist when a GA station needs them.
  std::vector<int> chain_order;
  for (std::size_t c = 1; c < topo.chains.size(); ++c) chain_order.push_back(static_cast<int>(c));
  chain_order.push_back(0);

  Millis prev_arrival = config.start_time;
  for (std::int64_t car = 1; car <= n_cars; ++car) {
    const std::size_t ci = static_cast<std::size_t>(car - 1);
    CarStream rng(seed, car);
    const double u_arrival = rng.uniform();
    const double u_color = rng.uniform();
    const double u_city = rng.uniform();
    std::vector<StationDraws> draws(num_stations);
    for (int s = 0; s < num_stations; ++s) {
      draws[s].z = rng.normal();
      draws[s].u_op = rng.uniform();
      draws[s].u_skip = rng.uniform();
    }

    const double gap_min = -config.arrival_mean_minutes * std::log(1.0 - u_arrival);
    arrival[ci] = prev_arrival + static_cast<Millis>(std::llround(gap_min * kMillisPerMinute));
    prev_arrival = arrival[ci];
    car_color[ci] = config.colors.empty()
                        ? "white"
                        : config.colors[static_cast<std::size_t>(
                              u_color * static_cast<double>(config.colors.size()))];
    car_city[ci] = config.cities.empty()
                       ? "Aachen"
                       : config.cities[static_cast<std::size_t>(
                             u_city * static_cast<double>(config.cities.size()))];

    std::map<int, double> rework_scale;  // station index -> multiplier

    for (int c : chain_order) {
      const auto& chain = topo.chain_station[c];
      for (std::size_t p = 0; p < chain.size(); ++p) {
        const int s = chain[p];
        const Millis prev_complete =
            p == 0 ? arrival[ci] : complete_t[ci][chain[p - 1]];

        // Station free once the previous car moved on (blocking).
        Millis free_at = 0;
        if (ci > 0) {
          free_at = complete_t[ci - 1][s];
          if (p + 1 < chain.size()) {
            free_at = std::max(free_at, start_t[ci - 1][chain[p + 1]]);
          }
        }
        Millis ready = std::max(prev_complete, free_at);
        for (int sup : topo.prereq[s]) {
          ready = std::max(ready, complete_t[ci][sup]);
        }
        for (int consumer : topo.consumers[s]) {
          const std::int64_t lag = car - 1 - topo.buffer_capacity[s];
          if (lag >= 1) {
            ready = std::max(ready, complete_t[static_cast<std::size_t>(lag - 1)][consumer]);
          }
        }

        const double skip_p =
            StationOverrides::lookup(over[s].skip_prob, car, 0.0);
        if (draws[s].u_skip < skip_p) {
          skipped[ci][s] = 1;
          start_t[ci][s] = prev_complete;
          complete_t[ci][s] = prev_complete;
          continue;
        }

        const Millis start = align_to_calendar(ready);

        // Operator: preference-weighted among section operators free at the
        // start instant; if none is free the whole pool is eligible.
        std::string op_id = "op_" + topo.stations[s];
        double speed = 1.0;
        if (const SectionSpec* section = section_of[s].section) {
          std::vector<const OperatorSpec*> pool;
          for (const auto& op : section->operators) {
            const auto& busy = operator_busy[op.id];
            const bool is_busy = std::any_of(
                busy.begin(), busy.end(), [&](const auto& iv) {
                  return iv.first <= start && start < iv.second;
                });
            if (!is_busy) pool.push_back(&op);
          }
          if (pool.empty()) {
            for (const auto& op : section->operators) pool.push_back(&op);
          }
          double total = 0.0;
          for (const auto* op : pool) {
            const auto it = op->preference.find(topo.stations[s]);
            total += it == op->preference.end() ? 1.0 : it->second;
          }
          double pick = draws[s].u_op * total;
          const OperatorSpec* chosen = pool.back();
          for (const auto* op : pool) {
            const auto it = op->preference.find(topo.stations[s]);
            pick -= it == op->preference.end() ? 1.0 : it->second;
            if (pick <= 0) {
              chosen = op;
              break;
            }
          }
          op_id = chosen->id;
          speed = chosen->speed;
          for (const auto& r : section->rework) {
            if (r.trigger_station == topo.stations[s] &&
                r.trigger_operator == op_id) {
              rework_scale[topo.index.at(r.affected_station)] = r.scale;
            }
          }
        }

        double minutes = lognormal_minutes(config.service.at(topo.stations[s]),
                                           draws[s].z);
        minutes *= StationOverrides::lookup(over[s].drift_scale, car, 1.0);
        minutes /= speed;
        if (auto it = rework_scale.find(s); it != rework_scale.end()) {
          minutes *= it->second;
        }
        const Millis dur = std::max<Millis>(
            1, static_cast<Millis>(std::llround(minutes * kMillisPerMinute)));
        const Millis complete = add_worked(start, dur);

        start_t[ci][s] = start;
        complete_t[ci][s] = complete;
        car_operator[ci * static_cast<std::size_t>(num_stations) +
                     static_cast<std::size_t>(s)] = op_id;
        if (section_of[s].section) {
          operator_busy[op_id].emplace_back(start, complete);
        }
      }
    }
  }

  // Emit events in deterministic global order.
  struct Emit {
    Millis t;
    std::int64_t car;
    int station;
    Lifecycle lc;
  };
  std::vector<Emit> emits;
  emits.reserve(n * static_cast<std::size_t>(num_stations) * 2);
  for (std::size_t ci = 0; ci < n; ++ci) {
    for (int s = 0; s < num_stations; ++s) {
      if (skipped[ci][s]) continue;
      emits.push_back(Emit{start_t[ci][s], static_cast<std::int64_t>(ci + 1), s,
                           Lifecycle::start});
      emits.push_back(Emit{complete_t[ci][s], static_cast<std::int64_t>(ci + 1),
                           s, Lifecycle::complete});
    }
  }
  std::sort(emits.begin(), emits.end(), [](const Emit& a, const Emit& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.car != b.car) return a.car < b.car;
    if (a.station != b.station) return a.station < b.station;
    return a.lc == Lifecycle::start && b.lc == Lifecycle::complete;
  });

  auto case_name = [](std::int64_t car) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "car_%04lld", static_cast<long long>(car));
    return std::string(buf);
  };

  result.log.events.reserve(emits.size());
  for (std::size_t i = 0; i < emits.size(); ++i) {
    const Emit& em = emits[i];
    const std::size_t ci = static_cast<std::size_t>(em.car - 1);
    Event e;
    e.event_id = "e" + std::to_string(i + 1);
    e.activity = topo.stations[em.station];
    e.timestamp = em.t;
    e.lifecycle = em.lc;
    e.resource = car_operator[ci * static_cast<std::size_t>(num_stations) +
                              static_cast<std::size_t>(em.station)];
    e.case_id = case_name(em.car);
    e.attrs = {{"color", car_color[ci]},
               {"city", car_city[ci]},
               {"ordinal", em.car}};
    result.log.events.push_back(std::move(e));
  }

  // Object layer: orders of products (cars) with components and a delivery.
  if (config.object_layer.products_per_order > 0) {
    const std::int64_t ppo = config.object_layer.products_per_order;
    const std::int64_t cpp = config.object_layer.components_per_product;
    std::vector<OCEvent> oc;
    const int last_ga = topo.chain_station[0].back();
    for (std::int64_t first = 1; first <= n_cars; first += ppo) {
      const std::int64_t last = std::min(n_cars, first + ppo - 1);
      const std::int64_t order_no = (first - 1) / ppo + 1;
      const std::string order_id = "order_" + std::to_string(order_no);
      const std::string delivery_id = "delivery_" + std::to_string(order_no);
      result.oclog.objects[order_id] = OCObject{"order", {}};
      result.oclog.objects[delivery_id] = OCObject{"delivery", {}};
      std::vector<std::string> products;
      std::vector<std::string> components;
      Millis last_done = 0;
      for (std::int64_t car = first; car <= last; ++car) {
        const std::string product = case_name(car);
        products.push_back(product);
        result.oclog.objects[product] = OCObject{"product", {}};
        for (std::int64_t k = 1; k <= cpp; ++k) {
          const std::string comp = product + "_c" + std::to_string(k);
          components.push_back(comp);
          result.oclog.objects[comp] = OCObject{"component", {}};
        }
      }
      const Millis t0 = arrival[static_cast<std::size_t>(first - 1)];
      oc.push_back(OCEvent{"", "place planned order", t0 - 10 * kMillisPerMinute,
                           {{"order", {order_id}}, {"product", products}},
                           {}});
      oc.push_back(OCEvent{"", "check inventory", t0 - 5 * kMillisPerMinute,
                           {{"order", {order_id}}, {"component", components}},
                           {}});
      for (std::int64_t car = first; car <= last; ++car) {
        const std::size_t ci = static_cast<std::size_t>(car - 1);
        const std::string product = case_name(car);
        std::vector<std::string> comps;
        for (std::int64_t k = 1; k <= cpp; ++k) {
          comps.push_back(product + "_c" + std::to_string(k));
        }
        for (int c = 0; c < static_cast<int>(topo.chains.size()); ++c) {
          for (int s : topo.chain_station[static_cast<std::size_t>(c)]) {
            if (skipped[ci][s]) continue;
            OCEvent ev;
            ev.activity = topo.stations[s];
            ev.timestamp = complete_t[ci][s];
            ev.omap["product"] = {product};
            ev.omap["component"] = comps;
            oc.push_back(std::move(ev));
          }
        }
        last_done = std::max(last_done, complete_t[ci][last_ga]);
      }
      oc.push_back(OCEvent{"", "confirm products", last_done + 10 * kMillisPerMinute,
                           {{"order", {order_id}}, {"product", products}},
                           {}});
      oc.push_back(OCEvent{"", "pay order", last_done + 20 * kMillisPerMinute,
                           {{"order", {order_id}}}, {}});
      oc.push_back(OCEvent{"", "complete delivery", last_done + 30 * kMillisPerMinute,
                           {{"delivery", {delivery_id}},
                            {"order", {order_id}},
                            {"product", products}},
                           {}});
    }
    std::stable_sort(oc.begin(), oc.end(), [](const OCEvent& a, const OCEvent& b) {
      return a.timestamp < b.timestamp;
    });
    for (std::size_t i = 0; i < oc.size(); ++i) {
      oc[i].event_id = "oce" + std::to_string(i + 1);
    }
    result.oclog.events = std::move(oc);
  }

  return result;
}

// --- alignment model -------------------------------------------------------------

LineModel::LineModel(const LineConfig& config) {
  validate_config(config);
  chains_.push_back(config.ga_stations);
  for (const auto& chain : config.sa_chains) chains_.push_back(chain);
  std::map<std::string, std::pair<int, int>> where;
  for (std::size_t c = 0; c < chains_.size(); ++c) {
    for (std::size_t p = 0; p < chains_[c].size(); ++p) {
      where[chains_[c][p]] = {static_cast<int>(c), static_cast<int>(p)};
      ++total_stations_;
    }
  }
  prereq_.resize(chains_.size());
  for (std::size_t c = 0; c < chains_.size(); ++c) {
    prereq_[c].resize(chains_[c].size());
  }
  for (const auto& [consumer, suppliers] : config.prerequisites) {
    const auto [cc, cp] = where.at(consumer);
    for (const auto& s : suppliers) {
      prereq_[static_cast<std::size_t>(cc)][static_cast<std::size_t>(cp)]
          .push_back(where.at(s));
    }
  }
}

LineModel::State LineModel::initial() const {
  return State(chains_.size(), 0);
}

bool LineModel::is_final(const State& s) const {
  for (std::size_t c = 0; c < chains_.size(); ++c) {
    if (s[c] != chains_[c].size()) return false;
  }
  return true;
}

void LineModel::successors(
    const State& s,
    std::vector<std::pair<std::optional<std::string>, State>>& out) const {
  out.clear();
  for (std::size_t c = 0; c < chains_.size(); ++c) {
    const std::size_t p = s[c];
    if (p >= chains_[c].size()) continue;
    bool ok = true;
    for (const auto& [sc, sp] : prereq_[c][p]) {
      if (s[static_cast<std::size_t>(sc)] <= static_cast<std::uint8_t>(sp)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    State next = s;
    next[c] = static_cast<std::uint8_t>(p + 1);
    out.emplace_back(chains_[c][p], std::move(next));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return *a.first < *b.first;
  });
}

}  // namespace pmtk
