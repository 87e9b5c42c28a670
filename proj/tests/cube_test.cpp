#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "pmtk/cube.hpp"
#include "pmtk/line_sim.hpp"

using namespace pmtk;

namespace {

const Millis kMon8 = millis_from_civil(2023, 1, 2) + kWorkStart;

/// Random logs over three categorical attributes d0/d1/d2 plus a timestamp.
EventLog random_log(std::mt19937& rng, std::size_t n_events) {
  const std::vector<std::string> v0 = {"a", "b", "c"};
  const std::vector<std::string> v1 = {"x", "y"};
  const std::vector<std::string> v2 = {"p", "q", "r", "s"};
  EventLog log;
  log.schema = {{"d0", AttrType::string},
                {"d1", AttrType::string},
                {"d2", AttrType::string}};
  for (std::size_t i = 0; i < n_events; ++i) {
    Event e;
    e.event_id = "e" + std::to_string(i + 1);
    e.activity = "A" + std::to_string(rng() % 3);
    e.timestamp = kMon8 + static_cast<Millis>(rng() % 1000) * kMillisPerMinute;
    e.case_id = "c" + std::to_string(rng() % 7);
    e.attrs["d0"] = v0[rng() % v0.size()];
    e.attrs["d1"] = v1[rng() % v1.size()];
    e.attrs["d2"] = v2[rng() % v2.size()];
    log.events.push_back(std::move(e));
  }
  return log;
}

std::vector<Dimension> three_dims() {
  // d2 carries a two-value rollup to exercise level changes.
  std::map<std::string, std::string> grouping = {
      {"p", "early"}, {"q", "early"}, {"r", "late"}, {"s", "late"}};
  return {Dimension::categorical("d0"), Dimension::categorical("d1"),
          Dimension::categorical("d2", grouping)};
}

std::size_t total_cell_events(const ProcessCube& cube) {
  std::size_t total = 0;
  for (const auto& [coord, ids] : cube.cells()) total += ids.size();
  return total;
}

}  // namespace

TEST_CASE("cells partition the active events") {
  std::mt19937 rng(31);
  for (int round = 0; round < 30; ++round) {
    const EventLog log = random_log(rng, 40 + rng() % 80);
    const ProcessCube cube = build_cube(log, three_dims());
    const auto cells = cube.cells();
    std::set<std::string> seen;
    for (const auto& [coord, ids] : cells) {
      REQUIRE(coord.size() == 3);
      CHECK(!ids.empty());
      for (const auto& id : ids) CHECK(seen.insert(id).second);  // disjoint
    }
    CHECK(seen.size() == log.events.size());  // exhaustive
  }
}

TEST_CASE("slice removes the dimension and keeps matching events") {
  std::mt19937 rng(32);
  const EventLog log = random_log(rng, 120);
  const ProcessCube cube = build_cube(log, three_dims());
  const ProcessCube sliced = slice(cube, "d1", {"x"});
  CHECK(sliced.dimensions.size() == 2);
  for (const Event* e : sliced.active_events()) {
    CHECK(std::get<std::string>(e->attrs.at("d1")) == "x");
  }
  // Cell coordinates now have two entries.
  for (const auto& [coord, ids] : sliced.cells()) CHECK(coord.size() == 2);
  CHECK_THROWS_AS(slice(cube, "d1", {"unobserved"}), CubeError);
  CHECK_THROWS_AS(slice(cube, "nope", {"x"}), CubeError);
}

TEST_CASE("dice filters without changing dimensionality") {
  std::mt19937 rng(33);
  const EventLog log = random_log(rng, 120);
  const ProcessCube cube = build_cube(log, three_dims());
  const ProcessCube diced = dice(cube, {{"d0", {"a", "b"}}, {"d2", {"p"}}});
  CHECK(diced.dimensions.size() == 3);
  for (const Event* e : diced.active_events()) {
    const std::string d0 = std::get<std::string>(e->attrs.at("d0"));
    CHECK((d0 == "a" || d0 == "b"));
    CHECK(std::get<std::string>(e->attrs.at("d2")) == "p");
  }
  // Dicing twice equals dicing with the intersection.
  const ProcessCube twice = dice(dice(cube, {{"d0", {"a", "b"}}}), {{"d0", {"b"}}});
  const ProcessCube once = dice(cube, {{"d0", {"b"}}});
  CHECK(twice.cells() == once.cells());
  CHECK_THROWS_AS(dice(cube, {{"nope", {"x"}}}), CubeError);
  // Values outside the current cube are rejected, like slice.
  CHECK_THROWS_AS(dice(dice(cube, {{"d0", {"a"}}}), {{"d0", {"b"}}}), CubeError);
}

TEST_CASE("roll_up merges cells and conserves events") {
  std::mt19937 rng(34);
  for (int round = 0; round < 20; ++round) {
    const EventLog log = random_log(rng, 60 + rng() % 60);
    const ProcessCube cube = build_cube(log, three_dims());
    const ProcessCube up = roll_up(cube, "d2");
    CHECK(total_cell_events(up) == total_cell_events(cube));
    CHECK(up.cells().size() <= cube.cells().size());
    // Every rolled-up cell is the union of child cells.
    for (const auto& [coord, ids] : up.cells()) {
      CHECK((coord[2] == "early" || coord[2] == "late"));
    }
    // Drill down restores the original cell structure.
    const ProcessCube down = drill_down(up, "d2");
    CHECK(down.cells() == cube.cells());
  }
  const ProcessCube cube = build_cube(random_log(rng, 50), three_dims());
  CHECK_THROWS_AS(roll_up(roll_up(cube, "d2"), "d2"), CubeError);  // top level
  CHECK_THROWS_AS(drill_down(cube, "d2"), CubeError);  // already finest
}

TEST_CASE("dice filters survive a roll_up by re-keying") {
  std::mt19937 rng(35);
  const EventLog log = random_log(rng, 150);
  const ProcessCube cube = build_cube(log, three_dims());
  const ProcessCube diced = dice(cube, {{"d2", {"p", "q"}}});
  const ProcessCube up = roll_up(diced, "d2");
  // p,q map to "early"; the rolled-up filter keeps exactly those events.
  for (const Event* e : up.active_events()) {
    const std::string d2 = std::get<std::string>(e->attrs.at("d2"));
    CHECK((d2 == "p" || d2 == "q"));
  }
}

TEST_CASE("time dimension renders calendar levels") {
  EventLog log;
  Event e;
  e.event_id = "e1";
  e.activity = "A";
  e.case_id = "c1";
  e.timestamp = millis_from_civil(2023, 3, 17) + 9 * kMillisPerHour;
  log.events.push_back(e);
  e.event_id = "e2";
  e.timestamp = millis_from_civil(2024, 3, 2);
  log.events.push_back(e);

  ProcessCube cube = build_cube(log, {Dimension::time("timestamp")});
  {
    const auto cells = cube.cells();
    REQUIRE(cells.size() == 2);
    CHECK(cells.count({"2023-03-17"}) == 1);
    CHECK(cells.count({"2024-03-02"}) == 1);
  }
  cube = roll_up(cube, "timestamp");
  CHECK(cube.cells().count({"2023-03"}) == 1);
  cube = roll_up(cube, "timestamp");
  {
    const auto cells = cube.cells();
    CHECK(cells.count({"2023"}) == 1);
    CHECK(cells.count({"2024"}) == 1);
  }
}

TEST_CASE("materialize returns the cell's sublog as traces") {
  std::mt19937 rng(36);
  const EventLog log = random_log(rng, 100);
  const ProcessCube cube = build_cube(log, three_dims());
  std::size_t materialized = 0;
  for (const auto& [coord, ids] : cube.cells()) {
    const TraceLog sub = materialize(cube, coord);
    materialized += sub.total_events();
    const std::set<std::string> wanted(ids.begin(), ids.end());
    for (const auto& [case_id, trace] : sub.traces) {
      for (const Event& e : trace) CHECK(wanted.count(e.event_id) == 1);
    }
  }
  CHECK(materialized == log.events.size());
  // Unknown coordinates give an empty log.
  CHECK(materialize(cube, {"zz", "zz", "zz"}).traces.empty());
}

TEST_CASE("hierarchy_from_csv parses child,parent pairs") {
  const auto m = hierarchy_from_csv("child,parent\np,early\nq,early\nr,late\n");
  CHECK(m.size() == 3);
  CHECK(m.at("p") == "early");
  CHECK(m.at("r") == "late");
  CHECK_THROWS(hierarchy_from_csv("only_one_column\np\n"));
}

TEST_CASE("cube over simulator attributes mirrors direct filtering") {
  const auto sim = simulate(preset_config("nl"), 8, 20);
  const ProcessCube cube = build_cube(
      sim.log, {Dimension::categorical("color"), Dimension::categorical("city")});
  const ProcessCube amsterdam = slice(cube, "city", {"Amsterdam"});
  const EventLog direct = filter_events(sim.log, "city = Amsterdam");
  CHECK(amsterdam.active_events().size() == direct.events.size());
  const std::string csv = cube_summary_csv(cube);
  CHECK(csv.find("Amsterdam") != std::string::npos);
}
