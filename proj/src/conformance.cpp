#include "pmtk/conformance.hpp"

#include <sstream>

#include <json.hpp>

namespace pmtk {

using nlohmann::json;

namespace {

const char* move_kind_name(MoveKind k) {
  switch (k) {
    case MoveKind::synchronous: return "sync";
    case MoveKind::model: return "model";
    case MoveKind::log: return "log";
    case MoveKind::silent: return "silent";
  }
  return "sync";
}

}  // namespace

std::string alignment_to_string(const Alignment& alignment) {
  std::ostringstream out;
  for (std::size_t i = 0; i < alignment.moves.size(); ++i) {
    const Move& m = alignment.moves[i];
    if (i) out << ' ';
    switch (m.kind) {
      case MoveKind::synchronous: out << '[' << m.activity << ']'; break;
      case MoveKind::silent: out << "[tau]"; break;
      case MoveKind::model: out << "[>>|" << m.activity << ']'; break;
      case MoveKind::log: out << '[' << m.activity << "|>>]"; break;
    }
  }
  return out.str();
}

std::string conformance_to_json(const ConformanceReport& report) {
  json j;
  j["mean_fitness"] = report.mean_fitness;
  j["total_cost"] = report.total_cost;
  j["log_moves"] = report.log_moves;
  j["model_moves"] = report.model_moves;
  json traces = json::array();
  for (const auto& tc : report.traces) {
    json moves = json::array();
    for (const Move& m : tc.alignment.moves) {
      json mv;
      mv["kind"] = move_kind_name(m.kind);
      if (!m.activity.empty()) mv["activity"] = m.activity;
      moves.push_back(std::move(mv));
    }
    traces.push_back(json{{"case", tc.case_id},
                          {"cost", tc.alignment.cost},
                          {"fitness", tc.alignment.fitness},
                          {"moves", std::move(moves)}});
  }
  j["traces"] = std::move(traces);
  return j.dump(2) + "\n";
}

}  // namespace pmtk
