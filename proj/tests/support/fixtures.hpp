#pragma once

#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <json.hpp>

#include "corridor/network/scenario_document.hpp"
#include "corridor/signal/signal.hpp"
#include "corridor/simulate/world.hpp"

namespace testing {

inline std::string fixture_path(const std::string& name) { return std::string(CORRIDOR_FIXTURE_DIR) + "/" + name; }

inline nlohmann::json fixture_json(const std::string& name) {
  std::ifstream in(fixture_path(name));
  return nlohmann::json::parse(in);
}

inline const corridor::net::ScenarioDocument& huntington() {
  static const auto doc = corridor::net::load_scenario_file(fixture_path("huntington-synthetic.json"));
  return doc;
}

inline const corridor::net::ScenarioDocument& toy() {
  static const auto doc = corridor::net::load_scenario_file(fixture_path("greenwave-toy.json"));
  return doc;
}

// Single intersection X with four 278 m legs, adjustable in place.
struct Tiny {
  double length = 278.0;
  int lanes = 1;
  double saturation = 0.5;
  double ew_rate = 0.0;  // veh/h on each of EB and WB
  double ns_rate = 0.0;  // veh/h on each of NB and SB
  double ew_split = 0.5;
};

inline nlohmann::json tiny_json(const Tiny& t) {
  nlohmann::json j = fixture_json("single-intersection.json");
  for (auto& l : j["network"]["links"]) {
    l["length"] = t.length;
    l["lanes"] = t.lanes;
    l["saturation_flow"] = t.saturation;
  }
  for (auto& d : j["detectors"]) {
    std::vector<int> lanes;
    for (int i = 0; i < t.lanes; ++i) lanes.push_back(i);
    d["lanes"] = lanes;
    if (d["kind"] == "advance" && d["position"].get<double>() >= t.length) d["position"] = t.length / 2;
  }
  for (auto& e : j["demand"]["profiles"][0]["entries"]) {
    const std::string r = e["route"];
    e["rate"] = (r == "EB" || r == "WB") ? t.ew_rate : t.ns_rate;
  }
  j["signals"][0]["phases"][0]["split"] = t.ew_split;
  j["signals"][0]["phases"][1]["split"] = 1.0 - t.ew_split;
  return j;
}

inline corridor::net::ScenarioDocument tiny_doc(const Tiny& t) { return corridor::net::load_scenario(tiny_json(t).dump()); }

// Offset-0 controllers on every signalized node at the given cycle.
inline void install_fixed(corridor::sim::World& w, int cycle, corridor::Seconds start) {
  const auto& net = w.network();
  for (std::size_t n = 0; n < net.nodes().size(); ++n) {
    if (net.node(n).kind != corridor::net::NodeKind::signalized) continue;
    auto plan = std::make_shared<const corridor::sig::PhasePlan>(corridor::sig::make_plan(w.document().signal_for(n), cycle));
    w.install_controller(n, corridor::sig::SignalController(plan, w.document().signal_for(n).offset, start));
  }
}

}  // namespace testing
