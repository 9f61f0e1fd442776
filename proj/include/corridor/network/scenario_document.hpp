#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "corridor/core/time.hpp"
#include "corridor/network/demand.hpp"
#include "corridor/network/network.hpp"

namespace corridor::net {

inline constexpr int kSchemaVersion = 1;

// Movement = (incoming link, outgoing link) through one node.
using Movement = std::pair<std::size_t, std::size_t>;

struct PhaseSpec {
  std::string name;
  double split = 0.0;  // fraction of the cycle
  std::vector<Movement> movements;
};

struct SignalSpec {
  std::size_t node = 0;
  std::vector<PhaseSpec> phases;
  int offset = 0;  // fixed offset for non-target nodes
};

enum class DetectorKind { advance, stopbar };

struct DetectorSpec {
  std::size_t link = 0;
  DetectorKind kind = DetectorKind::stopbar;
  std::vector<int> lanes;
  double position = 0.0;  // m upstream of the stop bar
};

// One time-of-day block. Cycle is absent for offset-only tables; those take
// the cycle of the active baseline block.
struct ScheduleBlock {
  Seconds start = 0;
  Seconds end = 0;
  std::optional<int> cycle;
  std::vector<int> offsets;
};
using Schedule = std::vector<ScheduleBlock>;

enum class PerturbationKind { demand_surge, lane_disruption };

struct PerturbationSpec {
  std::string name;
  PerturbationKind kind = PerturbationKind::demand_surge;
  Seconds start = 0;
  Seconds end = 0;
  double magnitude = 1.0;            // surge factor or blocked lanes
  std::vector<std::string> targets;  // route ids / link ids; "*" = every route
};

struct ScenarioDocument {
  int schema_version = kSchemaVersion;
  std::string name;
  Network network;
  std::vector<DemandProfile> demand;
  std::vector<SignalSpec> signals;
  std::vector<DetectorSpec> detectors;
  std::map<std::string, Schedule> schedules;
  std::vector<PerturbationSpec> perturbations;

  const DemandProfile& profile(std::string_view label) const;
  const Schedule& schedule(std::string_view name) const;
  const SignalSpec& signal_for(std::size_t node) const;
  const PerturbationSpec& perturbation(std::string_view name) const;
};

// Parses and validates; every failure is a ConfigError with a document path.
ScenarioDocument load_scenario(std::string_view text);
ScenarioDocument load_scenario_file(const std::string& path);

nlohmann::json to_json(const ScenarioDocument& doc);
std::string serialize(const ScenarioDocument& doc);

// Schedule tables on their own (fixtures/table2_baseline.json etc.).
Schedule parse_schedule(const nlohmann::json& j, std::size_t expected_offsets, const std::string& path);
nlohmann::json schedule_to_json(const Schedule& s);

std::string_view to_string(DetectorKind k);
std::string_view to_string(PerturbationKind k);

}  // namespace corridor::net
