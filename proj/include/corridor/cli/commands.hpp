#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corridor/learn/trainer.hpp"
#include "corridor/network/scenario_document.hpp"
#include "corridor/scenarios/scenario.hpp"

namespace corridor::cli {

struct RunManifest {
  std::string command;
  std::string scenario_path;
  std::vector<std::string> periods;  // profile labels; eval-like commands use the first
  std::vector<std::uint64_t> seeds;
  std::string policy = "baseline";  // baseline | replay:NAME | checkpoint:PATH | PATH
  std::string out_dir = "out";
  std::optional<int> interval_min;
  std::int64_t episodes = 800;
  std::size_t workers = 1;
  std::vector<std::string> perturbations;
  std::string resume;
  int step = 5;
  std::size_t max_points = 20000;
  std::string checkpoint_dir;
  bool train_missing = false;
  std::vector<int> sweep_intervals{5, 10, 15, 30, 45};
  std::string schedule;
  int checkpoint_every = 10;  // updates
  nlohmann::json overrides = nlohmann::json::object();

  void validate() const;
  nlohmann::json to_json() const;
};

// "3", "1,4,9", "1-70", or a mix such as "1-5,9".
std::vector<std::uint64_t> parse_seeds(const std::string& text);

// Type-7 (linear interpolation) sample quantile; NaNs are ignored.
double quantile(std::vector<double> values, double q);

// Resolved policy source; builds a fresh policy per simulation.
class PolicySource {
 public:
  PolicySource(const net::ScenarioDocument& doc, const std::string& period, const std::string& spec);
  std::unique_ptr<scen::OffsetPolicy> make() const;
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::optional<net::Schedule> schedule_;
  std::optional<learn::PolicyNetwork> network_;
};

struct TrainOutcome {
  std::string checkpoint_path;
  std::string log_path;
  std::vector<learn::TrainLogRow> rows;  // this invocation only
  std::int64_t episodes = 0;
  // Set when validation seeds are configured (select_seeds).
  std::string best_checkpoint_path;
  double best_delay = 0.0;
};

struct EvalOutcome {
  scen::ScenarioSpec spec;
  std::string policy;
  std::vector<scen::RunResult> runs;  // seed order
  double mean_delay = 0.0;
  double mean_reward = 0.0;
};

struct BruteForceOutcome {
  scen::BruteForceResult result;
  std::optional<int> relative_offset;  // (o2 - o1) mod cycle for two targets
};

struct SweepLine {
  std::string period;
  int interval_min = 0;
  double baseline = 0.0;
  double policy = 0.0;
  double percent = 0.0;
};

TrainOutcome cmd_train(const RunManifest& m);
EvalOutcome cmd_eval(const RunManifest& m);
BruteForceOutcome cmd_brute_force(const RunManifest& m);
std::vector<SweepLine> cmd_sweep(const RunManifest& m);
EvalOutcome cmd_replay(const RunManifest& m);

// Parses argv, dispatches, and maps errors to exit codes (2 config, 3 runtime).
int run(int argc, const char* const* argv);

// Runtime knobs from manifest overrides (ppo.*, shared_trunk, runs, ...).
learn::TrainerConfig trainer_config(const RunManifest& m);
scen::TrainingEnvConfig training_env_config(const net::ScenarioDocument& doc, const RunManifest& m);
learn::Architecture architecture(const net::ScenarioDocument& doc, const RunManifest& m);
scen::ScenarioSpec eval_spec(const net::ScenarioDocument& doc, const RunManifest& m);

}  // namespace corridor::cli
