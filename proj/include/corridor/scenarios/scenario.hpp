#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "corridor/core/time.hpp"
#include "corridor/learn/policy.hpp"
#include "corridor/learn/trainer.hpp"
#include "corridor/network/scenario_document.hpp"
#include "corridor/simulate/world.hpp"

namespace corridor::scen {

// Decisions happen on this span's grid, so every interval must divide it.
inline constexpr Seconds kEpisodeSpan = 12 * kHour;

struct ScenarioSpec {
  std::string label;           // demand profile
  std::string cycle_schedule;  // source of cycle lengths; empty = profile baseline
  Seconds start = 0;
  Seconds duration = 0;
  Seconds warm_up = 15 * kMinute;
  Seconds interval = 15 * kMinute;
  std::vector<net::PerturbationSpec> perturbations;
  sim::QueueSampling sampling = sim::QueueSampling::mean;
  sim::WorldConfig world;

  Seconds end() const { return start + duration; }
  void validate(const net::ScenarioDocument& doc) const;
  bool operator==(const ScenarioSpec& o) const;
};

// Whole profile window.
ScenarioSpec default_spec(const net::ScenarioDocument& doc, const std::string& label);
// First `length` seconds of the profile window.
ScenarioSpec training_spec(const net::ScenarioDocument& doc, const std::string& label, Seconds length = 4 * kHour,
                           Seconds interval = 15 * kMinute);

// One spec per interval; each must divide the episode span.
std::vector<ScenarioSpec> interval_sweep(const ScenarioSpec& base, const std::vector<Seconds>& intervals);

// Surges scale targeted route rates inside the window; other kinds pass through.
net::DemandProfile apply_perturbation(const net::DemandProfile& profile, const net::PerturbationSpec& p,
                                      const net::Network& network);
std::vector<sim::LaneBlock> lane_blocks(const net::PerturbationSpec& p, const net::Network& network);

class OffsetPolicy {
 public:
  virtual ~OffsetPolicy() = default;
  virtual std::string name() const = 0;
  virtual std::vector<int> decide(const std::vector<double>& observation, Seconds t) = 0;
  // Schedule-driven policies report the offsets in force at t and when they change.
  virtual std::optional<std::vector<int>> scheduled(Seconds) const { return std::nullopt; }
  virtual std::vector<Seconds> change_times() const { return {}; }
};

class SchedulePolicy : public OffsetPolicy {
 public:
  SchedulePolicy(std::string name, net::Schedule schedule);
  std::string name() const override { return name_; }
  std::vector<int> decide(const std::vector<double>& observation, Seconds t) override;
  std::optional<std::vector<int>> scheduled(Seconds t) const override;
  std::vector<Seconds> change_times() const override;
  const net::Schedule& schedule() const { return schedule_; }

 private:
  std::string name_;
  net::Schedule schedule_;
};

std::unique_ptr<SchedulePolicy> baseline_policy(const net::Schedule& schedule);
std::unique_ptr<SchedulePolicy> replay_policy(const std::string& name, const net::Schedule& schedule);

class ConstantPolicy : public OffsetPolicy {
 public:
  explicit ConstantPolicy(std::vector<int> offsets) : offsets_(std::move(offsets)) {}
  std::string name() const override { return "constant"; }
  std::vector<int> decide(const std::vector<double>&, Seconds) override { return offsets_; }
  std::optional<std::vector<int>> scheduled(Seconds) const override { return offsets_; }

 private:
  std::vector<int> offsets_;
};

// Greedy (per-head argmax) use of a trained network.
class NetworkPolicy : public OffsetPolicy {
 public:
  NetworkPolicy(learn::PolicyNetwork net, std::string name = "deeprl") : net_(std::move(net)), name_(std::move(name)) {}
  std::string name() const override { return name_; }
  std::vector<int> decide(const std::vector<double>& observation, Seconds t) override;

 private:
  learn::PolicyNetwork net_;
  std::string name_;
};

struct IntervalMetric {
  Seconds start = 0;
  Seconds end = 0;
  bool warm_up = false;
  std::size_t trips = 0;
  double delay_sum = 0.0;     // s
  double distance_km = 0.0;
  double avg_delay = 0.0;     // s/km, NaN without completed trips
  double reward = 0.0;
  double total_queue = 0.0;   // mean over the interval, monitored links
  std::vector<int> offsets;   // raw commands in force at interval start
};

// Warm-up, then one decision per interval until the scenario ends.
class ScenarioRun {
 public:
  ScenarioRun(const net::ScenarioDocument& doc, ScenarioSpec spec, std::uint64_t seed);

  // Builds the world and runs the warm-up; returns the first observation.
  std::vector<double> start(const OffsetPolicy* schedule_source = nullptr);
  bool done() const;
  Seconds clock() const { return world_->clock(); }
  std::size_t decisions() const;

  struct Outcome {
    std::vector<double> observation;
    double reward = 0.0;
    IntervalMetric metric;
  };
  Outcome advance(const std::vector<int>& raw_offsets);

  const std::vector<IntervalMetric>& metrics() const { return metrics_; }
  sim::World& world() { return *world_; }
  const ScenarioSpec& spec() const { return spec_; }

 private:
  std::shared_ptr<const sig::PhasePlan> plan(std::size_t node, int cycle);
  void run_to(Seconds t);
  void apply_event(Seconds t);
  IntervalMetric close_interval(bool warm_up);

  const net::ScenarioDocument* doc_;
  ScenarioSpec spec_;
  std::uint64_t seed_;
  net::DemandProfile profile_;
  const net::Schedule* cycles_ = nullptr;
  const OffsetPolicy* source_ = nullptr;
  std::unique_ptr<sim::World> world_;
  std::map<std::pair<std::size_t, int>, std::shared_ptr<const sig::PhasePlan>> plans_;
  std::vector<Seconds> events_;
  std::size_t next_event_ = 0;
  int cycle_ = 0;
  std::vector<int> raw_;
  std::vector<IntervalMetric> metrics_;
};

struct RunResult {
  std::uint64_t seed = 0;
  std::string policy;
  std::vector<IntervalMetric> intervals;
  double mean_delay = 0.0;   // s/km over trips completed after warm-up
  double mean_reward = 0.0;  // per decision interval
  double total_reward = 0.0;
  std::uint64_t injected = 0;
  std::uint64_t exited = 0;
};

RunResult run_scenario(const net::ScenarioDocument& doc, const ScenarioSpec& spec, OffsetPolicy& policy,
                       std::uint64_t seed);

struct TrainingEnvConfig {
  std::vector<std::string> periods{"AM", "NOON", "PM"};
  int runs = 3;
  Seconds run_length = 4 * kHour;
  Seconds warm_up = 15 * kMinute;
  Seconds interval = 15 * kMinute;
  sim::QueueSampling sampling = sim::QueueSampling::mean;
  // Report run ends so advantages do not flow across the reset between runs.
  bool segment_runs = false;
  // Episode seeds are folded onto this many realizations; 0 draws fresh ones.
  std::uint64_t demand_pool = 0;
};

// An episode is `runs` independent runs, each with a period drawn uniformly.
class TrainingEnv : public learn::Environment {
 public:
  TrainingEnv(const net::ScenarioDocument& doc, TrainingEnvConfig cfg);

  std::vector<double> reset(std::uint64_t seed) override;
  learn::StepResult step(const std::vector<int>& action) override;
  int observation_size() const override { return observation_size_; }
  int num_heads() const override { return heads_; }
  int head_size() const override { return sig::kMaxOffset; }

  int steps_per_episode() const;
  const std::vector<std::string>& episode_periods() const { return chosen_; }

 private:
  std::vector<double> begin_run();

  const net::ScenarioDocument* doc_;
  TrainingEnvConfig cfg_;
  int observation_size_;
  int heads_;
  std::uint64_t seed_ = 0;
  int run_index_ = 0;
  std::vector<std::string> chosen_;
  std::unique_ptr<ScenarioRun> run_;
};

learn::Architecture default_architecture(const net::ScenarioDocument& doc);

struct BruteForceResult {
  int step = 0;
  int cycle = 0;
  std::vector<int> axis;  // grid values per target
  std::vector<std::vector<int>> offsets;
  std::vector<double> rewards;  // mean decision-interval reward over seeds
  std::size_t best = 0;
};

// Enumerates constant offsets on a grid. step must divide every cycle in use.
BruteForceResult brute_force(const net::ScenarioDocument& doc, const ScenarioSpec& spec, int step,
                             const std::vector<std::uint64_t>& seeds, std::size_t max_points, std::size_t workers);

// (baseline - policy) / baseline * 100; positive means the policy is better.
double percent_difference(double baseline, double policy);

}  // namespace corridor::scen
