#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "corridor/core/rng.hpp"
#include "corridor/learn/policy.hpp"
#include "corridor/learn/ppo.hpp"

namespace corridor::learn {

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  // Episode cut by a time limit rather than reaching a terminal state.
  bool truncated = false;
  // Set when this step ended one independent run inside the episode: holds the
  // state that run reached, while `observation` starts the next run.
  std::optional<std::vector<double>> run_end;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(const std::vector<int>& action) = 0;
  virtual int observation_size() const = 0;
  virtual int num_heads() const = 0;
  virtual int head_size() const = 0;
};

using EnvFactory = std::function<std::unique_ptr<Environment>()>;

std::vector<int> sample_action(const PolicyNetwork::Output& out, Rng& rng);
std::vector<int> greedy_action(const PolicyNetwork::Output& out);

// Each run inside an episode is its own GAE segment.
struct Episode {
  TrajectoryBatch steps;
  std::vector<double> bootstraps;  // one per segment
  double total_reward = 0.0;
};

// One episode, at most `horizon` agent steps; the last step carries done=1.
Episode run_episode(Environment& env, const PolicyNetwork& net, std::uint64_t env_seed, Rng& action_rng,
                    int horizon);

std::uint64_t episode_env_seed(std::uint64_t seed, std::int64_t episode);
std::uint64_t episode_action_seed(std::uint64_t seed, std::int64_t episode);

struct Rollout {
  TrajectoryBatch batch;  // advantages and returns filled, truncated to train_batch
  std::vector<double> episode_rewards;
  std::vector<std::size_t> episode_steps;
};

// Episodes [first, first + count) in parallel; merged in episode order.
Rollout rollout(const EnvFactory& factory, const PolicyNetwork& net, const PpoConfig& cfg, std::uint64_t seed,
                std::int64_t first, int count, std::size_t workers);

struct TrainerConfig {
  PpoConfig ppo;
  std::uint64_t seed = 1;
  std::size_t workers = 1;
};

struct TrainLogRow {
  std::int64_t episode = 0;  // 1-based
  std::int64_t update = 0;
  double episode_reward = 0.0;
  double mean_reward = 0.0;  // per agent step
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

class Trainer {
 public:
  Trainer(const Architecture& arch, const TrainerConfig& cfg, EnvFactory factory);

  int episodes_per_update() const;
  // Updates until at least `total_episodes` episodes have been consumed.
  void train(std::int64_t total_episodes, const std::function<void(const TrainLogRow&)>& on_episode = {},
             const std::function<void(const Trainer&)>& on_update = {});

  const PolicyNetwork& policy() const { return net_; }
  PolicyNetwork& policy() { return net_; }
  std::int64_t episode() const { return episode_; }
  std::int64_t updates() const { return update_; }
  const TrainerConfig& config() const { return cfg_; }

  nlohmann::json checkpoint(const nlohmann::json& meta = {}) const;
  void restore(const nlohmann::json& checkpoint);

 private:
  TrainerConfig cfg_;
  EnvFactory factory_;
  PolicyNetwork net_;
  Adam adam_;
  Rng rng_;
  std::int64_t episode_ = 0;
  std::int64_t update_ = 0;
};

inline constexpr const char* kCheckpointFormat = "corridor-rl-checkpoint";
inline constexpr int kCheckpointVersion = 1;

void save_json(const std::string& path, const nlohmann::json& j);
nlohmann::json load_json(const std::string& path);

// Policy network from a checkpoint; architecture is checked when given.
PolicyNetwork policy_from_checkpoint(const nlohmann::json& checkpoint, const Architecture* expected = nullptr);

}  // namespace corridor::learn
