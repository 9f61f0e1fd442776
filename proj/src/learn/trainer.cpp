#include "corridor/learn/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "corridor/core/error.hpp"
#include "corridor/core/parallel.hpp"

namespace corridor::learn {

namespace {

constexpr std::uint64_t kEnvSalt = 0x656e76ULL;
constexpr std::uint64_t kActionSalt = 0x616374ULL;
constexpr std::uint64_t kInitSalt = 0x696e6974ULL;
constexpr std::uint64_t kShuffleSalt = 0x73687566ULL;

}  // namespace

std::vector<int> sample_action(const PolicyNetwork::Output& out, Rng& rng) {
  std::vector<int> a;
  a.reserve(out.probs.size());
  for (const auto& p : out.probs) {
    const double u = rng.uniform();
    double acc = 0.0;
    int pick = static_cast<int>(p.size()) - 1;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      acc += p(i);
      if (u < acc) {
        pick = static_cast<int>(i);
        break;
      }
    }
    a.push_back(pick);
  }
  return a;
}

std::vector<int> greedy_action(const PolicyNetwork::Output& out) {
  std::vector<int> a;
  for (const auto& p : out.probs) {
    Eigen::Index best = 0;
    p.maxCoeff(&best);
    a.push_back(static_cast<int>(best));
  }
  return a;
}

std::uint64_t episode_env_seed(std::uint64_t seed, std::int64_t episode) {
  return mix_seed(mix_seed(seed, kEnvSalt), static_cast<std::uint64_t>(episode));
}

std::uint64_t episode_action_seed(std::uint64_t seed, std::int64_t episode) {
  return mix_seed(mix_seed(seed, kActionSalt), static_cast<std::uint64_t>(episode));
}

Episode run_episode(Environment& env, const PolicyNetwork& net, std::uint64_t env_seed, Rng& action_rng,
                    int horizon) {
  Episode ep;
  std::vector<double> obs = env.reset(env_seed);
  bool terminal = false;
  bool closed = false;
  for (int t = 0; t < horizon; ++t) {
    const auto out = net.forward(obs);
    const auto action = sample_action(out, action_rng);
    double lp = 0.0;
    for (std::size_t k = 0; k < action.size(); ++k) lp += std::log(out.probs[k](action[k]));
    StepResult r = env.step(action);
    if (!std::isfinite(r.reward)) throw RuntimeAbort("environment returned a non-finite reward");
    ep.steps.states.push_back(std::move(obs));
    ep.steps.actions.push_back(action);
    ep.steps.log_probs.push_back(lp);
    ep.steps.values.push_back(out.value);
    ep.steps.rewards.push_back(r.reward);
    ep.steps.dones.push_back(0);
    ep.total_reward += r.reward;
    closed = r.run_end && !r.done;
    if (closed) {
      ep.steps.dones.back() = 1;
      ep.bootstraps.push_back(net.forward(*r.run_end).value);
    }
    obs = std::move(r.observation);
    if (r.done) {
      terminal = !r.truncated;
      break;
    }
  }
  if (ep.steps.size() == 0) throw RuntimeAbort("episode produced no steps");
  if (!closed) {
    ep.steps.dones.back() = 1;
    ep.bootstraps.push_back(terminal ? 0.0 : net.forward(obs).value);
  }
  return ep;
}

Rollout rollout(const EnvFactory& factory, const PolicyNetwork& net, const PpoConfig& cfg, std::uint64_t seed,
                std::int64_t first, int count, std::size_t workers) {
  std::vector<Episode> episodes(static_cast<std::size_t>(count));
  parallel_for(episodes.size(), worker_count(workers), [&](std::size_t i) {
    const std::int64_t index = first + static_cast<std::int64_t>(i);
    auto env = factory();
    Rng action_rng(episode_action_seed(seed, index));
    episodes[i] = run_episode(*env, net, episode_env_seed(seed, index), action_rng, cfg.horizon);
  });
  Rollout out;
  for (auto& ep : episodes) {
    compute_advantages(ep.steps, ep.bootstraps, cfg);
    out.episode_rewards.push_back(ep.total_reward);
    out.episode_steps.push_back(ep.steps.size());
    out.batch.append(ep.steps);
  }
  out.batch.truncate(static_cast<std::size_t>(cfg.train_batch));
  return out;
}

Trainer::Trainer(const Architecture& arch, const TrainerConfig& cfg, EnvFactory factory)
    : cfg_(cfg),
      factory_(std::move(factory)),
      net_(arch, mix_seed(cfg.seed, kInitSalt)),
      adam_(net_.size()),
      rng_(mix_seed(cfg.seed, kShuffleSalt)) {
  cfg_.ppo.validate();
}

int Trainer::episodes_per_update() const {
  return (cfg_.ppo.train_batch + cfg_.ppo.horizon - 1) / cfg_.ppo.horizon;
}

void Trainer::train(std::int64_t total_episodes, const std::function<void(const TrainLogRow&)>& on_episode,
                    const std::function<void(const Trainer&)>& on_update) {
  while (episode_ < total_episodes) {
    const int count = episodes_per_update();
    Rollout r = rollout(factory_, net_, cfg_.ppo, cfg_.seed, episode_, count, cfg_.workers);
    // Short episodes can leave the batch under size; top up before updating.
    while (static_cast<int>(r.batch.size()) < cfg_.ppo.train_batch) {
      Rollout more = rollout(factory_, net_, cfg_.ppo, cfg_.seed,
                             episode_ + static_cast<std::int64_t>(r.episode_rewards.size()), 1, 1);
      r.batch.append(more.batch);
      r.episode_rewards.push_back(more.episode_rewards[0]);
      r.episode_steps.push_back(more.episode_steps[0]);
      r.batch.truncate(static_cast<std::size_t>(cfg_.ppo.train_batch));
    }
    const UpdateStats s = update(net_, adam_, r.batch, cfg_.ppo, rng_);
    ++update_;
    for (std::size_t i = 0; i < r.episode_rewards.size(); ++i) {
      ++episode_;
      if (on_episode) {
        TrainLogRow row;
        row.episode = episode_;
        row.update = update_;
        row.episode_reward = r.episode_rewards[i];
        row.mean_reward = r.episode_rewards[i] / static_cast<double>(r.episode_steps[i]);
        row.policy_loss = -s.mean.surrogate;
        row.value_loss = s.mean.value_loss;
        row.entropy = s.mean.entropy;
        row.approx_kl = s.mean.approx_kl;
        row.clip_fraction = s.mean.clip_fraction;
        on_episode(row);
      }
    }
    if (on_update) on_update(*this);
  }
}

nlohmann::json Trainer::checkpoint(const nlohmann::json& meta) const {
  const auto& p = net_.params();
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"architecture", to_json(net_.architecture())},
          {"ppo", to_json(cfg_.ppo)},
          {"seed", cfg_.seed},
          {"episode", episode_},
          {"update", update_},
          {"rng", rng_.state()},
          {"adam", adam_.to_json()},
          {"params", std::vector<double>(p.data(), p.data() + p.size())},
          {"meta", meta.is_null() ? nlohmann::json::object() : meta}};
}

void Trainer::restore(const nlohmann::json& ck) {
  net_ = policy_from_checkpoint(ck, &net_.architecture());
  try {
    cfg_.ppo = ppo_config_from_json(ck.at("ppo"));
    cfg_.seed = ck.at("seed").get<std::uint64_t>();
    episode_ = ck.at("episode").get<std::int64_t>();
    update_ = ck.at("update").get<std::int64_t>();
    rng_.restore(ck.at("rng").get<std::string>());
    adam_ = Adam::from_json(ck.at("adam"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("checkpoint", e.what());
  }
}

void save_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw ConfigError(path, "cannot write file");
  out << j.dump() << '\n';
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path, e.what());
  }
}

PolicyNetwork policy_from_checkpoint(const nlohmann::json& ck, const Architecture* expected) {
  if (!ck.is_object() || ck.value("format", "") != kCheckpointFormat) {
    throw ConfigError("checkpoint", "not a policy checkpoint");
  }
  if (ck.value("version", 0) != kCheckpointVersion) throw ConfigError("checkpoint", "unsupported version");
  const Architecture arch = architecture_from_json(ck.at("architecture"));
  if (expected && !(arch == *expected)) {
    throw ConfigError("checkpoint", "architecture mismatch: checkpoint " + to_json(arch).dump() + ", expected " +
                                        to_json(*expected).dump());
  }
  PolicyNetwork net(arch);
  const auto p = ck.at("params").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(p.size()) != net.size()) {
    throw ConfigError("checkpoint", "parameter count does not match architecture");
  }
  net.params() = Eigen::Map<const Eigen::VectorXd>(p.data(), net.size());
  if (!net.params().allFinite()) throw ConfigError("checkpoint", "non-finite parameters");
  return net;
}

}  // namespace corridor::learn
