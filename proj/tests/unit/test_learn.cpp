#include <doctest.h>

#include <cmath>
#include <numeric>

#include "corridor/core/error.hpp"
#include "corridor/core/rng.hpp"
#include "corridor/learn/policy.hpp"
#include "corridor/learn/ppo.hpp"
#include "corridor/learn/trainer.hpp"

using namespace corridor;
using namespace corridor::learn;

namespace {

Architecture small_arch(bool shared = true) {
  Architecture a;
  a.input = 8;
  a.hidden = {4};
  a.heads = 3;
  a.head_size = 4;
  a.shared_trunk = shared;
  return a;
}

std::vector<double> random_state(Rng& rng, int n) {
  std::vector<double> s(static_cast<std::size_t>(n));
  for (double& x : s) x = rng.uniform() * 2.0 - 1.0;
  return s;
}

Minibatch random_minibatch(const PolicyNetwork& net, Rng& rng, int b) {
  const auto& a = net.architecture();
  Minibatch mb;
  mb.states.resize(a.input, b);
  for (int j = 0; j < b; ++j) {
    for (int i = 0; i < a.input; ++i) mb.states(i, j) = rng.uniform() * 2.0 - 1.0;
  }
  mb.actions.assign(static_cast<std::size_t>(b), std::vector<int>(static_cast<std::size_t>(a.heads)));
  for (auto& act : mb.actions) {
    for (int& x : act) x = rng.uniform_int(a.head_size);
  }
  mb.advantages.resize(b);
  mb.returns.resize(b);
  for (int j = 0; j < b; ++j) {
    mb.advantages(j) = rng.normal();
    mb.returns(j) = rng.normal();
  }
  // Old log-probabilities a little away from the current ones, some far enough to clip.
  mb.old_log_probs = log_probs(net, mb.states, mb.actions);
  for (int j = 0; j < b; ++j) mb.old_log_probs(j) += (j % 4 == 0 ? 0.9 : 0.05) * (rng.uniform() - 0.5);
  return mb;
}

// Oracle: explicit sum over (gamma lambda)^k delta_{t+k}.
std::vector<double> gae_explicit(const std::vector<double>& r, const std::vector<double>& v, double g, double l) {
  const std::size_t n = r.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      out[t] += w * (r[k] + g * v[k + 1] - v[k]);
      w *= g * l;
    }
  }
  return out;
}

// One-step bandit: action 0 pays 1, action 1 pays 0.
class Bandit : public Environment {
 public:
  std::vector<double> reset(std::uint64_t) override { return {1.0}; }
  StepResult step(const std::vector<int>& a) override {
    StepResult r;
    r.observation = {1.0};
    r.reward = a[0] == 0 ? 1.0 : 0.0;
    r.done = true;
    return r;
  }
  int observation_size() const override { return 1; }
  int num_heads() const override { return 1; }
  int head_size() const override { return 2; }
};

// Short noisy chain with a state that depends on the last action.
class Chain : public Environment {
 public:
  std::vector<double> reset(std::uint64_t seed) override {
    rng_ = Rng(seed);
    t_ = 0;
    return {0.0, 0.0};
  }
  StepResult step(const std::vector<int>& a) override {
    StepResult r;
    ++t_;
    r.reward = -std::abs(a[0] - 2) - std::abs(a[1] - 1) + 0.1 * rng_.normal();
    r.observation = {static_cast<double>(a[0]) / 4.0, rng_.uniform()};
    r.done = t_ >= 6;
    r.truncated = r.done;
    return r;
  }
  int observation_size() const override { return 2; }
  int num_heads() const override { return 2; }
  int head_size() const override { return 5; }

 private:
  Rng rng_;
  int t_ = 0;
};

Architecture chain_arch() {
  Architecture a;
  a.input = 2;
  a.hidden = {8, 8};
  a.heads = 2;
  a.head_size = 5;
  return a;
}

TrainerConfig chain_config() {
  TrainerConfig c;
  c.ppo.horizon = 6;
  c.ppo.train_batch = 30;
  c.ppo.minibatch = 10;
  c.ppo.epochs = 3;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("zero weights give uniform heads and zero value") {
  PolicyNetwork net(Architecture{});
  Rng rng(1);
  const auto out = net.forward(random_state(rng, 208));
  REQUIRE(out.probs.size() == 5);
  for (const auto& p : out.probs) {
    REQUIRE(p.size() == 120);
    for (Eigen::Index i = 0; i < p.size(); ++i) CHECK(p(i) == doctest::Approx(1.0 / 120).epsilon(1e-15));
  }
  CHECK(out.value == 0.0);
}

TEST_CASE("heads are normalized for random parameters") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    Architecture a = small_arch(trial % 2 == 0);
    a.head_size = 2 + rng.uniform_int(120);
    PolicyNetwork net(a, static_cast<std::uint64_t>(trial));
    net.params() *= 1.0 + 20.0 * rng.uniform();
    const auto out = net.forward(random_state(rng, a.input));
    for (const auto& p : out.probs) {
      REQUIRE(std::abs(p.sum() - 1.0) <= 1e-12);
      REQUIRE((p.array() >= 0.0).all());
    }
  }
  Eigen::MatrixXd big(3, 1);
  big << 1000.0, 999.0, -1000.0;
  const auto s = softmax_columns(big);
  CHECK(std::isfinite(s(0, 0)));
  CHECK(s.col(0).sum() == doctest::Approx(1.0));
}

TEST_CASE("full architecture has the documented shape") {
  PolicyNetwork net(Architecture{}, 3);
  CHECK(net.policy_trunk().size() == 3);
  CHECK(net.policy_trunk()[0].rows == 64);
  CHECK(net.policy_trunk()[0].cols == 208);
  CHECK(net.heads().size() == 5);
  CHECK(net.heads()[0].rows == 120);
  CHECK(net.value_trunk().empty());
  CHECK(net.params().allFinite());
  Architecture split;
  split.shared_trunk = false;
  CHECK(PolicyNetwork(split, 3).value_trunk().size() == 3);
  CHECK(architecture_from_json(to_json(split)) == split);
}

TEST_CASE("discounted return examples") {
  CHECK(discounted_return(std::vector<double>(45, 1.0), 0.99)[0] ==
        doctest::Approx((1.0 - std::pow(0.99, 45)) / 0.01).epsilon(1e-12));
  CHECK(discounted_return(std::vector<double>(45, 1.0), 0.99)[0] == doctest::Approx(36.3815).epsilon(1e-5));
  const std::vector<double> r{0.5, -1.0, 2.0};
  CHECK(discounted_return(r, 0.0) == r);
  CHECK(discounted_return({-0.2}, 0.99) == std::vector<double>{-0.2});
}

TEST_CASE("gae examples") {
  const auto a = gae({1.0, 1.0}, {0.0, 0.0, 0.0}, 0.99, 0.97);
  CHECK(a[0] == doctest::Approx(1.9603).epsilon(1e-12));
  CHECK(a[1] == 1.0);

  // Perfect value function with lambda = 1 leaves nothing to explain.
  const std::vector<double> r{0.3, -1.2, 0.7, 2.0};
  auto g = discounted_return(r, 0.95);
  g.push_back(0.0);
  for (double adv : gae(r, g, 0.95, 1.0)) CHECK(std::abs(adv) < 1e-12);

  const std::vector<double> v{0.1, 0.4, -0.3, 0.2, 0.5};
  const auto td = gae(r, v, 0.9, 0.0);
  for (std::size_t t = 0; t < r.size(); ++t) CHECK(td[t] == r[t] + 0.9 * v[t + 1] - v[t]);
}

TEST_CASE("recursive gae matches the explicit sum") {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(rng.uniform_int(50));
    std::vector<double> r(n), v(n + 1);
    for (double& x : r) x = rng.normal();
    for (double& x : v) x = rng.normal();
    const double g = rng.uniform();
    const double l = rng.uniform();
    const auto a = gae(r, v, g, l);
    const auto b = gae_explicit(r, v, g, l);
    for (std::size_t t = 0; t < n; ++t) REQUIRE(std::abs(a[t] - b[t]) < 1e-9);
  }
}

TEST_CASE("segments do not bootstrap across each other") {
  TrajectoryBatch b;
  const std::vector<double> rewards{1.0, 2.0, 3.0, -1.0, 0.5};
  const std::vector<double> values{0.2, 0.1, 0.3, 0.4, -0.2};
  const std::vector<char> dones{0, 1, 0, 0, 1};
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    b.states.push_back({0.0});
    b.actions.push_back({0});
    b.log_probs.push_back(0.0);
    b.values.push_back(values[i]);
    b.rewards.push_back(rewards[i]);
    b.dones.push_back(dones[i]);
  }
  PpoConfig cfg;
  compute_advantages(b, {0.7, 0.0}, cfg);
  const auto first = gae({1.0, 2.0}, {0.2, 0.1, 0.7}, cfg.gamma, cfg.lambda);
  const auto second = gae({3.0, -1.0, 0.5}, {0.3, 0.4, -0.2, 0.0}, cfg.gamma, cfg.lambda);
  CHECK(b.advantages[0] == first[0]);
  CHECK(b.advantages[1] == first[1]);
  for (std::size_t t = 0; t < 3; ++t) CHECK(b.advantages[2 + t] == second[t]);
  for (std::size_t i = 0; i < 5; ++i) CHECK(b.returns[i] == b.advantages[i] + values[i]);
  CHECK_THROWS_AS(compute_advantages(b, {0.7}, cfg), RuntimeAbort);
}

TEST_CASE("clipped objective examples") {
  CHECK(clipped_term(1.5, 1.0, 0.2) == doctest::Approx(1.2).epsilon(1e-15));
  CHECK(clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8).epsilon(1e-15));
  CHECK(clip_bound(0.2, 2.0) == doctest::Approx(2.4));
  CHECK(clip_bound(0.2, -2.0) == doctest::Approx(-1.6));
  Rng rng(6);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.normal();
    REQUIRE(clipped_term(1.0, a, 0.2) == a);
  }
}

TEST_CASE("surrogate equals the mean advantage at the sampling policy") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    PolicyNetwork net(small_arch(), static_cast<std::uint64_t>(100 + trial));
    Minibatch mb = random_minibatch(net, rng, 12);
    mb.old_log_probs = log_probs(net, mb.states, mb.actions);
    PpoConfig cfg;
    Eigen::VectorXd grad;
    const LossStats s = ppo_loss(net, mb, cfg, grad);
    CHECK(s.surrogate == doctest::Approx(mb.advantages.mean()).epsilon(1e-12));
    CHECK(s.clip_fraction == 0.0);
    CHECK(std::abs(s.approx_kl) < 1e-12);
  }
}

TEST_CASE("surrogate gradient vanishes outside the clip range") {
  Rng rng(8);
  PolicyNetwork net(small_arch(false), 9);
  Minibatch mb = random_minibatch(net, rng, 10);
  const Eigen::VectorXd now = log_probs(net, mb.states, mb.actions);
  for (Eigen::Index j = 0; j < mb.advantages.size(); ++j) {
    // ratio 1.5 with A > 0 or ratio 0.5 with A < 0.
    const bool pos = j % 2 == 0;
    mb.advantages(j) = pos ? 1.0 + rng.uniform() : -1.0 - rng.uniform();
    mb.old_log_probs(j) = now(j) - std::log(pos ? 1.5 : 0.5);
  }
  PpoConfig cfg;
  cfg.value_coef = 0.0;
  cfg.entropy_coef = 0.0;
  Eigen::VectorXd grad;
  const LossStats s = ppo_loss(net, mb, cfg, grad);
  CHECK(s.clip_fraction == doctest::Approx(1.0));
  CHECK(grad.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(9);
  double worst = 0.0;
  for (int trial = 0; trial < 24; ++trial) {
    Architecture a = small_arch(trial % 2 == 0);
    if (trial % 3 == 0) a.hidden = {5, 3};
    PolicyNetwork net(a, static_cast<std::uint64_t>(trial + 1));
    const Minibatch mb = random_minibatch(net, rng, 9);
    PpoConfig cfg;
    cfg.entropy_coef = 0.05;
    Eigen::VectorXd grad;
    ppo_loss(net, mb, cfg, grad);
    REQUIRE(grad.size() == net.size());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < net.size(); ++i) {
      PolicyNetwork p = net, m = net;
      p.params()(i) += h;
      m.params()(i) -= h;
      Eigen::VectorXd scratch;
      const double fd = (ppo_loss(p, mb, cfg, scratch).total - ppo_loss(m, mb, cfg, scratch).total) / (2 * h);
      const double err = std::abs(fd - grad(i)) / std::max(1e-6, std::abs(fd) + std::abs(grad(i)));
      worst = std::max(worst, err);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("non-finite losses abort") {
  Rng rng(10);
  PolicyNetwork net(small_arch(), 1);
  Minibatch mb = random_minibatch(net, rng, 4);
  mb.returns(0) = std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad;
  CHECK_THROWS_AS(ppo_loss(net, mb, PpoConfig{}, grad), RuntimeAbort);
}

TEST_CASE("config validation") {
  PpoConfig c;
  CHECK_NOTHROW(c.validate());
  c.gamma = 1.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = PpoConfig{};
  c.lambda = -0.1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = PpoConfig{};
  c.clip = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(to_json(ppo_config_from_json(to_json(PpoConfig{}))) == to_json(PpoConfig{}));
}

namespace {

TrajectoryBatch bandit_batch(const PolicyNetwork& net, int n, double adv_arm0) {
  TrajectoryBatch b;
  for (int i = 0; i < n; ++i) {
    const int arm = i % 2;
    b.states.push_back({1.0});
    b.actions.push_back({arm});
    b.log_probs.push_back(0.0);
    b.values.push_back(net.forward({1.0}).value);
    b.rewards.push_back(0.0);
    b.dones.push_back(1);
    b.advantages.push_back(arm == 0 ? adv_arm0 : -adv_arm0);
    b.returns.push_back(0.0);
  }
  return b;
}

Architecture bandit_arch(bool shared) {
  Architecture a;
  a.input = 1;
  a.hidden = {4};
  a.heads = 1;
  a.head_size = 2;
  a.shared_trunk = shared;
  return a;
}

}  // namespace

TEST_CASE("learning rate zero leaves parameters unchanged") {
  PolicyNetwork net(bandit_arch(true), 3);
  const Eigen::VectorXd before = net.params();
  PpoConfig cfg;
  cfg.learning_rate = 0.0;
  Adam adam(net.size());
  Rng rng(1);
  update(net, adam, bandit_batch(net, 30, 1.0), cfg, rng);
  CHECK(net.params() == before);
}

TEST_CASE("zero advantages leave a split-trunk policy unchanged") {
  PolicyNetwork net(bandit_arch(false), 4);
  const auto before = net.forward({1.0});
  PpoConfig cfg;
  cfg.entropy_coef = 0.0;
  cfg.normalize_advantages = false;
  Adam adam(net.size());
  Rng rng(1);
  TrajectoryBatch b = bandit_batch(net, 30, 0.0);
  for (double& r : b.returns) r = 3.0;
  update(net, adam, b, cfg, rng);
  const auto after = net.forward({1.0});
  CHECK((after.probs[0] - before.probs[0]).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(after.value != before.value);
}

TEST_CASE("a positive advantage raises the probability of its arm") {
  for (bool shared : {true, false}) {
    PolicyNetwork net(bandit_arch(shared), 5);
    const double before = net.forward({1.0}).probs[0](0);
    PpoConfig cfg;
    cfg.epochs = 1;
    Adam adam(net.size());
    Rng rng(2);
    update(net, adam, bandit_batch(net, 30, 1.0), cfg, rng);
    CHECK(net.forward({1.0}).probs[0](0) > before);
  }
  // End to end through the trainer.
  Architecture a = bandit_arch(true);
  TrainerConfig c;
  c.ppo.horizon = 1;
  c.ppo.train_batch = 40;
  c.ppo.minibatch = 10;
  c.seed = 3;
  Trainer t(a, c, [] { return std::make_unique<Bandit>(); });
  const double p0 = t.policy().forward({1.0}).probs[0](0);
  t.train(400);
  CHECK(t.policy().forward({1.0}).probs[0](0) > std::max(0.75, p0));
}

TEST_CASE("rollout collects whole episodes deterministically") {
  PolicyNetwork net(chain_arch(), 7);
  PpoConfig cfg;
  cfg.horizon = 45;
  EnvFactory f = [] { return std::make_unique<Chain>(); };
  const Rollout a = rollout(f, net, cfg, 1, 0, 1, 1);
  CHECK(a.batch.size() == 6);
  CHECK(a.batch.dones.back() == 1);
  const Rollout b = rollout(f, net, cfg, 1, 0, 1, 1);
  CHECK(a.batch.rewards == b.batch.rewards);
  CHECK(a.batch.actions == b.batch.actions);
  CHECK(a.batch.advantages == b.batch.advantages);

  const Rollout many = rollout(f, net, cfg, 1, 0, 8, 1);
  const Rollout threaded = rollout(f, net, cfg, 1, 0, 8, 3);
  CHECK(many.batch.rewards == threaded.batch.rewards);
  CHECK(many.batch.actions == threaded.batch.actions);
  CHECK(many.episode_rewards == threaded.episode_rewards);

  cfg.train_batch = 20;
  CHECK(rollout(f, net, cfg, 1, 0, 8, 1).batch.size() == 20);
}

TEST_CASE("horizon caps episode length and truncation bootstraps") {
  PolicyNetwork net(chain_arch(), 8);
  Chain env;
  Rng rng(1);
  const Episode ep = run_episode(env, net, 3, rng, 4);
  CHECK(ep.steps.size() == 4);
  CHECK(ep.steps.dones.back() == 1);
  REQUIRE(ep.bootstraps.size() == 1);
  CHECK(ep.bootstraps[0] != 0.0);
}

namespace {

// Two runs of three steps per episode; reports the end of the first run.
class TwoRuns : public Environment {
 public:
  std::vector<double> reset(std::uint64_t) override {
    t_ = 0;
    return {0.0, 0.0};
  }
  StepResult step(const std::vector<int>& a) override {
    StepResult r;
    ++t_;
    r.reward = static_cast<double>(a[0]);
    r.observation = {static_cast<double>(t_ % 3), 1.0};
    if (t_ == 3) r.run_end = std::vector<double>{9.0, 9.0};
    r.done = t_ == 6;
    return r;
  }
  int observation_size() const override { return 2; }
  int num_heads() const override { return 2; }
  int head_size() const override { return 5; }

 private:
  int t_ = 0;
};

}  // namespace

TEST_CASE("a run end inside an episode starts a new segment") {
  PolicyNetwork net(chain_arch(), 9);
  TwoRuns env;
  Rng rng(2);
  const Episode ep = run_episode(env, net, 1, rng, 45);
  REQUIRE(ep.steps.size() == 6);
  CHECK(ep.steps.dones == std::vector<char>{0, 0, 1, 0, 0, 1});
  REQUIRE(ep.bootstraps.size() == 2);
  CHECK(ep.bootstraps[0] == net.forward({9.0, 9.0}).value);
  CHECK(ep.bootstraps[1] == 0.0);
}

TEST_CASE("single-worker training is reproducible and checkpoints resume exactly") {
  auto factory = [] { return std::make_unique<Chain>(); };
  auto curve = [&](std::int64_t episodes) {
    Trainer t(chain_arch(), chain_config(), factory);
    std::vector<double> rewards;
    t.train(episodes, [&](const TrainLogRow& r) { rewards.push_back(r.episode_reward); });
    return std::make_pair(rewards, t.policy().params());
  };
  const auto a = curve(60);
  const auto b = curve(60);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);

  Trainer first(chain_arch(), chain_config(), factory);
  first.train(30);
  const nlohmann::json ck = nlohmann::json::parse(first.checkpoint({{"note", "x"}}).dump());
  Trainer resumed(chain_arch(), chain_config(), factory);
  resumed.restore(ck);
  CHECK(resumed.episode() == first.episode());
  CHECK(resumed.updates() == first.updates());
  std::vector<std::int64_t> indices;
  resumed.train(60, [&](const TrainLogRow& r) { indices.push_back(r.episode); });
  REQUIRE_FALSE(indices.empty());
  CHECK(indices.front() == first.episode() + 1);
  CHECK(resumed.policy().params() == a.second);

  const PolicyNetwork p = policy_from_checkpoint(ck);
  CHECK(p.params() == first.policy().params());
  Architecture other = chain_arch();
  other.hidden = {4};
  CHECK_THROWS_AS(policy_from_checkpoint(ck, &other), ConfigError);
  nlohmann::json bad = ck;
  bad["format"] = "something-else";
  CHECK_THROWS_AS(resumed.restore(bad), ConfigError);
}

TEST_CASE("greedy and sampled actions are valid indices") {
  PolicyNetwork net(chain_arch(), 10);
  Rng rng(3);
  const auto out = net.forward({0.5, 0.5});
  for (int i = 0; i < 200; ++i) {
    for (int a : sample_action(out, rng)) {
      REQUIRE(a >= 0);
      REQUIRE(a < 5);
    }
  }
  const auto g = greedy_action(out);
  for (std::size_t h = 0; h < g.size(); ++h) {
    Eigen::Index best;
    out.probs[h].maxCoeff(&best);
    CHECK(g[h] == best);
  }
}
