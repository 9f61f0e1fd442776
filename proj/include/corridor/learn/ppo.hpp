#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "corridor/core/rng.hpp"
#include "corridor/learn/policy.hpp"

namespace corridor::learn {

struct PpoConfig {
  double gamma = 0.99;
  double lambda = 0.97;
  double clip = 0.2;
  double learning_rate = 5e-4;
  int horizon = 45;
  int train_batch = 300;
  int minibatch = 15;
  int epochs = 10;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  bool normalize_advantages = true;
  double max_grad_norm = 0.5;  // 0 disables clipping
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double reward_scale = 1.0;  // applied to env rewards before GAE

  void validate() const;
};

nlohmann::json to_json(const PpoConfig& c);
PpoConfig ppo_config_from_json(const nlohmann::json& j);

struct TrajectoryBatch {
  std::vector<std::vector<double>> states;
  std::vector<std::vector<int>> actions;
  std::vector<double> log_probs;  // joint, under the sampling policy
  std::vector<double> values;
  std::vector<double> rewards;
  std::vector<char> dones;  // segment ends: episode end or the end of a run inside it
  std::vector<double> advantages;
  std::vector<double> returns;

  std::size_t size() const { return states.size(); }
  void check() const;
  void append(const TrajectoryBatch& other);
  void truncate(std::size_t n);
};

std::vector<double> discounted_return(const std::vector<double>& rewards, double gamma);

// values carries one trailing bootstrap entry per trajectory (0 at terminal).
std::vector<double> gae(const std::vector<double>& rewards, const std::vector<double>& values, double gamma,
                        double lambda);

// g(eps, A) from the clipped objective.
double clip_bound(double eps, double advantage);
// min(ratio * A, g(eps, A)).
double clipped_term(double ratio, double advantage, double eps);

struct LossStats {
  double total = 0.0;
  double surrogate = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

struct Minibatch {
  Eigen::MatrixXd states;  // input x B
  std::vector<std::vector<int>> actions;
  Eigen::VectorXd old_log_probs;
  Eigen::VectorXd advantages;
  Eigen::VectorXd returns;
};

Minibatch make_minibatch(const TrajectoryBatch& batch, const std::vector<std::size_t>& rows);

// Joint log-probability of each column's action.
Eigen::VectorXd log_probs(const PolicyNetwork& net, const Eigen::MatrixXd& states,
                          const std::vector<std::vector<int>>& actions);

// Loss and exact gradient. Throws RuntimeAbort when the loss is not finite.
LossStats ppo_loss(const PolicyNetwork& net, const Minibatch& mb, const PpoConfig& cfg, Eigen::VectorXd& grad);

class Adam {
 public:
  Adam() = default;
  explicit Adam(Eigen::Index n) : m_(Eigen::VectorXd::Zero(n)), v_(Eigen::VectorXd::Zero(n)) {}
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, const PpoConfig& cfg);

  nlohmann::json to_json() const;
  static Adam from_json(const nlohmann::json& j);
  std::int64_t steps() const { return t_; }

 private:
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  std::int64_t t_ = 0;
};

// Computes advantages and returns in place, one trajectory at a time.
// bootstrap[i] is the value after the last step of trajectory i.
void compute_advantages(TrajectoryBatch& batch, const std::vector<double>& bootstrap, const PpoConfig& cfg);

struct UpdateStats {
  LossStats mean;
  int minibatches = 0;
};

// K epochs of shuffled minibatch Adam steps against a theta_k snapshot.
UpdateStats update(PolicyNetwork& net, Adam& adam, const TrajectoryBatch& batch, const PpoConfig& cfg, Rng& rng);

}  // namespace corridor::learn
