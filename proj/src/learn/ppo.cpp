#include "corridor/learn/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "corridor/core/error.hpp"

namespace corridor::learn {

void PpoConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("ppo.gamma", "must lie in [0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("ppo.lambda", "must lie in [0, 1]");
  if (!(clip > 0.0)) throw ConfigError("ppo.clip", "must be > 0");
  if (!(learning_rate >= 0.0)) throw ConfigError("ppo.learning_rate", "must be >= 0");
  if (train_batch < 1 || minibatch < 1 || epochs < 0 || horizon < 1) {
    throw ConfigError("ppo", "batch sizes, horizon and epochs must be positive");
  }
}

nlohmann::json to_json(const PpoConfig& c) {
  return {{"gamma", c.gamma},
          {"lambda", c.lambda},
          {"clip", c.clip},
          {"learning_rate", c.learning_rate},
          {"horizon", c.horizon},
          {"train_batch", c.train_batch},
          {"minibatch", c.minibatch},
          {"epochs", c.epochs},
          {"value_coef", c.value_coef},
          {"entropy_coef", c.entropy_coef},
          {"normalize_advantages", c.normalize_advantages},
          {"max_grad_norm", c.max_grad_norm},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"reward_scale", c.reward_scale}};
}

PpoConfig ppo_config_from_json(const nlohmann::json& j) {
  PpoConfig c;
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  try {
    read("gamma", c.gamma);
    read("lambda", c.lambda);
    read("clip", c.clip);
    read("learning_rate", c.learning_rate);
    read("horizon", c.horizon);
    read("train_batch", c.train_batch);
    read("minibatch", c.minibatch);
    read("epochs", c.epochs);
    read("value_coef", c.value_coef);
    read("entropy_coef", c.entropy_coef);
    read("normalize_advantages", c.normalize_advantages);
    read("max_grad_norm", c.max_grad_norm);
    read("adam_beta1", c.adam_beta1);
    read("adam_beta2", c.adam_beta2);
    read("adam_epsilon", c.adam_epsilon);
    read("reward_scale", c.reward_scale);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("ppo", e.what());
  }
  c.validate();
  return c;
}

void TrajectoryBatch::check() const {
  const std::size_t n = states.size();
  if (actions.size() != n || log_probs.size() != n || values.size() != n || rewards.size() != n ||
      dones.size() != n) {
    throw RuntimeAbort("trajectory batch fields have unequal lengths");
  }
  if ((!advantages.empty() && advantages.size() != n) || (!returns.empty() && returns.size() != n)) {
    throw RuntimeAbort("trajectory batch advantages/returns length mismatch");
  }
}

void TrajectoryBatch::append(const TrajectoryBatch& o) {
  states.insert(states.end(), o.states.begin(), o.states.end());
  actions.insert(actions.end(), o.actions.begin(), o.actions.end());
  log_probs.insert(log_probs.end(), o.log_probs.begin(), o.log_probs.end());
  values.insert(values.end(), o.values.begin(), o.values.end());
  rewards.insert(rewards.end(), o.rewards.begin(), o.rewards.end());
  dones.insert(dones.end(), o.dones.begin(), o.dones.end());
  advantages.insert(advantages.end(), o.advantages.begin(), o.advantages.end());
  returns.insert(returns.end(), o.returns.begin(), o.returns.end());
}

void TrajectoryBatch::truncate(std::size_t n) {
  if (n >= size()) return;
  states.resize(n);
  actions.resize(n);
  log_probs.resize(n);
  values.resize(n);
  rewards.resize(n);
  dones.resize(n);
  if (!advantages.empty()) advantages.resize(n);
  if (!returns.empty()) returns.resize(n);
}

std::vector<double> discounted_return(const std::vector<double>& rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double next = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    next = rewards[t] + gamma * next;
    g[t] = next;
  }
  return g;
}

std::vector<double> gae(const std::vector<double>& rewards, const std::vector<double>& values, double gamma,
                        double lambda) {
  if (values.size() != rewards.size() + 1) {
    throw RuntimeAbort("gae: values must have one bootstrap entry beyond the rewards");
  }
  std::vector<double> adv(rewards.size());
  double next = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    const double delta = rewards[t] + gamma * values[t + 1] - values[t];
    next = delta + gamma * lambda * next;
    adv[t] = next;
  }
  return adv;
}

double clip_bound(double eps, double advantage) {
  return advantage >= 0.0 ? (1.0 + eps) * advantage : (1.0 - eps) * advantage;
}

double clipped_term(double ratio, double advantage, double eps) {
  return std::min(ratio * advantage, clip_bound(eps, advantage));
}

Minibatch make_minibatch(const TrajectoryBatch& batch, const std::vector<std::size_t>& rows) {
  Minibatch mb;
  const auto b = static_cast<Eigen::Index>(rows.size());
  const auto dim = static_cast<Eigen::Index>(batch.states.at(rows.at(0)).size());
  mb.states.resize(dim, b);
  mb.old_log_probs.resize(b);
  mb.advantages.resize(b);
  mb.returns.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    const std::size_t r = rows[i];
    mb.states.col(i) = Eigen::Map<const Eigen::VectorXd>(batch.states[r].data(), dim);
    mb.actions.push_back(batch.actions[r]);
    mb.old_log_probs(i) = batch.log_probs[r];
    mb.advantages(i) = batch.advantages.at(r);
    mb.returns(i) = batch.returns.at(r);
  }
  return mb;
}

Eigen::VectorXd log_probs(const PolicyNetwork& net, const Eigen::MatrixXd& states,
                          const std::vector<std::vector<int>>& actions) {
  const ForwardCache c = net.forward_batch(states);
  Eigen::VectorXd lp = Eigen::VectorXd::Zero(states.cols());
  for (std::size_t k = 0; k < c.logits.size(); ++k) {
    const Eigen::MatrixXd& z = c.logits[k];
    for (Eigen::Index i = 0; i < z.cols(); ++i) {
      const double m = z.col(i).maxCoeff();
      const double lse = m + std::log((z.col(i).array() - m).exp().sum());
      lp(i) += z(actions[i][k], i) - lse;
    }
  }
  return lp;
}

LossStats ppo_loss(const PolicyNetwork& net, const Minibatch& mb, const PpoConfig& cfg, Eigen::VectorXd& grad) {
  const ForwardCache c = net.forward_batch(mb.states);
  const Eigen::Index b = mb.states.cols();
  const double inv_b = 1.0 / static_cast<double>(b);
  const std::size_t heads = c.logits.size();

  std::vector<Eigen::MatrixXd> probs(heads), logp(heads);
  Eigen::VectorXd joint = Eigen::VectorXd::Zero(b);
  for (std::size_t k = 0; k < heads; ++k) {
    const Eigen::MatrixXd& z = c.logits[k];
    const Eigen::RowVectorXd m = z.colwise().maxCoeff();
    Eigen::MatrixXd shifted = z.rowwise() - m;
    const Eigen::RowVectorXd lse = shifted.array().exp().colwise().sum().log();
    logp[k] = shifted.rowwise() - lse;
    probs[k] = logp[k].array().exp();
    for (Eigen::Index i = 0; i < b; ++i) joint(i) += logp[k](mb.actions[i][k], i);
  }

  LossStats s;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(b);  // d(-surrogate)/d(joint log-prob)
  for (Eigen::Index i = 0; i < b; ++i) {
    const double log_ratio = joint(i) - mb.old_log_probs(i);
    const double ratio = std::exp(log_ratio);
    const double a = mb.advantages(i);
    const double unclipped = ratio * a;
    const double bound = clip_bound(cfg.clip, a);
    s.surrogate += std::min(unclipped, bound) * inv_b;
    if (unclipped <= bound) {
      coef(i) = -a * ratio * inv_b;
    } else {
      s.clip_fraction += inv_b;
    }
    s.approx_kl += ((ratio - 1.0) - log_ratio) * inv_b;
  }

  std::vector<Eigen::MatrixXd> dlogits(heads);
  for (std::size_t k = 0; k < heads; ++k) {
    const Eigen::RowVectorXd h = -(probs[k].array() * logp[k].array()).colwise().sum();
    s.entropy += h.sum() * inv_b;
    // d(-c_e * H)/dz = c_e * p * (log p + H)
    Eigen::MatrixXd d = (logp[k].rowwise() + h).array() * probs[k].array() * (cfg.entropy_coef * inv_b);
    for (Eigen::Index i = 0; i < b; ++i) {
      d.col(i) -= coef(i) * probs[k].col(i);
      d(mb.actions[i][k], i) += coef(i);
    }
    dlogits[k] = std::move(d);
  }

  const Eigen::RowVectorXd err = c.values - mb.returns.transpose();
  s.value_loss = err.squaredNorm() * inv_b;
  const Eigen::RowVectorXd dvalues = err * (2.0 * cfg.value_coef * inv_b);

  s.total = -s.surrogate + cfg.value_coef * s.value_loss - cfg.entropy_coef * s.entropy;
  if (!std::isfinite(s.total)) {
    std::ostringstream msg;
    msg << "non-finite PPO loss: surrogate=" << s.surrogate << " value_loss=" << s.value_loss
        << " entropy=" << s.entropy << " max|param|=" << net.params().cwiseAbs().maxCoeff();
    throw RuntimeAbort(msg.str());
  }
  net.backward(c, dlogits, dvalues, grad);
  if (!grad.allFinite()) throw RuntimeAbort("non-finite PPO gradient");
  return s;
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, const PpoConfig& cfg) {
  if (m_.size() != params.size()) {
    m_ = Eigen::VectorXd::Zero(params.size());
    v_ = Eigen::VectorXd::Zero(params.size());
  }
  ++t_;
  m_ = cfg.adam_beta1 * m_ + (1.0 - cfg.adam_beta1) * grad;
  v_ = cfg.adam_beta2 * v_ + (1.0 - cfg.adam_beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t_));
  if (cfg.learning_rate == 0.0) return;
  params.array() -= cfg.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg.adam_epsilon);
}

nlohmann::json Adam::to_json() const {
  return {{"t", t_},
          {"m", std::vector<double>(m_.data(), m_.data() + m_.size())},
          {"v", std::vector<double>(v_.data(), v_.data() + v_.size())}};
}

Adam Adam::from_json(const nlohmann::json& j) {
  Adam a;
  a.t_ = j.at("t").get<std::int64_t>();
  const auto m = j.at("m").get<std::vector<double>>();
  const auto v = j.at("v").get<std::vector<double>>();
  a.m_ = Eigen::Map<const Eigen::VectorXd>(m.data(), static_cast<Eigen::Index>(m.size()));
  a.v_ = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  return a;
}

void compute_advantages(TrajectoryBatch& batch, const std::vector<double>& bootstrap, const PpoConfig& cfg) {
  batch.check();
  batch.advantages.assign(batch.size(), 0.0);
  batch.returns.assign(batch.size(), 0.0);
  std::size_t begin = 0, traj = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!batch.dones[i] && i + 1 != batch.size()) continue;
    if (traj >= bootstrap.size()) throw RuntimeAbort("missing bootstrap value for trajectory");
    std::vector<double> r(batch.rewards.begin() + begin, batch.rewards.begin() + i + 1);
    for (double& x : r) x *= cfg.reward_scale;
    std::vector<double> v(batch.values.begin() + begin, batch.values.begin() + i + 1);
    v.push_back(bootstrap[traj]);
    const auto a = gae(r, v, cfg.gamma, cfg.lambda);
    for (std::size_t t = 0; t < a.size(); ++t) {
      batch.advantages[begin + t] = a[t];
      batch.returns[begin + t] = a[t] + v[t];
    }
    begin = i + 1;
    ++traj;
  }
}

UpdateStats update(PolicyNetwork& net, Adam& adam, const TrajectoryBatch& input, const PpoConfig& cfg, Rng& rng) {
  cfg.validate();
  TrajectoryBatch batch = input;
  batch.check();
  if (batch.size() == 0) throw RuntimeAbort("empty trajectory batch");
  if (batch.advantages.size() != batch.size()) throw RuntimeAbort("advantages not computed");

  // theta_k: the sampling policy's log-probabilities are fixed before the first epoch.
  {
    const PolicyNetwork snapshot = net;
    std::vector<std::size_t> all(batch.size());
    std::iota(all.begin(), all.end(), 0);
    const Minibatch full = make_minibatch(batch, all);
    const Eigen::VectorXd lp = log_probs(snapshot, full.states, full.actions);
    for (std::size_t i = 0; i < batch.size(); ++i) batch.log_probs[i] = lp(static_cast<Eigen::Index>(i));
  }

  if (cfg.normalize_advantages && batch.size() > 1) {
    const double n = static_cast<double>(batch.size());
    const double mean = std::accumulate(batch.advantages.begin(), batch.advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : batch.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / n);
    for (double& a : batch.advantages) a = (a - mean) / (sd + 1e-8);
  }

  UpdateStats stats;
  std::vector<std::size_t> order(batch.size());
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(i)))]);
    }
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.minibatch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.minibatch));
      const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
      const LossStats s = ppo_loss(net, make_minibatch(batch, rows), cfg, grad);
      if (cfg.max_grad_norm > 0.0) {
        const double norm = grad.norm();
        if (norm > cfg.max_grad_norm) grad *= cfg.max_grad_norm / norm;
      }
      adam.step(net.params(), grad, cfg);
      stats.mean.total += s.total;
      stats.mean.surrogate += s.surrogate;
      stats.mean.value_loss += s.value_loss;
      stats.mean.entropy += s.entropy;
      stats.mean.approx_kl += s.approx_kl;
      stats.mean.clip_fraction += s.clip_fraction;
      ++stats.minibatches;
    }
  }
  if (stats.minibatches > 0) {
    const double n = stats.minibatches;
    stats.mean.total /= n;
    stats.mean.surrogate /= n;
    stats.mean.value_loss /= n;
    stats.mean.entropy /= n;
    stats.mean.approx_kl /= n;
    stats.mean.clip_fraction /= n;
  }
  return stats;
}

}  // namespace corridor::learn
