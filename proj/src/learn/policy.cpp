#include "corridor/learn/policy.hpp"

#include <cmath>

#include "corridor/core/error.hpp"
#include "corridor/core/rng.hpp"

namespace corridor::learn {

nlohmann::json to_json(const Architecture& a) {
  return {{"input", a.input},
          {"hidden", a.hidden},
          {"heads", a.heads},
          {"head_size", a.head_size},
          {"shared_trunk", a.shared_trunk}};
}

Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  try {
    a.input = j.at("input").get<int>();
    a.hidden = j.at("hidden").get<std::vector<int>>();
    a.heads = j.at("heads").get<int>();
    a.head_size = j.at("head_size").get<int>();
    a.shared_trunk = j.at("shared_trunk").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("architecture", e.what());
  }
  return a;
}

void PolicyNetwork::layout() {
  if (arch_.input < 1 || arch_.heads < 1 || arch_.head_size < 2) {
    throw ConfigError("architecture", "input, heads and head size must be positive");
  }
  Eigen::Index at = 0;
  auto dense = [&](int rows, int cols) {
    Layer l{at, at + static_cast<Eigen::Index>(rows) * cols, rows, cols};
    at = l.bias + rows;
    return l;
  };
  auto trunk = [&](std::vector<Layer>& layers) {
    int width = arch_.input;
    for (int h : arch_.hidden) {
      if (h < 1) throw ConfigError("architecture", "hidden widths must be positive");
      layers.push_back(dense(h, width));
      width = h;
    }
    return width;
  };
  const int top = trunk(policy_trunk_);
  for (int k = 0; k < arch_.heads; ++k) heads_.push_back(dense(arch_.head_size, top));
  const int value_top = arch_.shared_trunk ? top : trunk(value_trunk_);
  value_head_ = dense(1, value_top);
  params_ = Eigen::VectorXd::Zero(at);
}

PolicyNetwork::PolicyNetwork(const Architecture& arch) : arch_(arch) { layout(); }

PolicyNetwork::PolicyNetwork(const Architecture& arch, std::uint64_t seed) : arch_(arch) {
  layout();
  Rng rng(seed);
  auto orthogonal = [&](const Layer& l, double gain) {
    const int n = std::max(l.rows, l.cols);
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    // Sign fix makes the draw uniform over orthogonal matrices.
    Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
      if (r(j, j) < 0) q.col(j) = -q.col(j);
    }
    Eigen::Map<Eigen::MatrixXd>(params_.data() + l.weight, l.rows, l.cols) = gain * q.topLeftCorner(l.rows, l.cols);
  };
  for (const auto& l : policy_trunk_) orthogonal(l, std::sqrt(2.0));
  for (const auto& l : value_trunk_) orthogonal(l, std::sqrt(2.0));
  for (const auto& l : heads_) orthogonal(l, 0.01);
  orthogonal(value_head_, 1.0);
}

Eigen::Map<const Eigen::MatrixXd> PolicyNetwork::weight(const Layer& l) const {
  return {params_.data() + l.weight, l.rows, l.cols};
}

Eigen::Map<const Eigen::VectorXd> PolicyNetwork::bias(const Layer& l) const {
  return {params_.data() + l.bias, l.rows};
}

Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.rowwise() - logits.colwise().maxCoeff();
  p = p.array().exp();
  p.array().rowwise() /= p.colwise().sum().array();
  return p;
}

ForwardCache PolicyNetwork::forward_batch(const Eigen::MatrixXd& states) const {
  if (states.rows() != arch_.input) {
    throw ConfigError("policy", "state has " + std::to_string(states.rows()) + " entries, network expects " +
                                    std::to_string(arch_.input));
  }
  ForwardCache c;
  c.input = states;
  auto run = [&](const std::vector<Layer>& layers, std::vector<Eigen::MatrixXd>& out) {
    const Eigen::MatrixXd* x = &c.input;
    for (const auto& l : layers) {
      Eigen::MatrixXd z = weight(l) * *x;
      z.colwise() += bias(l);
      out.push_back(z.array().tanh().matrix());
      x = &out.back();
    }
    return x;
  };
  const Eigen::MatrixXd* top = run(policy_trunk_, c.policy_layers);
  for (const auto& h : heads_) {
    Eigen::MatrixXd z = weight(h) * *top;
    z.colwise() += bias(h);
    c.logits.push_back(std::move(z));
  }
  const Eigen::MatrixXd* vtop = arch_.shared_trunk ? top : run(value_trunk_, c.value_layers);
  c.values = (weight(value_head_) * *vtop).row(0).array() + params_[value_head_.bias];
  return c;
}

PolicyNetwork::Output PolicyNetwork::forward(const std::vector<double>& state) const {
  const Eigen::Map<const Eigen::VectorXd> x(state.data(), static_cast<Eigen::Index>(state.size()));
  const ForwardCache c = forward_batch(x);
  Output out;
  for (const auto& z : c.logits) out.probs.push_back(softmax_columns(z).col(0));
  out.value = c.values(0);
  return out;
}

void PolicyNetwork::backward(const ForwardCache& c, const std::vector<Eigen::MatrixXd>& dlogits,
                             const Eigen::RowVectorXd& dvalues, Eigen::VectorXd& grad) const {
  grad.setZero(params_.size());
  auto gw = [&](const Layer& l) { return Eigen::Map<Eigen::MatrixXd>(grad.data() + l.weight, l.rows, l.cols); };
  auto gb = [&](const Layer& l) { return Eigen::Map<Eigen::VectorXd>(grad.data() + l.bias, l.rows); };

  // Gradient w.r.t. the top activations of each trunk.
  auto back_trunk = [&](const std::vector<Layer>& layers, const std::vector<Eigen::MatrixXd>& acts,
                        Eigen::MatrixXd dtop) {
    for (std::size_t i = layers.size(); i-- > 0;) {
      const Layer& l = layers[i];
      dtop.array() *= 1.0 - acts[i].array().square();
      const Eigen::MatrixXd& below = i == 0 ? c.input : acts[i - 1];
      gw(l).noalias() += dtop * below.transpose();
      gb(l) += dtop.rowwise().sum();
      if (i > 0) dtop = weight(l).transpose() * dtop;
    }
  };

  const Eigen::MatrixXd& top = c.policy_layers.empty() ? c.input : c.policy_layers.back();
  Eigen::MatrixXd dtop = Eigen::MatrixXd::Zero(top.rows(), top.cols());
  for (std::size_t k = 0; k < heads_.size(); ++k) {
    gw(heads_[k]).noalias() += dlogits[k] * top.transpose();
    gb(heads_[k]) += dlogits[k].rowwise().sum();
    dtop.noalias() += weight(heads_[k]).transpose() * dlogits[k];
  }
  const Eigen::MatrixXd& vtop = arch_.shared_trunk ? top : (c.value_layers.empty() ? c.input : c.value_layers.back());
  gw(value_head_).noalias() += dvalues * vtop.transpose();
  grad[value_head_.bias] += dvalues.sum();
  const Eigen::MatrixXd dv = weight(value_head_).transpose() * dvalues;
  if (arch_.shared_trunk) {
    dtop += dv;
  } else if (!value_trunk_.empty()) {
    back_trunk(value_trunk_, c.value_layers, dv);
  }
  if (!policy_trunk_.empty()) back_trunk(policy_trunk_, c.policy_layers, dtop);
}

}  // namespace corridor::learn
