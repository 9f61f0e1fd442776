#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace corridor::learn {

struct Architecture {
  int input = 208;
  std::vector<int> hidden{64, 64, 64};
  int heads = 5;
  int head_size = 120;
  // Value head reads the policy trunk; otherwise it gets a trunk of its own.
  bool shared_trunk = true;

  bool operator==(const Architecture&) const = default;
};

nlohmann::json to_json(const Architecture& a);
Architecture architecture_from_json(const nlohmann::json& j);

// Activations kept for backprop over one batch (columns are samples).
struct ForwardCache {
  Eigen::MatrixXd input;
  std::vector<Eigen::MatrixXd> policy_layers;  // post-tanh
  std::vector<Eigen::MatrixXd> value_layers;   // empty when shared
  std::vector<Eigen::MatrixXd> logits;         // per head, head_size x batch
  Eigen::RowVectorXd values;
};

// Tanh MLP with factorized categorical heads and a scalar value head. All
// parameters live in one contiguous vector.
class PolicyNetwork {
 public:
  PolicyNetwork() = default;
  PolicyNetwork(const Architecture& arch, std::uint64_t seed);
  // All parameters zero.
  explicit PolicyNetwork(const Architecture& arch);

  const Architecture& architecture() const { return arch_; }
  Eigen::VectorXd& params() { return params_; }
  const Eigen::VectorXd& params() const { return params_; }
  Eigen::Index size() const { return params_.size(); }

  struct Output {
    std::vector<Eigen::VectorXd> probs;
    double value = 0.0;
  };
  Output forward(const std::vector<double>& state) const;

  ForwardCache forward_batch(const Eigen::MatrixXd& states) const;
  // d(loss)/d(params) given d(loss)/d(logits) per head and d(loss)/d(values).
  void backward(const ForwardCache& cache, const std::vector<Eigen::MatrixXd>& dlogits,
                const Eigen::RowVectorXd& dvalues, Eigen::VectorXd& grad) const;

  // Offsets of one dense layer inside params().
  struct Layer {
    Eigen::Index weight;
    Eigen::Index bias;
    int rows;
    int cols;
  };
  const std::vector<Layer>& policy_trunk() const { return policy_trunk_; }
  const std::vector<Layer>& value_trunk() const { return value_trunk_; }
  const std::vector<Layer>& heads() const { return heads_; }
  const Layer& value_head() const { return value_head_; }

 private:
  void layout();
  Eigen::Map<const Eigen::MatrixXd> weight(const Layer& l) const;
  Eigen::Map<const Eigen::VectorXd> bias(const Layer& l) const;

  Architecture arch_;
  Eigen::VectorXd params_;
  std::vector<Layer> policy_trunk_;
  std::vector<Layer> value_trunk_;
  std::vector<Layer> heads_;
  Layer value_head_{};
};

// Column-wise softmax with max subtraction.
Eigen::MatrixXd softmax_columns(const Eigen::MatrixXd& logits);

}  // namespace corridor::learn
