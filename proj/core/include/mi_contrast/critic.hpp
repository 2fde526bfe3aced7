#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>

namespace mic {

struct CriticConfig {
  int input_dim = 40;    // 2d: x and y concatenated
  int hidden_dim = 512;
  double weight_init_scale = 1.0;
  // When set, forward outputs clamp to (lo, hi); typically
  // (-alpha/gamma, 1/beta), the range the optimal critic lives in.
  std::optional<std::pair<double, double>> clip_output;

  void validate() const;  // input_dim >= 2, hidden_dim >= 1
};

// Three affine layers with ReLU between, scoring a concatenated (x, y)
// pair. Parameters live in one flat vector; the layer matrices are maps
// into it, which keeps the optimizer and checkpointing generic.
class Critic {
 public:
  Critic(CriticConfig config, uint64_t seed);

  const CriticConfig& config() const { return config_; }
  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }
  Eigen::Index parameter_count() const { return params_.size(); }

  // Scores a batch; rows of `inputs` are concatenated (x, y) pairs.
  Eigen::VectorXd forward(const Eigen::MatrixXd& inputs) const;
  double forward_one(std::span<const double> x, std::span<const double> y) const;

  struct Cache {
    Eigen::MatrixXd inputs;  // B x in
    Eigen::MatrixXd z1, h1;  // B x H
    Eigen::MatrixXd z2, h2;  // B x H
    Eigen::VectorXd raw;     // pre-clip scores
  };
  Eigen::VectorXd forward(const Eigen::MatrixXd& inputs, Cache& cache) const;

  // Gradient of sum_i d_scores[i] * score_i with respect to the flat
  // parameter vector. Scores clipped at the output bounds propagate zero.
  Eigen::VectorXd backward(const Cache& cache,
                           const Eigen::VectorXd& d_scores) const;

 private:
  struct Views;
  Views views() const;

  CriticConfig config_;
  Eigen::VectorXd params_;
};

struct OptimizerConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

// Standard Adam with bias correction, minimizing: step() moves parameters
// against the supplied gradient. Trainers maximizing an objective pass
// the negated objective gradient.
class AdamOptimizer {
 public:
  AdamOptimizer(Eigen::Index parameter_count, OptimizerConfig config);

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grads);

  long step_count() const { return step_count_; }
  const OptimizerConfig& config() const { return config_; }
  const Eigen::VectorXd& first_moment() const { return m_; }
  const Eigen::VectorXd& second_moment() const { return v_; }
  void restore(Eigen::VectorXd m, Eigen::VectorXd v, long step_count);

 private:
  OptimizerConfig config_;
  Eigen::VectorXd m_, v_;
  long step_count_ = 0;
};

// Versioned JSON checkpoint of parameters, optimizer moments and step
// counter; loading restores bit-identical forward outputs.
void save_checkpoint(const std::filesystem::path& path, const Critic& critic,
                     const AdamOptimizer& optimizer);
std::pair<Critic, AdamOptimizer> load_checkpoint(
    const std::filesystem::path& path);

}  // namespace mic
