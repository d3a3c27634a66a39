#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace erl {

/// Two tanh hidden layers and a bounded scalar head:
///   r(x) = kOutputScale * tanh(w3 . tanh(W2 tanh(W1 x + b1) + b2) + b3)
/// Parameters live in one flat vector laid out as W1, b1, W2, b2, w3, b3.
class RewardNet {
 public:
  // Keeps outputs strictly inside (-1, 1) even when tanh rounds to +-1.
  static constexpr double kOutputScale = 1.0 - 1e-9;

  RewardNet() = default;
  /// Hidden layers get U(-1/sqrt(fan_in), 1/sqrt(fan_in)); the head is zero.
  RewardNet(std::size_t input_dim, std::size_t hidden, std::uint64_t seed);

  static std::size_t parameter_count(std::size_t input_dim, std::size_t hidden);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden() const { return hidden_; }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  double evaluate(std::span<const double> x) const;

  /// Sum of per-step rewards over a row-major (steps x input_dim) block.
  double sum_rewards(std::span<const double> features) const;

  /// Evaluates r(x) and adds upstream * dr/dparams into grad.
  double accumulate_gradient(std::span<const double> x, double upstream,
                             std::span<double> grad) const;

  /// Same for a sum over steps.
  double accumulate_sum_gradient(std::span<const double> features,
                                 double upstream, std::span<double> grad) const;

 private:
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return hidden_ * input_dim_; }
  std::size_t w2() const { return b1() + hidden_; }
  std::size_t b2() const { return w2() + hidden_ * hidden_; }
  std::size_t w3() const { return b2() + hidden_; }
  std::size_t b3() const { return w3() + hidden_; }

  void check_input(std::span<const double> x) const;
  double forward(std::span<const double> x, std::span<double> h1,
                 std::span<double> h2) const;

  std::size_t input_dim_ = 0;
  std::size_t hidden_ = 0;
  std::vector<double> params_;
};

/// First-order adaptive-moment optimizer state for one parameter vector.
class Adam {
 public:
  struct Options {
    double learning_rate = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
  };

  Adam() = default;
  Adam(std::size_t size, Options options);

  void step(std::span<double> params, std::span<const double> grad);
  std::uint64_t steps_taken() const { return t_; }

 private:
  Options options_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::uint64_t t_ = 0;
};

/// E independently initialized members; the reward is their mean.
class RewardEnsemble {
 public:
  RewardEnsemble() = default;
  RewardEnsemble(std::size_t members, std::size_t input_dim, std::size_t hidden,
                 std::uint64_t seed);
  explicit RewardEnsemble(std::vector<RewardNet> members);

  std::size_t size() const { return members_.size(); }
  std::size_t input_dim() const;
  RewardNet& member(std::size_t i) { return members_.at(i); }
  const RewardNet& member(std::size_t i) const { return members_.at(i); }
  std::vector<RewardNet>& members() { return members_; }
  const std::vector<RewardNet>& members() const { return members_; }

  double predict(std::span<const double> features) const;
  /// Ensemble-mean segment return.
  double predict_return(std::span<const double> features) const;

 private:
  std::vector<RewardNet> members_;
};

double predict_reward(const RewardEnsemble& ensemble,
                      std::span<const double> state_action_feature);

}  // namespace erl
