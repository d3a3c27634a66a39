#include "erl/reward_net.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace erl {

namespace {

struct Scratch {
  std::vector<double> h1, h2, d2, d1;
  void fit(std::size_t hidden) {
    if (h1.size() != hidden) {
      h1.assign(hidden, 0.0);
      h2.assign(hidden, 0.0);
      d2.assign(hidden, 0.0);
      d1.assign(hidden, 0.0);
    }
  }
};

Scratch& scratch(std::size_t hidden) {
  thread_local Scratch s;
  s.fit(hidden);
  return s;
}

}  // namespace

RewardNet::RewardNet(std::size_t input_dim, std::size_t hidden,
                     std::uint64_t seed)
    : input_dim_(input_dim),
      hidden_(hidden),
      params_(parameter_count(input_dim, hidden), 0.0) {
  if (input_dim == 0 || hidden == 0)
    throw std::invalid_argument("RewardNet: zero-sized layer");
  std::mt19937_64 rng(seed);
  auto fill = [&](std::size_t begin, std::size_t count, std::size_t fan_in) {
    const double limit = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (std::size_t k = 0; k < count; ++k) params_[begin + k] = u(rng);
  };
  fill(w1(), hidden * input_dim, input_dim);
  fill(b1(), hidden, input_dim);
  fill(w2(), hidden * hidden, hidden);
  fill(b2(), hidden, hidden);
}

std::size_t RewardNet::parameter_count(std::size_t d, std::size_t h) {
  return d * h + h + h * h + h + h + 1;
}

void RewardNet::check_input(std::span<const double> x) const {
  if (x.size() != input_dim_)
    throw std::invalid_argument("reward input dimension mismatch");
}

double RewardNet::forward(std::span<const double> x, std::span<double> h1,
                          std::span<double> h2) const {
  const double* p = params_.data();
  for (std::size_t i = 0; i < hidden_; ++i) h1[i] = p[b1() + i];
  // Column-wise accumulation skips zero inputs (one-hot features are sparse).
  for (std::size_t k = 0; k < input_dim_; ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    for (std::size_t i = 0; i < hidden_; ++i) h1[i] += p[w1() + i * input_dim_ + k] * xk;
  }
  for (std::size_t i = 0; i < hidden_; ++i) h1[i] = std::tanh(h1[i]);

  for (std::size_t i = 0; i < hidden_; ++i) {
    double a = p[b2() + i];
    const double* row = p + w2() + i * hidden_;
    for (std::size_t k = 0; k < hidden_; ++k) a += row[k] * h1[k];
    h2[i] = std::tanh(a);
  }
  double a3 = p[b3()];
  for (std::size_t k = 0; k < hidden_; ++k) a3 += p[w3() + k] * h2[k];
  return std::tanh(a3);
}

double RewardNet::evaluate(std::span<const double> x) const {
  check_input(x);
  Scratch& s = scratch(hidden_);
  return kOutputScale * forward(x, s.h1, s.h2);
}

double RewardNet::sum_rewards(std::span<const double> features) const {
  if (features.empty() || features.size() % input_dim_ != 0)
    throw std::invalid_argument("reward input dimension mismatch");
  double total = 0.0;
  for (std::size_t off = 0; off < features.size(); off += input_dim_)
    total += evaluate(features.subspan(off, input_dim_));
  return total;
}

double RewardNet::accumulate_gradient(std::span<const double> x, double upstream,
                                      std::span<double> grad) const {
  check_input(x);
  if (grad.size() != params_.size())
    throw std::invalid_argument("gradient size mismatch");
  Scratch& s = scratch(hidden_);
  const double t = forward(x, s.h1, s.h2);
  const double out = kOutputScale * t;
  if (upstream == 0.0) return out;

  const double* p = params_.data();
  double* g = grad.data();
  const double da3 = upstream * kOutputScale * (1.0 - t * t);
  g[b3()] += da3;
  for (std::size_t k = 0; k < hidden_; ++k) {
    g[w3() + k] += da3 * s.h2[k];
    s.d2[k] = da3 * p[w3() + k] * (1.0 - s.h2[k] * s.h2[k]);
  }
  std::fill(s.d1.begin(), s.d1.end(), 0.0);
  for (std::size_t i = 0; i < hidden_; ++i) {
    const double di = s.d2[i];
    g[b2() + i] += di;
    double* grow = g + w2() + i * hidden_;
    const double* prow = p + w2() + i * hidden_;
    for (std::size_t k = 0; k < hidden_; ++k) {
      grow[k] += di * s.h1[k];
      s.d1[k] += di * prow[k];
    }
  }
  for (std::size_t i = 0; i < hidden_; ++i) {
    const double di = s.d1[i] * (1.0 - s.h1[i] * s.h1[i]);
    g[b1() + i] += di;
    s.d1[i] = di;
  }
  for (std::size_t k = 0; k < input_dim_; ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    for (std::size_t i = 0; i < hidden_; ++i) g[w1() + i * input_dim_ + k] += s.d1[i] * xk;
  }
  return out;
}

double RewardNet::accumulate_sum_gradient(std::span<const double> features,
                                          double upstream,
                                          std::span<double> grad) const {
  if (features.empty() || features.size() % input_dim_ != 0)
    throw std::invalid_argument("reward input dimension mismatch");
  double total = 0.0;
  for (std::size_t off = 0; off < features.size(); off += input_dim_)
    total += accumulate_gradient(features.subspan(off, input_dim_), upstream, grad);
  return total;
}

Adam::Adam(std::size_t size, Options options)
    : options_(options), m_(size, 0.0), v_(size, 0.0) {
  if (!(options.learning_rate > 0.0))
    throw std::invalid_argument("learning rate must be positive");
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("Adam: size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = options_.beta1 * m_[i] + (1.0 - options_.beta1) * grad[i];
    v_[i] = options_.beta2 * v_[i] + (1.0 - options_.beta2) * grad[i] * grad[i];
    const double mhat = m_[i] / c1;
    const double vhat = v_[i] / c2;
    params[i] -= options_.learning_rate * mhat / (std::sqrt(vhat) + options_.epsilon);
  }
}

RewardEnsemble::RewardEnsemble(std::size_t members, std::size_t input_dim,
                               std::size_t hidden, std::uint64_t seed) {
  if (members == 0) throw std::invalid_argument("ensemble needs at least one member");
  std::seed_seq seq{seed, std::uint64_t{0x5eed}};
  std::vector<std::uint64_t> seeds(members);
  seq.generate(seeds.begin(), seeds.end());
  for (std::size_t m = 0; m < members; ++m)
    members_.emplace_back(input_dim, hidden, seeds[m]);
}

RewardEnsemble::RewardEnsemble(std::vector<RewardNet> members)
    : members_(std::move(members)) {
  if (members_.empty()) throw std::invalid_argument("ensemble needs at least one member");
  for (const auto& m : members_)
    if (m.input_dim() != members_.front().input_dim())
      throw std::invalid_argument("ensemble members disagree on input dimension");
}

std::size_t RewardEnsemble::input_dim() const {
  return members_.empty() ? 0 : members_.front().input_dim();
}

namespace {

// Summing in sorted order makes the mean independent of member order.
double order_free_mean(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double total = 0.0;
  for (double v : values) total += v;
  return total / static_cast<double>(values.size());
}

}  // namespace

double RewardEnsemble::predict(std::span<const double> features) const {
  std::vector<double> outs;
  outs.reserve(members_.size());
  for (const auto& m : members_) outs.push_back(m.evaluate(features));
  return order_free_mean(outs);
}

double RewardEnsemble::predict_return(std::span<const double> features) const {
  std::vector<double> outs;
  outs.reserve(members_.size());
  for (const auto& m : members_) outs.push_back(m.sum_rewards(features));
  return order_free_mean(outs);
}

double predict_reward(const RewardEnsemble& ensemble,
                      std::span<const double> state_action_feature) {
  return ensemble.predict(state_action_feature);
}

}  // namespace erl
