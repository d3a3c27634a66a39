#pragma once

// Shared datasets for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <random>
#include <vector>

#include "erl/features.hpp"
#include "erl/reward_model.hpp"
#include "erl/reward_net.hpp"

namespace erl::testing {

/// Items with Gaussian feature rows and a linear ground-truth score. Labels
/// follow the score ranking: the top counts.back() items get the highest
/// class, and so on down.
struct LinearRatingFixture {
  std::shared_ptr<TableFeatures> encoder;
  RatingDataset dataset{3};
  std::vector<double> ground_truth;
  std::vector<double> weights;

  double score(std::span<const double> row) const {
    double z = 0.0;
    for (std::size_t k = 0; k < row.size(); ++k) z += weights[k] * row[k];
    return z;
  }
};

inline LinearRatingFixture make_linear_fixture(const std::vector<int>& counts, std::size_t dim,
                                               double noise, std::uint64_t seed) {
  const int n = static_cast<int>(counts.size());
  const int total = std::accumulate(counts.begin(), counts.end(), 0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  LinearRatingFixture f;
  f.dataset = RatingDataset(n);
  f.weights.resize(dim);
  for (auto& w : f.weights) w = g(rng);
  std::vector<std::vector<double>> rows(total, std::vector<double>(dim));
  for (int i = 0; i < total; ++i) {
    for (auto& v : rows[i]) v = g(rng);
    f.ground_truth.push_back(f.score(rows[i]));
  }
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return f.ground_truth[a] > f.ground_truth[b]; });
  std::vector<int> label(total);
  int rank = 0;
  for (int c = n - 1; c >= 0; --c)
    for (int k = 0; k < counts[c]; ++k) label[order[rank++]] = c;
  f.encoder = std::make_shared<TableFeatures>(rows);
  std::uniform_real_distribution<double> u;
  std::uniform_int_distribution<int> any(0, n - 1);
  for (int i = 0; i < total; ++i) {
    RatingSample s;
    s.segment.steps.push_back({i, 0});
    s.label = u(rng) < noise ? any(rng) : label[i];
    s.clean_label = label[i];
    f.dataset.add(std::move(s));
  }
  return f;
}

inline std::vector<double> predictions(const RewardEnsemble& ensemble,
                                       const FeatureEncoder& encoder, std::size_t items) {
  std::vector<double> out;
  for (std::size_t i = 0; i < items; ++i)
    out.push_back(ensemble.predict(encoder.encode(static_cast<int>(i), 0)));
  return out;
}

/// |a - b| <= rel * max(|a|, |b|), or both tiny.
inline bool close_relative(double a, double b, double rel, double abs_floor = 1e-8) {
  const double diff = std::abs(a - b);
  return diff <= abs_floor || diff <= rel * std::max(std::abs(a), std::abs(b));
}

/// Gives the zero-initialized head random weights so gradients are generic.
inline void randomize_parameters(RewardNet& net, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& p : net.parameters()) p = u(rng);
}

}  // namespace erl::testing
