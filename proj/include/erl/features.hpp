#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "erl/segment.hpp"

namespace erl {

/// Maps a (state, action) pair to the reward network's input vector.
class FeatureEncoder {
 public:
  virtual ~FeatureEncoder() = default;
  virtual std::size_t dim() const = 0;
  virtual void encode(int state, int action, std::span<double> out) const = 0;

  std::vector<double> encode(int state, int action) const;
  /// Row-major steps x dim block for a whole segment.
  std::vector<double> encode(const Segment& segment) const;
};

/// One-hot state followed by one-hot action.
class OneHotFeatures final : public FeatureEncoder {
 public:
  OneHotFeatures(int num_states, int num_actions);
  using FeatureEncoder::encode;
  std::size_t dim() const override;
  void encode(int state, int action, std::span<double> out) const override;

 private:
  int num_states_;
  int num_actions_;
};

/// Fixed per-state feature rows; the action is ignored.
class TableFeatures final : public FeatureEncoder {
 public:
  TableFeatures(std::vector<std::vector<double>> rows);
  using FeatureEncoder::encode;
  std::size_t dim() const override;
  void encode(int state, int action, std::span<double> out) const override;
  std::size_t num_states() const { return rows_.size(); }

 private:
  std::vector<std::vector<double>> rows_;
};

}  // namespace erl
