#pragma once

#include <cstddef>
#include <deque>
#include <random>
#include <vector>

#include "erl/gridworld.hpp"
#include "erl/segment.hpp"

namespace erl {

struct Transition {
  int state = 0;
  int action = 0;
  int next_state = 0;
  double env_reward = 0.0;
  double learned_reward = 0.0;  // rewritten by every relabel pass
  bool done = false;     // episode ended here (goal or step limit)
  bool timeout = false;  // ended by the step limit rather than the goal
  int episode_id = 0;
  int step_index = 0;
};

/// Transitions in arrival order. Eviction drops the oldest whole episode once
/// size exceeds capacity (the newest episode is never evicted).
class ReplayBuffer {
 public:
  struct EpisodeSpan {
    int episode_id;
    std::size_t begin;  // index into the buffer
    std::size_t length;
  };

  explicit ReplayBuffer(std::size_t capacity);

  /// Transitions of one episode must be added contiguously.
  void add(const Transition& t);

  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::size_t capacity() const { return capacity_; }
  Transition& operator[](std::size_t i) { return data_[i]; }
  const Transition& operator[](std::size_t i) const { return data_[i]; }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  std::vector<EpisodeSpan> episodes() const;
  std::size_t num_episodes() const { return episodes_.size(); }

  const Transition& sample(std::mt19937_64& rng) const;

 private:
  struct Episode {
    int id;
    std::size_t absolute_begin;
    std::size_t length;
  };
  void evict();

  std::size_t capacity_;
  std::deque<Transition> data_;
  std::deque<Episode> episodes_;
  std::size_t evicted_ = 0;
};

/// Uniform episode among those with at least segment_len steps, then a
/// uniform window inside it. Observations are text renderings of each step's
/// state plus the state reached by the last action.
Segment extract_segment(const ReplayBuffer& buffer, const GridNavEnv& env,
                        std::mt19937_64& rng, std::size_t segment_len = 1);

/// Builds a segment for buffer[begin, begin + len).
Segment make_segment(const ReplayBuffer& buffer, const GridNavEnv& env,
                     std::size_t begin, std::size_t len);

}  // namespace erl
