#include "erl/replay_buffer.hpp"

#include <stdexcept>
#include <string>

namespace erl {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be >= 1");
}

void ReplayBuffer::add(const Transition& t) {
  if (episodes_.empty() || episodes_.back().id != t.episode_id) {
    for (const Episode& e : episodes_)
      if (e.id == t.episode_id)
        throw std::invalid_argument("episode " + std::to_string(t.episode_id) +
                                    " was already closed");
    episodes_.push_back(Episode{t.episode_id, evicted_ + data_.size(), 0});
  }
  data_.push_back(t);
  ++episodes_.back().length;
  evict();
}

void ReplayBuffer::evict() {
  while (data_.size() > capacity_ && episodes_.size() > 1) {
    const std::size_t n = episodes_.front().length;
    data_.erase(data_.begin(), data_.begin() + static_cast<std::ptrdiff_t>(n));
    evicted_ += n;
    episodes_.pop_front();
  }
}

std::vector<ReplayBuffer::EpisodeSpan> ReplayBuffer::episodes() const {
  std::vector<EpisodeSpan> out;
  out.reserve(episodes_.size());
  for (const Episode& e : episodes_)
    out.push_back(EpisodeSpan{e.id, e.absolute_begin - evicted_, e.length});
  return out;
}

const Transition& ReplayBuffer::sample(std::mt19937_64& rng) const {
  if (data_.empty()) throw std::out_of_range("sample from an empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, data_.size() - 1);
  return data_[pick(rng)];
}

Segment make_segment(const ReplayBuffer& buffer, const GridNavEnv& env,
                     std::size_t begin, std::size_t len) {
  if (len == 0 || begin + len > buffer.size())
    throw std::out_of_range("segment window outside the buffer");
  Segment seg;
  seg.task_description = env.task().description;
  seg.episode_id = buffer[begin].episode_id;
  seg.start_index = buffer[begin].step_index;
  double gt = 0.0;
  for (std::size_t i = begin; i < begin + len; ++i) {
    const Transition& t = buffer[i];
    if (t.episode_id != seg.episode_id)
      throw std::invalid_argument("segment window crosses an episode boundary");
    seg.steps.push_back(Step{t.state, t.action});
    seg.action_names.emplace_back(action_name(t.action));
    seg.observations.push_back(env.render_text(t.state));
    seg.step_rewards.push_back(t.env_reward);
    gt += t.env_reward;
  }
  seg.observations.push_back(env.render_text(buffer[begin + len - 1].next_state));
  seg.trailing_observation = true;
  seg.ground_truth_return = gt;
  return seg;
}

Segment extract_segment(const ReplayBuffer& buffer, const GridNavEnv& env,
                        std::mt19937_64& rng, std::size_t segment_len) {
  if (segment_len == 0) throw std::invalid_argument("segment length must be >= 1");
  std::vector<ReplayBuffer::EpisodeSpan> eligible;
  for (const auto& e : buffer.episodes())
    if (e.length >= segment_len) eligible.push_back(e);
  if (eligible.empty())
    throw std::runtime_error("replay buffer has no episode with " +
                             std::to_string(segment_len) + " steps");
  std::uniform_int_distribution<std::size_t> pick_episode(0, eligible.size() - 1);
  const auto& ep = eligible[pick_episode(rng)];
  std::uniform_int_distribution<std::size_t> pick_start(0, ep.length - segment_len);
  return make_segment(buffer, env, ep.begin + pick_start(rng), segment_len);
}

}  // namespace erl
