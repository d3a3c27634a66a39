#pragma once

#include <optional>
#include <string>
#include <vector>

namespace erl {

struct Step {
  int state = 0;
  int action = 0;
};

/// A window of consecutive (state, action) pairs; the unit a teacher rates.
struct Segment {
  std::vector<Step> steps;
  // One rendering per step, plus an optional trailing rendering of the state
  // reached by the final action.
  std::vector<std::string> observations;
  bool trailing_observation = false;
  bool image_observations = false;  // observations hold encoded image bytes
  std::vector<std::string> action_names;
  std::optional<double> ground_truth_return;
  std::vector<double> step_rewards;  // per-step ground truth, when known
  std::string task_description;
  int episode_id = -1;
  int start_index = 0;

  std::size_t length() const { return steps.size(); }
};

}  // namespace erl
