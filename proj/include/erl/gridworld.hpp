#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "erl/segment.hpp"

namespace erl {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

enum Action : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };
inline constexpr int kNumActions = 4;

std::string_view action_name(int action);

struct GridNavTask {
  int width = 8;
  int height = 8;
  Cell start{0, 0};
  Cell goal{7, 7};
  std::vector<Cell> walls;
  int max_episode_steps = 50;
  std::string description = "move the agent A onto the goal square G";

  /// Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

/// 8x8 board, start and goal in opposite corners, 10% walls drawn from seed
/// (redrawn until the goal is reachable).
GridNavTask make_default_task(std::uint64_t seed = 0);

std::vector<std::string> builtin_task_names();
GridNavTask builtin_task(const std::string& name);

/// Line-oriented task description:
///   width 8 / height 8 / start x y / goal x y / max_steps 50 /
///   wall x y (repeatable) / description free text
/// Blank lines and lines starting with '#' are ignored.
GridNavTask parse_task(std::string_view text);
GridNavTask load_task(const std::string& path);
std::string format_task(const GridNavTask& task);

struct StepResult {
  int next_state = 0;
  double env_reward = 0.0;
  bool done = false;
};

/// Deterministic grid navigation. States are cell indices y * width + x.
/// The dense ground-truth reward is -dist(next, goal) / dist_max with
/// shortest-path distances; it is only seen by synthetic teachers and
/// evaluation code.
class GridNavEnv {
 public:
  explicit GridNavEnv(GridNavTask task);

  const GridNavTask& task() const { return task_; }
  int num_states() const { return task_.width * task_.height; }
  int start_state() const { return state_of(task_.start); }
  int goal_state() const { return state_of(task_.goal); }
  int state_of(Cell c) const { return c.y * task_.width + c.x; }
  Cell cell_of(int state) const;
  bool is_wall(int state) const { return walls_.at(state); }
  bool is_valid_state(int state) const;

  StepResult step(int state, int action) const;

  /// Shortest-path distance to the goal; unreachable cells report max_distance().
  int distance(int state) const { return distance_.at(state); }
  int max_distance() const { return max_distance_; }
  double reward_at(int state) const;

  /// Ground-truth return of an H-step window rescaled into [0, 1].
  static double normalized_return(double ground_truth_return, std::size_t steps);

  std::string render_text(int agent_state) const;
  /// Frames of a segment separated by blank lines.
  std::string render_text(const Segment& segment) const;

 private:
  GridNavTask task_;
  std::vector<bool> walls_;
  std::vector<int> distance_;
  int max_distance_ = 1;
};

}  // namespace erl
