#include "erl/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace erl {

namespace {

constexpr int kDx[kNumActions] = {0, 0, -1, 1};
constexpr int kDy[kNumActions] = {-1, 1, 0, 0};

bool in_bounds(const GridNavTask& t, Cell c) {
  return c.x >= 0 && c.y >= 0 && c.x < t.width && c.y < t.height;
}

// BFS distances from the goal; -1 marks unreachable cells.
std::vector<int> goal_distances(const GridNavTask& t, const std::vector<bool>& walls) {
  std::vector<int> dist(static_cast<std::size_t>(t.width * t.height), -1);
  std::queue<Cell> frontier;
  dist[t.goal.y * t.width + t.goal.x] = 0;
  frontier.push(t.goal);
  while (!frontier.empty()) {
    const Cell c = frontier.front();
    frontier.pop();
    for (int a = 0; a < kNumActions; ++a) {
      const Cell n{c.x + kDx[a], c.y + kDy[a]};
      if (!in_bounds(t, n)) continue;
      const int idx = n.y * t.width + n.x;
      if (walls[idx] || dist[idx] >= 0) continue;
      dist[idx] = dist[c.y * t.width + c.x] + 1;
      frontier.push(n);
    }
  }
  return dist;
}

std::vector<bool> wall_mask(const GridNavTask& t) {
  std::vector<bool> mask(static_cast<std::size_t>(t.width * t.height), false);
  for (const Cell& w : t.walls) {
    if (!in_bounds(t, w)) throw std::invalid_argument("wall outside the board");
    mask[w.y * t.width + w.x] = true;
  }
  return mask;
}

}  // namespace

std::string_view action_name(int action) {
  switch (action) {
    case kUp: return "up";
    case kDown: return "down";
    case kLeft: return "left";
    case kRight: return "right";
  }
  throw std::out_of_range("invalid action id " + std::to_string(action));
}

void GridNavTask::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("board must be at least 1x1");
  if (max_episode_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
  if (!in_bounds(*this, start) || !in_bounds(*this, goal))
    throw std::invalid_argument("start or goal outside the board");
  if (start == goal) throw std::invalid_argument("start and goal coincide");
  const auto mask = wall_mask(*this);
  if (mask[start.y * width + start.x] || mask[goal.y * width + goal.x])
    throw std::invalid_argument("start or goal is a wall");
  if (goal_distances(*this, mask)[start.y * width + start.x] < 0)
    throw std::invalid_argument("goal unreachable from start");
}

GridNavTask make_default_task(std::uint64_t seed) {
  GridNavTask task;
  const int cells = task.width * task.height;
  const int wall_count = static_cast<int>(std::lround(0.1 * cells));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, cells - 1);
  for (;;) {
    task.walls.clear();
    while (static_cast<int>(task.walls.size()) < wall_count) {
      const int idx = pick(rng);
      const Cell c{idx % task.width, idx / task.width};
      if (c == task.start || c == task.goal) continue;
      if (std::find(task.walls.begin(), task.walls.end(), c) != task.walls.end()) continue;
      task.walls.push_back(c);
    }
    try {
      task.validate();
      return task;
    } catch (const std::invalid_argument&) {
    }
  }
}

std::vector<std::string> builtin_task_names() {
  return {"gridnav8", "open8", "open16", "adjacent"};
}

GridNavTask builtin_task(const std::string& name) {
  if (name == "gridnav8") return make_default_task(0);
  if (name == "open8") return GridNavTask{};
  if (name == "open16") {
    GridNavTask t;
    t.width = t.height = 16;
    t.goal = {15, 15};
    return t;
  }
  if (name == "adjacent") {
    GridNavTask t;
    t.width = t.height = 4;
    t.goal = {1, 0};
    return t;
  }
  throw std::invalid_argument("unknown builtin task '" + name + "'");
}

GridNavTask parse_task(std::string_view text) {
  GridNavTask task;
  task.walls.clear();
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line.substr(first));
    std::string key;
    fields >> key;
    auto bad = [&] {
      return std::invalid_argument("task line " + std::to_string(line_no) + ": cannot parse '" +
                                   line + "'");
    };
    if (key == "width") {
      if (!(fields >> task.width)) throw bad();
    } else if (key == "height") {
      if (!(fields >> task.height)) throw bad();
    } else if (key == "start") {
      if (!(fields >> task.start.x >> task.start.y)) throw bad();
    } else if (key == "goal") {
      if (!(fields >> task.goal.x >> task.goal.y)) throw bad();
    } else if (key == "max_steps") {
      if (!(fields >> task.max_episode_steps)) throw bad();
    } else if (key == "wall") {
      Cell w;
      if (!(fields >> w.x >> w.y)) throw bad();
      task.walls.push_back(w);
    } else if (key == "description") {
      std::string rest;
      std::getline(fields >> std::ws, rest);
      task.description = rest;
    } else {
      throw std::invalid_argument("task line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
    }
  }
  task.validate();
  return task;
}

GridNavTask load_task(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open task file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_task(buf.str());
}

std::string format_task(const GridNavTask& task) {
  std::ostringstream out;
  out << "width " << task.width << "\nheight " << task.height << "\nstart " << task.start.x
      << ' ' << task.start.y << "\ngoal " << task.goal.x << ' ' << task.goal.y
      << "\nmax_steps " << task.max_episode_steps << '\n';
  for (const Cell& w : task.walls) out << "wall " << w.x << ' ' << w.y << '\n';
  out << "description " << task.description << '\n';
  return out.str();
}

GridNavEnv::GridNavEnv(GridNavTask task) : task_(std::move(task)) {
  task_.validate();
  walls_ = wall_mask(task_);
  distance_ = goal_distances(task_, walls_);
  max_distance_ = std::max(1, *std::max_element(distance_.begin(), distance_.end()));
  for (int& d : distance_)
    if (d < 0) d = max_distance_;
}

Cell GridNavEnv::cell_of(int state) const {
  return Cell{state % task_.width, state / task_.width};
}

bool GridNavEnv::is_valid_state(int state) const {
  return state >= 0 && state < num_states() && !walls_[state];
}

double GridNavEnv::reward_at(int state) const {
  return -static_cast<double>(distance_.at(state)) / static_cast<double>(max_distance_);
}

StepResult GridNavEnv::step(int state, int action) const {
  if (action < 0 || action >= kNumActions)
    throw std::out_of_range("invalid action id " + std::to_string(action));
  if (!is_valid_state(state)) throw std::out_of_range("invalid state " + std::to_string(state));
  const Cell c = cell_of(state);
  const Cell n{c.x + kDx[action], c.y + kDy[action]};
  int next = state;
  if (in_bounds(task_, n) && !walls_[state_of(n)]) next = state_of(n);
  return StepResult{next, reward_at(next), next == goal_state()};
}

double GridNavEnv::normalized_return(double ground_truth_return, std::size_t steps) {
  const double h = static_cast<double>(std::max<std::size_t>(steps, 1));
  return std::clamp(1.0 + ground_truth_return / h, 0.0, 1.0);
}

std::string GridNavEnv::render_text(int agent_state) const {
  if (agent_state < 0 || agent_state >= num_states())
    throw std::out_of_range("invalid state " + std::to_string(agent_state));
  std::string out;
  out.reserve(static_cast<std::size_t>((task_.width + 1) * task_.height));
  for (int y = 0; y < task_.height; ++y) {
    if (y > 0) out += '\n';
    for (int x = 0; x < task_.width; ++x) {
      const int s = state_of({x, y});
      char ch = '.';
      if (walls_[s]) ch = '#';
      if (s == goal_state()) ch = 'G';
      if (s == agent_state) ch = 'A';
      out += ch;
    }
  }
  return out;
}

std::string GridNavEnv::render_text(const Segment& segment) const {
  std::string out;
  for (std::size_t t = 0; t < segment.steps.size(); ++t) {
    if (t > 0) out += "\n\n";
    out += render_text(segment.steps[t].state);
  }
  return out;
}

}  // namespace erl
