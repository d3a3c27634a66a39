#include "erl/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace erl {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

std::string class_rubric(const std::vector<std::string>& names) {
  if (names == std::vector<std::string>{"Bad", "Average", "Good"}) {
    return "- Bad: The task is not completed.\n"
           "- Average: The task is partially completed, or the transition is critical for "
           "achieving the goal, such as the agent moving next to the goal, but falls short of "
           "completion.\n"
           "- Good: The task is completed.\n";
  }
  std::string out;
  const std::size_t n = names.size();
  for (std::size_t i = 0; i < n; ++i) {
    out += "- " + names[i] + ": level " + std::to_string(i) + " of " +
           std::to_string(n - 1) + " (0 is the worst, " + std::to_string(n - 1) +
           " is the best).\n";
  }
  return out;
}

constexpr std::string_view kLegend =
    "Each observation is a text grid: A is the agent, G is the goal, # is a wall and . is "
    "free space.";

std::string trim_token(std::string_view s) {
  auto is_junk = [](unsigned char c) {
    return std::isspace(c) || c == '"' || c == '\'' || c == '*' || c == '.' || c == '`';
  };
  std::size_t b = 0, e = s.size();
  while (b < e && is_junk(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_junk(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<RatingLabel> match_token(const std::string& token, int n_classes,
                                       const std::vector<std::string>& class_names) {
  const std::string t = lower(token);
  for (std::size_t i = 0; i < class_names.size(); ++i)
    if (t == lower(class_names[i])) return static_cast<RatingLabel>(i);
  if (!t.empty() && t.size() < 6 && std::all_of(t.begin(), t.end(), [](unsigned char c) {
        return std::isdigit(c);
      })) {
    const int v = std::stoi(t);
    if (v >= 0 && v < n_classes) return v;
  }
  return std::nullopt;
}

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

}  // namespace

std::size_t observation_count(const Segment& segment) {
  return segment.observations.empty() ? segment.steps.size() : segment.observations.size();
}

std::size_t expected_rating_count(const Segment& segment) {
  if (segment.steps.size() <= 1) return 1;
  return std::max<std::size_t>(1, observation_count(segment) - 1);
}

RatingPrompt build_rating_prompt(const Segment& segment, int n_classes,
                                 const std::vector<std::string>& class_names) {
  if (static_cast<int>(class_names.size()) != n_classes)
    throw std::invalid_argument("class_names must have n_classes entries");
  const std::string& task = segment.task_description;
  const std::string categories = "[" + join(class_names, ", ") + "]";

  RatingPrompt p;
  p.expected_count = expected_rating_count(segment);
  p.single_step = segment.steps.size() <= 1;

  if (p.single_step) {
    p.analysis_prompt =
        "You will be presented an image of an agent performing the task " + task +
        ". Please focus on the target in the task and carefully analyze the image in terms "
        "of completing the task.\n" +
        std::string(kLegend);
    p.rating_prompt_template =
        std::string(kAnalysisPlaceholder) +
        "\n\nFrom the above analyses, based on this rating category: " + categories +
        ", how would you rate this image in terms of completing task " + task +
        "?\nPlease reply with the rating in brackets, for example [" + class_names.back() +
        "].";
    return p;
  }

  const std::size_t n_obs = observation_count(segment);
  const std::size_t transitions = p.expected_count;
  std::vector<std::string> actions;
  for (std::size_t k = 0; k < transitions && k < segment.steps.size(); ++k) {
    actions.push_back(k < segment.action_names.size()
                          ? segment.action_names[k]
                          : "action " + std::to_string(segment.steps[k].action));
  }
  const std::string count = std::to_string(transitions);
  p.analysis_prompt =
      "You will be presented with an image containing a segment of the trajectory of an "
      "agent performing the task " +
      task + ". The trajectory segment contains " + std::to_string(n_obs) +
      " time steps of visual observations, corresponding to " + count +
      " intermediate actions.\n\nThe intermediate actions are: " + join(actions, ", ") +
      ".\n\n" + std::string(kLegend) +
      "\n\nPlease analyze the visual differences between consecutive time steps, reply the "
      "changes between consecutive time steps in each line explicitly. For example:\n"
      "- Timestep 0 to 1 (Executed action): Your analysis\n"
      "- Timestep 1 to 2 (Executed action): Your analysis\n"
      "- and so on\n"
      "The task is to " +
      task + ", analyze this segment in terms of completing the task.";
  p.rating_prompt_template =
      std::string(kAnalysisPlaceholder) +
      "\n\nYou are tasked with rating the RL agent's performance in completing a task " + task +
      ". From the above analyses for " + count +
      " transitions, based on this rating category: " + categories + ", where:\n" +
      class_rubric(class_names) +
      "\nHow would you rate each transition in terms of completing task?\n"
      "Please reply a single line of list of ratings for " +
      count +
      " transitions.\n(For example: [rating of transition 1, rating of transition 2, ..., "
      "rating of transition " +
      count + "]).";
  return p;
}

std::string fill_rating_prompt(const RatingPrompt& prompt, std::string_view analysis) {
  std::string out = prompt.rating_prompt_template;
  const auto pos = out.find(kAnalysisPlaceholder);
  if (pos != std::string::npos) out.replace(pos, kAnalysisPlaceholder.size(), analysis);
  return out;
}

std::optional<std::vector<RatingLabel>> parse_rating_response(
    std::string_view raw, int n_classes, const std::vector<std::string>& class_names,
    std::size_t expected_count) {
  if (expected_count == 0) return std::nullopt;
  const auto close = raw.rfind(']');
  const auto open = close == std::string_view::npos ? std::string_view::npos
                                                     : raw.rfind('[', close);
  if (open != std::string_view::npos) {
    const std::string_view body = raw.substr(open + 1, close - open - 1);
    std::vector<RatingLabel> labels;
    std::size_t start = 0;
    for (;;) {
      const auto comma = body.find(',', start);
      const std::string token =
          trim_token(body.substr(start, comma == std::string_view::npos ? body.npos
                                                                        : comma - start));
      const auto label = match_token(token, n_classes, class_names);
      if (!label) return std::nullopt;
      labels.push_back(*label);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (labels.size() != expected_count) return std::nullopt;
    return labels;
  }

  if (expected_count != 1) return std::nullopt;
  // Bare keyword: the mention ending last wins, longer names on ties.
  const std::string text = lower(raw);
  std::optional<RatingLabel> best;
  std::size_t best_end = 0, best_len = 0;
  for (std::size_t i = 0; i < class_names.size(); ++i) {
    const std::string name = lower(class_names[i]);
    if (name.empty()) continue;
    for (auto pos = text.find(name); pos != std::string::npos; pos = text.find(name, pos + 1)) {
      const std::size_t end = pos + name.size();
      const bool left_ok = pos == 0 || !word_char(text[pos - 1]);
      const bool right_ok = end == text.size() || !word_char(text[end]);
      if (!left_ok || !right_ok) continue;
      if (!best || end > best_end || (end == best_end && name.size() > best_len)) {
        best = static_cast<RatingLabel>(i);
        best_end = end;
        best_len = name.size();
      }
    }
  }
  if (!best) return std::nullopt;
  return std::vector<RatingLabel>{*best};
}

}  // namespace erl
