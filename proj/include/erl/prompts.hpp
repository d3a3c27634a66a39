#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "erl/rating_core.hpp"
#include "erl/segment.hpp"

namespace erl {

/// Placeholder in the rating template replaced by the analysis response.
inline constexpr std::string_view kAnalysisPlaceholder = "{analysis}";

struct RatingPrompt {
  std::string analysis_prompt;
  std::string rating_prompt_template;
  std::size_t expected_count = 1;
  bool single_step = true;
};

/// Observations the prompt refers to, N in the multi-step template.
std::size_t observation_count(const Segment& segment);

/// Ratings requested for a segment: 1 for single-step segments, N - 1
/// (one per transition between consecutive observations) otherwise.
std::size_t expected_rating_count(const Segment& segment);

/// Two-stage protocol: first describe the behavior, then rate it. Single-step
/// segments use a single-observation template; longer segments use the
/// per-transition template listing the executed actions.
RatingPrompt build_rating_prompt(const Segment& segment, int n_classes,
                                 const std::vector<std::string>& class_names);

std::string fill_rating_prompt(const RatingPrompt& prompt, std::string_view analysis);

/// Reads the last bracketed list in the text; tokens match class names case
/// insensitively, or their integer index. Without brackets and with
/// expected_count == 1 the last class name mentioned is used. Anything else
/// (unknown token, wrong count) is a parse failure.
std::optional<std::vector<RatingLabel>> parse_rating_response(
    std::string_view raw, int n_classes, const std::vector<std::string>& class_names,
    std::size_t expected_count);

}  // namespace erl
