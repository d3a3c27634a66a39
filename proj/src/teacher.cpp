#include "erl/teacher.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace erl {

std::vector<std::string> default_class_names(int n_classes) {
  switch (n_classes) {
    case 2: return {"Bad", "Good"};
    case 3: return {"Bad", "Average", "Good"};
    case 4: return {"Very Bad", "Bad", "Good", "Very Good"};
    case 5: return {"Very Bad", "Bad", "Ok", "Good", "Very Good"};
    default: break;
  }
  std::vector<std::string> names;
  for (int i = 0; i < n_classes; ++i) names.push_back("Class " + std::to_string(i));
  return names;
}

std::vector<double> default_thresholds(int n_classes) {
  std::vector<double> t;
  for (int i = 1; i < n_classes; ++i)
    t.push_back(static_cast<double>(i) / static_cast<double>(n_classes));
  return t;
}

void TeacherConfig::validate() const {
  if (n_classes < 2) throw std::invalid_argument("teacher needs n_classes >= 2");
  if (static_cast<int>(thresholds.size()) != n_classes - 1)
    throw std::invalid_argument("teacher needs n_classes - 1 thresholds");
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    if (!(thresholds[i] > 0.0 && thresholds[i] < 1.0))
      throw std::invalid_argument("thresholds must lie in (0, 1)");
    if (i > 0 && !(thresholds[i] > thresholds[i - 1]))
      throw std::invalid_argument("thresholds must be strictly ascending");
  }
  if (!(noise_rate >= 0.0 && noise_rate < 1.0))
    throw std::invalid_argument("noise rate must be in [0, 1)");
}

double ReturnRange::normalize(double ground_truth_return, std::size_t steps) const {
  const double h = static_cast<double>(std::max<std::size_t>(steps, 1));
  const double lo = h * step_min;
  const double hi = h * step_max;
  return std::clamp((ground_truth_return - lo) / (hi - lo), 0.0, 1.0);
}

RatingLabel clean_rating(const Segment& segment, const TeacherConfig& config,
                         const ReturnRange& range) {
  if (!segment.ground_truth_return)
    throw std::invalid_argument("segment has no ground-truth return");
  const double v = range.normalize(*segment.ground_truth_return, segment.steps.size());
  return static_cast<RatingLabel>(
      std::count_if(config.thresholds.begin(), config.thresholds.end(),
                    [v](double t) { return t < v; }));
}

RatingLabel synthetic_rate(const Segment& segment, const TeacherConfig& config,
                           std::mt19937_64& rng, const ReturnRange& range) {
  const RatingLabel clean = clean_rating(segment, config, range);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < config.noise_rate) {
    std::uniform_int_distribution<int> any(0, config.n_classes - 1);
    return any(rng);
  }
  return clean;
}

Preference synthetic_prefer(const Segment& a, const Segment& b, double margin,
                            std::mt19937_64& rng, double noise_rate) {
  if (!a.ground_truth_return || !b.ground_truth_return)
    throw std::invalid_argument("segment has no ground-truth return");
  const double ra = *a.ground_truth_return;
  const double rb = *b.ground_truth_return;
  if (std::abs(ra - rb) < margin) return Preference::Unsure;
  Preference p = ra > rb ? Preference::First : Preference::Second;
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < noise_rate)
    p = p == Preference::First ? Preference::Second : Preference::First;
  return p;
}

SyntheticRatingTeacher::SyntheticRatingTeacher(TeacherConfig config, ReturnRange range)
    : config_(std::move(config)), range_(range), rng_(config_.seed) {
  config_.validate();
}

RatingQuery SyntheticRatingTeacher::rate(const std::vector<Segment>& segments) {
  RatingQuery q;
  for (const Segment& s : segments) {
    RatingSample sample;
    sample.segment = s;
    sample.clean_label = clean_rating(s, config_, range_);
    sample.label = synthetic_rate(s, config_, rng_, range_);
    q.samples.push_back(std::move(sample));
    ++q.charged;
  }
  return q;
}

SyntheticPreferenceTeacher::SyntheticPreferenceTeacher(double margin, double noise_rate,
                                                       std::uint64_t seed)
    : margin_(margin), noise_rate_(noise_rate), rng_(seed) {
  if (!(noise_rate >= 0.0 && noise_rate < 1.0))
    throw std::invalid_argument("noise rate must be in [0, 1)");
}

PreferenceSample SyntheticPreferenceTeacher::compare(const Segment& a, const Segment& b) {
  PreferenceSample s;
  s.first = a;
  s.second = b;
  s.label = synthetic_prefer(a, b, margin_, rng_, noise_rate_);
  std::mt19937_64 unused;
  s.clean_label = synthetic_prefer(a, b, margin_, unused, 0.0);
  return s;
}

}  // namespace erl
