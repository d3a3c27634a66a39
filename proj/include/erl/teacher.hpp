#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "erl/rating_core.hpp"
#include "erl/reward_model.hpp"
#include "erl/segment.hpp"

namespace erl {

/// Default descriptive names: {Bad, Good}, {Bad, Average, Good},
/// {Very Bad, Bad, Good, Very Good}, {Very Bad, Bad, Ok, Good, Very Good};
/// "Class i" otherwise.
std::vector<std::string> default_class_names(int n_classes);

/// Evenly spaced cut points i / n for i = 1..n-1.
std::vector<double> default_thresholds(int n_classes);

struct TeacherConfig {
  int n_classes = 3;
  std::vector<double> thresholds = default_thresholds(3);  // on normalized return
  double noise_rate = 0.2;  // probability of a uniform relabel
  std::uint64_t seed = 0;

  void validate() const;
};

/// Per-step range of the ground-truth reward; an H-step return is rescaled
/// with H * min and H * max.
struct ReturnRange {
  double step_min = -1.0;
  double step_max = 0.0;

  double normalize(double ground_truth_return, std::size_t steps) const;
};

/// Number of thresholds strictly below the normalized ground-truth return.
RatingLabel clean_rating(const Segment& segment, const TeacherConfig& config,
                         const ReturnRange& range = {});

/// Clean rating, replaced with probability noise_rate by a uniform draw over
/// all classes (which may coincide with the clean one).
RatingLabel synthetic_rate(const Segment& segment, const TeacherConfig& config,
                           std::mt19937_64& rng, const ReturnRange& range = {});

/// Unsure when the ground-truth returns differ by less than margin; otherwise
/// the index of the larger return, flipped with probability noise_rate.
Preference synthetic_prefer(const Segment& a, const Segment& b, double margin,
                            std::mt19937_64& rng, double noise_rate);

struct RatingQuery {
  std::vector<RatingSample> samples;  // may hold several per segment
  std::size_t dropped = 0;            // segments that produced no label
  std::size_t charged = 0;            // budget units consumed
};

/// A source of rating feedback used by the training loop.
class RatingTeacher {
 public:
  virtual ~RatingTeacher() = default;
  virtual int num_classes() const = 0;
  virtual std::vector<std::string> class_names() const {
    return default_class_names(num_classes());
  }
  virtual RatingQuery rate(const std::vector<Segment>& segments) = 0;
};

class SyntheticRatingTeacher final : public RatingTeacher {
 public:
  explicit SyntheticRatingTeacher(TeacherConfig config, ReturnRange range = {});
  int num_classes() const override { return config_.n_classes; }
  RatingQuery rate(const std::vector<Segment>& segments) override;

 private:
  TeacherConfig config_;
  ReturnRange range_;
  std::mt19937_64 rng_;
};

class SyntheticPreferenceTeacher {
 public:
  SyntheticPreferenceTeacher(double margin, double noise_rate, std::uint64_t seed);
  PreferenceSample compare(const Segment& a, const Segment& b);

 private:
  double margin_;
  double noise_rate_;
  std::mt19937_64 rng_;
};

}  // namespace erl
