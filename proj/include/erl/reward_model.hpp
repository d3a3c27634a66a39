#pragma once

// Fitting a reward ensemble to rating feedback (and, as a baseline, to
// pairwise preferences).

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "erl/features.hpp"
#include "erl/rating_core.hpp"
#include "erl/reward_net.hpp"
#include "erl/segment.hpp"

namespace erl {

struct RatingSample {
  Segment segment;
  RatingLabel label = 0;
  // Noise-free label when the teacher can report one (synthetic teachers).
  std::optional<RatingLabel> clean_label;
};

/// Append-only rating dataset with per-class index lists kept in sync.
class RatingDataset {
 public:
  explicit RatingDataset(int num_classes);

  void add(RatingSample sample);
  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  int num_classes() const { return num_classes_; }
  const RatingSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<RatingSample>& samples() const { return samples_; }
  const std::vector<std::vector<std::size_t>>& class_index() const { return class_index_; }
  std::vector<std::size_t> class_counts() const;

 private:
  int num_classes_;
  std::vector<RatingSample> samples_;
  std::vector<std::vector<std::size_t>> class_index_;
};

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 3e-4;
  int epochs_per_session = 50;
  double beta1 = 0.9;
  double beta2 = 0.999;
  LossConfig loss;
  std::uint64_t seed = 0;
};

inline constexpr int kWarmupEpochs = 100;

struct TrainReport {
  std::vector<double> loss_curve;  // mean over members, one entry per epoch
  std::vector<double> class_recall;  // NaN for classes absent from the data
  double accuracy = 0.0;
  std::size_t gradient_steps = 0;
  // Stratified batches that missed a class present in the dataset.
  std::size_t batches_missing_class = 0;
  // Mean over members of the boundaries fitted on each member's final batch;
  // class_recall and accuracy are measured under these.
  RatingBoundaries last_bounds;
};

/// Rows of one batch: each entry is a (steps x input_dim) feature block.
struct RatingBatch {
  std::vector<std::span<const double>> features;
  std::vector<RatingLabel> labels;
};

struct BatchLoss {
  double loss = 0.0;
  RatingBoundaries bounds;
  std::vector<double> normalized;
};

/// Weighted batch loss for one member. When grad is non-empty the exact
/// gradient is added into it. Boundaries are fitted from the batch unless
/// fixed_bounds is given; either way they are constants for the gradient.
BatchLoss rating_batch_loss(const RewardNet& net, const RatingBatch& batch,
                            int num_classes, const LossConfig& loss,
                            std::span<double> grad,
                            const RatingBoundaries* fixed_bounds = nullptr);

double segment_return(const RewardNet& net, const FeatureEncoder& encoder,
                      const Segment& segment);

/// One optimizer update on a single batch; returns the pre-update loss.
double train_step(RewardNet& net, Adam& optimizer, const RatingBatch& batch,
                  int num_classes, const TrainConfig& config);

struct RatingEvaluation {
  std::vector<double> returns;  // ensemble-mean return per sample
  std::vector<RatingLabel> predicted;
  RatingBoundaries bounds;
  std::vector<double> class_recall;
  double accuracy = 0.0;
};

/// Predicted class = interval of the normalized ensemble-mean return under
/// boundaries fitted on the whole dataset.
RatingEvaluation evaluate_ratings(const RewardEnsemble& ensemble,
                                  const FeatureEncoder& encoder,
                                  const RatingDataset& dataset);

/// Predicted class = interval of the member-mean normalized return (each
/// member min-max normalized over the dataset) under the given boundaries.
RatingEvaluation evaluate_ratings(const RewardEnsemble& ensemble,
                                  const FeatureEncoder& encoder,
                                  const RatingDataset& dataset,
                                  const RatingBoundaries& bounds);

/// Owns per-member optimizer state across feedback sessions.
class RatingTrainer {
 public:
  RatingTrainer(RewardEnsemble& ensemble,
                std::shared_ptr<const FeatureEncoder> encoder,
                TrainConfig config);

  /// epochs < 0 uses config.epochs_per_session.
  TrainReport train_session(const RatingDataset& dataset, int epochs = -1);

  const TrainConfig& config() const { return config_; }

 private:
  RewardEnsemble& ensemble_;
  std::shared_ptr<const FeatureEncoder> encoder_;
  TrainConfig config_;
  std::vector<Adam> optimizers_;
  std::uint64_t sessions_ = 0;
};

TrainReport train_session(RewardEnsemble& ensemble,
                          std::shared_ptr<const FeatureEncoder> encoder,
                          const RatingDataset& dataset,
                          const TrainConfig& config);

// ---------------------------------------------------------------------------
// Bradley-Terry preference baseline.

enum class Preference { First = 0, Second = 1, Unsure = 2 };

struct PreferenceSample {
  Segment first;
  Segment second;
  Preference label = Preference::Unsure;
  std::optional<Preference> clean_label;
};

class PreferenceDataset {
 public:
  void add(PreferenceSample sample);
  std::size_t size() const { return samples_.size(); }
  const PreferenceSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<PreferenceSample>& samples() const { return samples_; }
  /// Indices of pairs with a definite preference.
  const std::vector<std::size_t>& trainable() const { return trainable_; }
  std::size_t unsure_count() const { return samples_.size() - trainable_.size(); }

 private:
  std::vector<PreferenceSample> samples_;
  std::vector<std::size_t> trainable_;
};

struct PreferenceBatch {
  std::vector<std::span<const double>> first;
  std::vector<std::span<const double>> second;
  std::vector<Preference> labels;  // First or Second only
};

/// Mean of -log softmax over the two segment returns at the preferred index.
double preference_batch_loss(const RewardNet& net, const PreferenceBatch& batch,
                             std::span<double> grad);

class PreferenceTrainer {
 public:
  PreferenceTrainer(RewardEnsemble& ensemble,
                    std::shared_ptr<const FeatureEncoder> encoder,
                    TrainConfig config);

  TrainReport train_session(const PreferenceDataset& dataset, int epochs = -1);

 private:
  RewardEnsemble& ensemble_;
  std::shared_ptr<const FeatureEncoder> encoder_;
  TrainConfig config_;
  std::vector<Adam> optimizers_;
  std::uint64_t sessions_ = 0;
};

TrainReport bt_train_session(RewardEnsemble& ensemble,
                             std::shared_ptr<const FeatureEncoder> encoder,
                             const PreferenceDataset& dataset,
                             const TrainConfig& config);

// ---------------------------------------------------------------------------
// Checkpoints: structured text, doubles written as hex floats so a round trip
// is bit-exact.

void save_checkpoint(const RewardEnsemble& ensemble, const std::string& path);
RewardEnsemble load_checkpoint(const std::string& path);
std::string serialize_ensemble(const RewardEnsemble& ensemble);
RewardEnsemble deserialize_ensemble(const std::string& text);

}  // namespace erl
