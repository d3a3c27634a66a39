#pragma once

// The feedback loop: collect experience, periodically query a teacher for
// feedback on sampled segments, refit the reward ensemble, relabel the
// replay buffer and keep improving a tabular Q policy on the learned reward.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "erl/features.hpp"
#include "erl/gridworld.hpp"
#include "erl/replay_buffer.hpp"
#include "erl/reward_model.hpp"
#include "erl/teacher.hpp"

namespace erl {

struct QPolicy {
  QPolicy(int num_states, int num_actions, double learning_rate = 0.5,
          double discount = 0.97);

  int num_states;
  int num_actions;
  double learning_rate;
  double discount;
  // The update uses (learned_reward + reward_shift) * reward_scale; see
  // run_training for how both are chosen.
  double reward_shift = 0.0;
  double reward_scale = 1.0;
  std::vector<double> q;

  double& at(int s, int a) { return q[static_cast<std::size_t>(s * num_actions + a)]; }
  double at(int s, int a) const { return q[static_cast<std::size_t>(s * num_actions + a)]; }
  double max_value(int s) const;
  /// Argmax with the lowest action index winning ties.
  int greedy_action(int s) const;
};

/// q(s,a) += alpha * (r + gamma * max_a' q(s',a') * (1 - terminal) - q(s,a)),
/// with r = (learned_reward + reward_shift) * reward_scale. A step-limit cut-off is not
/// terminal, so those transitions still bootstrap.
void q_update(QPolicy& policy, const Transition& t);
void q_update_with_reward(QPolicy& policy, const Transition& t, double reward);

/// Fraction of greedy episodes that reach the goal within the step limit.
double evaluate(const QPolicy& policy, const GridNavEnv& env, int episodes);

/// Rewrites learned_reward of every stored transition with the ensemble mean.
std::size_t relabel_buffer(ReplayBuffer& buffer, const RewardEnsemble& ensemble,
                           const FeatureEncoder& encoder);

enum class FeedbackMode { Ratings, Preferences, GroundTruth };

struct LoopConfig {
  FeedbackMode mode = FeedbackMode::Ratings;
  int total_episodes = 300;
  std::size_t K = 500;    // environment steps between feedback sessions
  std::size_t N = 50;     // queries per session
  std::size_t budget = 600;
  std::size_t warmup_queries = 100;
  int warmup_episodes = 20;  // random-policy episodes collected before warm-up
  int warmup_epochs = kWarmupEpochs;
  std::size_t segment_len = 1;
  int eval_every = 10;  // episodes
  int eval_episodes = 10;
  int updates_per_step = 1;
  double q_learning_rate = 0.5;
  double discount = 0.97;
  double step_cost = 0.1;  // subtracted from the canonical reward, in units of its range
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::size_t buffer_capacity = 20000;
  double preference_margin = 0.1;
  std::size_t ensemble_size = 3;
  std::size_t hidden = 64;
  std::uint64_t seed = 0;
  // Thresholds used to score teacher labels against the ground truth.
  TeacherConfig reference;

  void validate() const;
};

struct SessionRecord {
  std::size_t env_step = 0;
  int episode = 0;
  std::size_t queries = 0;
  std::size_t labeled = 0;
  std::size_t dropped = 0;
  std::vector<std::size_t> class_counts;
  double reward_loss = 0.0;
};

struct EvalRecord {
  std::size_t env_step = 0;
  int episode = 0;
  double success_rate = 0.0;
  double reward_loss = 0.0;
  std::vector<std::size_t> class_counts;  // labels gathered since the previous row
  double teacher_accuracy = 0.0;          // cumulative; NaN before any label
  std::size_t budget_used = 0;
  std::size_t dropped_queries = 0;
};

struct RunLog {
  int n_classes = 3;
  std::vector<SessionRecord> sessions;
  std::vector<EvalRecord> evals;
  std::size_t budget_used = 0;
  std::size_t dropped_queries = 0;
  std::size_t relabels = 0;

  double final_success() const { return evals.empty() ? 0.0 : evals.back().success_rate; }
};

std::string csv_header(int n_classes);
std::string to_csv(const RunLog& log);

/// Everything a run touches; the caller keeps ownership so tests can inspect
/// the buffer, dataset and ensemble afterwards.
struct RunState {
  RunState(const GridNavTask& task, const LoopConfig& loop);

  GridNavEnv env;
  std::shared_ptr<const FeatureEncoder> encoder;
  ReplayBuffer buffer;
  RewardEnsemble ensemble;
  QPolicy policy;
  RatingDataset ratings;
  PreferenceDataset preferences;
};

RunLog run_training(RunState& state, RatingTeacher* rating_teacher,
                    SyntheticPreferenceTeacher* preference_teacher, const LoopConfig& loop,
                    const TrainConfig& train);

}  // namespace erl
