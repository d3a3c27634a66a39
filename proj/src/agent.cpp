#include "erl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace erl {

QPolicy::QPolicy(int num_states_, int num_actions_, double learning_rate_, double discount_)
    : num_states(num_states_),
      num_actions(num_actions_),
      learning_rate(learning_rate_),
      discount(discount_) {
  if (num_states < 1 || num_actions < 1)
    throw std::invalid_argument("q table needs at least one state and one action");
  q.assign(static_cast<std::size_t>(num_states * num_actions), 0.0);
}

double QPolicy::max_value(int s) const {
  const auto row = q.begin() + s * num_actions;
  return *std::max_element(row, row + num_actions);
}

int QPolicy::greedy_action(int s) const {
  const auto row = q.begin() + s * num_actions;
  return static_cast<int>(std::max_element(row, row + num_actions) - row);
}

void q_update_with_reward(QPolicy& policy, const Transition& t, double reward) {
  const bool terminal = t.done && !t.timeout;
  const double target =
      reward + (terminal ? 0.0 : policy.discount * policy.max_value(t.next_state));
  double& q = policy.at(t.state, t.action);
  q += policy.learning_rate * (target - q);
}

void q_update(QPolicy& policy, const Transition& t) {
  q_update_with_reward(policy, t, (t.learned_reward + policy.reward_shift) * policy.reward_scale);
}

double evaluate(const QPolicy& policy, const GridNavEnv& env, int episodes) {
  if (episodes < 1) throw std::invalid_argument("evaluate needs at least one episode");
  int successes = 0;
  for (int e = 0; e < episodes; ++e) {
    int s = env.start_state();
    for (int t = 0; t < env.task().max_episode_steps; ++t) {
      const StepResult r = env.step(s, policy.greedy_action(s));
      s = r.next_state;
      if (r.done) {
        ++successes;
        break;
      }
    }
  }
  return static_cast<double>(successes) / episodes;
}

std::size_t relabel_buffer(ReplayBuffer& buffer, const RewardEnsemble& ensemble,
                           const FeatureEncoder& encoder) {
  std::vector<double> x(encoder.dim());
  for (Transition& t : buffer) {
    encoder.encode(t.state, t.action, x);
    t.learned_reward = ensemble.predict(x);
  }
  return buffer.size();
}

void LoopConfig::validate() const {
  if (N < 1) throw std::invalid_argument("N must be >= 1");
  if (budget > 0 && budget < N) throw std::invalid_argument("budget must be >= N");
  if (K < 1) throw std::invalid_argument("K must be >= 1");
  if (total_episodes < 0 || warmup_episodes < 0)
    throw std::invalid_argument("episode counts must be non-negative");
  if (eval_every < 1 || eval_episodes < 1)
    throw std::invalid_argument("evaluation period and episodes must be >= 1");
  if (segment_len < 1) throw std::invalid_argument("segment length must be >= 1");
  if (updates_per_step < 0) throw std::invalid_argument("updates_per_step must be >= 0");
  if (ensemble_size < 1 || hidden < 1)
    throw std::invalid_argument("ensemble needs at least one member and hidden unit");
  if (!(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_end >= 0.0 && epsilon_end <= 1.0))
    throw std::invalid_argument("epsilon must lie in [0, 1]");
  reference.validate();
}

std::string csv_header(int n_classes) {
  std::string h = "step,episode,success_rate,reward_loss";
  for (int i = 0; i < n_classes; ++i) h += fmt::format(",n_class_{}", i);
  h += ",teacher_acc,budget_used,dropped_queries";
  return h;
}

std::string to_csv(const RunLog& log) {
  std::string out = csv_header(log.n_classes);
  out += '\n';
  for (const EvalRecord& r : log.evals) {
    out += fmt::format("{},{},{:.6f},{:.6f}", r.env_step, r.episode, r.success_rate,
                       r.reward_loss);
    for (int i = 0; i < log.n_classes; ++i)
      out += fmt::format(",{}", i < static_cast<int>(r.class_counts.size())
                                    ? r.class_counts[static_cast<std::size_t>(i)]
                                    : 0);
    out += fmt::format(",{:.6f},{},{}\n", r.teacher_accuracy, r.budget_used,
                       r.dropped_queries);
  }
  return out;
}

RunState::RunState(const GridNavTask& task, const LoopConfig& loop)
    : env(task),
      encoder(std::make_shared<OneHotFeatures>(env.num_states(), kNumActions)),
      buffer(loop.buffer_capacity),
      ensemble(loop.ensemble_size, encoder->dim(), loop.hidden, loop.seed),
      policy(env.num_states(), kNumActions, loop.q_learning_rate, loop.discount),
      ratings(loop.mode == FeedbackMode::Ratings ? loop.reference.n_classes : 3) {}

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(tag)};
  return std::mt19937_64(seq);
}

class Loop {
 public:
  Loop(RunState& state, RatingTeacher* rating_teacher,
       SyntheticPreferenceTeacher* preference_teacher, const LoopConfig& loop,
       const TrainConfig& train)
      : s_(state),
        rating_teacher_(rating_teacher),
        preference_teacher_(preference_teacher),
        loop_(loop),
        train_(train),
        explore_rng_(stream(loop.seed, 1)),
        replay_rng_(stream(loop.seed, 2)),
        segment_rng_(stream(loop.seed, 3)),
        x_(state.encoder->dim()) {
    train_.seed = train.seed * 0x9e3779b97f4a7c15ULL + loop.seed;
    if (loop.mode == FeedbackMode::Ratings) {
      if (rating_teacher_ == nullptr) throw std::invalid_argument("rating mode needs a teacher");
      if (rating_teacher_->num_classes() != s_.ratings.num_classes())
        throw std::invalid_argument("teacher and dataset disagree on the number of classes");
      rating_trainer_.emplace(s_.ensemble, s_.encoder, train_);
    } else if (loop.mode == FeedbackMode::Preferences) {
      if (preference_teacher_ == nullptr)
        throw std::invalid_argument("preference mode needs a teacher");
      preference_trainer_.emplace(s_.ensemble, s_.encoder, train_);
    }
    log_.n_classes = s_.ratings.num_classes();
    pending_counts_.assign(static_cast<std::size_t>(log_.n_classes), 0);
  }

  RunLog run() {
    const bool feedback = loop_.mode != FeedbackMode::GroundTruth;
    for (int e = 0; e < loop_.warmup_episodes; ++e) run_episode(1.0, false, false);
    if (feedback) feedback_session(std::min(loop_.warmup_queries, loop_.budget),
                                   loop_.warmup_epochs);

    const int decay = std::max(1, loop_.total_episodes / 2);
    for (int e = 0; e < loop_.total_episodes; ++e) {
      const double frac = std::min(1.0, static_cast<double>(e) / decay);
      const double eps = loop_.epsilon_start + (loop_.epsilon_end - loop_.epsilon_start) * frac;
      run_episode(eps, true, feedback);
      ++episode_count_;
      if (episode_count_ % loop_.eval_every == 0 || e + 1 == loop_.total_episodes)
        record_eval();
    }
    log_.budget_used = budget_used_;
    log_.dropped_queries = dropped_;
    return std::move(log_);
  }

 private:
  void run_episode(double epsilon, bool learn, bool feedback) {
    const GridNavEnv& env = s_.env;
    const int id = next_episode_id_++;
    int state = env.start_state();
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::uniform_int_distribution<int> any_action(0, kNumActions - 1);
    const int T = env.task().max_episode_steps;
    for (int t = 0; t < T; ++t) {
      const int action =
          coin(explore_rng_) < epsilon ? any_action(explore_rng_) : s_.policy.greedy_action(state);
      const StepResult r = env.step(state, action);
      Transition tr;
      tr.state = state;
      tr.action = action;
      tr.next_state = r.next_state;
      tr.env_reward = r.env_reward;
      s_.encoder->encode(state, action, x_);
      tr.learned_reward = s_.ensemble.predict(x_);
      tr.done = r.done || t + 1 == T;
      tr.timeout = !r.done && t + 1 == T;
      tr.episode_id = id;
      tr.step_index = t;
      s_.buffer.add(tr);
      ++env_steps_;

      if (learn) {
        for (int u = 0; u < loop_.updates_per_step; ++u) {
          const Transition& sample = s_.buffer.sample(replay_rng_);
          if (loop_.mode == FeedbackMode::GroundTruth)
            q_update_with_reward(s_.policy, sample, sample.env_reward);
          else
            q_update(s_.policy, sample);
        }
      }
      if (feedback && env_steps_ % loop_.K == 0 && budget_used_ < loop_.budget)
        feedback_session(std::min(loop_.N, loop_.budget - budget_used_), -1);

      state = r.next_state;
      if (r.done) break;
    }
  }

  std::optional<RatingLabel> reference_label(const RatingSample& s) const {
    if (s.clean_label) return s.clean_label;
    if (s.segment.ground_truth_return) return clean_rating(s.segment, loop_.reference);
    return std::nullopt;
  }

  void feedback_session(std::size_t queries, int epochs) {
    if (queries == 0 || s_.buffer.empty()) return;
    SessionRecord rec;
    rec.env_step = env_steps_;
    rec.episode = episode_count_;
    rec.queries = queries;
    rec.class_counts.assign(static_cast<std::size_t>(log_.n_classes), 0);

    if (loop_.mode == FeedbackMode::Ratings) {
      std::vector<Segment> segments;
      segments.reserve(queries);
      for (std::size_t i = 0; i < queries; ++i)
        segments.push_back(extract_segment(s_.buffer, s_.env, segment_rng_, loop_.segment_len));
      RatingQuery result = rating_teacher_->rate(segments);
      budget_used_ += result.charged;
      rec.dropped = result.dropped;
      for (RatingSample& sample : result.samples) {
        if (const auto ref = reference_label(sample)) {
          ++scored_;
          if (*ref == sample.label) ++correct_;
        }
        ++rec.class_counts[static_cast<std::size_t>(sample.label)];
        ++rec.labeled;
        s_.ratings.add(std::move(sample));
      }
      if (!s_.ratings.empty()) {
        const TrainReport report = rating_trainer_->train_session(s_.ratings, epochs);
        if (!report.loss_curve.empty()) last_loss_ = report.loss_curve.back();
      }
    } else {
      for (std::size_t i = 0; i < queries; ++i) {
        Segment a = extract_segment(s_.buffer, s_.env, segment_rng_, loop_.segment_len);
        Segment b = extract_segment(s_.buffer, s_.env, segment_rng_, loop_.segment_len);
        PreferenceSample sample = preference_teacher_->compare(a, b);
        if (sample.clean_label) {
          ++scored_;
          if (*sample.clean_label == sample.label) ++correct_;
        }
        ++rec.class_counts[static_cast<std::size_t>(sample.label)];
        ++rec.labeled;
        s_.preferences.add(std::move(sample));
      }
      budget_used_ += queries;
      if (!s_.preferences.trainable().empty()) {
        const TrainReport report = preference_trainer_->train_session(s_.preferences, epochs);
        if (!report.loss_curve.empty()) last_loss_ = report.loss_curve.back();
      }
    }
    dropped_ += rec.dropped;
    rec.reward_loss = last_loss_;
    for (std::size_t c = 0; c < pending_counts_.size(); ++c)
      pending_counts_[c] += rec.class_counts[c];

    relabel_buffer(s_.buffer, s_.ensemble, *s_.encoder);
    ++log_.relabels;
    // Batch min-max normalization makes the rating likelihood blind to the
    // offset and scale of the reward, so map the relabeled buffer onto the
    // ground-truth range [-1, 0] before the policy sees it.
    const auto [lo, hi] = std::minmax_element(
        s_.buffer.begin(), s_.buffer.end(),
        [](const Transition& a, const Transition& b) { return a.learned_reward < b.learned_reward; });
    const double spread = hi->learned_reward - lo->learned_reward;
    s_.policy.reward_scale = spread > 0.0 ? 1.0 / spread : 1.0;
    s_.policy.reward_shift = -hi->learned_reward - loop_.step_cost / s_.policy.reward_scale;
    log_.sessions.push_back(std::move(rec));
  }

  void record_eval() {
    EvalRecord r;
    r.env_step = env_steps_;
    r.episode = episode_count_;
    r.success_rate = evaluate(s_.policy, s_.env, loop_.eval_episodes);
    r.reward_loss = last_loss_;
    r.class_counts = pending_counts_;
    std::fill(pending_counts_.begin(), pending_counts_.end(), 0);
    r.teacher_accuracy = scored_ == 0 ? std::numeric_limits<double>::quiet_NaN()
                                      : static_cast<double>(correct_) / scored_;
    r.budget_used = budget_used_;
    r.dropped_queries = dropped_;
    log_.evals.push_back(std::move(r));
  }

  RunState& s_;
  RatingTeacher* rating_teacher_;
  SyntheticPreferenceTeacher* preference_teacher_;
  LoopConfig loop_;
  TrainConfig train_;
  std::optional<RatingTrainer> rating_trainer_;
  std::optional<PreferenceTrainer> preference_trainer_;
  std::mt19937_64 explore_rng_;
  std::mt19937_64 replay_rng_;
  std::mt19937_64 segment_rng_;
  std::vector<double> x_;
  RunLog log_;
  std::vector<std::size_t> pending_counts_;
  std::size_t env_steps_ = 0;
  std::size_t budget_used_ = 0;
  std::size_t dropped_ = 0;
  std::size_t scored_ = 0;
  std::size_t correct_ = 0;
  int episode_count_ = 0;
  int next_episode_id_ = 0;
  double last_loss_ = std::numeric_limits<double>::quiet_NaN();
};

}  // namespace

RunLog run_training(RunState& state, RatingTeacher* rating_teacher,
                    SyntheticPreferenceTeacher* preference_teacher, const LoopConfig& loop,
                    const TrainConfig& train) {
  loop.validate();
  return Loop(state, rating_teacher, preference_teacher, loop, train).run();
}

}  // namespace erl
