#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "erl/reward_model.hpp"

namespace erl {

RatingDataset::RatingDataset(int num_classes)
    : num_classes_(num_classes), class_index_(num_classes) {
  if (num_classes < 1) throw std::invalid_argument("RatingDataset: need at least one class");
}

void RatingDataset::add(RatingSample sample) {
  if (sample.label < 0 || sample.label >= num_classes_)
    throw std::invalid_argument("RatingDataset: label out of range");
  if (sample.segment.steps.empty())
    throw std::invalid_argument("RatingDataset: empty segment");
  class_index_[sample.label].push_back(samples_.size());
  samples_.push_back(std::move(sample));
}

std::vector<std::size_t> RatingDataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes_);
  for (int c = 0; c < num_classes_; ++c) counts[c] = class_index_[c].size();
  return counts;
}

double segment_return(const RewardNet& net, const FeatureEncoder& encoder,
                      const Segment& segment) {
  if (segment.steps.empty()) throw std::invalid_argument("segment_return: empty segment");
  if (encoder.dim() != net.input_dim())
    throw std::invalid_argument("reward input dimension mismatch");
  return net.sum_rewards(encoder.encode(segment));
}

BatchLoss rating_batch_loss(const RewardNet& net, const RatingBatch& batch,
                            int num_classes, const LossConfig& loss,
                            std::span<double> grad,
                            const RatingBoundaries* fixed_bounds) {
  const std::size_t size = batch.features.size();
  if (size == 0) throw std::invalid_argument("rating_batch_loss: empty batch");
  if (batch.labels.size() != size)
    throw std::invalid_argument("rating_batch_loss: label count mismatch");

  std::vector<double> returns(size);
  for (std::size_t j = 0; j < size; ++j) returns[j] = net.sum_rewards(batch.features[j]);

  BatchLoss out;
  out.normalized = normalize_returns(returns);
  out.bounds = fixed_bounds ? *fixed_bounds
                            : compute_boundaries(out.normalized, batch.labels, num_classes);

  std::vector<std::size_t> counts(num_classes, 0);
  for (RatingLabel y : batch.labels) ++counts.at(y);
  std::vector<double> weights(num_classes, 1.0);
  if (loss.class_weighting) weights = class_weights(counts);

  const double inv_size = 1.0 / static_cast<double>(size);
  const bool want_grad = !grad.empty();
  std::vector<double> grad_x(want_grad ? size : 0, 0.0);
  const auto& b = out.bounds.bounds;

  for (std::size_t j = 0; j < size; ++j) {
    const double x = out.normalized[j];
    const RatingLabel y = batch.labels[j];
    const std::vector<double> p = rating_probabilities(x, out.bounds);
    out.loss += rating_loss(p, y, weights[y], loss) * inv_size;
    if (!want_grad) continue;
    // Back through the softmax, then through -(x - R_i)(x - R_{i+1}).
    const std::vector<double> g = rating_loss_grad(p, y, weights[y], loss);
    double mean_g = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) mean_g += g[i] * p[i];
    double dx = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
      dx += p[i] * (g[i] - mean_g) * (b[i] + b[i + 1] - 2.0 * x);
    grad_x[j] = dx * inv_size;
  }
  if (!want_grad) return out;

  const auto [lo, hi] = std::minmax_element(returns.begin(), returns.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) {
    // Constant outputs (a fresh zero-headed net): min-max scaling has no
    // derivative here, so use x_j = 0.5 + (r_j - mean r) to break the tie.
    double mean_gx = 0.0;
    for (double v : grad_x) mean_gx += v * inv_size;
    for (std::size_t j = 0; j < size; ++j)
      net.accumulate_sum_gradient(batch.features[j], grad_x[j] - mean_gx, grad);
    return out;
  }
  const auto argmin = static_cast<std::size_t>(lo - returns.begin());
  const auto argmax = static_cast<std::size_t>(hi - returns.begin());

  double sum_g = 0.0;
  double sum_gx = 0.0;
  for (std::size_t j = 0; j < size; ++j) {
    sum_g += grad_x[j];
    sum_gx += grad_x[j] * out.normalized[j];
  }
  std::vector<double> grad_r(size);
  for (std::size_t j = 0; j < size; ++j) grad_r[j] = grad_x[j] / range;
  grad_r[argmin] += (sum_gx - sum_g) / range;
  grad_r[argmax] -= sum_gx / range;

  for (std::size_t j = 0; j < size; ++j)
    net.accumulate_sum_gradient(batch.features[j], grad_r[j], grad);
  return out;
}

double train_step(RewardNet& net, Adam& optimizer, const RatingBatch& batch,
                  int num_classes, const TrainConfig& config) {
  std::vector<double> grad(net.parameters().size(), 0.0);
  const BatchLoss result = rating_batch_loss(net, batch, num_classes, config.loss, grad);
  optimizer.step(net.parameters(), grad);
  return result.loss;
}

namespace {

RatingEvaluation score(std::vector<double> returns, const std::vector<double>& normalized,
                       const std::vector<RatingLabel>& labels, RatingBoundaries bounds,
                       int n) {
  RatingEvaluation ev;
  ev.returns = std::move(returns);
  ev.bounds = std::move(bounds);
  std::vector<std::size_t> hits(n, 0), totals(n, 0);
  std::size_t correct = 0;
  for (std::size_t j = 0; j < normalized.size(); ++j) {
    const RatingLabel pred = ev.bounds.interval_of(normalized[j]);
    ev.predicted.push_back(pred);
    ++totals[labels[j]];
    if (pred == labels[j]) {
      ++hits[labels[j]];
      ++correct;
    }
  }
  ev.class_recall.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (int c = 0; c < n; ++c)
    if (totals[c] > 0)
      ev.class_recall[c] = static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
  ev.accuracy = static_cast<double>(correct) / static_cast<double>(normalized.size());
  return ev;
}

std::vector<RatingLabel> labels_of(const RatingDataset& dataset) {
  std::vector<RatingLabel> labels;
  for (const auto& s : dataset.samples()) labels.push_back(s.label);
  return labels;
}

}  // namespace

RatingEvaluation evaluate_ratings(const RewardEnsemble& ensemble,
                                  const FeatureEncoder& encoder,
                                  const RatingDataset& dataset) {
  if (dataset.empty()) throw std::invalid_argument("evaluate_ratings: empty dataset");
  std::vector<double> returns;
  for (const auto& s : dataset.samples())
    returns.push_back(ensemble.predict_return(encoder.encode(s.segment)));
  const std::vector<RatingLabel> labels = labels_of(dataset);
  const std::vector<double> normalized = normalize_returns(returns);
  RatingBoundaries bounds = compute_boundaries(normalized, labels, dataset.num_classes());
  return score(std::move(returns), normalized, labels, std::move(bounds),
               dataset.num_classes());
}

RatingEvaluation evaluate_ratings(const RewardEnsemble& ensemble,
                                  const FeatureEncoder& encoder,
                                  const RatingDataset& dataset,
                                  const RatingBoundaries& bounds) {
  if (dataset.empty()) throw std::invalid_argument("evaluate_ratings: empty dataset");
  if (bounds.num_classes() != dataset.num_classes())
    throw std::invalid_argument("evaluate_ratings: boundary count mismatch");
  std::vector<std::vector<double>> features;
  for (const auto& s : dataset.samples()) features.push_back(encoder.encode(s.segment));
  std::vector<double> normalized(dataset.size(), 0.0);
  std::vector<double> raw(dataset.size());
  for (const RewardNet& net : ensemble.members()) {
    for (std::size_t j = 0; j < features.size(); ++j) raw[j] = net.sum_rewards(features[j]);
    const std::vector<double> x = normalize_returns(raw);
    for (std::size_t j = 0; j < x.size(); ++j) normalized[j] += x[j];
  }
  for (double& v : normalized) v /= static_cast<double>(ensemble.size());
  std::vector<double> returns;
  for (const auto& f : features) returns.push_back(ensemble.predict_return(f));
  return score(std::move(returns), normalized, labels_of(dataset), bounds,
               dataset.num_classes());
}

namespace {

std::vector<Adam> make_optimizers(const RewardEnsemble& ensemble,
                                  const TrainConfig& config) {
  std::vector<Adam> opts;
  for (const auto& m : ensemble.members())
    opts.emplace_back(m.parameters().size(),
                      Adam::Options{config.learning_rate, config.beta1, config.beta2, 1e-8});
  return opts;
}

std::mt19937_64 member_rng(std::uint64_t seed, std::uint64_t session,
                           std::size_t member) {
  std::seed_seq seq{seed, session, static_cast<std::uint64_t>(member)};
  return std::mt19937_64(seq);
}

struct MemberResult {
  std::vector<double> curve;
  std::size_t steps = 0;
  std::size_t missing = 0;
  RatingBoundaries last_bounds;
};

// Runs fn(member) for every member concurrently and collects the results.
template <typename Fn>
std::vector<MemberResult> for_each_member(std::size_t count, Fn fn) {
  std::vector<std::future<MemberResult>> jobs;
  for (std::size_t m = 0; m < count; ++m)
    jobs.push_back(std::async(std::launch::async, fn, m));
  std::vector<MemberResult> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

std::vector<double> average_curves(const std::vector<MemberResult>& results,
                                   int epochs) {
  std::vector<double> curve(epochs, 0.0);
  for (const auto& r : results)
    for (int e = 0; e < epochs; ++e) curve[e] += r.curve[e];
  for (double& v : curve) v /= static_cast<double>(results.size());
  return curve;
}

std::vector<std::vector<std::size_t>> epoch_batches(std::size_t dataset_size,
                                                    std::size_t batch_size,
                                                    std::mt19937_64& rng) {
  std::vector<std::size_t> perm(dataset_size);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t off = 0; off < dataset_size; off += batch_size) {
    const std::size_t end = std::min(dataset_size, off + batch_size);
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(off),
                         perm.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace

RatingTrainer::RatingTrainer(RewardEnsemble& ensemble,
                             std::shared_ptr<const FeatureEncoder> encoder,
                             TrainConfig config)
    : ensemble_(ensemble),
      encoder_(std::move(encoder)),
      config_(config),
      optimizers_(make_optimizers(ensemble, config)) {
  if (!encoder_) throw std::invalid_argument("RatingTrainer: missing feature encoder");
  if (encoder_->dim() != ensemble.input_dim())
    throw std::invalid_argument("reward input dimension mismatch");
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
}

TrainReport RatingTrainer::train_session(const RatingDataset& dataset, int epochs) {
  if (dataset.empty()) throw std::invalid_argument("train_session: empty dataset");
  const int n = dataset.num_classes();
  const bool stratified = config_.loss.sampling == Sampling::Stratified;
  if (stratified && config_.batch_size < static_cast<std::size_t>(n))
    throw std::invalid_argument("stratified sampling needs batch_size >= n_classes");
  if (epochs < 0) epochs = config_.epochs_per_session;

  std::vector<std::vector<double>> features;
  std::vector<RatingLabel> labels;
  features.reserve(dataset.size());
  for (const auto& s : dataset.samples()) {
    features.push_back(encoder_->encode(s.segment));
    labels.push_back(s.label);
  }
  const std::size_t iters =
      (dataset.size() + config_.batch_size - 1) / config_.batch_size;
  const std::uint64_t session = sessions_++;
  const auto& class_index = dataset.class_index();

  auto run_member = [&](std::size_t m) {
    MemberResult r;
    RewardNet& net = ensemble_.member(m);
    Adam& opt = optimizers_[m];
    std::mt19937_64 rng = member_rng(config_.seed, session, m);
    std::vector<bool> seen(n);
    auto fit = [&](const std::vector<std::size_t>& idx) {
      RatingBatch batch;
      for (std::size_t i : idx) {
        batch.features.emplace_back(features[i]);
        batch.labels.push_back(labels[i]);
      }
      ++r.steps;
      std::vector<double> grad(net.parameters().size(), 0.0);
      BatchLoss result = rating_batch_loss(net, batch, n, config_.loss, grad);
      opt.step(net.parameters(), grad);
      r.last_bounds = std::move(result.bounds);
      return result.loss;
    };
    for (int e = 0; e < epochs; ++e) {
      double total = 0.0;
      std::size_t count = 0;
      if (stratified) {
        for (std::size_t it = 0; it < iters; ++it) {
          const auto idx = stratified_indices(class_index, config_.batch_size, rng);
          std::fill(seen.begin(), seen.end(), false);
          for (std::size_t i : idx) seen[labels[i]] = true;
          for (int c = 0; c < n; ++c)
            if (!class_index[c].empty() && !seen[c]) {
              ++r.missing;
              break;
            }
          total += fit(idx);
          ++count;
        }
      } else {
        for (const auto& idx : epoch_batches(dataset.size(), config_.batch_size, rng)) {
          total += fit(idx);
          ++count;
        }
      }
      r.curve.push_back(total / static_cast<double>(count));
    }
    return r;
  };

  const auto results = for_each_member(ensemble_.size(), run_member);
  TrainReport report;
  report.loss_curve = average_curves(results, epochs);
  for (const auto& r : results) {
    report.gradient_steps += r.steps;
    report.batches_missing_class += r.missing;
  }
  if (epochs > 0) {
    // Element-wise mean of each member's boundaries from its final batch.
    report.last_bounds.bounds.assign(static_cast<std::size_t>(n) + 1, 0.0);
    for (const auto& r : results)
      for (std::size_t i = 0; i < report.last_bounds.bounds.size(); ++i)
        report.last_bounds.bounds[i] += r.last_bounds.bounds[i] / static_cast<double>(results.size());
  } else {
    report.last_bounds = compute_boundaries(
        std::vector<double>(dataset.size(), 0.5), labels, n);
  }
  const RatingEvaluation ev =
      evaluate_ratings(ensemble_, *encoder_, dataset, report.last_bounds);
  report.class_recall = ev.class_recall;
  report.accuracy = ev.accuracy;
  return report;
}

TrainReport train_session(RewardEnsemble& ensemble,
                          std::shared_ptr<const FeatureEncoder> encoder,
                          const RatingDataset& dataset,
                          const TrainConfig& config) {
  RatingTrainer trainer(ensemble, std::move(encoder), config);
  return trainer.train_session(dataset);
}

// ---------------------------------------------------------------------------

void PreferenceDataset::add(PreferenceSample sample) {
  if (sample.first.steps.empty() || sample.second.steps.empty())
    throw std::invalid_argument("PreferenceDataset: empty segment");
  if (sample.label != Preference::Unsure) trainable_.push_back(samples_.size());
  samples_.push_back(std::move(sample));
}

double preference_batch_loss(const RewardNet& net, const PreferenceBatch& batch,
                             std::span<double> grad) {
  const std::size_t size = batch.labels.size();
  if (size == 0 || batch.first.size() != size || batch.second.size() != size)
    throw std::invalid_argument("preference_batch_loss: malformed batch");
  const double inv_size = 1.0 / static_cast<double>(size);
  double loss = 0.0;
  for (std::size_t j = 0; j < size; ++j) {
    if (batch.labels[j] == Preference::Unsure)
      throw std::invalid_argument("preference_batch_loss: unsure pair in batch");
    const bool first_wins = batch.labels[j] == Preference::First;
    const auto& win = first_wins ? batch.first[j] : batch.second[j];
    const auto& lose = first_wins ? batch.second[j] : batch.first[j];
    const double margin = net.sum_rewards(win) - net.sum_rewards(lose);
    // -log sigmoid(margin), written to stay finite for large |margin|.
    loss += (margin > 0.0 ? std::log1p(std::exp(-margin))
                          : -margin + std::log1p(std::exp(margin))) *
            inv_size;
    if (grad.empty()) continue;
    const double lose_prob = 1.0 / (1.0 + std::exp(margin));
    net.accumulate_sum_gradient(win, -lose_prob * inv_size, grad);
    net.accumulate_sum_gradient(lose, lose_prob * inv_size, grad);
  }
  return loss;
}

PreferenceTrainer::PreferenceTrainer(RewardEnsemble& ensemble,
                                     std::shared_ptr<const FeatureEncoder> encoder,
                                     TrainConfig config)
    : ensemble_(ensemble),
      encoder_(std::move(encoder)),
      config_(config),
      optimizers_(make_optimizers(ensemble, config)) {
  if (!encoder_) throw std::invalid_argument("PreferenceTrainer: missing feature encoder");
  if (encoder_->dim() != ensemble.input_dim())
    throw std::invalid_argument("reward input dimension mismatch");
  if (config.batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
}

TrainReport PreferenceTrainer::train_session(const PreferenceDataset& dataset,
                                             int epochs) {
  const auto& usable = dataset.trainable();
  if (usable.empty()) throw std::invalid_argument("no trainable pairs");
  if (epochs < 0) epochs = config_.epochs_per_session;

  std::vector<std::vector<double>> first, second;
  for (std::size_t i : usable) {
    first.push_back(encoder_->encode(dataset[i].first));
    second.push_back(encoder_->encode(dataset[i].second));
  }
  const std::uint64_t session = sessions_++;

  auto run_member = [&](std::size_t m) {
    MemberResult r;
    RewardNet& net = ensemble_.member(m);
    Adam& opt = optimizers_[m];
    std::mt19937_64 rng = member_rng(config_.seed ^ 0xb7u, session, m);
    std::vector<double> grad(net.parameters().size());
    for (int e = 0; e < epochs; ++e) {
      double total = 0.0;
      std::size_t count = 0;
      for (const auto& idx : epoch_batches(usable.size(), config_.batch_size, rng)) {
        PreferenceBatch batch;
        for (std::size_t k : idx) {
          batch.first.emplace_back(first[k]);
          batch.second.emplace_back(second[k]);
          batch.labels.push_back(dataset[usable[k]].label);
        }
        std::fill(grad.begin(), grad.end(), 0.0);
        total += preference_batch_loss(net, batch, grad);
        opt.step(net.parameters(), grad);
        ++count;
        ++r.steps;
      }
      r.curve.push_back(total / static_cast<double>(count));
    }
    return r;
  };

  const auto results = for_each_member(ensemble_.size(), run_member);
  TrainReport report;
  report.loss_curve = average_curves(results, epochs);
  for (const auto& r : results) report.gradient_steps += r.steps;

  std::size_t agree = 0;
  for (std::size_t k = 0; k < usable.size(); ++k) {
    const double ra = ensemble_.predict_return(first[k]);
    const double rb = ensemble_.predict_return(second[k]);
    const bool first_wins = dataset[usable[k]].label == Preference::First;
    if ((first_wins && ra > rb) || (!first_wins && rb > ra)) ++agree;
  }
  report.accuracy = static_cast<double>(agree) / static_cast<double>(usable.size());
  return report;
}

TrainReport bt_train_session(RewardEnsemble& ensemble,
                             std::shared_ptr<const FeatureEncoder> encoder,
                             const PreferenceDataset& dataset,
                             const TrainConfig& config) {
  PreferenceTrainer trainer(ensemble, std::move(encoder), config);
  return trainer.train_session(dataset);
}

}  // namespace erl
