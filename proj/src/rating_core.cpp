#include "erl/rating_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace erl {

int RatingBoundaries::interval_of(double x) const {
  const int n = num_classes();
  int last_nonempty = 0;
  for (int i = 0; i < n; ++i) {
    if (bounds[i] < bounds[i + 1]) {
      last_nonempty = i;
      if (bounds[i] <= x && x < bounds[i + 1]) return i;
    }
  }
  return last_nonempty;
}

std::vector<double> normalize_returns(std::span<const double> raw) {
  if (raw.empty()) throw std::invalid_argument("empty batch");
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double min = *lo;
  const double range = *hi - *lo;
  std::vector<double> out(raw.size(), 0.5);
  if (range > 0.0) {
    for (std::size_t j = 0; j < raw.size(); ++j) out[j] = (raw[j] - min) / range;
  }
  return out;
}

RatingBoundaries compute_boundaries(std::span<const double> normalized,
                                    std::span<const RatingLabel> labels,
                                    int n) {
  if (normalized.size() != labels.size())
    throw std::invalid_argument("compute_boundaries: length mismatch");
  if (n < 1) throw std::invalid_argument("compute_boundaries: n must be >= 1");

  std::vector<std::size_t> counts(n, 0);
  for (RatingLabel y : labels) {
    if (y < 0 || y >= n)
      throw std::invalid_argument("compute_boundaries: label out of range");
    ++counts[y];
  }
  std::vector<double> sorted(normalized.begin(), normalized.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t batch = sorted.size();

  RatingBoundaries b;
  b.bounds.assign(n + 1, 0.0);
  b.bounds[n] = 1.0;
  std::size_t cumulative = 0;
  for (int i = 0; i + 1 < n; ++i) {
    cumulative += counts[i];
    double cut;
    if (cumulative == 0) {
      cut = 0.0;
    } else if (cumulative >= batch) {
      cut = 1.0;
    } else {
      cut = 0.5 * (sorted[cumulative - 1] + sorted[cumulative]);
    }
    b.bounds[i + 1] = std::max(cut, b.bounds[i]);
  }
  return b;
}

std::vector<double> rating_logits(double x, const RatingBoundaries& b) {
  const int n = b.num_classes();
  std::vector<double> logits(n);
  for (int i = 0; i < n; ++i)
    logits[i] = -(x - b.bounds[i]) * (x - b.bounds[i + 1]);
  return logits;
}

std::vector<double> rating_probabilities(double x, const RatingBoundaries& b) {
  std::vector<double> p = rating_logits(x, b);
  const double top = *std::max_element(p.begin(), p.end());
  double total = 0.0;
  for (double& v : p) {
    v = std::exp(v - top);
    total += v;
  }
  for (double& v : p) v /= total;
  return p;
}

namespace {

void check_label(std::span<const double> p, RatingLabel label) {
  if (label < 0 || static_cast<std::size_t>(label) >= p.size())
    throw std::invalid_argument("rating label out of range");
}

double floored_log(double v) { return std::log(std::max(v, kProbabilityFloor)); }

}  // namespace

double ce_loss(std::span<const double> p, RatingLabel label, double weight) {
  check_label(p, label);
  return weight * -floored_log(p[label]);
}

double mae_loss(std::span<const double> p, RatingLabel label, double weight) {
  check_label(p, label);
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double target = static_cast<int>(i) == label ? 1.0 : 0.0;
    total += std::abs(target - p[i]);
  }
  return weight * total;
}

double smoothed_ce_loss(std::span<const double> p, RatingLabel label, double r,
                        double weight) {
  check_label(p, label);
  if (r < 0.0 || r >= 1.0)
    throw std::invalid_argument("smoothing rate must be in [0, 1)");
  if (r == 0.0) return ce_loss(p, label, weight);
  const double uniform = r / static_cast<double>(p.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double t =
        (static_cast<int>(i) == label ? 1.0 - r : 0.0) + uniform;
    total -= t * floored_log(p[i]);
  }
  return weight * total;
}

double rating_loss(std::span<const double> p, RatingLabel label, double weight,
                   const LossConfig& cfg) {
  switch (cfg.kind) {
    case LossKind::CE:
      return ce_loss(p, label, weight);
    case LossKind::MAE:
      return mae_loss(p, label, weight);
    case LossKind::CELabelSmooth:
      return smoothed_ce_loss(p, label, cfg.smoothing_rate, weight);
  }
  throw std::logic_error("unknown loss kind");
}

std::vector<double> rating_loss_grad(std::span<const double> p,
                                     RatingLabel label, double weight,
                                     const LossConfig& cfg) {
  check_label(p, label);
  const std::size_t n = p.size();
  std::vector<double> g(n, 0.0);
  auto neg_log_grad = [&](std::size_t i, double t) {
    if (p[i] > kProbabilityFloor) g[i] -= weight * t / p[i];
  };
  switch (cfg.kind) {
    case LossKind::CE:
      neg_log_grad(label, 1.0);
      break;
    case LossKind::CELabelSmooth: {
      const double r = cfg.smoothing_rate;
      if (r == 0.0) {
        neg_log_grad(label, 1.0);
        break;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const double t = (static_cast<int>(i) == label ? 1.0 - r : 0.0) +
                         r / static_cast<double>(n);
        neg_log_grad(i, t);
      }
      break;
    }
    case LossKind::MAE:
      for (std::size_t i = 0; i < n; ++i) {
        const double diff = p[i] - (static_cast<int>(i) == label ? 1.0 : 0.0);
        g[i] = weight * static_cast<double>((diff > 0.0) - (diff < 0.0));
      }
      break;
  }
  return g;
}

std::vector<double> class_weights(std::span<const std::size_t> counts) {
  const std::size_t total =
      std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  if (total == 0) throw std::invalid_argument("empty dataset");
  const auto nonempty = static_cast<double>(
      std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }));
  std::vector<double> w(counts.size(), 0.0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0)
      w[i] = static_cast<double>(total) /
             (nonempty * static_cast<double>(counts[i]));
  }
  return w;
}

std::vector<std::size_t> stratified_indices(
    const std::vector<std::vector<std::size_t>>& class_index_lists,
    std::size_t batch_size, std::mt19937_64& rng) {
  std::vector<std::size_t> nonempty;
  for (std::size_t c = 0; c < class_index_lists.size(); ++c)
    if (!class_index_lists[c].empty()) nonempty.push_back(c);
  if (nonempty.empty())
    throw std::invalid_argument("stratified_indices: no nonempty class");
  if (batch_size == 0)
    throw std::invalid_argument("stratified_indices: batch_size must be >= 1");

  std::vector<std::size_t> quota(class_index_lists.size(), 0);
  const std::size_t base = batch_size / nonempty.size();
  for (std::size_t c : nonempty) quota[c] = base;

  // Remainder goes to the largest classes, lowest index first on ties.
  std::vector<std::size_t> by_size = nonempty;
  std::stable_sort(by_size.begin(), by_size.end(), [&](auto a, auto b) {
    return class_index_lists[a].size() > class_index_lists[b].size();
  });
  std::size_t remainder = batch_size - base * nonempty.size();
  for (std::size_t k = 0; remainder > 0; k = (k + 1) % by_size.size(), --remainder)
    ++quota[by_size[k]];

  std::vector<std::size_t> out;
  out.reserve(batch_size);
  for (std::size_t c : nonempty) {
    const auto& members = class_index_lists[c];
    if (members.size() < quota[c]) {
      std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
      for (std::size_t k = 0; k < quota[c]; ++k) out.push_back(members[pick(rng)]);
    } else {
      std::sample(members.begin(), members.end(), std::back_inserter(out),
                  quota[c], rng);
    }
  }
  return out;
}

std::vector<std::size_t> uniform_indices(std::size_t dataset_size,
                                         std::size_t batch_size,
                                         std::mt19937_64& rng) {
  if (dataset_size == 0) throw std::invalid_argument("uniform_indices: empty dataset");
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  if (dataset_size >= batch_size) {
    std::vector<std::size_t> all(dataset_size);
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::sample(all.begin(), all.end(), std::back_inserter(out), batch_size, rng);
    std::shuffle(out.begin(), out.end(), rng);
  } else {
    std::uniform_int_distribution<std::size_t> pick(0, dataset_size - 1);
    for (std::size_t k = 0; k < batch_size; ++k) out.push_back(pick(rng));
  }
  return out;
}

}  // namespace erl
