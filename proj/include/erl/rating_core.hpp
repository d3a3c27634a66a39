#pragma once

// Rating model math: per-batch normalization, class boundary placement,
// class probabilities, the loss family and the batch sampling schemes.
// Everything here is a pure function of its arguments.

#include <cstddef>
#include <random>
#include <span>
#include <vector>

namespace erl {

using RatingLabel = int;

enum class LossKind { CE, MAE, CELabelSmooth };
enum class Sampling { Uniform, Stratified };

struct LossConfig {
  LossKind kind = LossKind::MAE;
  double smoothing_rate = 0.1;  // only read by CELabelSmooth
  bool class_weighting = true;
  Sampling sampling = Sampling::Stratified;
};

/// Monotone cut points R_0 = 0 <= R_1 <= ... <= R_n = 1.
struct RatingBoundaries {
  std::vector<double> bounds;

  int num_classes() const { return static_cast<int>(bounds.size()) - 1; }

  /// Index of the half-open interval [R_i, R_{i+1}) containing x; the last
  /// interval is closed at 1. Empty intervals are never returned.
  int interval_of(double x) const;
};

inline constexpr double kProbabilityFloor = 1e-12;

/// Min-max rescaling into [0, 1]. Equal inputs map to 0.5.
std::vector<double> normalize_returns(std::span<const double> raw);

/// Quantile-midpoint placement: boundary i+1 sits between the k_i-th and
/// (k_i+1)-th smallest normalized return, where k_i is the cumulative
/// teacher count of classes 0..i in the batch.
RatingBoundaries compute_boundaries(std::span<const double> normalized,
                                    std::span<const RatingLabel> labels,
                                    int n);

std::vector<double> rating_probabilities(double r_tilde,
                                         const RatingBoundaries& b);

/// Exponents -(x - R_i)(x - R_{i+1}) before the softmax.
std::vector<double> rating_logits(double r_tilde, const RatingBoundaries& b);

double ce_loss(std::span<const double> p, RatingLabel label, double weight);
double mae_loss(std::span<const double> p, RatingLabel label, double weight);
double smoothed_ce_loss(std::span<const double> p, RatingLabel label,
                        double r, double weight);

/// Dispatch on cfg.kind.
double rating_loss(std::span<const double> p, RatingLabel label, double weight,
                   const LossConfig& cfg);

/// d loss / d p for the configured loss. Matches the floor used in the
/// value, so components below the floor have zero gradient.
std::vector<double> rating_loss_grad(std::span<const double> p,
                                     RatingLabel label, double weight,
                                     const LossConfig& cfg);

/// Inverse-frequency weights B / (n_nonempty * c_i); empty classes get 0.
std::vector<double> class_weights(std::span<const std::size_t> counts);

/// Per-class quotas floor(B / n_nonempty); the remainder goes one at a time to
/// the largest classes. Within a class: without replacement when the class
/// can fill its quota, with replacement otherwise.
std::vector<std::size_t> stratified_indices(
    const std::vector<std::vector<std::size_t>>& class_index_lists,
    std::size_t batch_size, std::mt19937_64& rng);

std::vector<std::size_t> uniform_indices(std::size_t dataset_size,
                                         std::size_t batch_size,
                                         std::mt19937_64& rng);

}  // namespace erl
