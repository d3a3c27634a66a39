#pragma once

#include <span>
#include <vector>

namespace erl {

/// 1-based ranks; tied values share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

double pearson(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of average ranks. NaN when either side is constant.
double spearman(std::span<const double> a, std::span<const double> b);

double mean(std::span<const double> values);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> values);

}  // namespace erl
