#include "erl/features.hpp"

#include <algorithm>
#include <stdexcept>

namespace erl {

std::vector<double> FeatureEncoder::encode(int state, int action) const {
  std::vector<double> out(dim());
  encode(state, action, out);
  return out;
}

std::vector<double> FeatureEncoder::encode(const Segment& segment) const {
  const std::size_t d = dim();
  std::vector<double> out(segment.steps.size() * d);
  for (std::size_t t = 0; t < segment.steps.size(); ++t) {
    encode(segment.steps[t].state, segment.steps[t].action,
           std::span<double>(out).subspan(t * d, d));
  }
  return out;
}

OneHotFeatures::OneHotFeatures(int num_states, int num_actions)
    : num_states_(num_states), num_actions_(num_actions) {
  if (num_states < 1 || num_actions < 1)
    throw std::invalid_argument("OneHotFeatures: empty state or action space");
}

std::size_t OneHotFeatures::dim() const {
  return static_cast<std::size_t>(num_states_ + num_actions_);
}

void OneHotFeatures::encode(int state, int action, std::span<double> out) const {
  if (out.size() != dim()) throw std::invalid_argument("feature dimension mismatch");
  if (state < 0 || state >= num_states_ || action < 0 || action >= num_actions_)
    throw std::out_of_range("OneHotFeatures: state or action out of range");
  std::fill(out.begin(), out.end(), 0.0);
  out[state] = 1.0;
  out[num_states_ + action] = 1.0;
}

TableFeatures::TableFeatures(std::vector<std::vector<double>> rows)
    : rows_(std::move(rows)) {
  if (rows_.empty()) throw std::invalid_argument("TableFeatures: no rows");
  for (const auto& r : rows_)
    if (r.size() != rows_.front().size())
      throw std::invalid_argument("TableFeatures: ragged rows");
}

std::size_t TableFeatures::dim() const { return rows_.front().size(); }

void TableFeatures::encode(int state, int /*action*/, std::span<double> out) const {
  if (out.size() != dim()) throw std::invalid_argument("feature dimension mismatch");
  const auto& row = rows_.at(static_cast<std::size_t>(state));
  std::copy(row.begin(), row.end(), out.begin());
}

}  // namespace erl
