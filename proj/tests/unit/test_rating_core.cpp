#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "erl/rating_core.hpp"

using namespace erl;

namespace {

RatingBoundaries make_bounds(std::vector<double> b) { return RatingBoundaries{std::move(b)}; }

// Independent scalar evaluation of the rating probability for one class.
double eq_prob(double x, const std::vector<double>& b, int i) {
  double z = 0.0;
  for (std::size_t j = 0; j + 1 < b.size(); ++j) z += std::exp(-(x - b[j]) * (x - b[j + 1]));
  return std::exp(-(x - b[i]) * (x - b[i + 1])) / z;
}

std::vector<std::vector<std::size_t>> lists_from_sizes(const std::vector<std::size_t>& sizes) {
  std::vector<std::vector<std::size_t>> lists(sizes.size());
  std::size_t next = 0;
  for (std::size_t c = 0; c < sizes.size(); ++c)
    for (std::size_t k = 0; k < sizes[c]; ++k) lists[c].push_back(next++);
  return lists;
}

}  // namespace

TEST_CASE("normalize_returns examples") {
  auto a = normalize_returns(std::vector<double>{2, 4, 6});
  CHECK(a == std::vector<double>{0.0, 0.5, 1.0});
  auto b = normalize_returns(std::vector<double>{3, 3, 3});
  CHECK(b == std::vector<double>{0.5, 0.5, 0.5});
  auto c = normalize_returns(std::vector<double>{-1, 0, 3});
  CHECK(c[0] == 0.0);
  CHECK(c[1] == doctest::Approx(0.25));
  CHECK(c[2] == 1.0);
  CHECK_THROWS_AS(normalize_returns(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("normalize_returns is invariant to shift and positive scale") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> raw(1 + trial % 9);
    for (auto& v : raw) v = u(rng);
    const double shift = u(rng), scale = std::exp(u(rng) / 2.0);
    std::vector<double> moved;
    for (double v : raw) moved.push_back(v * scale + shift);
    auto n0 = normalize_returns(raw);
    auto n1 = normalize_returns(moved);
    for (std::size_t i = 0; i < raw.size(); ++i) CHECK(n1[i] == doctest::Approx(n0[i]).epsilon(1e-9));
  }
}

TEST_CASE("compute_boundaries examples") {
  auto b = compute_boundaries(std::vector<double>{0.0, 0.2, 0.8, 1.0}, std::vector<int>{0, 0, 1, 1}, 2);
  CHECK(b.bounds == std::vector<double>{0.0, 0.5, 1.0});

  auto one = compute_boundaries(std::vector<double>{0.3, 0.9}, std::vector<int>{0, 0}, 1);
  CHECK(one.bounds == std::vector<double>{0.0, 1.0});

  auto all0 = compute_boundaries(std::vector<double>{0.1, 0.5, 0.9}, std::vector<int>{0, 0, 0}, 3);
  CHECK(all0.bounds == std::vector<double>{0.0, 1.0, 1.0, 1.0});

  auto top = compute_boundaries(std::vector<double>{0.1, 0.5, 0.9}, std::vector<int>{2, 2, 2}, 3);
  CHECK(top.bounds == std::vector<double>{0.0, 0.0, 0.0, 1.0});
}

TEST_CASE("compute_boundaries rejects bad input") {
  CHECK_THROWS_AS(compute_boundaries(std::vector<double>{0.1, 0.2}, std::vector<int>{0}, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(compute_boundaries(std::vector<double>{0.1}, std::vector<int>{2}, 2),
                  std::invalid_argument);
}

TEST_CASE("boundaries are monotone and reproduce teacher counts") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 3);
    const std::size_t size = 1 + rng() % 8;
    std::set<double> distinct;
    while (distinct.size() < size) distinct.insert(u(rng));
    std::vector<double> raw(distinct.begin(), distinct.end());
    std::shuffle(raw.begin(), raw.end(), rng);
    auto x = normalize_returns(raw);
    std::vector<int> labels(size);
    for (auto& l : labels) l = static_cast<int>(rng() % n);
    auto b = compute_boundaries(x, labels, n);
    REQUIRE(b.bounds.size() == static_cast<std::size_t>(n + 1));
    CHECK(b.bounds.front() == 0.0);
    CHECK(b.bounds.back() == 1.0);
    for (int i = 0; i < n; ++i) CHECK(b.bounds[i] <= b.bounds[i + 1]);
    std::vector<int> teacher(n, 0), model(n, 0);
    for (std::size_t j = 0; j < size; ++j) {
      ++teacher[labels[j]];
      ++model[b.interval_of(x[j])];
    }
    CHECK(teacher == model);
  }
}

TEST_CASE("interval_of uses half-open intervals closed at one") {
  auto b = make_bounds({0.0, 0.25, 0.25, 1.0});
  CHECK(b.interval_of(0.0) == 0);
  CHECK(b.interval_of(0.2499) == 0);
  CHECK(b.interval_of(0.25) == 2);
  CHECK(b.interval_of(1.0) == 2);
}

TEST_CASE("rating_probabilities examples") {
  auto p = rating_probabilities(0.5, make_bounds({0, 0.5, 1}));
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  auto q = rating_probabilities(0.0, make_bounds({0, 0.5, 1}));
  const double e = std::exp(-0.5);
  CHECK(q[0] == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-12));
  CHECK(q[1] == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
  CHECK(q[0] == doctest::Approx(0.6225).epsilon(1e-4));

  auto r = rating_probabilities(0.9, make_bounds({0, 1.0 / 3, 2.0 / 3, 1}));
  CHECK(std::max_element(r.begin(), r.end()) - r.begin() == 2);
  auto logits = rating_logits(0.9, make_bounds({0, 1.0 / 3, 2.0 / 3, 1}));
  CHECK(logits[0] < 0.0);
  CHECK(logits[1] < 0.0);
  CHECK(logits[2] >= 0.0);
}

TEST_CASE("rating probabilities: simplex, positivity, interval argmax, scalar oracle") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    std::vector<double> b{0.0};
    std::vector<double> cuts(n - 1);
    for (auto& c : cuts) c = u(rng);
    std::sort(cuts.begin(), cuts.end());
    b.insert(b.end(), cuts.begin(), cuts.end());
    b.push_back(1.0);
    const double x = u(rng);
    auto p = rating_probabilities(x, make_bounds(b));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      CHECK(p[i] > 0.0);
      CHECK(p[i] <= 1.0);
      CHECK(p[i] == doctest::Approx(eq_prob(x, b, i)).epsilon(1e-12));
      sum += p[i];
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
    for (int i = 0; i < n; ++i)
      if (b[i] < x && x < b[i + 1])
        CHECK(std::max_element(p.begin(), p.end()) - p.begin() == i);
  }
}

TEST_CASE("ce_loss examples") {
  CHECK(ce_loss(std::vector<double>{1.0, 0.0}, 0, 1.0) == 0.0);
  CHECK(ce_loss(std::vector<double>{0.5, 0.5}, 1, 1.0) == doctest::Approx(std::log(2.0)));
  CHECK(ce_loss(std::vector<double>{0.25, 0.75}, 1, 2.0) == doctest::Approx(0.5754).epsilon(1e-4));
  const double floored = ce_loss(std::vector<double>{1.0, 0.0}, 1, 1.0);
  CHECK(std::isfinite(floored));
  CHECK(floored == doctest::Approx(-std::log(kProbabilityFloor)));
}

TEST_CASE("mae_loss examples and identity") {
  CHECK(mae_loss(std::vector<double>{1.0, 0.0}, 0, 1.0) == 0.0);
  CHECK(mae_loss(std::vector<double>{0.7, 0.3}, 0, 1.0) == doctest::Approx(0.6));
  CHECK(mae_loss(std::vector<double>{0.2, 0.5, 0.3}, 1, 1.0) == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + trial % 4;
    std::vector<double> p(n);
    double s = 0.0;
    for (auto& v : p) s += (v = u(rng));
    for (auto& v : p) v /= s;
    const int y = trial % n;
    const double w = u(rng) * 3.0;
    double direct = 0.0;
    for (int i = 0; i < n; ++i) direct += std::abs((i == y ? 1.0 : 0.0) - p[i]);
    CHECK(mae_loss(p, y, w) == doctest::Approx(w * 2.0 * (1.0 - p[y])).epsilon(1e-12));
    CHECK(mae_loss(p, y, w) == doctest::Approx(w * direct).epsilon(1e-12));
  }
}

TEST_CASE("smoothed_ce_loss examples") {
  CHECK(smoothed_ce_loss(std::vector<double>{0.5, 0.5}, 0, 0.1, 1.0) == doctest::Approx(std::log(2.0)));
  const double expected =
      -((0.9 + 0.1 / 3) * std::log(0.8) + (0.1 / 3) * std::log(0.1) + (0.1 / 3) * std::log(0.1));
  CHECK(smoothed_ce_loss(std::vector<double>{0.8, 0.1, 0.1}, 0, 0.1, 1.0) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.3617).epsilon(1e-3));

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p{u(rng), u(rng), u(rng)};
    const double s = p[0] + p[1] + p[2];
    for (auto& v : p) v /= s;
    const double w = u(rng);
    CHECK(smoothed_ce_loss(p, trial % 3, 0.0, w) == ce_loss(p, trial % 3, w));
  }
}

TEST_CASE("rating_loss dispatches on kind") {
  std::vector<double> p{0.6, 0.3, 0.1};
  LossConfig c;
  c.kind = LossKind::CE;
  CHECK(rating_loss(p, 1, 2.0, c) == ce_loss(p, 1, 2.0));
  c.kind = LossKind::MAE;
  CHECK(rating_loss(p, 1, 2.0, c) == mae_loss(p, 1, 2.0));
  c.kind = LossKind::CELabelSmooth;
  c.smoothing_rate = 0.2;
  CHECK(rating_loss(p, 1, 2.0, c) == smoothed_ce_loss(p, 1, 0.2, 2.0));
}

TEST_CASE("rating_loss_grad matches finite differences in p") {
  std::vector<double> p{0.5, 0.3, 0.2};
  for (LossKind kind : {LossKind::CE, LossKind::MAE, LossKind::CELabelSmooth}) {
    LossConfig c;
    c.kind = kind;
    auto g = rating_loss_grad(p, 2, 1.5, c);
    for (int i = 0; i < 3; ++i) {
      auto hi = p, lo = p;
      hi[i] += 1e-6;
      lo[i] -= 1e-6;
      const double fd = (rating_loss(hi, 2, 1.5, c) - rating_loss(lo, 2, 1.5, c)) / 2e-6;
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("class_weights examples and invariant") {
  auto w = class_weights(std::vector<std::size_t>{90, 10});
  CHECK(w[0] == doctest::Approx(100.0 / 180.0));
  CHECK(w[1] == doctest::Approx(5.0));
  CHECK(class_weights(std::vector<std::size_t>{5, 5}) == std::vector<double>{1.0, 1.0});
  CHECK(class_weights(std::vector<std::size_t>{10, 0, 10}) == std::vector<double>{1.0, 0.0, 1.0});
  CHECK_THROWS_AS(class_weights(std::vector<std::size_t>{0, 0}), std::invalid_argument);

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::size_t> counts(2 + trial % 4);
    std::size_t total = 0;
    for (auto& c : counts) total += (c = rng() % 50);
    if (total == 0) counts[0] = total = 1;
    auto weights = class_weights(counts);
    double s = 0.0;
    for (std::size_t i = 0; i < counts.size(); ++i) s += weights[i] * static_cast<double>(counts[i]);
    CHECK(s == doctest::Approx(static_cast<double>(total)).epsilon(1e-12));
  }
}

TEST_CASE("stratified_indices examples") {
  std::mt19937_64 rng(1);
  {
    auto lists = lists_from_sizes({100, 5, 1});
    auto idx = stratified_indices(lists, 32, rng);
    CHECK(idx.size() == 32);
    std::vector<int> per(3, 0);
    for (auto i : idx) ++per[i < 100 ? 0 : i < 105 ? 1 : 2];
    for (int c : per) CHECK(c >= 1);
  }
  {
    auto lists = lists_from_sizes({4});
    auto idx = stratified_indices(lists, 8, rng);
    CHECK(idx.size() == 8);
    for (auto i : idx) CHECK(i < 4);
    std::set<std::size_t> seen(idx.begin(), idx.end());
    CHECK(seen.size() <= 4);
  }
  {
    auto lists = lists_from_sizes({10, 10});
    auto idx = stratified_indices(lists, 10, rng);
    CHECK(std::count_if(idx.begin(), idx.end(), [](std::size_t i) { return i < 10; }) == 5);
    // Without replacement when the class can fill its quota.
    std::set<std::size_t> seen(idx.begin(), idx.end());
    CHECK(seen.size() == 10);
  }
  CHECK_THROWS_AS(stratified_indices(lists_from_sizes({0, 0}), 4, rng), std::invalid_argument);
}

TEST_CASE("stratified_indices covers every nonempty class") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::size_t> sizes(1 + trial % 5);
    std::size_t nonempty = 0;
    for (auto& s : sizes) nonempty += (s = rng() % 4 == 0 ? 0 : 1 + rng() % 40) > 0;
    if (nonempty == 0) {
      sizes[0] = 3;
      nonempty = 1;
    }
    const std::size_t batch = nonempty + rng() % 40;
    auto lists = lists_from_sizes(sizes);
    auto idx = stratified_indices(lists, batch, rng);
    REQUIRE(idx.size() == batch);
    std::map<std::size_t, int> hits;
    for (auto i : idx)
      for (std::size_t c = 0; c < lists.size(); ++c)
        if (std::find(lists[c].begin(), lists[c].end(), i) != lists[c].end()) ++hits[c];
    for (std::size_t c = 0; c < sizes.size(); ++c)
      if (sizes[c] > 0) CHECK(hits[c] >= 1);
  }
}

TEST_CASE("uniform_indices draws in range") {
  std::mt19937_64 rng(4);
  auto idx = uniform_indices(7, 100, rng);
  CHECK(idx.size() == 100);
  for (auto i : idx) CHECK(i < 7);
}
