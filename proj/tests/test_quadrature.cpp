#include <doctest.h>

#include <cmath>

#include "ritznet/quadrature.hpp"

using namespace ritznet;

TEST_CASE("uniform plan: sorted nodes in (0,1), weights sum to the volume") {
  const SamplingPlan plan = SamplingPlan::uniform1d(5);
  for (uint64_t seed : {1u, 7u, 1000u}) {
    const QuadBatch b = sample_batch(plan, seed);
    CHECK(b.size() == 5);
    for (int i = 0; i < b.size(); ++i) {
      CHECK(b.points[static_cast<size_t>(i)][0] > 0.0);
      CHECK(b.points[static_cast<size_t>(i)][0] < 1.0);
      CHECK(b.weights[i] > 0.0);
      if (i > 0)
        CHECK(b.points[static_cast<size_t>(i)][0] > b.points[static_cast<size_t>(i - 1)][0]);
    }
    CHECK(std::abs(b.total_weight() - 1.0) < 1e-12);
  }
}

TEST_CASE("weight positivity and volume across many seeds and plan shapes") {
  std::vector<SamplingPlan> plans{
      SamplingPlan::uniform1d(50),
      SamplingPlan{{AxisPlan{{BetaSample{50, 1, 1, false}, BetaSample{50, 1e4, 1, true}}}}},
      SamplingPlan::uniform2d(8),
  };
  for (const auto& plan : plans) {
    for (uint64_t seed = 0; seed < 333; ++seed) {
      const QuadBatch b = sample_batch(plan, seed);
      CHECK(b.weights.minCoeff() > 0.0);
      CHECK(std::abs(b.total_weight() - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("two-sample plan concentrates reflected beta(1e4,1) mass near zero") {
  const SamplingPlan plan{
      {AxisPlan{{BetaSample{100, 1, 1, false}, BetaSample{100, 1e4, 1, true}}}}};
  int failures = 0;
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const QuadBatch b = sample_batch(plan, seed);
    CHECK(b.size() == 200);
    int near_zero = 0;
    for (const Point& p : b.points)
      if (p[0] < 0.01) ++near_zero;
    if (near_zero < 90) ++failures;
  }
  CHECK(failures == 0);
}

TEST_CASE("2D cartesian product: 50 nodes per axis gives 2500 pairs") {
  const QuadBatch b = sample_batch(SamplingPlan::uniform2d(50), 3);
  CHECK(b.size() == 2500);
  CHECK(std::abs(b.total_weight() - 1.0) < 1e-12);
}

TEST_CASE("integrate: constants are exact") {
  const QuadBatch b = sample_batch(SamplingPlan::uniform1d(100), 5);
  const double r = integrate(b, [](const Point&) { return 4.25; });
  CHECK(r == doctest::Approx(4.25).epsilon(1e-13));
}

TEST_CASE("integrate: sin(pi x) averaged over seeds approaches 2/pi") {
  double acc = 0.0;
  const int n_seeds = 50;
  for (uint64_t seed = 0; seed < n_seeds; ++seed) {
    const QuadBatch b = sample_batch(SamplingPlan::uniform1d(1000), seed);
    acc += integrate(b, [](const Point& p) { return std::sin(M_PI * p[0]); });
  }
  CHECK(std::abs(acc / n_seeds - 2.0 / M_PI) < 2e-3);
}

TEST_CASE("integrate: (2x-1)^2 at N=1e4 is 1/3 within 1e-4") {
  const QuadBatch b = sample_batch(SamplingPlan::uniform1d(10000), 12);
  const double r = integrate(b, [](const Point& p) {
    const double t = 2.0 * p[0] - 1.0;
    return t * t;
  });
  CHECK(std::abs(r - 1.0 / 3.0) < 1e-4);
}

TEST_CASE("determinism: identical seed and plan give identical batches") {
  const SamplingPlan plan{{AxisPlan{{BetaSample{64, 2.5, 1.5, true}}}}};
  const QuadBatch a = sample_batch(plan, 99);
  const QuadBatch b = sample_batch(plan, 99);
  REQUIRE(a.size() == b.size());
  for (int i = 0; i < a.size(); ++i) {
    CHECK(a.points[static_cast<size_t>(i)][0] == b.points[static_cast<size_t>(i)][0]);
    CHECK(a.weights[i] == b.weights[i]);
  }
}

TEST_CASE("degenerate beta parameters are rejected") {
  SamplingPlan plan{{AxisPlan{{BetaSample{10, 0.0, 1.0, false}}}}};
  CHECK_THROWS_AS(sample_batch(plan, 1), ConfigError);
  plan.axes[0].samples[0] = BetaSample{10, 1.0, -2.0, false};
  CHECK_THROWS_AS(sample_batch(plan, 1), ConfigError);
  plan.axes[0].samples[0] = BetaSample{1, 1.0, 1.0, false};
  CHECK_THROWS_AS(sample_batch(plan, 1), ConfigError);  // fewer than 2 nodes
}

TEST_CASE("non-finite integrand is reported") {
  const QuadBatch b = sample_batch(SamplingPlan::uniform1d(10), 2);
  CHECK_THROWS(integrate(b, [](const Point& p) { return 1.0 / (p[0] - p[0]); }));
}
