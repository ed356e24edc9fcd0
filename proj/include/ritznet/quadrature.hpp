#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ritznet/common.hpp"
#include "ritznet/rng.hpp"

namespace ritznet {

// One beta-distributed node sample on (0,1). With `reflect` the draws x are
// replaced by 1-x before sorting, moving the concentration of mass to the
// opposite end of the interval.
struct BetaSample {
  int count = 0;
  double a = 1.0;
  double b = 1.0;
  bool reflect = false;
};

// Node-generation recipe for one axis: the union of one or more beta samples
// ("two-sampled batches" use two entries).
struct AxisPlan {
  std::vector<BetaSample> samples;

  int total_count() const {
    int n = 0;
    for (const auto& s : samples) n += s.count;
    return n;
  }
};

struct SamplingPlan {
  std::vector<AxisPlan> axes;  // size 1 or 2

  int dim() const { return static_cast<int>(axes.size()); }

  static SamplingPlan uniform1d(int n) {
    return SamplingPlan{{AxisPlan{{BetaSample{n, 1.0, 1.0, false}}}}};
  }
  static SamplingPlan uniform2d(int n_per_axis) {
    AxisPlan ax{{BetaSample{n_per_axis, 1.0, 1.0, false}}};
    return SamplingPlan{{ax, ax}};
  }
};

// Randomized composite intermediate-point rule over (0,1)^dim: sorted nodes,
// each weighted by the gap between the midpoints to its neighbors (endpoints
// clamped to the domain boundary). In 2D the rule is applied per axis and the
// weights are tensor products.
struct QuadBatch {
  int dim = 1;
  std::vector<std::vector<double>> axis_nodes;    // per axis, strictly increasing
  std::vector<std::vector<double>> axis_weights;  // per axis, positive
  std::vector<Point> points;                      // flattened (axis 0 fastest)
  Vec weights;                                    // same length as points

  int size() const { return static_cast<int>(points.size()); }
  double total_weight() const { return weights.sum(); }
};

// One beta(a,b) draw. Exposed for direct use and for distribution tests.
double sample_beta(double a, double b, Rng& rng);

// Draw nodes per the plan and assemble the composite intermediate-point rule.
// Duplicate nodes (possible only after floating-point rounding) are merged.
QuadBatch sample_batch(const SamplingPlan& plan, uint64_t seed);
QuadBatch sample_batch(const SamplingPlan& plan, Rng& rng);

// Sum of weight * integrand(node). Throws on a non-finite integrand value,
// naming the offending node.
double integrate(const QuadBatch& batch, const std::function<double(const Point&)>& integrand);

}  // namespace ritznet
