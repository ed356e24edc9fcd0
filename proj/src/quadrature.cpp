#include "ritznet/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ritznet {

double sample_beta(double a, double b, Rng& rng) { return rng.beta(a, b); }

namespace {

void validate_axis(const AxisPlan& axis) {
  if (axis.samples.empty()) throw ConfigError("sampling plan: axis has no samples");
  for (const auto& s : axis.samples) {
    if (s.count < 1) throw ConfigError("sampling plan: sample count must be >= 1");
    if (!(s.a > 0.0) || !(s.b > 0.0))
      throw ConfigError("sampling plan: beta parameters must be positive");
  }
  if (axis.total_count() < 2) throw ConfigError("sampling plan: need at least 2 nodes per axis");
}

// Alg. lines: draw, (reflect), sort, midpoint gaps as weights; merge ties.
void sample_axis(const AxisPlan& axis, Rng& rng, std::vector<double>& nodes,
                 std::vector<double>& weights) {
  nodes.clear();
  for (const auto& s : axis.samples) {
    for (int i = 0; i < s.count; ++i) {
      double x = rng.beta(s.a, s.b);
      if (s.reflect) x = 1.0 - x;
      nodes.push_back(x);
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

  const int n = static_cast<int>(nodes.size());
  weights.assign(static_cast<size_t>(n), 0.0);
  double m_prev = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m_next = (i + 1 < n) ? 0.5 * (nodes[i] + nodes[i + 1]) : 1.0;
    weights[static_cast<size_t>(i)] = m_next - m_prev;
    m_prev = m_next;
  }
}

}  // namespace

QuadBatch sample_batch(const SamplingPlan& plan, Rng& rng) {
  const int dim = plan.dim();
  if (dim < 1 || dim > kMaxDim) throw ConfigError("sampling plan: dimension must be 1 or 2");
  for (const auto& axis : plan.axes) validate_axis(axis);

  QuadBatch batch;
  batch.dim = dim;
  batch.axis_nodes.resize(static_cast<size_t>(dim));
  batch.axis_weights.resize(static_cast<size_t>(dim));
  for (int ax = 0; ax < dim; ++ax)
    sample_axis(plan.axes[static_cast<size_t>(ax)], rng, batch.axis_nodes[static_cast<size_t>(ax)],
                batch.axis_weights[static_cast<size_t>(ax)]);

  if (dim == 1) {
    const auto& xs = batch.axis_nodes[0];
    const auto& ws = batch.axis_weights[0];
    const int n = static_cast<int>(xs.size());
    batch.points.resize(static_cast<size_t>(n));
    batch.weights.resize(n);
    for (int i = 0; i < n; ++i) {
      batch.points[static_cast<size_t>(i)] = Point(xs[static_cast<size_t>(i)]);
      batch.weights[i] = ws[static_cast<size_t>(i)];
    }
  } else {
    const auto& xs = batch.axis_nodes[0];
    const auto& ys = batch.axis_nodes[1];
    const int nx = static_cast<int>(xs.size());
    const int ny = static_cast<int>(ys.size());
    batch.points.resize(static_cast<size_t>(nx) * static_cast<size_t>(ny));
    batch.weights.resize(nx * ny);
    int k = 0;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i, ++k) {
        batch.points[static_cast<size_t>(k)] =
            Point(xs[static_cast<size_t>(i)], ys[static_cast<size_t>(j)]);
        batch.weights[k] = batch.axis_weights[0][static_cast<size_t>(i)] *
                           batch.axis_weights[1][static_cast<size_t>(j)];
      }
    }
  }
  return batch;
}

QuadBatch sample_batch(const SamplingPlan& plan, uint64_t seed) {
  Rng rng(seed);
  return sample_batch(plan, rng);
}

double integrate(const QuadBatch& batch, const std::function<double(const Point&)>& integrand) {
  double acc = 0.0;
  for (int i = 0; i < batch.size(); ++i) {
    const double value = integrand(batch.points[static_cast<size_t>(i)]);
    if (!std::isfinite(value)) {
      const Point& p = batch.points[static_cast<size_t>(i)];
      throw std::runtime_error("integrate: non-finite integrand at x=" + std::to_string(p[0]) +
                               (batch.dim == 2 ? ", y=" + std::to_string(p[1]) : ""));
    }
    acc += batch.weights[i] * value;
  }
  return acc;
}

}  // namespace ritznet
