#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ritznet/network.hpp"
#include "ritznet/variational.hpp"

namespace ritznet {

// A fully specified PDE instance: variational structure, boundary masks for
// each network, sampling plans, and whatever closed forms are known.
struct ProblemInstance {
  std::string id;
  std::optional<double> alpha;  // only for the parametric diffusion family
  VariationalProblem problem;
  BoundaryMask trial_mask, test_mask, tau_mask;
  SamplingPlan default_plan;
  SamplingPlan metric_plan;            // error-metric batches (10^4 nodes)
  SamplingPlan metric_numerator_plan;  // numerator override for singular cases
  // Points where exact solutions are non-smooth; quadrature nodes landing on
  // one (possible only after rounding) are nudged off it.
  std::vector<Point> special_points;
  int default_inner = 4;
  int default_warmup = 0;

  std::string display_id() const;
};

// Instance factories by id. `alpha` is required for poisson_weak_alpha and
// rejected elsewhere. Unknown ids throw ConfigError.
ProblemInstance make_problem(const std::string& id, std::optional<double> alpha = std::nullopt);

// Every instance the library ships, with the parametric family at the values
// used in the experiments.
std::vector<ProblemInstance> registry();

// The integral form of the trial-to-test operator of the ultraweak convection
// problem: (Tu)(x) = int_x^1 u(s) ds, by a 200-interval composite midpoint
// rule on (x, 1). Other ids have no integral T and throw.
double exact_T_apply(const std::string& id, const std::function<double(double)>& u, double x);

// Draws a batch from the plan and nudges any node that landed exactly on a
// special point of the instance.
QuadBatch make_batch(const ProblemInstance& inst, const SamplingPlan& plan, Rng& rng);

}  // namespace ritznet
