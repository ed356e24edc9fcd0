#pragma once

#include <functional>
#include <optional>

#include "ritznet/problems.hpp"
#include "ritznet/record.hpp"

namespace ritznet {

// A field evaluated over a list of points at a requested derivative order.
using BatchField = std::function<BatchDual(const std::vector<Point>&, int order)>;

// Wraps a closed-form pointwise map as a BatchField.
BatchField closed_form_field(std::function<DualValue(const Point&)> fn, int dim);

struct ErrorReport {
  double relative_u = NAN;  // percent
  std::optional<double> relative_v;
  int batch_size = 0;
  uint64_t seed = 0;
};

// 100 * ||approx - exact|| / ||exact|| in the (semi)norm defined by `norm`,
// both integrals over the given batch; the denominator is replaced by the
// closed form when one is supplied. Throws ConfigError on a zero denominator.
double relative_error(const BatchField& approx, const std::function<DualValue(const Point&)>& exact,
                      const std::vector<QuadTerm>& norm, int dim, const QuadBatch& batch,
                      std::optional<double> exact_norm);

// The unit-norm test maximizer of the residual action for the weak SPD case
// (T = identity): J(u) = (u - u*) / ||u - u*||_V, with the norm evaluated on a
// dedicated batch. Throws UndefinedMaximizerError at the exact solution.
class ClosedFormMaximizer {
 public:
  ClosedFormMaximizer(const ProblemInstance& inst, std::function<DualValue(const Point&)> u,
                      const QuadBatch& norm_batch);

  double diff_norm() const { return norm_; }
  double operator()(const Point& x) const;
  DualValue eval(const Point& x) const;  // with spatial derivatives

 private:
  const ProblemInstance& inst_;
  std::function<DualValue(const Point&)> u_;
  double norm_ = 0.0;
};

struct ProbeRow {
  double eps = 0.0;
  double u_dist = 0.0;   // ||u1 - u2||_U = 2 eps ||w||_U
  double j_dist = 0.0;   // ||J(u1) - J(u2)||_V, identically 2 up to quadrature
  double ratio = 0.0;    // j_dist / u_dist, blowing up as eps -> 0
};

// Perturbs the exact solution along +/- eps * direction and reports how the
// closed-form maximizer separates while the trial pair collapses. The
// direction is normalized to unit V-norm internally; all integrals use one
// 10^4-node batch drawn from `seed`.
std::vector<ProbeRow> instability_probe(const ProblemInstance& inst,
                                        const std::function<DualValue(const Point&)>& direction,
                                        const std::vector<double>& eps_list, uint64_t seed);

// Practical variant: for each eps trains a fresh test network to maximize the
// normalized residual action against the fixed trial fields u1, u2 and
// reports the same columns for the trained, normalized maximizers.
std::vector<ProbeRow> instability_probe_trained(
    const ProblemInstance& inst, const std::function<DualValue(const Point&)>& direction,
    const std::vector<double>& eps_list, const NetworkSpec& v_spec, long iters, double lr,
    uint64_t seed);

// (iteration, loss - optimum) over the outer-loop rows of a record.
std::vector<std::pair<long, double>> loss_optimum_gap(const TrainRecord& record, double optimum);

}  // namespace ritznet
