#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ritznet/batch_eval.hpp"
#include "ritznet/tape.hpp"

namespace ritznet {

// Strong Dirichlet imposition: the field exposed to losses is
// lift + cutoff * raw_network, where the cutoff vanishes exactly on the
// Dirichlet boundary and is smooth on the closed domain (losses differentiate
// the masked field).
struct BoundaryMask {
  std::string name;
  std::function<DualValue(const Point&)> lift;
  std::function<DualValue(const Point&)> cutoff;

  DualValue apply(const DualValue& raw, const Point& x) const {
    return lift(x) + cutoff(x) * raw;
  }
};

// D(x) = x(1-x), for H^1_0(0,1).
BoundaryMask mask_interval_h10();
// D(x) = 1-x, for { v in H^1(0,1) : v(1) = 0 }.
BoundaryMask mask_outflow_right();
// D(x,y) = x*y, for fields vanishing on the inflow edges x=0 and y=0.
BoundaryMask mask_inflow_corner_2d();
// D = 1: boundary-free.
BoundaryMask mask_free(int dim);
BoundaryMask mask_from_name(const std::string& name);

// Trial network plus the trial-to-test network acting on (x, u(x)). The test
// mask is applied to the composed output, so the composition satisfies the
// test space's essential conditions for every parameter configuration.
struct TrialTestPair {
  NetworkSpec trial_spec;
  ParamStore trial_params;
  BoundaryMask trial_mask;
  NetworkSpec tau_spec;  // input_dim = spatial dim + 1 (the u channel)
  ParamStore tau_params;
  BoundaryMask tau_mask;
};

// Single-point masked evaluation recorded on a tape (the scalar reference
// path; production batches go through the *Batch classes below).
TapeEval eval_masked(const NetworkSpec& spec, const ParamStore& params, const BoundaryMask& mask,
                     const Point& x, int order);

// Single-point tau(u) composition. The tape registers trial leaves first and
// tau leaves second, so param_gradient returns [d/d theta_u ; d/d theta_tau].
TapeEval eval_test_composition(const TrialTestPair& pair, const Point& x, int order);

// Masked network over a batch with a reverse pass.
class MaskedNetBatch {
 public:
  MaskedNetBatch(NetworkSpec spec, BoundaryMask mask, int dim, int order);

  const BatchDual& eval(const ParamStore& params, const std::vector<Point>& points);
  // Adjoint of the masked output -> parameter gradient (accumulated).
  void backward(const BatchDual& masked_adj, const ParamStore& params, Vec* grad);

  const BatchDual& masked() const { return masked_; }
  int order() const { return net_.order(); }

 private:
  MlpBatch net_;
  BoundaryMask mask_;
  int dim_, order_;
  BatchDual lift_, cutoff_, masked_;
};

// tau network applied to (x, u(x)) with the test mask on top. Spatial
// derivatives of the composition flow through both the explicit coordinate
// channels and the u channel.
class TauNetBatch {
 public:
  TauNetBatch(NetworkSpec tau_spec, BoundaryMask tau_mask, int dim, int order);

  // `u` must carry at least this engine's order.
  const BatchDual& eval(const ParamStore& tau_params, const std::vector<Point>& points,
                        const BatchDual& u);
  // grad_tau and u_adj may each be null; u_adj receives the adjoint of the
  // u-channel input (to be pushed through the trial network's backward).
  void backward(const BatchDual& v_adj, const ParamStore& tau_params, Vec* grad_tau,
                BatchDual* u_adj);

  const BatchDual& composed() const { return masked_; }

 private:
  MlpBatch net_;
  BoundaryMask mask_;
  int dim_, order_;
  BatchDual lift_, cutoff_, masked_;
};

namespace detail {
void eval_mask_batch(const BoundaryMask& mask, const std::vector<Point>& points, int dim,
                     int order, BatchDual& lift, BatchDual& cutoff);
void apply_mask(const BatchDual& lift, const BatchDual& cutoff, const BatchDual& raw,
                BatchDual& masked);
// Transposed product rule: adjoint of the raw net output given the adjoint of
// the masked field.
void apply_mask_reverse(const BatchDual& cutoff, const BatchDual& masked_adj, BatchDual& raw_adj);
}  // namespace detail

}  // namespace ritznet
