#include "ritznet/network.hpp"

namespace ritznet {

namespace {
std::function<DualValue(const Point&)> zero_lift() {
  return [](const Point& x) { return DualValue::constant(0.0, x.dim); };
}
}  // namespace

BoundaryMask mask_interval_h10() {
  BoundaryMask m;
  m.name = "interval_h10";
  m.lift = zero_lift();
  m.cutoff = [](const Point& p) {
    const DualValue x = DualValue::axis(p[0], 0, 1);
    return x * (1.0 - x);
  };
  return m;
}

BoundaryMask mask_outflow_right() {
  BoundaryMask m;
  m.name = "outflow_right";
  m.lift = zero_lift();
  m.cutoff = [](const Point& p) { return 1.0 - DualValue::axis(p[0], 0, 1); };
  return m;
}

BoundaryMask mask_inflow_corner_2d() {
  BoundaryMask m;
  m.name = "inflow_corner_2d";
  m.lift = zero_lift();
  m.cutoff = [](const Point& p) {
    return DualValue::axis(p[0], 0, 2) * DualValue::axis(p[1], 1, 2);
  };
  return m;
}

BoundaryMask mask_free(int dim) {
  BoundaryMask m;
  m.name = "free";
  m.lift = zero_lift();
  m.cutoff = [dim](const Point&) { return DualValue::constant(1.0, dim); };
  return m;
}

BoundaryMask mask_from_name(const std::string& name) {
  if (name == "interval_h10") return mask_interval_h10();
  if (name == "outflow_right") return mask_outflow_right();
  if (name == "inflow_corner_2d") return mask_inflow_corner_2d();
  if (name == "free" || name == "free_1d") return mask_free(1);
  if (name == "free_2d") return mask_free(2);
  throw ConfigError("unknown boundary mask: '" + name + "'");
}

TapeEval eval_masked(const NetworkSpec& spec, const ParamStore& params, const BoundaryMask& mask,
                     const Point& x, int order) {
  if (order < 0 || order > 2)
    throw UnsupportedOrderError("eval_masked: derivative order must be 0, 1 or 2");
  TapeEval ev{Tape(x.dim), -1, DualValue()};
  const int base = ev.tape.leaves(params.values);
  std::vector<int> inputs;
  for (int ax = 0; ax < x.dim; ++ax) inputs.push_back(ev.tape.axis_input(x[ax], ax, order));
  const int raw = tape_net_forward(ev.tape, spec, base, inputs);
  const int lift = ev.tape.constant(mask.lift(x));
  const int cut = ev.tape.constant(mask.cutoff(x));
  ev.output = ev.tape.add(lift, ev.tape.mul(cut, raw));
  ev.value = ev.tape.value(ev.output);
  ev.value.order = order;
  return ev;
}

TapeEval eval_test_composition(const TrialTestPair& pair, const Point& x, int order) {
  if (order < 0 || order > 2)
    throw UnsupportedOrderError("eval_test_composition: derivative order must be 0, 1 or 2");
  TapeEval ev{Tape(x.dim), -1, DualValue()};
  const int u_base = ev.tape.leaves(pair.trial_params.values);
  const int tau_base = ev.tape.leaves(pair.tau_params.values);

  std::vector<int> xs;
  for (int ax = 0; ax < x.dim; ++ax) xs.push_back(ev.tape.axis_input(x[ax], ax, order));

  const int u_raw = tape_net_forward(ev.tape, pair.trial_spec, u_base, xs);
  const int u_masked = ev.tape.add(ev.tape.constant(pair.trial_mask.lift(x)),
                                   ev.tape.mul(ev.tape.constant(pair.trial_mask.cutoff(x)), u_raw));

  std::vector<int> tau_inputs = xs;
  tau_inputs.push_back(u_masked);
  const int tau_raw = tape_net_forward(ev.tape, pair.tau_spec, tau_base, tau_inputs);
  ev.output = ev.tape.add(ev.tape.constant(pair.tau_mask.lift(x)),
                          ev.tape.mul(ev.tape.constant(pair.tau_mask.cutoff(x)), tau_raw));
  ev.value = ev.tape.value(ev.output);
  ev.value.order = order;
  return ev;
}

namespace detail {

void eval_mask_batch(const BoundaryMask& mask, const std::vector<Point>& points, int dim,
                     int order, BatchDual& lift, BatchDual& cutoff) {
  const int n = static_cast<int>(points.size());
  lift = BatchDual::zeros(n, dim, order);
  cutoff = BatchDual::zeros(n, dim, order);
  for (int i = 0; i < n; ++i) {
    lift.set(i, mask.lift(points[static_cast<size_t>(i)]));
    cutoff.set(i, mask.cutoff(points[static_cast<size_t>(i)]));
  }
}

void apply_mask(const BatchDual& lift, const BatchDual& cutoff, const BatchDual& raw,
                BatchDual& masked) {
  const int dim = raw.dim;
  const int order = raw.order;
  masked.dim = dim;
  masked.order = order;
  masked.comp.resize(raw.comp.rows(), raw.comp.cols());
  const auto dv = cutoff.comp.col(comp_val()).array();
  const auto rv = raw.comp.col(comp_val()).array();
  masked.comp.col(comp_val()) = (lift.comp.col(comp_val()).array() + dv * rv).matrix();
  for (int ax = 0; ax < dim && order >= 1; ++ax) {
    const auto d1 = cutoff.comp.col(comp_d1(ax)).array();
    const auto r1 = raw.comp.col(comp_d1(ax)).array();
    masked.comp.col(comp_d1(ax)) =
        (lift.comp.col(comp_d1(ax)).array() + d1 * rv + dv * r1).matrix();
    if (order >= 2) {
      const auto d2 = cutoff.comp.col(comp_d2(ax, dim)).array();
      const auto r2 = raw.comp.col(comp_d2(ax, dim)).array();
      masked.comp.col(comp_d2(ax, dim)) =
          (lift.comp.col(comp_d2(ax, dim)).array() + d2 * rv + 2.0 * d1 * r1 + dv * r2).matrix();
    }
  }
}

void apply_mask_reverse(const BatchDual& cutoff, const BatchDual& masked_adj, BatchDual& raw_adj) {
  const int dim = masked_adj.dim;
  const int order = masked_adj.order;
  raw_adj.dim = dim;
  raw_adj.order = order;
  raw_adj.comp.resize(masked_adj.comp.rows(), masked_adj.comp.cols());
  const auto dv = cutoff.comp.col(comp_val()).array();
  auto mv = masked_adj.comp.col(comp_val()).array();
  Eigen::ArrayXd acc = dv * mv;
  for (int ax = 0; ax < dim && order >= 1; ++ax) {
    const auto d1 = cutoff.comp.col(comp_d1(ax)).array();
    const auto m1 = masked_adj.comp.col(comp_d1(ax)).array();
    acc += d1 * m1;
    if (order >= 2) {
      const auto d2 = cutoff.comp.col(comp_d2(ax, dim)).array();
      const auto m2 = masked_adj.comp.col(comp_d2(ax, dim)).array();
      acc += d2 * m2;
      raw_adj.comp.col(comp_d1(ax)) = (dv * m1 + 2.0 * d1 * m2).matrix();
      raw_adj.comp.col(comp_d2(ax, dim)) = (dv * m2).matrix();
    } else {
      raw_adj.comp.col(comp_d1(ax)) = (dv * m1).matrix();
    }
  }
  raw_adj.comp.col(comp_val()) = acc.matrix();
}

}  // namespace detail

MaskedNetBatch::MaskedNetBatch(NetworkSpec spec, BoundaryMask mask, int dim, int order)
    : net_(std::move(spec), dim, order), mask_(std::move(mask)), dim_(dim), order_(order) {}

const BatchDual& MaskedNetBatch::eval(const ParamStore& params, const std::vector<Point>& points) {
  detail::eval_mask_batch(mask_, points, dim_, order_, lift_, cutoff_);
  const BatchDual& raw = net_.forward(params, spatial_inputs(points, dim_, order_));
  detail::apply_mask(lift_, cutoff_, raw, masked_);
  return masked_;
}

void MaskedNetBatch::backward(const BatchDual& masked_adj, const ParamStore& params, Vec* grad) {
  BatchDual raw_adj;
  detail::apply_mask_reverse(cutoff_, masked_adj, raw_adj);
  net_.backward(raw_adj, params, grad, nullptr);
}

TauNetBatch::TauNetBatch(NetworkSpec tau_spec, BoundaryMask tau_mask, int dim, int order)
    : net_(std::move(tau_spec), dim, order), mask_(std::move(tau_mask)), dim_(dim), order_(order) {}

const BatchDual& TauNetBatch::eval(const ParamStore& tau_params, const std::vector<Point>& points,
                                   const BatchDual& u) {
  if (u.order < order_)
    throw InternalError("TauNetBatch: u channel carries too low a derivative order");
  detail::eval_mask_batch(mask_, points, dim_, order_, lift_, cutoff_);
  std::vector<BatchDual> inputs = spatial_inputs(points, dim_, order_);
  inputs.push_back(u);  // extra channel; MlpBatch reads the leading comps
  const BatchDual& raw = net_.forward(tau_params, inputs);
  detail::apply_mask(lift_, cutoff_, raw, masked_);
  return masked_;
}

void TauNetBatch::backward(const BatchDual& v_adj, const ParamStore& tau_params, Vec* grad_tau,
                           BatchDual* u_adj) {
  BatchDual raw_adj;
  detail::apply_mask_reverse(cutoff_, v_adj, raw_adj);
  std::vector<BatchDual> input_adj;
  net_.backward(raw_adj, tau_params, grad_tau, u_adj ? &input_adj : nullptr);
  if (u_adj) *u_adj = std::move(input_adj.back());
}

}  // namespace ritznet
