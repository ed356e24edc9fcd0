#include "ritznet/training.hpp"

#include <chrono>
#include <cmath>

namespace ritznet {

void adam_step(AdamState& state, Vec& params, const Vec& grad, int sign) {
  if (grad.size() != params.size() || state.m.size() != params.size())
    throw InternalError("adam_step: size mismatch");
  ++state.step;
  state.m = state.hp.beta1 * state.m + (1.0 - state.hp.beta1) * grad;
  state.v = state.hp.beta2 * state.v + (1.0 - state.hp.beta2) * grad.cwiseProduct(grad);
  const double mc = 1.0 - std::pow(state.hp.beta1, static_cast<double>(state.step));
  const double vc = 1.0 - std::pow(state.hp.beta2, static_cast<double>(state.step));
  params += (sign * state.hp.lr / mc) *
            (state.m.array() / ((state.v.array() / vc).sqrt() + state.hp.eps)).matrix();
}

namespace {

using Clock = std::chrono::steady_clock;

int norm_order(const std::vector<QuadTerm>& norm) {
  int o = 0;
  for (const auto& q : norm) o = std::max(o, q.comp.kind);
  return o;
}

void check_finite(double loss, const Vec& grad, long iter, LoopTag tag) {
  if (!std::isfinite(loss) || !grad.allFinite())
    throw TrainingDivergedError(iter, to_string(tag),
                                "non-finite loss or gradient at iteration " +
                                    std::to_string(iter) + " (" + to_string(tag) + " loop)");
}

// Deduplicated checkpoint outer-iteration indices with their fractions.
std::vector<std::pair<double, long>> checkpoint_marks(long outer_iters) {
  std::vector<std::pair<double, long>> marks;
  for (double f : LoopSchedule::checkpoint_fractions()) {
    const long k = std::lround(f * static_cast<double>(outer_iters));
    bool seen = false;
    for (const auto& m : marks) seen = seen || m.second == k;
    if (!seen) marks.emplace_back(f, k);
  }
  return marks;
}

// Shared checkpoint machinery: fixed evaluation batch from the dedicated
// metric stream, numerators on the (possibly singular) numerator plan,
// denominators from registered closed-form norms.
struct MetricContext {
  const ProblemInstance& inst;
  QuadBatch batch;

  MetricContext(const ProblemInstance& i, uint64_t metric_seed) : inst(i) {
    Rng rng(metric_seed);
    batch = make_batch(inst, inst.metric_numerator_plan, rng);
  }

  double trial_error(const BatchField& u_field) const {
    return relative_error(u_field, inst.problem.exact_u, inst.problem.u_norm, inst.problem.dim,
                          batch, inst.problem.exact_u_norm);
  }
  double test_error(const BatchField& v_field) const {
    return relative_error(v_field, inst.problem.exact_Tu, inst.problem.v_norm, inst.problem.dim,
                          batch, inst.problem.exact_Tu_norm);
  }
};

std::vector<Point> point_load_location(const VariationalProblem& p) {
  return p.load.point ? std::vector<Point>{p.load.point->x0} : std::vector<Point>{};
}

}  // namespace

TrainResult train_wan(const ProblemInstance& inst, const NetworkSpec& u_spec,
                      const NetworkSpec& v_spec, const LoopSchedule& schedule,
                      const AdamParams& adam_u, const AdamParams& adam_v,
                      const TrainSeeds& seeds) {
  const VariationalProblem& p = inst.problem;
  const auto t0 = Clock::now();

  TrainResult res;
  res.u_params = glorot_init(u_spec, seeds.params);
  res.aux_params = glorot_init(v_spec, seeds.params + 1);
  AdamState opt_u(res.u_params.size(), adam_u);
  AdamState opt_v(res.aux_params.size(), adam_v);

  MaskedNetBatch u_eng(u_spec, inst.trial_mask, p.dim, p.trial_order);
  MaskedNetBatch v_eng(v_spec, inst.test_mask, p.dim, p.test_order);
  MaskedNetBatch v_pt_eng(v_spec, inst.test_mask, p.dim, 0);
  const std::vector<Point> x0 = point_load_location(p);

  MetricContext metric(inst, seeds.metric);
  MaskedNetBatch u_metric(u_spec, inst.trial_mask, p.dim, norm_order(p.u_norm));
  auto u_field = [&](const std::vector<Point>& pts, int) {
    return u_metric.eval(res.u_params, pts);
  };

  Rng batch_rng(seeds.batch);
  long iter = 0;
  const auto marks = checkpoint_marks(schedule.outer_iters);
  auto checkpoint = [&](double fraction, long outer_done) {
    CheckpointRow row;
    row.fraction = fraction;
    row.outer_iter = outer_done;
    row.rel_u = metric.trial_error(u_field);
    res.record.checkpoints.push_back(row);
  };
  checkpoint(marks.front().first, 0);

  // One gradient step on the given side; returns false when the test norm
  // collapsed twice in a row (step skipped).
  auto wan_step = [&](bool train_u) {
    for (int attempt = 0; attempt < 2; ++attempt) {
      const QuadBatch batch = make_batch(inst, inst.default_plan, batch_rng);
      const BatchDual& u = u_eng.eval(res.u_params, batch.points);
      const BatchDual& v = v_eng.eval(res.aux_params, batch.points);
      const Vec f = load_density(p, batch.points);
      double v_x0 = 0.0;
      if (p.load.point) v_x0 = v_pt_eng.eval(res.aux_params, x0).value(0);
      try {
        const LossEval loss = loss_wan(p, u, v, batch.weights, f, v_x0, true);
        if (train_u) {
          Vec grad = Vec::Zero(res.u_params.size());
          u_eng.backward(loss.du, res.u_params, &grad);
          check_finite(loss.value, grad, iter + 1, LoopTag::Outer);
          adam_step(opt_u, res.u_params.values, grad, -1);
        } else {
          Vec grad = Vec::Zero(res.aux_params.size());
          v_eng.backward(loss.dv, res.aux_params, &grad);
          if (p.load.point) v_pt_eng.backward(loss.dv_pt, res.aux_params, &grad);
          check_finite(loss.value, grad, iter + 1, LoopTag::Inner);
          adam_step(opt_v, res.aux_params.values, grad, +1);
        }
        res.record.iters.push_back(
            {++iter, train_u ? LoopTag::Outer : LoopTag::Inner, loss.value, NAN});
        return;
      } catch (const DegenerateTestError&) {
        ++res.record.degenerate_events;
      }
    }
    res.record.iters.push_back({++iter, train_u ? LoopTag::Outer : LoopTag::Inner, NAN, NAN});
  };

  for (long k = 1; k <= schedule.outer_iters; ++k) {
    wan_step(true);
    for (int j = 0; j < schedule.inner_per_outer; ++j) wan_step(false);
    for (const auto& m : marks)
      if (m.second == k && k > 0) checkpoint(m.first, k);
  }
  res.record.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

TrainResult train_d2rm(const ProblemInstance& inst, const NetworkSpec& u_spec,
                       const NetworkSpec& tau_spec, const LoopSchedule& schedule,
                       const AdamParams& adam_u, const AdamParams& adam_tau,
                       const TrainSeeds& seeds) {
  const VariationalProblem& p = inst.problem;
  const auto t0 = Clock::now();
  if (tau_spec.input_dim != p.dim + 1)
    throw ConfigError("train_d2rm: tau network must take (x, u(x)) as input");

  TrainResult res;
  res.u_params = glorot_init(u_spec, seeds.params);
  res.aux_params = glorot_init(tau_spec, seeds.params + 1);
  AdamState opt_u(res.u_params.size(), adam_u);
  AdamState opt_tau(res.aux_params.size(), adam_tau);

  // The u channel must carry enough derivatives for both the bilinear form
  // and the chain rule through the composition.
  const int u_order = std::max(p.trial_order, p.test_order);
  MaskedNetBatch u_eng(u_spec, inst.trial_mask, p.dim, u_order);
  TauNetBatch tau_eng(tau_spec, inst.tau_mask, p.dim, p.test_order);
  MaskedNetBatch u_pt_eng(u_spec, inst.trial_mask, p.dim, p.test_order);
  TauNetBatch tau_pt_eng(tau_spec, inst.tau_mask, p.dim, 0);
  const std::vector<Point> x0 = point_load_location(p);

  MetricContext metric(inst, seeds.metric);
  MaskedNetBatch u_metric(u_spec, inst.trial_mask, p.dim, norm_order(p.u_norm));
  const int v_err_order = norm_order(p.v_norm);
  MaskedNetBatch u_metric_chain(u_spec, inst.trial_mask, p.dim, v_err_order);
  TauNetBatch tau_metric(tau_spec, inst.tau_mask, p.dim, v_err_order);
  auto u_field = [&](const std::vector<Point>& pts, int) {
    return u_metric.eval(res.u_params, pts);
  };
  auto v_field = [&](const std::vector<Point>& pts, int) {
    const BatchDual& u = u_metric_chain.eval(res.u_params, pts);
    return tau_metric.eval(res.aux_params, pts, u);
  };

  Rng batch_rng(seeds.batch);
  long iter = 0;
  const auto marks = checkpoint_marks(schedule.outer_iters);
  auto checkpoint = [&](double fraction, long outer_done) {
    CheckpointRow row;
    row.fraction = fraction;
    row.outer_iter = outer_done;
    row.rel_u = metric.trial_error(u_field);
    row.rel_v = metric.test_error(v_field);
    res.record.checkpoints.push_back(row);
  };
  checkpoint(marks.front().first, 0);

  // Evaluates both losses on a fresh batch and performs one descent on the
  // requested side.
  auto d2rm_step = [&](LoopTag tag) {
    const QuadBatch batch = make_batch(inst, inst.default_plan, batch_rng);
    const BatchDual& u = u_eng.eval(res.u_params, batch.points);
    const BatchDual& v = tau_eng.eval(res.aux_params, batch.points, u);
    const Vec f = load_density(p, batch.points);

    double v_x0 = 0.0;
    BatchDual u_x0;
    if (p.load.point) {
      u_x0 = u_pt_eng.eval(res.u_params, x0);
      v_x0 = tau_pt_eng.eval(res.aux_params, x0, u_x0).value(0);
    }

    const bool outer = tag == LoopTag::Outer;
    const LossEval f_tau = loss_ritz_tau(p, v, batch.weights, f, v_x0, outer);
    const LossEval l_inner = loss_inner(p, u, v, batch.weights, !outer);

    if (outer) {
      Vec grad = Vec::Zero(res.u_params.size());
      BatchDual u_adj;
      tau_eng.backward(f_tau.dv, res.aux_params, nullptr, &u_adj);
      u_eng.backward(u_adj, res.u_params, &grad);
      if (p.load.point) {
        BatchDual u_pt_adj;
        tau_pt_eng.backward(f_tau.dv_pt, res.aux_params, nullptr, &u_pt_adj);
        u_pt_eng.backward(u_pt_adj, res.u_params, &grad);
      }
      check_finite(f_tau.value, grad, iter + 1, tag);
      adam_step(opt_u, res.u_params.values, grad, -1);
    } else {
      Vec grad = Vec::Zero(res.aux_params.size());
      tau_eng.backward(l_inner.dv, res.aux_params, &grad, nullptr);
      check_finite(l_inner.value, grad, iter + 1, tag);
      adam_step(opt_tau, res.aux_params.values, grad, -1);
    }
    res.record.iters.push_back({++iter, tag, f_tau.value, l_inner.value});
  };

  for (long j = 0; j < schedule.warmup_inner; ++j) d2rm_step(LoopTag::Warmup);
  for (long k = 1; k <= schedule.outer_iters; ++k) {
    d2rm_step(LoopTag::Outer);
    for (int j = 0; j < schedule.inner_per_outer; ++j) d2rm_step(LoopTag::Inner);
    for (const auto& m : marks)
      if (m.second == k && k > 0) checkpoint(m.first, k);
  }
  res.record.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

TrainResult train_ritz(const ProblemInstance& inst, const NetworkSpec& u_spec,
                       const LoopSchedule& schedule, const AdamParams& adam_u,
                       const TrainSeeds& seeds) {
  const VariationalProblem& p = inst.problem;
  if (!p.has_T())
    throw ConfigError("train_ritz: no closed-form trial-to-test operator for " +
                      to_string(p.kind) + " (use the nested or adjoint scheme)");
  const auto t0 = Clock::now();

  TrainResult res;
  res.u_params = glorot_init(u_spec, seeds.params);
  AdamState opt_u(res.u_params.size(), adam_u);

  MaskedNetBatch u_eng(u_spec, inst.trial_mask, p.dim, p.trial_order);
  MaskedNetBatch u_pt_eng(u_spec, inst.trial_mask, p.dim, p.trial_order);
  const std::vector<Point> x0 = point_load_location(p);

  MetricContext metric(inst, seeds.metric);
  MaskedNetBatch u_metric(u_spec, inst.trial_mask, p.dim, norm_order(p.u_norm));
  auto u_field = [&](const std::vector<Point>& pts, int) {
    return u_metric.eval(res.u_params, pts);
  };

  Rng batch_rng(seeds.batch);
  long iter = 0;
  const auto marks = checkpoint_marks(schedule.outer_iters);
  auto checkpoint = [&](double fraction, long outer_done) {
    CheckpointRow row;
    row.fraction = fraction;
    row.outer_iter = outer_done;
    row.rel_u = metric.trial_error(u_field);
    res.record.checkpoints.push_back(row);
  };
  checkpoint(marks.front().first, 0);

  for (long k = 1; k <= schedule.outer_iters; ++k) {
    const QuadBatch batch = make_batch(inst, inst.default_plan, batch_rng);
    const BatchDual& u = u_eng.eval(res.u_params, batch.points);
    const Vec f = load_density(p, batch.points);
    DualValue u_x0;
    if (p.load.point) u_x0 = u_pt_eng.eval(res.u_params, x0).at(0);

    const LossEval loss = loss_ritz_T(p, u, batch.weights, f, u_x0, true);
    Vec grad = Vec::Zero(res.u_params.size());
    u_eng.backward(loss.du, res.u_params, &grad);
    if (p.load.point) u_pt_eng.backward(loss.du_pt, res.u_params, &grad);
    check_finite(loss.value, grad, iter + 1, LoopTag::Outer);
    adam_step(opt_u, res.u_params.values, grad, -1);
    res.record.iters.push_back({++iter, LoopTag::Outer, loss.value, NAN});

    for (const auto& m : marks)
      if (m.second == k && k > 0) checkpoint(m.first, k);
  }
  res.record.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

TrainResult train_adjoint_ritz(const ProblemInstance& inst, const NetworkSpec& v_spec,
                               const LoopSchedule& schedule, const AdamParams& adam_v,
                               const TrainSeeds& seeds) {
  const VariationalProblem& p = inst.problem;
  if (p.kind != FormulationKind::Ultraweak)
    throw ConfigError("train_adjoint_ritz: requires the ultraweak formulation");
  const auto t0 = Clock::now();

  TrainResult res;
  res.u_params = ParamStore{};
  res.aux_params = glorot_init(v_spec, seeds.params + 1);
  AdamState opt_v(res.aux_params.size(), adam_v);

  MaskedNetBatch v_eng(v_spec, inst.test_mask, p.dim, p.test_order);
  MaskedNetBatch v_pt_eng(v_spec, inst.test_mask, p.dim, 0);
  const std::vector<Point> x0 = point_load_location(p);

  MetricContext metric(inst, seeds.metric);
  const int v_err_order = std::max(norm_order(p.v_norm), p.test_order);
  MaskedNetBatch v_metric(v_spec, inst.test_mask, p.dim, v_err_order);
  auto v_field = [&](const std::vector<Point>& pts, int) {
    return v_metric.eval(res.aux_params, pts);
  };
  // A'v as a value-only field for the trial-side error (L2 for ultraweak).
  auto av_field = [&](const std::vector<Point>& pts, int) {
    const BatchDual& v = v_metric.eval(res.aux_params, pts);
    BatchDual out = BatchDual::zeros(static_cast<int>(pts.size()), p.dim, 0);
    for (const auto& a : p.adjoint_op)
      out.comp.col(comp_val()) += a.coeff * v.comp.col(a.comp.index(p.dim));
    return out;
  };

  Rng batch_rng(seeds.batch);
  long iter = 0;
  const auto marks = checkpoint_marks(schedule.outer_iters);
  auto checkpoint = [&](double fraction, long outer_done) {
    CheckpointRow row;
    row.fraction = fraction;
    row.outer_iter = outer_done;
    row.rel_u = metric.trial_error(av_field);  // A'v against u*
    row.rel_v = metric.test_error(v_field);    // v against Tu*
    res.record.checkpoints.push_back(row);
  };
  checkpoint(marks.front().first, 0);

  for (long k = 1; k <= schedule.outer_iters; ++k) {
    const QuadBatch batch = make_batch(inst, inst.default_plan, batch_rng);
    const BatchDual& v = v_eng.eval(res.aux_params, batch.points);
    const Vec f = load_density(p, batch.points);
    double v_x0 = 0.0;
    if (p.load.point) v_x0 = v_pt_eng.eval(res.aux_params, x0).value(0);

    const LossEval loss = loss_adjoint_ritz(p, v, batch.weights, f, v_x0, true);
    Vec grad = Vec::Zero(res.aux_params.size());
    v_eng.backward(loss.dv, res.aux_params, &grad);
    if (p.load.point) v_pt_eng.backward(loss.dv_pt, res.aux_params, &grad);
    check_finite(loss.value, grad, iter + 1, LoopTag::Outer);
    adam_step(opt_v, res.aux_params.values, grad, -1);
    res.record.iters.push_back({++iter, LoopTag::Outer, loss.value, NAN});

    for (const auto& m : marks)
      if (m.second == k && k > 0) checkpoint(m.first, k);
  }
  res.record.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return res;
}

}  // namespace ritznet
