#include "ritznet/metrics.hpp"

#include <cmath>

#include "ritznet/optimizer.hpp"

namespace ritznet {

namespace {

int norm_order(const std::vector<QuadTerm>& norm) {
  int o = 0;
  for (const auto& q : norm) o = std::max(o, q.comp.kind);
  return o;
}

}  // namespace

BatchField closed_form_field(std::function<DualValue(const Point&)> fn, int dim) {
  return [fn = std::move(fn), dim](const std::vector<Point>& pts, int order) {
    BatchDual out = BatchDual::zeros(static_cast<int>(pts.size()), dim, order);
    for (size_t i = 0; i < pts.size(); ++i) out.set(static_cast<int>(i), fn(pts[i]));
    return out;
  };
}

double relative_error(const BatchField& approx, const std::function<DualValue(const Point&)>& exact,
                      const std::vector<QuadTerm>& norm, int dim, const QuadBatch& batch,
                      std::optional<double> exact_norm) {
  const int order = norm_order(norm);
  const BatchDual a = approx(batch.points, order);
  BatchDual e = BatchDual::zeros(batch.size(), dim, order);
  for (int i = 0; i < batch.size(); ++i) e.set(i, exact(batch.points[static_cast<size_t>(i)]));

  BatchDual diff = a;
  diff.comp.leftCols(e.comp.cols()) -= e.comp;
  const double num = std::sqrt(norm_sq(norm, diff, batch.weights, dim));
  const double den =
      exact_norm ? *exact_norm : std::sqrt(norm_sq(norm, e, batch.weights, dim));
  if (!(den > 0.0)) throw ConfigError("relative_error: zero reference norm");
  return 100.0 * num / den;
}

ClosedFormMaximizer::ClosedFormMaximizer(const ProblemInstance& inst,
                                         std::function<DualValue(const Point&)> u,
                                         const QuadBatch& norm_batch)
    : inst_(inst), u_(std::move(u)) {
  if (inst.problem.kind != FormulationKind::WeakSPD || !inst.problem.exact_u)
    throw ConfigError("ClosedFormMaximizer: needs a weak SPD problem with exact_u");
  const int order = norm_order(inst.problem.v_norm);
  BatchDual diff = BatchDual::zeros(norm_batch.size(), inst.problem.dim, order);
  for (int i = 0; i < norm_batch.size(); ++i) {
    const Point& p = norm_batch.points[static_cast<size_t>(i)];
    diff.set(i, u_(p) - inst.problem.exact_u(p));
  }
  norm_ = std::sqrt(norm_sq(inst.problem.v_norm, diff, norm_batch.weights, inst.problem.dim));
  if (!(norm_ > 1e-12))
    throw UndefinedMaximizerError(
        "maximizer undefined: trial function coincides with the exact solution");
}

DualValue ClosedFormMaximizer::eval(const Point& x) const {
  return (u_(x) - inst_.problem.exact_u(x)) / norm_;
}

double ClosedFormMaximizer::operator()(const Point& x) const { return eval(x).v; }

std::vector<ProbeRow> instability_probe(const ProblemInstance& inst,
                                        const std::function<DualValue(const Point&)>& direction,
                                        const std::vector<double>& eps_list, uint64_t seed) {
  const VariationalProblem& p = inst.problem;
  if (p.kind != FormulationKind::WeakSPD || !p.exact_u)
    throw ConfigError("instability_probe: needs a weak SPD problem with exact_u");
  Rng rng(seed);
  const QuadBatch batch = sample_batch(inst.metric_plan, rng);

  // Sample the direction once and normalize it to unit V-norm on the batch;
  // everything else is array arithmetic on the same nodes. With T = identity,
  // u_i - u* = +/- eps w, so J(u_i) = +/- w / ||w||_V.
  const int order = std::max(norm_order(p.v_norm), norm_order(p.u_norm));
  BatchDual w = BatchDual::zeros(batch.size(), p.dim, order);
  for (int i = 0; i < batch.size(); ++i) w.set(i, direction(batch.points[static_cast<size_t>(i)]));
  const double wnorm = std::sqrt(norm_sq(p.v_norm, w, batch.weights, p.dim));
  if (!(wnorm > 0.0)) throw ConfigError("instability_probe: zero direction");
  w.comp /= wnorm;

  BatchDual jdiff = w;
  jdiff.comp *= 2.0;  // J(u1) - J(u2) = 2 w / ||w||_V
  const double j_dist = std::sqrt(norm_sq(p.v_norm, jdiff, batch.weights, p.dim));
  const double w_u = std::sqrt(norm_sq(p.u_norm, w, batch.weights, p.dim));

  std::vector<ProbeRow> rows;
  for (double eps : eps_list) {
    if (!(eps > 0.0)) throw ConfigError("instability_probe: eps must be positive");
    ProbeRow row;
    row.eps = eps;
    row.j_dist = j_dist;
    row.u_dist = 2.0 * eps * w_u;
    row.ratio = row.j_dist / row.u_dist;
    rows.push_back(row);
  }
  return rows;
}

std::vector<ProbeRow> instability_probe_trained(
    const ProblemInstance& inst, const std::function<DualValue(const Point&)>& direction,
    const std::vector<double>& eps_list, const NetworkSpec& v_spec, long iters, double lr,
    uint64_t seed) {
  const VariationalProblem& p = inst.problem;
  Rng metric_rng(seed);
  const QuadBatch metric = sample_batch(inst.metric_plan, metric_rng);
  const int vorder = norm_order(p.v_norm);

  BatchDual w = BatchDual::zeros(metric.size(), p.dim, vorder);
  for (int i = 0; i < metric.size(); ++i)
    w.set(i, direction(metric.points[static_cast<size_t>(i)]));
  const double wnorm = std::sqrt(norm_sq(p.v_norm, w, metric.weights, p.dim));
  auto unit_dir = [&](const Point& x) { return direction(x) / wnorm; };

  // Trains one maximizer network against a frozen trial field and returns a
  // normalized evaluator over the metric batch.
  auto train_maximizer = [&](const std::function<DualValue(const Point&)>& u_fn,
                             uint64_t run_seed) {
    ParamStore params = glorot_init(v_spec, run_seed);
    AdamParams hp;
    hp.lr = lr;
    AdamState adam(params.size(), hp);
    MaskedNetBatch v_eng(v_spec, inst.test_mask, p.dim, vorder);
    Rng batch_rng(run_seed + 1);
    for (long it = 0; it < iters; ++it) {
      const QuadBatch batch = make_batch(inst, inst.default_plan, batch_rng);
      BatchDual u = BatchDual::zeros(batch.size(), p.dim, p.trial_order);
      for (int i = 0; i < batch.size(); ++i)
        u.set(i, u_fn(batch.points[static_cast<size_t>(i)]));
      const BatchDual& v = v_eng.eval(params, batch.points);
      const Vec f = load_density(p, batch.points);
      const LossEval loss = loss_wan(p, u, v, batch.weights, f, 0.0, true);
      Vec grad = Vec::Zero(params.size());
      v_eng.backward(loss.dv, params, &grad);
      adam_step(adam, params.values, grad, +1);
    }
    MaskedNetBatch eval_eng(v_spec, inst.test_mask, p.dim, vorder);
    BatchDual v = eval_eng.eval(params, metric.points);
    const double vn = std::sqrt(norm_sq(p.v_norm, v, metric.weights, p.dim));
    v.comp /= vn;
    return v;
  };

  std::vector<ProbeRow> rows;
  uint64_t run_seed = seed + 1000;
  for (double eps : eps_list) {
    auto u1 = [&](const Point& x) { return p.exact_u(x) + eps * unit_dir(x); };
    auto u2 = [&](const Point& x) { return p.exact_u(x) - eps * unit_dir(x); };
    const BatchDual j1 = train_maximizer(u1, run_seed);
    const BatchDual j2 = train_maximizer(u2, run_seed);  // same init, different field
    run_seed += 17;

    BatchDual jdiff = j1;
    jdiff.comp -= j2.comp;
    BatchDual udiff = BatchDual::zeros(metric.size(), p.dim, norm_order(p.u_norm));
    for (int i = 0; i < metric.size(); ++i) {
      const Point& x = metric.points[static_cast<size_t>(i)];
      udiff.set(i, u1(x) - u2(x));
    }
    ProbeRow row;
    row.eps = eps;
    row.j_dist = std::sqrt(norm_sq(p.v_norm, jdiff, metric.weights, p.dim));
    row.u_dist = std::sqrt(norm_sq(p.u_norm, udiff, metric.weights, p.dim));
    row.ratio = row.j_dist / row.u_dist;
    rows.push_back(row);
  }
  return rows;
}

std::vector<std::pair<long, double>> loss_optimum_gap(const TrainRecord& record, double optimum) {
  std::vector<std::pair<long, double>> gaps;
  for (const auto& row : record.iters)
    if (row.tag == LoopTag::Outer) gaps.emplace_back(row.iter, row.loss_primary - optimum);
  return gaps;
}

}  // namespace ritznet
