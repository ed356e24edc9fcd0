#include "ritznet/variational.hpp"

#include <cmath>

namespace ritznet {

std::string to_string(FormulationKind k) {
  switch (k) {
    case FormulationKind::WeakSPD: return "weak_spd";
    case FormulationKind::Strong: return "strong";
    case FormulationKind::Ultraweak: return "ultraweak";
  }
  throw InternalError("bad formulation enum");
}

namespace {

// Component of the q-th derivative of Tu in terms of trial components:
// differentiating a LinTerm shifts its component kind along the same axis.
CompRef shift(const CompRef& t, const CompRef& q) {
  if (q.kind == 0) return t;
  if (t.kind == 0) return q;
  if (t.kind == 1 && q.kind == 1 && t.axis == q.axis) return CompRef{2, t.axis};
  throw InternalError("T_op derivative needs a mixed or third-order component");
}

int order_floor(const std::vector<QuadTerm>& terms) {
  int o = 0;
  for (const auto& q : terms) o = std::max(o, q.comp.kind);
  return o;
}

}  // namespace

void VariationalProblem::validate() const {
  if (dim < 1 || dim > kMaxDim) throw ConfigError("problem: dimension must be 1 or 2");
  if (b_terms.empty()) throw ConfigError("problem: bilinear form has no terms");
  if (v_norm.empty()) throw ConfigError("problem: test norm has no terms");
  if (kind == FormulationKind::Ultraweak && adjoint_op.empty())
    throw ConfigError("problem: ultraweak formulation requires the adjoint operator");

  int need_trial = 0, need_test = order_floor(v_norm);
  for (const auto& t : b_terms) {
    need_trial = std::max(need_trial, t.trial.kind);
    need_test = std::max(need_test, t.test.kind);
  }
  for (const auto& a : adjoint_op) need_test = std::max(need_test, a.comp.kind);
  for (const auto& q : u_norm) need_trial = std::max(need_trial, q.comp.kind);
  for (const auto& t : T_op)
    for (const auto& q : v_norm) need_trial = std::max(need_trial, shift(t.comp, q.comp).kind);
  if (trial_order < need_trial || test_order < need_test)
    throw ConfigError("problem: declared derivative orders are below what the forms use");
}

Vec load_density(const VariationalProblem& p, const std::vector<Point>& points) {
  Vec f = Vec::Zero(static_cast<long>(points.size()));
  if (p.load.density)
    for (size_t i = 0; i < points.size(); ++i)
      f[static_cast<long>(i)] = p.load.density(points[i]);
  return f;
}

double bilinear_value(const VariationalProblem& p, const BatchDual& u, const BatchDual& v,
                      const Vec& w) {
  double acc = 0.0;
  for (const auto& t : p.b_terms)
    acc += t.coeff * (w.array() * u.comp.col(t.trial.index(p.dim)).array() *
                      v.comp.col(t.test.index(p.dim)).array())
                         .sum();
  return acc;
}

double apply_adjoint(const VariationalProblem& p, const DualValue& v_at_x) {
  if (p.adjoint_op.empty()) throw ConfigError("apply_adjoint: problem has no adjoint operator");
  double acc = 0.0;
  for (const auto& a : p.adjoint_op) {
    if (a.comp.kind == 0) acc += a.coeff * v_at_x.v;
    if (a.comp.kind == 1) acc += a.coeff * v_at_x.d1[a.comp.axis];
    if (a.comp.kind == 2) acc += a.coeff * v_at_x.d2[a.comp.axis];
  }
  return acc;
}

double norm_sq(const std::vector<QuadTerm>& terms, const BatchDual& field, const Vec& w, int dim) {
  double acc = 0.0;
  for (const auto& q : terms)
    acc += q.coeff * (w.array() * field.comp.col(q.comp.index(dim)).array().square()).sum();
  return acc;
}

LossEval loss_wan(const VariationalProblem& p, const BatchDual& u, const BatchDual& v,
                  const Vec& w, const Vec& f, double v_at_x0, bool want_grads) {
  const int n = static_cast<int>(w.size());
  const double s = norm_sq(p.v_norm, v, w, p.dim);
  if (!(s > 1e-12))
    throw DegenerateTestError("loss_wan: test norm below 1e-12, v_NN is numerically zero");
  const double denom = std::sqrt(s);

  double numer = bilinear_value(p, u, v, w);
  numer -= (w.array() * f.array() * v.comp.col(comp_val()).array()).sum();
  if (p.load.point) numer -= p.load.point->coeff * v_at_x0;

  LossEval out;
  out.value = numer / denom;
  if (!want_grads) return out;

  out.du = BatchDual::zeros(n, p.dim, u.order);
  out.dv = BatchDual::zeros(n, p.dim, v.order);
  for (const auto& t : p.b_terms) {
    out.du.comp.col(t.trial.index(p.dim)) +=
        (t.coeff / denom) * (w.array() * v.comp.col(t.test.index(p.dim)).array()).matrix();
    out.dv.comp.col(t.test.index(p.dim)) +=
        (t.coeff / denom) * (w.array() * u.comp.col(t.trial.index(p.dim)).array()).matrix();
  }
  out.dv.comp.col(comp_val()) -= (w.array() * f.array() / denom).matrix();
  // Quotient rule for the normalization.
  const double scale = out.value / s;  // N / D^2
  for (const auto& q : p.v_norm)
    out.dv.comp.col(q.comp.index(p.dim)) -=
        (scale * q.coeff) * (w.array() * v.comp.col(q.comp.index(p.dim)).array()).matrix();
  if (p.load.point) {
    out.dv_pt = BatchDual::zeros(1, p.dim, 0);
    out.dv_pt.comp(0, comp_val()) = -p.load.point->coeff / denom;
  }
  return out;
}

LossEval loss_ritz_T(const VariationalProblem& p, const BatchDual& u, const Vec& w, const Vec& f,
                     const DualValue& u_at_x0, bool want_grads) {
  if (!p.has_T())
    throw ConfigError("loss_ritz_T: trial-to-test operator unavailable for " + to_string(p.kind));
  const int n = static_cast<int>(w.size());

  LossEval out;
  if (want_grads) out.du = BatchDual::zeros(n, p.dim, u.order);

  // 0.5 sum_q k_q (d^q Tu)^2, with d^q Tu assembled from shifted trial comps.
  for (const auto& q : p.v_norm) {
    Vec plane = Vec::Zero(n);
    for (const auto& t : p.T_op)
      plane += t.coeff * u.comp.col(shift(t.comp, q.comp).index(p.dim));
    out.value += 0.5 * q.coeff * (w.array() * plane.array().square()).sum();
    if (want_grads)
      for (const auto& t : p.T_op)
        out.du.comp.col(shift(t.comp, q.comp).index(p.dim)) +=
            (q.coeff * t.coeff) * (w.array() * plane.array()).matrix();
  }

  // -l(Tu): integral part against the value of Tu, plus the point part.
  Vec tu_val = Vec::Zero(n);
  for (const auto& t : p.T_op) tu_val += t.coeff * u.comp.col(t.comp.index(p.dim));
  out.value -= (w.array() * f.array() * tu_val.array()).sum();
  if (want_grads)
    for (const auto& t : p.T_op)
      out.du.comp.col(t.comp.index(p.dim)) -= t.coeff * (w.array() * f.array()).matrix();

  if (p.load.point) {
    double tu0 = 0.0;
    for (const auto& t : p.T_op) {
      if (t.comp.kind == 0) tu0 += t.coeff * u_at_x0.v;
      if (t.comp.kind == 1) tu0 += t.coeff * u_at_x0.d1[t.comp.axis];
      if (t.comp.kind == 2) tu0 += t.coeff * u_at_x0.d2[t.comp.axis];
    }
    out.value -= p.load.point->coeff * tu0;
    if (want_grads) {
      out.du_pt = BatchDual::zeros(1, p.dim, u.order);
      for (const auto& t : p.T_op)
        out.du_pt.comp(0, t.comp.index(p.dim)) -= p.load.point->coeff * t.coeff;
    }
  }
  return out;
}

LossEval loss_ritz_tau(const VariationalProblem& p, const BatchDual& v, const Vec& w, const Vec& f,
                       double v_at_x0, bool want_grads) {
  const int n = static_cast<int>(w.size());
  LossEval out;
  out.value = 0.5 * norm_sq(p.v_norm, v, w, p.dim);
  out.value -= (w.array() * f.array() * v.comp.col(comp_val()).array()).sum();
  if (p.load.point) out.value -= p.load.point->coeff * v_at_x0;

  if (!want_grads) return out;
  out.dv = BatchDual::zeros(n, p.dim, v.order);
  for (const auto& q : p.v_norm)
    out.dv.comp.col(q.comp.index(p.dim)) +=
        q.coeff * (w.array() * v.comp.col(q.comp.index(p.dim)).array()).matrix();
  out.dv.comp.col(comp_val()) -= (w.array() * f.array()).matrix();
  if (p.load.point) {
    out.dv_pt = BatchDual::zeros(1, p.dim, 0);
    out.dv_pt.comp(0, comp_val()) = -p.load.point->coeff;
  }
  return out;
}

LossEval loss_inner(const VariationalProblem& p, const BatchDual& u, const BatchDual& v,
                    const Vec& w, bool want_grads) {
  const int n = static_cast<int>(w.size());
  LossEval out;
  out.value = 0.5 * norm_sq(p.v_norm, v, w, p.dim) - bilinear_value(p, u, v, w);

  if (!want_grads) return out;
  out.dv = BatchDual::zeros(n, p.dim, v.order);
  for (const auto& q : p.v_norm)
    out.dv.comp.col(q.comp.index(p.dim)) +=
        q.coeff * (w.array() * v.comp.col(q.comp.index(p.dim)).array()).matrix();
  for (const auto& t : p.b_terms)
    out.dv.comp.col(t.test.index(p.dim)) -=
        t.coeff * (w.array() * u.comp.col(t.trial.index(p.dim)).array()).matrix();
  return out;
}

LossEval loss_adjoint_ritz(const VariationalProblem& p, const BatchDual& v, const Vec& w,
                           const Vec& f, double v_at_x0, bool want_grads) {
  if (p.kind != FormulationKind::Ultraweak || p.adjoint_op.empty())
    throw ConfigError("loss_adjoint_ritz: requires an ultraweak problem with A'");
  const int n = static_cast<int>(w.size());

  Vec av = Vec::Zero(n);
  for (const auto& a : p.adjoint_op) av += a.coeff * v.comp.col(a.comp.index(p.dim));

  LossEval out;
  out.value = 0.5 * (w.array() * av.array().square()).sum();
  out.value -= (w.array() * f.array() * v.comp.col(comp_val()).array()).sum();
  if (p.load.point) out.value -= p.load.point->coeff * v_at_x0;

  if (!want_grads) return out;
  out.dv = BatchDual::zeros(n, p.dim, v.order);
  for (const auto& a : p.adjoint_op)
    out.dv.comp.col(a.comp.index(p.dim)) += a.coeff * (w.array() * av.array()).matrix();
  out.dv.comp.col(comp_val()) -= (w.array() * f.array()).matrix();
  if (p.load.point) {
    out.dv_pt = BatchDual::zeros(1, p.dim, 0);
    out.dv_pt.comp(0, comp_val()) = -p.load.point->coeff;
  }
  return out;
}

std::pair<double, double> ritz_gap_check(const VariationalProblem& p, const BatchDual& u,
                                         const BatchDual& u_exact, const Vec& w) {
  if (p.kind != FormulationKind::WeakSPD)
    throw ConfigError("ritz_gap_check: defined for the weak SPD case only");
  auto f_hat = [&](const BatchDual& field) {
    return 0.5 * norm_sq(p.v_norm, field, w, p.dim) - bilinear_value(p, u_exact, field, w);
  };
  const double lhs = f_hat(u) - f_hat(u_exact);

  BatchDual diff = u;
  diff.comp -= u_exact.comp;
  const double rhs = 0.5 * norm_sq(p.v_norm, diff, w, p.dim);
  return {lhs, rhs};
}

}  // namespace ritznet
