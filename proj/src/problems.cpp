#include "ritznet/problems.hpp"

#include <cmath>

namespace ritznet {

namespace {

constexpr double kPi = 3.14159265358979323846;

SamplingPlan uniform_metric_1d() { return SamplingPlan::uniform1d(10000); }

SamplingPlan singular_plan(int n_half) {
  // Union of a uniform sample and a reflected beta(1e4, 1) sample whose mass
  // piles up next to zero, where the x^alpha derivative blows up.
  return SamplingPlan{
      {AxisPlan{{BetaSample{n_half, 1.0, 1.0, false}, BetaSample{n_half, 1e4, 1.0, true}}}}};
}

DualValue smooth_poisson_exact(const Point& p) {
  // u* = x(x-1)
  const double x = p[0];
  DualValue u = DualValue::constant(x * x - x, 1);
  u.d1[0] = 2.0 * x - 1.0;
  u.d2[0] = 2.0;
  return u;
}

ProblemInstance weak_poisson_base() {
  ProblemInstance inst;
  VariationalProblem& vp = inst.problem;
  vp.kind = FormulationKind::WeakSPD;
  vp.dim = 1;
  vp.b_terms = {{CompRef{1, 0}, CompRef{1, 0}, 1.0}};
  vp.v_norm = {{CompRef{1, 0}, 1.0}};
  vp.u_norm = {{CompRef{1, 0}, 1.0}};
  vp.T_op = {{CompRef{0, 0}, 1.0}};
  vp.trial_order = 1;
  vp.test_order = 1;
  inst.trial_mask = mask_interval_h10();
  inst.test_mask = mask_interval_h10();
  inst.tau_mask = mask_interval_h10();
  inst.default_plan = SamplingPlan::uniform1d(200);
  inst.metric_plan = uniform_metric_1d();
  inst.metric_numerator_plan = uniform_metric_1d();
  return inst;
}

ProblemInstance make_poisson_weak_smooth() {
  ProblemInstance inst = weak_poisson_base();
  inst.id = "poisson_weak_smooth";
  VariationalProblem& vp = inst.problem;
  vp.load.density = [](const Point&) { return -2.0; };
  vp.exact_u = smooth_poisson_exact;
  vp.exact_Tu = smooth_poisson_exact;
  vp.exact_u_norm = std::sqrt(3.0) / 3.0;
  vp.exact_Tu_norm = std::sqrt(3.0) / 3.0;
  vp.optimum_F = -1.0 / 6.0;
  return inst;
}

ProblemInstance make_poisson_weak_alpha(double alpha) {
  if (!(alpha > 0.5)) throw ConfigError("poisson_weak_alpha: alpha must exceed 1/2");
  ProblemInstance inst = weak_poisson_base();
  inst.id = "poisson_weak_alpha";
  inst.alpha = alpha;
  VariationalProblem& vp = inst.problem;
  // u* = x^alpha (x-1) = x^(alpha+1) - x^alpha
  vp.exact_u = [alpha](const Point& p) {
    const DualValue x = DualValue::axis(p[0], 0, 1);
    return pow(x, alpha + 1.0) - pow(x, alpha);
  };
  vp.exact_Tu = vp.exact_u;
  vp.load.density = [alpha](const Point& p) {
    const double x = p[0];
    return -(alpha + 1.0) * alpha * std::pow(x, alpha - 1.0) +
           alpha * (alpha - 1.0) * std::pow(x, alpha - 2.0);
  };
  const double nsq = (alpha + 1.0) * (alpha + 1.0) / (2.0 * alpha + 1.0) - (alpha + 1.0) +
                     alpha * alpha / (2.0 * alpha - 1.0);
  vp.exact_u_norm = std::sqrt(nsq);
  vp.exact_Tu_norm = vp.exact_u_norm;
  vp.optimum_F = -0.5 * nsq;
  if (alpha < 1.0) {
    inst.default_plan = singular_plan(100);
    inst.metric_numerator_plan = singular_plan(5000);
  }
  return inst;
}

ProblemInstance make_poisson_weak_delta() {
  ProblemInstance inst = weak_poisson_base();
  inst.id = "poisson_weak_delta";
  VariationalProblem& vp = inst.problem;
  vp.load.point = PointLoad{4.0, Point(0.5)};
  vp.exact_u = [](const Point& p) {
    const double x = p[0];
    DualValue u = DualValue::constant(x < 0.5 ? 2.0 * x : 2.0 * (1.0 - x), 1);
    u.d1[0] = x < 0.5 ? 2.0 : -2.0;
    return u;
  };
  vp.exact_Tu = vp.exact_u;
  vp.exact_u_norm = 2.0;
  vp.exact_Tu_norm = 2.0;
  vp.optimum_F = -2.0;
  // Two-sample batch: uniform plus beta(10,10), which concentrates around the
  // Dirac location.
  inst.default_plan =
      SamplingPlan{{AxisPlan{{BetaSample{100, 1.0, 1.0, false}, BetaSample{100, 10.0, 10.0, false}}}}};
  inst.special_points = {Point(0.5)};
  return inst;
}

ProblemInstance make_convection_ultraweak() {
  ProblemInstance inst;
  inst.id = "convection_ultraweak";
  VariationalProblem& vp = inst.problem;
  vp.kind = FormulationKind::Ultraweak;
  vp.dim = 1;
  vp.b_terms = {{CompRef{0, 0}, CompRef{1, 0}, -1.0}};  // -int u v'
  vp.load.point = PointLoad{1.0, Point(0.5)};
  // Test norm ||A'v||_L2 with A' = -d/dx; a norm on {v(1)=0} by Poincare.
  vp.v_norm = {{CompRef{1, 0}, 1.0}};
  vp.u_norm = {{CompRef{0, 0}, 1.0}};  // L2 trial errors
  vp.adjoint_op = {{CompRef{1, 0}, -1.0}};
  vp.trial_order = 0;
  vp.test_order = 1;
  vp.exact_u = [](const Point& p) {
    return DualValue::constant(p[0] < 0.5 ? 0.0 : 1.0, 1);
  };
  vp.exact_Tu = [](const Point& p) {
    const double x = p[0];
    DualValue t = DualValue::constant(x < 0.5 ? 0.5 : 1.0 - x, 1);
    t.d1[0] = x < 0.5 ? 0.0 : -1.0;
    return t;
  };
  vp.exact_u_norm = std::sqrt(0.5);
  vp.exact_Tu_norm = std::sqrt(0.5);
  vp.optimum_F = -0.25;
  inst.trial_mask = mask_free(1);  // boundary-free trial
  inst.test_mask = mask_outflow_right();
  inst.tau_mask = mask_outflow_right();
  inst.default_plan = SamplingPlan::uniform1d(200);
  inst.metric_plan = uniform_metric_1d();
  inst.metric_numerator_plan = uniform_metric_1d();
  inst.special_points = {Point(0.5)};
  inst.default_inner = 9;
  return inst;
}

ProblemInstance make_convection2d_strong() {
  ProblemInstance inst;
  inst.id = "convection2d_strong";
  const double k = 1.5;
  VariationalProblem& vp = inst.problem;
  vp.kind = FormulationKind::Strong;
  vp.dim = 2;
  vp.b_terms = {{CompRef{1, 0}, CompRef{0, 0}, 1.0}, {CompRef{1, 1}, CompRef{0, 0}, 1.0}};
  vp.load.density = [k](const Point& p) {
    return k * kPi * std::sin(k * kPi * (p[0] + p[1]));
  };
  vp.v_norm = {{CompRef{0, 0}, 1.0}};  // V = L2
  vp.u_norm = {{CompRef{0, 0}, 1.0}};
  vp.T_op = {{CompRef{1, 0}, 1.0}, {CompRef{1, 1}, 1.0}};
  vp.trial_order = 1;
  vp.test_order = 0;
  vp.exact_u = [k](const Point& p) {
    const DualValue x = DualValue::axis(p[0], 0, 2);
    const DualValue y = DualValue::axis(p[1], 1, 2);
    return sin(k * kPi * x) * sin(k * kPi * y);
  };
  // Tu* = A u* = u*_x + u*_y = k pi sin(k pi (x+y)). (The figure annotation's
  // product form does not satisfy A u* = f; this one does.)
  vp.exact_Tu = [k](const Point& p) {
    const DualValue x = DualValue::axis(p[0], 0, 2);
    const DualValue y = DualValue::axis(p[1], 1, 2);
    return k * kPi * sin(k * kPi * (x + y));
  };
  vp.exact_u_norm = 0.5;  // sqrt( (1/2)^2 )
  // ||k pi sin(k pi (x+y))||_L2^2 = (k pi)^2 (1/2 + 2/(9 pi^2)) = 9 pi^2/8 + 1/2
  vp.exact_Tu_norm = std::sqrt(9.0 * kPi * kPi / 8.0 + 0.5);
  vp.optimum_F = -0.5 * (9.0 * kPi * kPi / 8.0 + 0.5);
  inst.trial_mask = mask_inflow_corner_2d();
  inst.test_mask = mask_free(2);
  inst.tau_mask = mask_free(2);
  inst.default_plan = SamplingPlan::uniform2d(50);
  inst.metric_plan = SamplingPlan::uniform2d(100);
  inst.metric_numerator_plan = inst.metric_plan;
  inst.default_inner = 9;
  inst.default_warmup = 2000;
  return inst;
}

ProblemInstance make_poisson_strong() {
  ProblemInstance inst;
  inst.id = "poisson_strong";
  VariationalProblem& vp = inst.problem;
  vp.kind = FormulationKind::Strong;
  vp.dim = 1;
  vp.b_terms = {{CompRef{2, 0}, CompRef{0, 0}, -1.0}};  // int -u'' v
  vp.load.density = [](const Point&) { return -2.0; };
  vp.v_norm = {{CompRef{0, 0}, 1.0}};
  vp.u_norm = {{CompRef{1, 0}, 1.0}};
  vp.T_op = {{CompRef{2, 0}, -1.0}};
  vp.trial_order = 2;
  vp.test_order = 0;
  vp.exact_u = smooth_poisson_exact;
  vp.exact_Tu = [](const Point&) { return DualValue::constant(-2.0, 1); };
  vp.exact_u_norm = std::sqrt(3.0) / 3.0;
  vp.exact_Tu_norm = 2.0;
  vp.optimum_F = -2.0;
  inst.trial_mask = mask_interval_h10();
  inst.test_mask = mask_free(1);
  inst.tau_mask = mask_free(1);
  inst.default_plan = SamplingPlan::uniform1d(200);
  inst.metric_plan = uniform_metric_1d();
  inst.metric_numerator_plan = uniform_metric_1d();
  return inst;
}

}  // namespace

std::string ProblemInstance::display_id() const {
  if (!alpha) return id;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s(%g)", id.c_str(), *alpha);
  return buf;
}

ProblemInstance make_problem(const std::string& id, std::optional<double> alpha) {
  if (id == "poisson_weak_alpha") {
    if (!alpha) throw ConfigError("poisson_weak_alpha requires an alpha value");
    ProblemInstance inst = make_poisson_weak_alpha(*alpha);
    inst.problem.validate();
    return inst;
  }
  if (alpha) throw ConfigError("problem '" + id + "' does not take an alpha parameter");
  ProblemInstance inst;
  if (id == "poisson_weak_smooth") inst = make_poisson_weak_smooth();
  else if (id == "poisson_weak_delta") inst = make_poisson_weak_delta();
  else if (id == "convection_ultraweak") inst = make_convection_ultraweak();
  else if (id == "convection2d_strong") inst = make_convection2d_strong();
  else if (id == "poisson_strong") inst = make_poisson_strong();
  else throw ConfigError("unknown problem id: '" + id + "'");
  inst.problem.validate();
  return inst;
}

std::vector<ProblemInstance> registry() {
  std::vector<ProblemInstance> all;
  all.push_back(make_problem("poisson_weak_smooth"));
  for (double a : {2.0, 5.0, 10.0, 0.6, 0.7, 0.8})
    all.push_back(make_problem("poisson_weak_alpha", a));
  all.push_back(make_problem("poisson_weak_delta"));
  all.push_back(make_problem("convection_ultraweak"));
  all.push_back(make_problem("convection2d_strong"));
  all.push_back(make_problem("poisson_strong"));
  return all;
}

double exact_T_apply(const std::string& id, const std::function<double(double)>& u, double x) {
  if (id != "convection_ultraweak")
    throw ConfigError("exact_T_apply: no integral trial-to-test form for '" + id + "'");
  const int n = 200;
  const double h = (1.0 - x) / n;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += u(x + (i + 0.5) * h);
  return acc * h;
}

QuadBatch make_batch(const ProblemInstance& inst, const SamplingPlan& plan, Rng& rng) {
  QuadBatch batch = sample_batch(plan, rng);
  for (const Point& s : inst.special_points) {
    for (Point& p : batch.points)
      for (int ax = 0; ax < batch.dim; ++ax)
        if (p[ax] == s[ax]) p[ax] += 1e-12;
  }
  return batch;
}

}  // namespace ritznet
