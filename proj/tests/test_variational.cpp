#include <doctest.h>

#include <cmath>

#include "ritznet/metrics.hpp"
#include "ritznet/problems.hpp"

using namespace ritznet;

namespace {

BatchDual field_on(const std::function<DualValue(const Point&)>& fn, const QuadBatch& batch,
                   int dim, int order) {
  return closed_form_field(fn, dim)(batch.points, order);
}

// Raw output frozen to a constant via zero hidden weights and a bias.
ParamStore constant_raw_net(const NetworkSpec& spec, double value) {
  ParamStore p = make_param_store(spec);
  p.bias(0)[0] = std::atanh(0.5);
  p.weight(spec.depth())(0, 0) = 2.0 * value;
  return p;
}

}  // namespace

TEST_CASE("loss_wan annihilates at the exact solution") {
  const ProblemInstance inst = make_problem("poisson_weak_smooth");
  Rng rng(8);
  const QuadBatch batch = sample_batch(SamplingPlan::uniform1d(200), rng);
  const BatchDual u = field_on(inst.problem.exact_u, batch, 1, 1);
  const Vec f = load_density(inst.problem, batch.points);

  const NetworkSpec v_spec{1, {20, 20}, Activation::Tanh};
  MaskedNetBatch v_eng(v_spec, inst.test_mask, 1, 1);
  for (uint64_t seed : {3u, 4u, 5u}) {
    const BatchDual& v = v_eng.eval(glorot_init(v_spec, seed), batch.points);
    const LossEval loss = loss_wan(inst.problem, u, v, batch.weights, f, 0.0, false);
    CHECK(std::abs(loss.value) < 5e-3);  // residual is zero up to quadrature error
  }
}

TEST_CASE("loss_wan closed form: u=0 against the parabola test function") {
  const ProblemInstance inst = make_problem("poisson_weak_smooth");
  Rng rng(9);
  const QuadBatch batch = sample_batch(SamplingPlan::uniform1d(10000), rng);
  const BatchDual u = BatchDual::zeros(batch.size(), 1, 1);
  const Vec f = load_density(inst.problem, batch.points);

  // v = x(1-x): the interval mask applied to a frozen raw output of 1.
  const NetworkSpec v_spec{1, {1}, Activation::Tanh};
  const ParamStore vp = constant_raw_net(v_spec, 1.0);
  MaskedNetBatch v_eng(v_spec, inst.test_mask, 1, 1);
  const BatchDual& v = v_eng.eval(vp, batch.points);

  // At u = 0 the loss is -l(v)/||v||_V = (int 2 x(1-x)) / sqrt(int (1-2x)^2)
  // = sqrt(3)/3, positive because the source is f = -2.
  const LossEval loss = loss_wan(inst.problem, u, v, batch.weights, f, 0.0, false);
  CHECK(loss.value == doctest::Approx(std::sqrt(3.0) / 3.0).epsilon(2e-3));

  // Flipping the test function flips the sign but not the magnitude.
  BatchDual neg = v;
  neg.comp *= -1.0;
  const LossEval flipped = loss_wan(inst.problem, u, neg, batch.weights, f, 0.0, false);
  CHECK(flipped.value == doctest::Approx(-loss.value).epsilon(1e-12));
}

TEST_CASE("loss_wan is invariant under scaling of the test function") {
  const ProblemInstance inst = make_problem("poisson_weak_smooth");
  Rng rng(10);
  const QuadBatch batch = sample_batch(SamplingPlan::uniform1d(200), rng);
  const Vec f = load_density(inst.problem, batch.points);

  const NetworkSpec spec{1, {10}, Activation::Tanh};
  MaskedNetBatch u_eng(spec, inst.trial_mask, 1, 1);
  MaskedNetBatch v_eng(spec, inst.test_mask, 1, 1);
  const BatchDual& u = u_eng.eval(glorot_init(spec, 1), batch.points);
  BatchDual v = v_eng.eval(glorot_init(spec, 2), batch.points);

  const double base = loss_wan(inst.problem, u, v, batch.weights, f, 0.0, false).value;
  v.comp *= 5.0;
  const double scaled = loss_wan(inst.problem, u, v, batch.weights, f, 0.0, false).value;
  CHECK(std::abs(base - scaled) < 1e-12);
}

TEST_CASE("loss_wan rejects a numerically zero test function") {
  const ProblemInstance inst = make_problem("poisson_weak_smooth");
  Rng rng(11);
  const QuadBatch batch = sample_batch(SamplingPlan::uniform1d(50), rng);
  const BatchDual u = BatchDual::zeros(batch.size(), 1, 1);
  const BatchDual v = BatchDual::zeros(batch.size(), 1, 1);
  const Vec f = load_density(inst.problem, batch.points);
  CHECK_THROWS_AS(loss_wan(inst.problem, u, v, batch.weights, f, 0.0, false),
                  DegenerateTestError);
}

TEST_CASE("loss_ritz_T closed forms on the smooth problem") {
  const ProblemInstance inst = make_problem("poisson_weak_smooth");
  Rng rng(12);
  const QuadBatch batch = sample_batch(SamplingPlan::uniform1d(10000), rng);
  const Vec f = load_density(inst.problem, batch.points);

  const BatchDual zero = BatchDual::zeros(batch.size(), 1, 1);
  CHECK(loss_ritz_T(inst.problem, zero, batch.weights, f, DualValue(), false).value == 0.0);

  const BatchDual u = field_on(inst.problem.exact_u, batch, 1, 1);
  const double at_exact = loss_ritz_T(inst.problem, u, batch.weights, f, DualValue(), false).value;
  CHECK(at_exact == doctest::Approx(-1.0 / 6.0).epsilon(2e-3));
}

TEST_CASE("loss_ritz_T rejects formulations without closed-form T") {
  const ProblemInstance inst = make_problem("convection_ultraweak");
  Rng rng(13);
  const QuadBatch batch = sample_batch(SamplingPlan::uniform1d(20), rng);
  const BatchDual u = BatchDual::zeros(batch.size(), 1, 0);
  const Vec f = load_density(inst.problem, batch.points);
  CHECK_THROWS_AS(loss_ritz_T(inst.problem, u, batch.weights, f, DualValue(), false), ConfigError);
}

TEST_CASE("Dirac problem: the Ritz loss at the exact corner solution is -2 exactly") {
  const ProblemInstance inst = make_problem("poisson_weak_delta");
  Rng rng(14);
  const QuadBatch batch = make_batch(inst, inst.default_plan, rng);
  const Vec f = load_density(inst.problem, batch.points);
  const BatchDual u = field_on(inst.problem.exact_u, batch, 1, 1);
  const DualValue u_x0 = inst.problem.exact_u(Point(0.5));
  const double loss = loss_ritz_T(inst.problem, u, batch.weights, f, u_x0, false).value;
  // (u*')^2 = 4 everywhere and the weights sum to 1, so the value is exact.
  CHECK(loss == doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("loss_ritz_tau: pass-through tau equals loss_ritz_T on weak problems") {
  const ProblemInstance inst = make_problem("poisson_weak_smooth");
  Rng rng(15);
  const QuadBatch batch = sample_batch(SamplingPlan::uniform1d(200), rng);
  const Vec f = load_density(inst.problem, batch.points);

  const NetworkSpec u_spec{1, {12, 12}, Activation::Tanh};
  const ParamStore up = glorot_init(u_spec, 6);
  MaskedNetBatch u_eng(u_spec, inst.trial_mask, 1, 1);
  const BatchDual& u = u_eng.eval(up, batch.points);

  NetworkSpec tau_spec{2, {1}, Activation::Identity};
  ParamStore tp = make_param_store(tau_spec);
  tp.weight(0)(0, 1) = 1.0;
  tp.weight(1)(0, 0) = 1.0;
  TauNetBatch tau_eng(tau_spec, mask_free(1), 1, 1);
  const BatchDual& v = tau_eng.eval(tp, batch.points, u);

  const double via_tau = loss_ritz_tau(inst.problem, v, batch.weights, f, 0.0, false).value;
  const double via_T = loss_ritz_T(inst.problem, u, batch.weights, f, DualValue(), false).value;
  CHECK(via_tau == doctest::Approx(via_T).epsilon(1e-12));
}

TEST_CASE("loss_ritz_tau at the exact optimal test function (ultraweak)") {
  const ProblemInstance inst = make_problem("convection_ultraweak");
  Rng rng(16);
  const QuadBatch batch = make_batch(inst, SamplingPlan::uniform1d(10000), rng);
  const Vec f = load_density(inst.problem, batch.points);
  const BatchDual v = field_on(inst.problem.exact_Tu, batch, 1, 1);
  const double v_x0 = inst.problem.exact_Tu(Point(0.5 + 1e-12)).v;
  const double loss = loss_ritz_tau(inst.problem, v, batch.weights, f, v_x0, false).value;
  CHECK(loss == doctest::Approx(-0.25).epsilon(5e-3));
}

TEST_CASE("loss_inner: v = u attains the minimum -0.5||u||^2 when T is the identity") {
  const ProblemInstance inst = make_problem("poisson_weak_smooth");
  Rng rng(17);
  const QuadBatch batch = sample_batch(SamplingPlan::uniform1d(300), rng);
  const NetworkSpec spec{1, {10}, Activation::Tanh};
  MaskedNetBatch u_eng(spec, inst.trial_mask, 1, 1);
  const BatchDual& u = u_eng.eval(glorot_init(spec, 3), batch.points);

  const BatchDual zero = BatchDual::zeros(batch.size(), 1, 1);
  CHECK(loss_inner(inst.problem, u, zero, batch.weights, false).value == 0.0);

  const double at_u = loss_inner(inst.problem, u, u, batch.weights, false).value;
  const double half_norm = 0.5 * norm_sq(inst.problem.v_norm, u, batch.weights, 1);
  CHECK(at_u == doctest::Approx(-half_norm).epsilon(1e-12));
}

TEST_CASE("loss_inner minimum on the ultraweak step problem is -1/4") {
  const ProblemInstance inst = make_problem("convection_ultraweak");
  Rng rng(18);
  const QuadBatch batch = make_batch(inst, SamplingPlan::uniform1d(10000), rng);
  const BatchDual u = field_on(inst.problem.exact_u, batch, 1, 1);
  const BatchDual v = field_on(inst.problem.exact_Tu, batch, 1, 1);
  const double loss = loss_inner(inst.problem, u, v, batch.weights, false).value;
  CHECK(loss == doctest::Approx(-0.25).epsilon(5e-3));

  // Minimum principle: random test fields cannot go below -0.5 ||Tu||_V^2.
  const double floor = -0.5 * norm_sq(inst.problem.v_norm, v, batch.weights, 1);
  const NetworkSpec spec{1, {10}, Activation::Tanh};
  MaskedNetBatch v_eng(spec, inst.test_mask, 1, 1);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const BatchDual& vr = v_eng.eval(glorot_init(spec, seed), batch.points);
    const double lr = loss_inner(inst.problem, u, vr, batch.weights, false).value;
    CHECK(lr > floor - 5e-3);
  }
}

TEST_CASE("loss_adjoint_ritz closed forms and the scaling parabola") {
  const ProblemInstance inst = make_problem("convection_ultraweak");
  Rng rng(19);
  const QuadBatch batch = make_batch(inst, SamplingPlan::uniform1d(10000), rng);
  const Vec f = load_density(inst.problem, batch.points);

  const BatchDual zero = BatchDual::zeros(batch.size(), 1, 1);
  CHECK(loss_adjoint_ritz(inst.problem, zero, batch.weights, f, 0.0, false).value == 0.0);

  BatchDual v = field_on(inst.problem.exact_Tu, batch, 1, 1);
  const double v_x0 = inst.problem.exact_Tu(Point(0.5 + 1e-12)).v;
  for (const auto& [t, expected] :
       std::vector<std::pair<double, double>>{{0.5, -0.1875}, {1.0, -0.25}, {2.0, 0.0}}) {
    BatchDual tv = v;
    tv.comp *= t;
    const double loss =
        loss_adjoint_ritz(inst.problem, tv, batch.weights, f, t * v_x0, false).value;
    CHECK(loss == doctest::Approx(expected).epsilon(5e-3));
  }
}

TEST_CASE("apply_adjoint recovers the trial function") {
  const ProblemInstance inst = make_problem("convection_ultraweak");
  // v = 1-x: A'v = 1.
  DualValue v = DualValue::constant(1.0, 1) - DualValue::axis(0.3, 0, 1);
  CHECK(apply_adjoint(inst.problem, v) == doctest::Approx(1.0));
  // v = Tu*: A'v = u* away from the kink.
  CHECK(apply_adjoint(inst.problem, inst.problem.exact_Tu(Point(0.2))) == doctest::Approx(0.0));
  CHECK(apply_adjoint(inst.problem, inst.problem.exact_Tu(Point(0.8))) == doctest::Approx(1.0));
  // v = (1-x)^2: A'v = 2(1-x), at x=0.25 -> 1.5.
  const DualValue x = DualValue::axis(0.25, 0, 1);
  CHECK(apply_adjoint(inst.problem, square(1.0 - x)) == doctest::Approx(1.5));
}

TEST_CASE("ritz_gap_check: the discrete identity holds to roundoff") {
  const ProblemInstance inst = make_problem("poisson_weak_smooth");
  Rng rng(20);
  const QuadBatch batch = sample_batch(SamplingPlan::uniform1d(200), rng);
  const BatchDual ue = field_on(inst.problem.exact_u, batch, 1, 1);

  // u = u*: both sides vanish.
  auto [l0, r0] = ritz_gap_check(inst.problem, ue, ue, batch.weights);
  CHECK(std::abs(l0) < 1e-12);
  CHECK(std::abs(r0) < 1e-12);

  // u = 0: both sides equal 0.5||u*||_V^2, about 1/6.
  const BatchDual zero = BatchDual::zeros(batch.size(), 1, 1);
  auto [l1, r1] = ritz_gap_check(inst.problem, zero, ue, batch.weights);
  CHECK(l1 == doctest::Approx(1.0 / 6.0).epsilon(0.05));
  CHECK(std::abs(l1 - r1) < 1e-12);

  // Random networks: identity to 1e-10 on the shared batch.
  const NetworkSpec spec{1, {20, 20}, Activation::Tanh};
  MaskedNetBatch u_eng(spec, inst.trial_mask, 1, 1);
  for (uint64_t seed = 0; seed < 100; ++seed) {
    const BatchDual& u = u_eng.eval(glorot_init(spec, seed), batch.points);
    auto [lhs, rhs] = ritz_gap_check(inst.problem, u, ue, batch.weights);
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}
