#include <doctest.h>

#include <cmath>

#include "ritznet/network.hpp"
#include "ritznet/rng.hpp"
#include "ritznet/tape.hpp"

using namespace ritznet;

TEST_CASE("forward_eval: one-neuron identity-weight net at zero") {
  // Single hidden neuron, W=[[1]], b=[0], output weight 1: u = tanh(x).
  NetworkSpec spec{1, {1}, Activation::Tanh};
  ParamStore p = make_param_store(spec);
  p.weight(0)(0, 0) = 1.0;
  p.weight(1)(0, 0) = 1.0;
  const TapeEval ev = forward_eval(spec, p, Point(0.0), 1);
  CHECK(ev.value.v == doctest::Approx(0.0));
  CHECK(ev.value.d1[0] == doctest::Approx(1.0));
}

TEST_CASE("forward_eval: zero output layer kills value and all derivatives") {
  NetworkSpec spec{1, {8, 8}, Activation::Tanh};
  ParamStore p = glorot_init(spec, 7);
  p.weight(2).setZero();
  for (double x : {-0.3, 0.0, 0.9}) {
    const TapeEval ev = forward_eval(spec, p, Point(x), 2);
    CHECK(ev.value.v == 0.0);
    CHECK(ev.value.d1[0] == 0.0);
    CHECK(ev.value.d2[0] == 0.0);
  }
}

TEST_CASE("forward_eval: spatial derivative matches central differences") {
  NetworkSpec spec{1, {20, 20}, Activation::Tanh};
  ParamStore p = glorot_init(spec, 42);
  const double x = 0.3, h = 1e-5;
  const TapeEval ev = forward_eval(spec, p, Point(x), 2);
  auto val = [&](double xx) { return forward_eval(spec, p, Point(xx), 0).value.v; };
  const double fd = (val(x + h) - val(x - h)) / (2.0 * h);
  CHECK(std::abs(ev.value.d1[0] - fd) / std::abs(fd) < 1e-6);
  const double fd2 = (val(x + h) - 2.0 * val(x) + val(x - h)) / (h * h);
  CHECK(ev.value.d2[0] == doctest::Approx(fd2).epsilon(1e-4));
}

TEST_CASE("forward_eval rejects unsupported orders") {
  NetworkSpec spec{1, {4}, Activation::Tanh};
  ParamStore p = glorot_init(spec, 1);
  CHECK_THROWS_AS(forward_eval(spec, p, Point(0.5), 3), UnsupportedOrderError);
}

TEST_CASE("param_gradient: quadratic loss through the tape gives theta back") {
  // loss = ||theta||^2 / 2 for five leaves.
  Tape tape(1);
  Vec theta(5);
  theta << 0.3, -1.2, 2.0, 0.0, 0.7;
  tape.leaves(theta);
  int loss = -1;
  for (int i = 0; i < 5; ++i) {
    const int sq = tape.square(i);
    loss = (loss < 0) ? sq : tape.add(loss, sq);
  }
  loss = tape.mul(loss, tape.constant(0.5));
  const Vec g = param_gradient(tape, loss);
  for (int i = 0; i < 5; ++i) CHECK(g[i] == doctest::Approx(theta[i]).epsilon(1e-14));
}

TEST_CASE("param_gradient: constant loss has zero gradient") {
  Tape tape(1);
  Vec theta = Vec::Ones(4);
  tape.leaves(theta);
  const int c = tape.constant(3.0);
  const int loss = tape.mul(c, tape.constant(2.0));
  const Vec g = param_gradient(tape, loss);
  CHECK(g.norm() == 0.0);
}

TEST_CASE("param_gradient: loss built from spatial derivatives, FD-checked") {
  // loss = sum_i w_i u'(x_i)^2 on a fixed batch; gradient vs central FD over
  // 20 random coordinates, relative error < 1e-5.
  NetworkSpec spec{1, {10, 10}, Activation::Tanh};
  ParamStore params = glorot_init(spec, 5);
  std::vector<double> xs, ws;
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    xs.push_back(rng.uniform());
    ws.push_back(1.0 / 20);
  }

  auto loss_of = [&](const Vec& v) {
    ParamStore p = params;
    p.values = v;
    double acc = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
      const DualValue u = forward_eval(spec, p, Point(xs[i]), 1).value;
      acc += ws[i] * u.d1[0] * u.d1[0];
    }
    return acc;
  };

  // Single-tape recording of the same loss.
  Tape tape(1);
  const int base = tape.leaves(params.values);
  int loss = -1;
  for (size_t i = 0; i < xs.size(); ++i) {
    std::vector<int> in{tape.axis_input(xs[i], 0, 1)};
    const int u = tape_net_forward(tape, spec, base, in);
    const int du = tape.extract_d1(u, 0);
    const int term = tape.mul(tape.constant(ws[i]), tape.square(du));
    loss = (loss < 0) ? term : tape.add(loss, term);
  }
  const Vec g = param_gradient(tape, loss);

  Rng pick(3);
  const double h = 1e-5;
  for (int probe = 0; probe < 20; ++probe) {
    const long j = static_cast<long>(pick.raw() % static_cast<uint64_t>(params.size()));
    Vec vp = params.values, vm = params.values;
    vp[j] += h;
    vm[j] -= h;
    const double fd = (loss_of(vp) - loss_of(vm)) / (2.0 * h);
    CHECK(std::abs(fd - g[j]) / (std::abs(g[j]) + 1e-12) < 1e-5);
  }
}

TEST_CASE("gradient linearity: grad(a L1 + b L2) = a grad L1 + b grad L2") {
  NetworkSpec spec{1, {6}, Activation::Tanh};
  ParamStore params = glorot_init(spec, 17);
  Tape tape(1);
  const int base = tape.leaves(params.values);
  std::vector<int> in{tape.axis_input(0.4, 0, 1)};
  const int u = tape_net_forward(tape, spec, base, in);
  const int l1 = tape.square(u);
  const int l2 = tape.square(tape.extract_d1(u, 0));
  const double a = 2.5, b = -0.75;
  const int mix = tape.add(tape.mul(tape.constant(a), l1), tape.mul(tape.constant(b), l2));
  const Vec g1 = param_gradient(tape, l1);
  const Vec g2 = param_gradient(tape, l2);
  const Vec gm = param_gradient(tape, mix);
  CHECK((gm - (a * g1 + b * g2)).norm() < 1e-13 * gm.norm());
}

TEST_CASE("directional_check: quadratic loss is exact to roundoff") {
  auto value = [](const Vec& p) { return 0.5 * p.squaredNorm(); };
  auto grad = [](const Vec& p) { return Vec(p); };
  Vec p0 = Vec::LinSpaced(7, -1.0, 2.0);
  const double dev = directional_check(value, grad, p0, 10, 1e-4, 5);
  CHECK(dev < 1e-8);
}

TEST_CASE("zero network: gradient of 0.5*u^2 vanishes along every direction") {
  NetworkSpec spec{1, {8}, Activation::Tanh};
  ParamStore params = make_param_store(spec);  // all zeros
  auto value = [&](const Vec& v) {
    ParamStore p = params;
    p.values = v;
    const DualValue u = forward_eval(spec, p, Point(0.37), 0).value;
    return 0.5 * u.v * u.v;
  };
  auto grad = [&](const Vec& v) {
    ParamStore p = params;
    p.values = v;
    TapeEval ev = forward_eval(spec, p, Point(0.37), 0);
    const int loss = ev.tape.mul(ev.tape.constant(0.5), ev.tape.square(ev.output));
    return param_gradient(ev.tape, loss);
  };
  const Vec g = grad(params.values);
  CHECK(g.norm() == 0.0);
  Rng rng(2);
  for (int i = 0; i < 5; ++i) {
    Vec d(params.size());
    for (long j = 0; j < d.size(); ++j) d[j] = rng.normal();
    d /= d.norm();
    CHECK(std::abs(g.dot(d)) == 0.0);
  }
  (void)value;
}
