#include "ritznet/tape.hpp"

#include <cmath>

#include "ritznet/rng.hpp"

namespace ritznet {

namespace {

// Transposed multiplication by the algebra element p: accumulates the adjoint
// contribution of an input given the adjoint of the output.
inline void accumulate_adjoint(const DualValue& p, const DualValue& out_adj, int dim,
                               DualValue& in_adj) {
  double acc_v = p.v * out_adj.v;
  for (int ax = 0; ax < dim; ++ax) {
    acc_v += p.d1[ax] * out_adj.d1[ax] + p.d2[ax] * out_adj.d2[ax];
    in_adj.d1[ax] += p.v * out_adj.d1[ax] + 2.0 * p.d1[ax] * out_adj.d2[ax];
    in_adj.d2[ax] += p.v * out_adj.d2[ax];
  }
  in_adj.v += acc_v;
}

}  // namespace

int Tape::push(Node n) {
  nodes_.push_back(n);
  return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check(int i) const {
  if (i < 0 || i >= size()) throw InternalError("tape: dangling node index");
}

int Tape::leaf(double value) {
  Node n;
  n.op = Op::Leaf;
  n.leaf = n_leaves_++;
  n.val = DualValue::constant(value, dim_);
  return push(n);
}

int Tape::leaves(const Vec& values) {
  const int base = size();
  for (long i = 0; i < values.size(); ++i) leaf(values[i]);
  return base;
}

int Tape::constant(const DualValue& value) {
  Node n;
  n.op = Op::Const;
  n.val = value;
  n.val.dim = dim_;
  return push(n);
}

int Tape::axis_input(double x, int axis, int order) {
  return constant(DualValue::axis(x, axis, dim_, order));
}

int Tape::add(int a, int b) {
  check(a);
  check(b);
  Node n;
  n.op = Op::Add;
  n.a = a;
  n.b = b;
  n.val = value(a) + value(b);
  n.pa = DualValue::constant(1.0, dim_);
  n.pb = DualValue::constant(1.0, dim_);
  return push(n);
}

int Tape::sub(int a, int b) {
  check(a);
  check(b);
  Node n;
  n.op = Op::Sub;
  n.a = a;
  n.b = b;
  n.val = value(a) - value(b);
  n.pa = DualValue::constant(1.0, dim_);
  n.pb = DualValue::constant(-1.0, dim_);
  return push(n);
}

int Tape::mul(int a, int b) {
  check(a);
  check(b);
  Node n;
  n.op = Op::Mul;
  n.a = a;
  n.b = b;
  n.val = value(a) * value(b);
  n.pa = value(b);
  n.pb = value(a);
  return push(n);
}

int Tape::div(int a, int b) {
  check(a);
  check(b);
  Node n;
  n.op = Op::Div;
  n.a = a;
  n.b = b;
  const DualValue ib = inv(value(b));
  n.val = value(a) * ib;
  n.pa = ib;
  n.pb = -(n.val * ib);
  return push(n);
}

int Tape::neg(int a) {
  check(a);
  Node n;
  n.op = Op::Neg;
  n.a = a;
  n.val = -value(a);
  n.pa = DualValue::constant(-1.0, dim_);
  return push(n);
}

int Tape::tanh(int a) {
  check(a);
  Node n;
  n.op = Op::Tanh;
  n.a = a;
  n.val = ritznet::tanh(value(a));
  n.pa = DualValue::constant(1.0, dim_) - n.val * n.val;
  return push(n);
}

int Tape::sigmoid(int a) {
  check(a);
  Node n;
  n.op = Op::Sigmoid;
  n.a = a;
  n.val = ritznet::sigmoid(value(a));
  n.pa = n.val * (DualValue::constant(1.0, dim_) - n.val);
  return push(n);
}

int Tape::sin(int a) {
  check(a);
  Node n;
  n.op = Op::Sin;
  n.a = a;
  n.val = ritznet::sin(value(a));
  n.pa = ritznet::cos(value(a));
  return push(n);
}

int Tape::exp(int a) {
  check(a);
  Node n;
  n.op = Op::Exp;
  n.a = a;
  n.val = ritznet::exp(value(a));
  n.pa = n.val;
  return push(n);
}

int Tape::log(int a) {
  check(a);
  Node n;
  n.op = Op::Log;
  n.a = a;
  n.val = ritznet::log(value(a));
  n.pa = inv(value(a));
  return push(n);
}

int Tape::sqrt(int a) {
  check(a);
  Node n;
  n.op = Op::Sqrt;
  n.a = a;
  n.val = ritznet::sqrt(value(a));
  n.pa = 0.5 * inv(n.val);
  return push(n);
}

int Tape::square(int a) {
  check(a);
  Node n;
  n.op = Op::Square;
  n.a = a;
  n.val = value(a) * value(a);
  n.pa = 2.0 * value(a);
  return push(n);
}

int Tape::pow_c(int a, double exponent) {
  check(a);
  Node n;
  n.op = Op::PowC;
  n.a = a;
  n.val = ritznet::pow(value(a), exponent);
  n.pa = exponent * ritznet::pow(value(a), exponent - 1.0);
  return push(n);
}

int Tape::activation(Activation kind, int a) {
  switch (kind) {
    case Activation::Tanh: return tanh(a);
    case Activation::Sigmoid: return sigmoid(a);
    case Activation::Sine: return sin(a);
    case Activation::Identity: return a;
  }
  throw InternalError("bad activation enum");
}

int Tape::extract_d1(int a, int axis) {
  check(a);
  const DualValue& in = value(a);
  if (in.order < 1) throw UnsupportedOrderError("extract_d1: input has no first derivative");
  Node n;
  n.op = Op::ExtractD1;
  n.a = a;
  n.b = axis;
  n.val = DualValue::constant(in.d1[axis], dim_);
  n.val.order = in.order - 1;
  if (in.order >= 2) n.val.d1[axis] = in.d2[axis];
  return push(n);
}

int Tape::extract_d2(int a, int axis) {
  check(a);
  const DualValue& in = value(a);
  if (in.order < 2) throw UnsupportedOrderError("extract_d2: input has no second derivative");
  Node n;
  n.op = Op::ExtractD2;
  n.a = a;
  n.b = axis;
  n.val = DualValue::constant(in.d2[axis], dim_);
  n.val.order = 0;
  return push(n);
}

Vec Tape::gradient(int output) const {
  check(output);
  std::vector<DualValue> adj(nodes_.size());
  for (auto& a : adj) {
    a = DualValue();
    a.v = 0.0;
    a.dim = dim_;
  }
  adj[static_cast<size_t>(output)].v = 1.0;

  Vec grad = Vec::Zero(n_leaves_);
  for (int i = output; i >= 0; --i) {
    const Node& n = nodes_[static_cast<size_t>(i)];
    const DualValue& g = adj[static_cast<size_t>(i)];
    switch (n.op) {
      case Op::Const:
        break;
      case Op::Leaf:
        // Parameters are real scalars: only the value channel is learnable.
        grad[n.leaf] += g.v;
        break;
      case Op::ExtractD1: {
        DualValue& ia = adj[static_cast<size_t>(n.a)];
        ia.d1[n.b] += g.v;
        ia.d2[n.b] += g.d1[n.b];
        break;
      }
      case Op::ExtractD2: {
        adj[static_cast<size_t>(n.a)].d2[n.b] += g.v;
        break;
      }
      default:
        accumulate_adjoint(n.pa, g, dim_, adj[static_cast<size_t>(n.a)]);
        if (n.b >= 0) accumulate_adjoint(n.pb, g, dim_, adj[static_cast<size_t>(n.b)]);
        break;
    }
  }
  return grad;
}

void Tape::clear() {
  nodes_.clear();
  n_leaves_ = 0;
}

int tape_net_forward(Tape& tape, const NetworkSpec& spec, int leaf_base,
                     const std::vector<int>& input_nodes) {
  spec.validate();
  if (static_cast<int>(input_nodes.size()) != spec.input_dim)
    throw InternalError("tape_net_forward: input arity mismatch");

  // Leaf node indices follow ParamStore layout: per hidden layer W then b,
  // then the output row.
  long off = leaf_base;
  std::vector<int> prev = input_nodes;
  int prev_n = spec.input_dim;
  for (int w : spec.widths) {
    std::vector<int> cur(static_cast<size_t>(w));
    const long w_off = off;
    const long b_off = off + static_cast<long>(w) * prev_n;
    for (int r = 0; r < w; ++r) {
      int acc = static_cast<int>(b_off + r);  // bias leaf
      for (int c = 0; c < prev_n; ++c) {
        // Column-major weight storage: entry (r,c) sits at w_off + c*w + r.
        const int wij = static_cast<int>(w_off + static_cast<long>(c) * w + r);
        acc = tape.add(acc, tape.mul(wij, prev[static_cast<size_t>(c)]));
      }
      cur[static_cast<size_t>(r)] = tape.activation(spec.activation, acc);
    }
    off = b_off + w;
    prev = std::move(cur);
    prev_n = w;
  }
  // Bias-free linear output row.
  int out = -1;
  for (int c = 0; c < prev_n; ++c) {
    const int wij = static_cast<int>(off + c);
    const int term = tape.mul(wij, prev[static_cast<size_t>(c)]);
    out = (out < 0) ? term : tape.add(out, term);
  }
  return out;
}

TapeEval forward_eval(const NetworkSpec& spec, const ParamStore& params, const Point& x,
                      int order) {
  if (order < 0 || order > 2)
    throw UnsupportedOrderError("forward_eval: derivative order must be 0, 1 or 2");
  if (x.dim != spec.input_dim)
    throw ConfigError("forward_eval: point dimension does not match network input");

  TapeEval ev{Tape(x.dim), -1, DualValue()};
  const int base = ev.tape.leaves(params.values);
  std::vector<int> inputs;
  for (int ax = 0; ax < x.dim; ++ax) inputs.push_back(ev.tape.axis_input(x[ax], ax, order));
  ev.output = tape_net_forward(ev.tape, spec, base, inputs);
  ev.value = ev.tape.value(ev.output);
  ev.value.order = order;
  return ev;
}

Vec param_gradient(const Tape& tape, int loss_node) { return tape.gradient(loss_node); }

double directional_check(const std::function<double(const Vec&)>& loss_value,
                         const std::function<Vec(const Vec&)>& loss_grad, const Vec& params,
                         int n_probes, double h, uint64_t seed) {
  if (!(h > 0.0)) throw ConfigError("directional_check: step must be positive");
  Rng rng(seed);
  const Vec grad = loss_grad(params);
  double worst = 0.0;
  for (int probe = 0; probe < n_probes; ++probe) {
    Vec dir(params.size());
    for (long i = 0; i < dir.size(); ++i) dir[i] = rng.normal();
    dir /= dir.norm();
    const double fd = (loss_value(params + h * dir) - loss_value(params - h * dir)) / (2.0 * h);
    const double gd = grad.dot(dir);
    const double dev =
        std::abs(fd - gd) / (std::abs(gd) + std::numeric_limits<double>::epsilon());
    worst = std::max(worst, dev);
  }
  return worst;
}

}  // namespace ritznet
