#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ritznet/dual.hpp"
#include "ritznet/params.hpp"

namespace ritznet {

// Scalar evaluation graph over dual-number payloads: forward-mode duals carry
// the spatial derivatives, the recorded graph carries exact reverse-mode
// parameter gradients of any scalar node. Nodes are append-only; the reverse
// sweep visits them in strict reverse order, which is a reverse topological
// order because inputs always precede their consumers.
class Tape {
 public:
  enum class Op : uint8_t {
    Const,
    Leaf,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Tanh,
    Sigmoid,
    Sin,
    Exp,
    Log,
    Sqrt,
    Square,
    PowC,
    ExtractD1,
    ExtractD2,
  };

  struct Node {
    Op op;
    int32_t a = -1;
    int32_t b = -1;   // second input; for Extract* the axis; unused otherwise
    int32_t leaf = -1;
    DualValue val;
    DualValue pa;  // d(node)/d(input a) as an algebra element
    DualValue pb;
  };

  explicit Tape(int dim = 1) : dim_(dim) {}

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(nodes_.size()); }
  int leaf_count() const { return n_leaves_; }
  const Node& node(int i) const { return nodes_[static_cast<size_t>(i)]; }
  const DualValue& value(int i) const { return nodes_[static_cast<size_t>(i)].val; }

  // Learnable scalar; gradients are reported in leaf registration order.
  int leaf(double value);
  // Registers every entry of a flat parameter vector; returns the index of the
  // first leaf node.
  int leaves(const Vec& values);

  int constant(const DualValue& value);
  int constant(double value) { return constant(DualValue::constant(value, dim_)); }
  // Spatial coordinate: value x with d/dx_axis = 1.
  int axis_input(double x, int axis, int order = 2);

  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int div(int a, int b);
  int neg(int a);
  int tanh(int a);
  int sigmoid(int a);
  int sin(int a);
  int exp(int a);
  int log(int a);
  int sqrt(int a);
  int square(int a);
  int pow_c(int a, double exponent);
  int activation(Activation kind, int a);

  // Component extraction: the spatial derivative becomes a scalar value whose
  // own derivative chain shifts one (or two) orders up. Only the extracted
  // axis keeps a valid derivative chain in 2D (mixed terms are not carried).
  int extract_d1(int a, int axis);
  int extract_d2(int a, int axis);

  // Exact reverse-mode gradient of nodes[output].v with respect to every
  // registered leaf. Deterministic for a fixed tape.
  Vec gradient(int output) const;

  void clear();

 private:
  int push(Node n);
  void check(int i) const;

  std::vector<Node> nodes_;
  int n_leaves_ = 0;
  int dim_;
};

// Builds the raw (unmasked) network evaluation on the tape. `leaf_base` is the
// index of the first of the network's param_count leaves, registered in
// ParamStore order. Returns the output node.
int tape_net_forward(Tape& tape, const NetworkSpec& spec, int leaf_base,
                     const std::vector<int>& input_nodes);

// Single-point network evaluation with spatial derivatives up to `order`,
// recorded so a reverse sweep yields d(output)/d(params).
struct TapeEval {
  Tape tape;
  int output = -1;
  DualValue value;
};
TapeEval forward_eval(const NetworkSpec& spec, const ParamStore& params, const Point& x, int order);

// Gradient of a recorded scalar node w.r.t. all leaves.
Vec param_gradient(const Tape& tape, int loss_node);

// Finite-difference probe of a gradient implementation: max over random unit
// directions d of |(L(p+hd)-L(p-hd))/2h - g.d| / (|g.d| + eps_machine).
double directional_check(const std::function<double(const Vec&)>& loss_value,
                         const std::function<Vec(const Vec&)>& loss_grad, const Vec& params,
                         int n_probes, double h, uint64_t seed);

}  // namespace ritznet
