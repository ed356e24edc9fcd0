#pragma once

#include <vector>

#include "ritznet/dual.hpp"
#include "ritznet/params.hpp"

namespace ritznet {

// Taylor-component bookkeeping for batched evaluation. Component planes are
// ordered value, first derivatives per axis, then pure second derivatives per
// axis, so truncating to a lower order keeps a contiguous prefix.
inline int ncomp(int dim, int order) { return order == 0 ? 1 : 1 + dim * order; }
inline constexpr int comp_val() { return 0; }
inline constexpr int comp_d1(int axis) { return 1 + axis; }
inline int comp_d2(int axis, int dim) { return 1 + dim + axis; }

// A scalar field sampled over a batch: one column per Taylor component.
struct BatchDual {
  int dim = 1;
  int order = 0;
  Mat comp;  // n x ncomp(dim, order)

  int size() const { return static_cast<int>(comp.rows()); }
  int comps() const { return static_cast<int>(comp.cols()); }

  static BatchDual zeros(int n, int dim, int order) {
    BatchDual b;
    b.dim = dim;
    b.order = order;
    b.comp = Mat::Zero(n, ncomp(dim, order));
    return b;
  }

  double value(int i) const { return comp(i, comp_val()); }
  // Scalar view of one batch entry.
  DualValue at(int i) const {
    DualValue d;
    d.dim = dim;
    d.order = order;
    d.v = comp(i, comp_val());
    for (int ax = 0; ax < dim; ++ax) {
      if (order >= 1) d.d1[ax] = comp(i, comp_d1(ax));
      if (order >= 2) d.d2[ax] = comp(i, comp_d2(ax, dim));
    }
    return d;
  }
  void set(int i, const DualValue& d) {
    comp(i, comp_val()) = d.v;
    for (int ax = 0; ax < dim; ++ax) {
      if (order >= 1) comp(i, comp_d1(ax)) = d.d1[ax];
      if (order >= 2) comp(i, comp_d2(ax, dim)) = d.d2[ax];
    }
  }
};

// Batched MLP evaluation in Taylor arithmetic with a hand-rolled reverse pass:
// forward caches per-layer states, backward turns adjoints of the output
// components into exact parameter gradients and, when asked, adjoints of the
// input channels (which is how derivatives chain through composed networks).
//
// Layer states are width x (C*n) matrices whose horizontal blocks are the
// component planes, so each affine map is a single matrix product across all
// components.
class MlpBatch {
 public:
  MlpBatch(NetworkSpec spec, int dim, int order);

  int order() const { return order_; }
  int dim() const { return dim_; }

  // inputs: one BatchDual per input channel, all with this engine's dim/order.
  const BatchDual& forward(const ParamStore& params, const std::vector<BatchDual>& inputs);

  // out_adj may carry a lower order than the forward pass (trailing component
  // adjoints treated as zero). Parameter gradients are accumulated into *grad
  // when given; input-channel adjoints are written to *input_adj when given.
  void backward(const BatchDual& out_adj, const ParamStore& params, Vec* grad,
                std::vector<BatchDual>* input_adj);

 private:
  void mix_activation(const Mat& z, Mat& a, int n) const;
  void mix_activation_reverse(const Mat& z, const Mat& a_bar, Mat& z_bar, int n, int cb) const;

  NetworkSpec spec_;
  int dim_, order_, comps_;
  int n_ = -1;
  Mat in_;
  std::vector<Mat> z_, a_;
  Mat out_cat_;
  BatchDual out_;
};

// Builds the input channels for a spatial batch: channel `ax` is the
// coordinate of axis `ax` with unit first derivative along itself.
std::vector<BatchDual> spatial_inputs(const std::vector<Point>& points, int dim, int order);

}  // namespace ritznet
