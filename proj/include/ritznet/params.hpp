#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ritznet/common.hpp"

namespace ritznet {

enum class Activation { Tanh, Sigmoid, Sine, Identity };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

// Fully-connected scalar-output architecture: k hidden layers with affine maps
// and a pointwise activation, closed by a bias-free linear output row.
struct NetworkSpec {
  int input_dim = 1;
  std::vector<int> widths;  // hidden widths, size k >= 1
  Activation activation = Activation::Tanh;

  int depth() const { return static_cast<int>(widths.size()); }
  void validate() const;
};

// Shape and flat-vector placement of one layer's parameters.
struct LayerLayout {
  int rows = 0;
  int cols = 0;
  long w_offset = 0;
  long b_offset = -1;  // -1: no bias (output layer)
};

// All learnable parameters of one network as a single flat vector, with the
// per-layer layout needed to view slices as weight matrices and bias vectors.
struct ParamStore {
  Vec values;
  std::vector<LayerLayout> layout;  // hidden layers then the output row

  long size() const { return values.size(); }

  Eigen::Map<const Mat> weight(int layer) const {
    const auto& l = layout[static_cast<size_t>(layer)];
    return Eigen::Map<const Mat>(values.data() + l.w_offset, l.rows, l.cols);
  }
  Eigen::Map<const Vec> bias(int layer) const {
    const auto& l = layout[static_cast<size_t>(layer)];
    return Eigen::Map<const Vec>(values.data() + l.b_offset, l.rows);
  }
  Eigen::Map<Mat> weight(int layer) {
    const auto& l = layout[static_cast<size_t>(layer)];
    return Eigen::Map<Mat>(values.data() + l.w_offset, l.rows, l.cols);
  }
  Eigen::Map<Vec> bias(int layer) {
    const auto& l = layout[static_cast<size_t>(layer)];
    return Eigen::Map<Vec>(values.data() + l.b_offset, l.rows);
  }
};

long param_count(const NetworkSpec& spec);

// Zero-valued store with the layout implied by the spec.
ParamStore make_param_store(const NetworkSpec& spec);

// Glorot-uniform weights, zero biases. Draw order is fixed (layers in order,
// matrices column-major) so a seed pins the full initialization.
ParamStore glorot_init(const NetworkSpec& spec, uint64_t seed);

}  // namespace ritznet
