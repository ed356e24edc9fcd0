#pragma once

#include <Eigen/Core>
#include <array>
#include <stdexcept>
#include <string>

namespace ritznet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr int kMaxDim = 2;

// Spatial point in 1 or 2 dimensions.
struct Point {
  std::array<double, kMaxDim> coord{0.0, 0.0};
  int dim = 1;

  Point() = default;
  explicit Point(double x) : coord{x, 0.0}, dim(1) {}
  Point(double x, double y) : coord{x, y}, dim(2) {}

  double operator[](int axis) const { return coord[static_cast<size_t>(axis)]; }
  double& operator[](int axis) { return coord[static_cast<size_t>(axis)]; }
};

// Invalid user-facing configuration (unknown activation, bad beta parameters,
// incompatible method/problem pairing, ...).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Derivative order above what the evaluator supports.
struct UnsupportedOrderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Test-function norm collapsed below the divisibility floor in a normalized
// loss; signals v_NN ~ 0.
struct DegenerateTestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Closed-form maximizer requested at the exact solution, where it is not
// defined.
struct UndefinedMaximizerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient during training; carries the iteration context.
struct TrainingDivergedError : std::runtime_error {
  long iteration;
  std::string loop_tag;
  TrainingDivergedError(long iter, std::string tag, const std::string& what)
      : std::runtime_error(what), iteration(iter), loop_tag(std::move(tag)) {}
};

// Internal invariant violation (dangling tape index, layout mismatch).
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace ritznet
