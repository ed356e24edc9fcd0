#pragma once

#include "ritznet/common.hpp"

namespace ritznet {

struct AdamParams {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Vec m, v;  // first and second moments, zero-initialized
  long step = 0;
  AdamParams hp;

  explicit AdamState(long n = 0, AdamParams params = {})
      : m(Vec::Zero(n)), v(Vec::Zero(n)), step(0), hp(params) {}
};

// Bias-corrected Adam update. sign = -1 descends, sign = +1 ascends (the
// min-max maximizer reuses the same moment statistics).
void adam_step(AdamState& state, Vec& params, const Vec& grad, int sign = -1);

}  // namespace ritznet
