#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ritznet/common.hpp"

namespace ritznet {

enum class LoopTag { Outer, Inner, Warmup };

inline std::string to_string(LoopTag t) {
  switch (t) {
    case LoopTag::Outer: return "outer";
    case LoopTag::Inner: return "inner";
    case LoopTag::Warmup: return "warmup";
  }
  return "?";
}

// Iteration budget and bookkeeping for the training loops. Nested schemes run
// `inner_per_outer` inner steps after each outer step; `warmup_inner` inner
// steps precede the first outer step. Total recorded iterations are
// outer_iters * (1 + inner_per_outer) + warmup_inner.
struct LoopSchedule {
  long outer_iters = 200;
  int inner_per_outer = 4;
  long warmup_inner = 0;
  int metric_nodes = 10000;  // evaluation batch for checkpoint errors

  long total_iterations() const {
    return outer_iters * (1 + inner_per_outer) + warmup_inner;
  }
  // Checkpoint fractions of the outer-loop budget, initial state included.
  static const std::vector<double>& checkpoint_fractions() {
    static const std::vector<double> f{0.0, 0.04, 0.20, 0.40, 0.60, 1.00};
    return f;
  }
};

struct IterRow {
  long iter = 0;  // 1-based, over all loops
  LoopTag tag = LoopTag::Outer;
  double loss_primary = NAN;    // the loss being optimized in this loop phase
  double loss_secondary = NAN;  // the companion loss, when the method has one
};

struct CheckpointRow {
  double fraction = 0.0;
  long outer_iter = 0;
  double rel_u = NAN;      // trial relative error (percent)
  double rel_v = NAN;      // test-side relative error (percent), when defined
};

struct TrainRecord {
  std::vector<IterRow> iters;
  std::vector<CheckpointRow> checkpoints;
  long degenerate_events = 0;  // WAN test-norm collapses recovered by resampling
  double wall_seconds = 0.0;

  double final_loss() const {
    return iters.empty() ? NAN : iters.back().loss_primary;
  }
};

}  // namespace ritznet
