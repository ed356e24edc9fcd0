#pragma once

#include "ritznet/metrics.hpp"
#include "ritznet/optimizer.hpp"
#include "ritznet/record.hpp"

namespace ritznet {

struct TrainSeeds {
  uint64_t params = 1;
  uint64_t batch = 2;
  uint64_t metric = 3;
};

struct TrainResult {
  TrainRecord record;
  ParamStore u_params;    // trial network (empty for the adjoint method)
  ParamStore aux_params;  // v or tau network, depending on the method
};

// Min-max training: one Adam descent on theta_u per outer iteration, then
// inner_per_outer Adam ascents on theta_v, every step on a fresh batch, with
// fully independent optimizer states. A collapsed test norm is recorded and
// retried once on a new batch; a second collapse skips that gradient step.
TrainResult train_wan(const ProblemInstance& inst, const NetworkSpec& u_spec,
                      const NetworkSpec& v_spec, const LoopSchedule& schedule,
                      const AdamParams& adam_u, const AdamParams& adam_v, const TrainSeeds& seeds);

// Nested min-min training: outer descents on theta_u against the composed
// Ritz loss (theta_tau frozen), inner descents on theta_tau against the
// test-seeking loss (theta_u frozen). Both losses are evaluated and recorded
// at every iteration.
TrainResult train_d2rm(const ProblemInstance& inst, const NetworkSpec& u_spec,
                       const NetworkSpec& tau_spec, const LoopSchedule& schedule,
                       const AdamParams& adam_u, const AdamParams& adam_tau,
                       const TrainSeeds& seeds);

// Single-loop generalized Ritz descent; requires a closed-form trial-to-test
// operator (weak SPD or strong formulations).
TrainResult train_ritz(const ProblemInstance& inst, const NetworkSpec& u_spec,
                       const LoopSchedule& schedule, const AdamParams& adam_u,
                       const TrainSeeds& seeds);

// Single-loop minimization of the adjoint Ritz functional over the test
// network (ultraweak only). Checkpoints record both the error of v against
// Tu* and of A'v against u*.
TrainResult train_adjoint_ritz(const ProblemInstance& inst, const NetworkSpec& v_spec,
                               const LoopSchedule& schedule, const AdamParams& adam_v,
                               const TrainSeeds& seeds);

}  // namespace ritznet
