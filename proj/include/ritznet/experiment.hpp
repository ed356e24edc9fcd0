#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ritznet/training.hpp"

namespace ritznet {

enum class Method { Wan, Drm, Gdrm, AdjointDrm, D2rm };

Method method_from_string(const std::string& name);
std::string to_string(Method m);

// One experiment: problem, method, budgets, architectures, sampling, seeds.
// Parsed from and serialized to a flat sectioned key=value file; the
// serializer is canonical (fixed key order, %.17g numbers), so
// serialize(parse(serialize(c))) is byte-identical.
struct ExperimentConfig {
  std::string problem_id = "poisson_weak_smooth";
  std::optional<double> alpha;
  Method method = Method::Drm;
  std::string output_dir = "out";

  long outer_iters = 200;
  int inner_per_outer = 4;
  long warmup_inner = 0;

  std::vector<int> u_widths{20, 20};
  std::vector<int> v_widths{20, 20};
  std::vector<int> tau_widths{20, 20};
  std::string activation = "tanh";

  std::optional<SamplingPlan> plan;  // nullopt: the problem's default plan

  double lr_u = 1e-3, lr_v = 1e-3, lr_tau = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

  TrainSeeds seeds;

  // Throws ConfigError on method/problem incompatibility or bad fields, before
  // any compute happens.
  void validate() const;
  ProblemInstance instance() const;
};

// Problem-aware defaults (widths, inner iterations, warmup) for a fresh config.
ExperimentConfig default_config(const std::string& problem_id, std::optional<double> alpha,
                                Method method);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Sampling-plan grammar used inside config files:
//   default                  problem's registered plan
//   uniform:N                one axis, N uniform nodes
//   uniform2d:N              two axes, N uniform nodes each
//   beta:c,a,b[,r];...[|...] explicit samples per axis ('r' reflects), axes
//                            separated by '|'
SamplingPlan parse_plan(const std::string& text);
std::string serialize_plan(const SamplingPlan& plan);

// Runs the configured experiment and writes losses.csv, errors.csv,
// profile.csv and summary.csv into the output directory. Returns the result
// for callers that want the trained networks.
TrainResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

// Same training dispatch without touching the filesystem.
TrainResult run_experiment_record(const ExperimentConfig& cfg);

// Re-runs every cell of one of the result tables (2-6) at full or desk scale
// (desk divides the iteration budget by five) and writes a consolidated
// table<N>_<scale>.csv into `output_dir`. Worker count comes from the
// RITZNET_WORKERS environment variable (default: hardware concurrency).
void reproduce_table(int table, const std::string& scale, const std::string& output_dir,
                     const TrainSeeds& seeds, std::ostream* log = nullptr);

// Closed-form instability probe CSV (eps, u_dist, j_dist, ratio), direction
// drawn from `direction_seed`. With `trained`, appends rows from the trained
// maximizer variant.
void probe_instability_csv(const std::vector<double>& eps_list, uint64_t direction_seed,
                           bool trained, const std::string& out_path, std::ostream* log = nullptr);

// Reverse-mode gradients of every loss against central finite differences on
// fixed batches, across formulations (weak, singular, strong, ultraweak, 2D,
// point loads). One entry per (loss, problem) pairing.
struct GradientCheck {
  std::string name;
  double max_rel_dev = 0.0;
};
std::vector<GradientCheck> gradient_finite_difference_checks(uint64_t seed, int n_coords);

// Fast correctness sweep (gradients vs finite differences, quadrature sums,
// the discrete Ritz-gap identity, the probe constants). Prints one line per
// check; returns the number of failures.
int selftest(std::ostream& out);

}  // namespace ritznet
