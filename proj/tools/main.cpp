#include <CLI11.hpp>
#include <iostream>

#include "ritznet/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"ritznet: neural-network variational PDE solvers (WAN, DRM, D2RM)"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "run one experiment from a config file");
  run_cmd->add_option("config", config_path, "path to the experiment config")->required();

  int table = 2;
  std::string scale = "desk";
  std::string out_dir = "out";
  ritznet::TrainSeeds seeds;
  auto* rep_cmd = app.add_subcommand("reproduce", "re-run one of the result tables");
  rep_cmd->add_option("--table", table, "table number (2-6)")->required();
  rep_cmd->add_option("--scale", scale, "full or desk (budget / 5)");
  rep_cmd->add_option("--out", out_dir, "output directory");
  rep_cmd->add_option("--seed-params", seeds.params, "parameter-init seed");
  rep_cmd->add_option("--seed-batch", seeds.batch, "batch-sampling seed");
  rep_cmd->add_option("--seed-metric", seeds.metric, "error-metric seed");

  std::vector<double> eps_list{1e-1, 1e-2, 1e-3};
  uint64_t direction_seed = 1;
  bool trained = false;
  std::string probe_out = "out/instability.csv";
  auto* probe_cmd =
      app.add_subcommand("probe-instability", "tabulate the min-max maximizer instability");
  probe_cmd->add_option("--eps", eps_list, "perturbation sizes");
  probe_cmd->add_option("--direction-seed", direction_seed, "seed for the probe direction");
  probe_cmd->add_flag("--trained", trained, "also train maximizer networks per eps");
  probe_cmd->add_option("--out", probe_out, "output CSV path");

  auto* self_cmd = app.add_subcommand("selftest", "gradient/quadrature/identity checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const ritznet::ExperimentConfig cfg = ritznet::load_config(config_path);
      ritznet::run_experiment(cfg, &std::cout);
      return 0;
    }
    if (rep_cmd->parsed()) {
      ritznet::reproduce_table(table, scale, out_dir, seeds, &std::cout);
      return 0;
    }
    if (probe_cmd->parsed()) {
      ritznet::probe_instability_csv(eps_list, direction_seed, trained, probe_out, &std::cout);
      return 0;
    }
    if (self_cmd->parsed()) return ritznet::selftest(std::cout) == 0 ? 0 : 1;
  } catch (const ritznet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ritznet::TrainingDivergedError& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
