// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures. Training criteria take the median over three seed sets. Run a
// subset with: ritznet_acceptance 1 2 11
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "ritznet/experiment.hpp"

using namespace ritznet;

namespace {

using Clock = std::chrono::steady_clock;

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

bool majority(const std::vector<bool>& oks) {
  int n = 0;
  for (bool b : oks) n += b ? 1 : 0;
  return 2 * n > static_cast<int>(oks.size());
}

const std::vector<TrainSeeds>& seed_sets() {
  static const std::vector<TrainSeeds> s{{1, 2, 3}, {11, 12, 13}, {21, 22, 23}};
  return s;
}

// Runs one configuration under each seed set, optionally in parallel.
std::vector<TrainRecord> run_seeded(const ExperimentConfig& base, bool parallel) {
  std::vector<TrainRecord> records(seed_sets().size());
  auto work = [&](size_t i) {
    ExperimentConfig cfg = base;
    cfg.seeds = seed_sets()[i];
    records[i] = run_experiment_record(cfg).record;
  };
  if (parallel) {
    std::vector<std::thread> pool;
    for (size_t i = 0; i < records.size(); ++i) pool.emplace_back(work, i);
    for (auto& t : pool) t.join();
  } else {
    for (size_t i = 0; i < records.size(); ++i) work(i);
  }
  return records;
}

double final_u(const TrainRecord& r) { return r.checkpoints.back().rel_u; }
double final_v(const TrainRecord& r) { return r.checkpoints.back().rel_v; }

double median_final_u(const std::vector<TrainRecord>& rs) {
  std::vector<double> v;
  for (const auto& r : rs) v.push_back(final_u(r));
  return median3(v);
}
double median_final_v(const std::vector<TrainRecord>& rs) {
  std::vector<double> v;
  for (const auto& r : rs) v.push_back(final_v(r));
  return median3(v);
}

// Standard deviation of the primary loss over the last fifth of iterations.
double late_loss_std(const TrainRecord& r) {
  const size_t n = r.iters.size();
  const size_t start = n - n / 5;
  double mean = 0.0;
  size_t count = 0;
  for (size_t i = start; i < n; ++i) {
    if (!std::isfinite(r.iters[i].loss_primary)) continue;
    mean += r.iters[i].loss_primary;
    ++count;
  }
  mean /= static_cast<double>(count);
  double var = 0.0;
  for (size_t i = start; i < n; ++i) {
    if (!std::isfinite(r.iters[i].loss_primary)) continue;
    const double d = r.iters[i].loss_primary - mean;
    var += d * d;
  }
  return std::sqrt(var / static_cast<double>(count));
}

// Checkpoint errors at the trained fractions (skips the initial state).
std::vector<double> trained_checkpoint_errors(const TrainRecord& r,
                                              double CheckpointRow::*field) {
  std::vector<double> out;
  for (const auto& cp : r.checkpoints)
    if (cp.fraction > 0.0) out.push_back(cp.*field);
  return out;
}

std::string fmt1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  auto selected = [&](int id) {
    return only.empty() || std::find(only.begin(), only.end(), id) != only.end();
  };

  int failures = 0;
  auto report = [&](int id, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << "C" << id << " " << name << " (" << detail
              << ")\n"
              << std::flush;
    if (!ok) ++failures;
  };

  // C1: gradient correctness for every loss, reverse-mode vs central FD.
  if (selected(1)) {
    const auto t0 = Clock::now();
    const auto checks = gradient_finite_difference_checks(91, 20);
    double worst = 0.0;
    std::string worst_name;
    for (const auto& c : checks)
      if (c.max_rel_dev > worst) {
        worst = c.max_rel_dev;
        worst_name = c.name;
      }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    report(1, "gradients vs finite differences", worst < 1e-5 && secs < 10.0,
           "worst " + std::to_string(worst) + " at " + worst_name + ", " + fmt1(secs) + "s");
  }

  // C2: quadrature weight sums and the closed-form parabola integral.
  if (selected(2)) {
    const auto t0 = Clock::now();
    double worst_sum = 0.0;
    const std::vector<SamplingPlan> plans{
        SamplingPlan::uniform1d(200),
        SamplingPlan{{AxisPlan{{BetaSample{100, 1, 1, false}, BetaSample{100, 1e4, 1, true}}}}},
        SamplingPlan::uniform2d(10)};
    for (uint64_t seed = 0; seed < 1000; ++seed) {
      const QuadBatch b = sample_batch(plans[seed % plans.size()], seed);
      worst_sum = std::max(worst_sum, std::abs(b.total_weight() - 1.0));
    }
    const QuadBatch big = sample_batch(SamplingPlan::uniform1d(10000), 5);
    const double integral = integrate(big, [](const Point& p) {
      const double t = 2.0 * p[0] - 1.0;
      return t * t;
    });
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    const bool ok = worst_sum < 1e-12 && std::abs(integral - 1.0 / 3.0) < 1e-4 && secs < 5.0;
    report(2, "quadrature volume and closed-form integral", ok,
           "max |sum-1| " + std::to_string(worst_sum) + ", integral " + std::to_string(integral) +
               ", " + fmt1(secs) + "s");
  }

  // C3: discrete Ritz-gap identity on shared batches.
  if (selected(3)) {
    const ProblemInstance inst = make_problem("poisson_weak_smooth");
    const NetworkSpec spec{1, {20, 20}, Activation::Tanh};
    MaskedNetBatch u_eng(spec, inst.trial_mask, 1, 1);
    double worst = 0.0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng(seed + 900);
      const QuadBatch batch = sample_batch(SamplingPlan::uniform1d(200), rng);
      const BatchDual& u = u_eng.eval(glorot_init(spec, seed), batch.points);
      BatchDual ue = BatchDual::zeros(batch.size(), 1, 1);
      for (int i = 0; i < batch.size(); ++i)
        ue.set(i, inst.problem.exact_u(batch.points[static_cast<size_t>(i)]));
      const auto [lhs, rhs] = ritz_gap_check(inst.problem, u, ue, batch.weights);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    report(3, "Ritz gap identity (100 random draws)", worst < 1e-10,
           "max |lhs-rhs| " + std::to_string(worst));
  }

  // C4: smooth Poisson comparison at the short budget.
  if (selected(4)) {
    auto base = [&](Method m) {
      ExperimentConfig cfg = default_config("poisson_weak_smooth", std::nullopt, m);
      cfg.outer_iters = 200;
      return cfg;
    };
    const auto drm = run_seeded(base(Method::Drm), true);
    const auto d2rm = run_seeded(base(Method::D2rm), true);
    const auto wan = run_seeded(base(Method::Wan), true);
    const double e_drm = median_final_u(drm);
    const double e_d2rm = median_final_u(d2rm);
    const double e_wan = median_final_u(wan);

    std::vector<double> ratios;
    for (size_t i = 0; i < wan.size(); ++i)
      ratios.push_back(late_loss_std(wan[i]) / late_loss_std(drm[i]));
    const double osc = median3(ratios);

    const bool ok = e_drm <= 3.0 && e_d2rm <= 5.0 && e_wan >= std::max(e_drm, e_d2rm) && osc > 5.0;
    report(4, "smooth Poisson: DRM<=3%, D2RM<=5%, WAN worst and oscillating", ok,
           "drm " + fmt1(e_drm) + "%, d2rm " + fmt1(e_d2rm) + "%, wan " + fmt1(e_wan) +
               "%, J-vs-F std ratio " + fmt1(osc) + "x");
  }

  // C5: parametric smooth family trends at desk scale.
  if (selected(5)) {
    auto cfg_for = [&](Method m, double alpha) {
      ExperimentConfig cfg = default_config("poisson_weak_alpha", alpha, m);
      cfg.outer_iters = 1000;
      return cfg;
    };
    const auto drm2 = run_seeded(cfg_for(Method::Drm, 2.0), true);
    const auto d2rm5 = run_seeded(cfg_for(Method::D2rm, 5.0), true);
    const auto wan10 = run_seeded(cfg_for(Method::Wan, 10.0), true);

    std::vector<bool> agree;
    for (const auto& r : d2rm5) {
      const auto& cps = r.checkpoints;
      bool ok = true;
      for (size_t i = 0; i < cps.size(); ++i)
        if (cps[i].fraction >= 0.6 - 1e-12 && cps[i].fraction > 0.0)
          ok = ok && std::abs(cps[i].rel_u - cps[i].rel_v) <= 1.5;
      agree.push_back(ok);
    }
    const double e_drm2 = median_final_u(drm2);
    const double e_d2rm5 = median_final_u(d2rm5);
    const double e_wan10 = median_final_u(wan10);
    const bool ok = e_drm2 <= 3.0 && e_d2rm5 <= 8.0 && majority(agree) && e_wan10 > 50.0;
    report(5, "alpha family trends (desk)", ok,
           "drm a2 " + fmt1(e_drm2) + "%, d2rm a5 " + fmt1(e_d2rm5) + "%, trial/test agree " +
               (majority(agree) ? "yes" : "no") + ", wan a10 " + fmt1(e_wan10) + "%");
  }

  // C6: singular family at desk scale.
  if (selected(6)) {
    auto cfg_for = [&](Method m, double alpha) {
      ExperimentConfig cfg = default_config("poisson_weak_alpha", alpha, m);
      cfg.outer_iters = 20000;
      return cfg;
    };
    const auto drm08 = run_seeded(cfg_for(Method::Drm, 0.8), true);
    const auto d2rm08 = run_seeded(cfg_for(Method::D2rm, 0.8), true);
    const auto drm06 = run_seeded(cfg_for(Method::Drm, 0.6), true);

    std::vector<bool> monotone;
    for (const auto& r : drm06) {
      const auto errs = trained_checkpoint_errors(r, &CheckpointRow::rel_u);
      bool ok = true;
      for (size_t i = 1; i < errs.size(); ++i) ok = ok && errs[i] <= errs[i - 1] + 2.0;
      monotone.push_back(ok);
    }
    const double e_drm = median_final_u(drm08);
    const double e_d2rm = median_final_u(d2rm08);
    const bool ok = e_drm <= 6.0 && e_d2rm <= 6.0 && majority(monotone);
    report(6, "singular alpha=0.8 <=6%, alpha=0.6 monotone (desk)", ok,
           "drm " + fmt1(e_drm) + "%, d2rm " + fmt1(e_d2rm) + "%, a0.6 monotone " +
               (majority(monotone) ? "yes" : "no"));
  }

  // C7: Dirac source at full scale.
  if (selected(7)) {
    auto cfg_for = [&](Method m) {
      ExperimentConfig cfg = default_config("poisson_weak_delta", std::nullopt, m);
      cfg.outer_iters = 20000;
      return cfg;
    };
    const auto drm = run_seeded(cfg_for(Method::Drm), true);
    const auto d2rm = run_seeded(cfg_for(Method::D2rm), true);
    std::vector<double> final_losses;
    for (const auto& r : drm) final_losses.push_back(r.final_loss());
    const double e_drm = median_final_u(drm);
    const double e_d2rm = median_final_u(d2rm);
    const double loss = median3(final_losses);
    const bool ok = e_drm <= 8.0 && e_d2rm <= 12.0 && loss < -1.9;
    report(7, "Dirac source (full scale): errors and loss near the -2 optimum", ok,
           "drm " + fmt1(e_drm) + "%, d2rm " + fmt1(e_d2rm) + "%, final loss " + fmt1(loss));
  }

  // C8: adjoint Ritz at desk scale.
  if (selected(8)) {
    ExperimentConfig cfg = default_config("convection_ultraweak", std::nullopt, Method::AdjointDrm);
    cfg.outer_iters = 10000;
    const auto runs = run_seeded(cfg, true);
    const double e_v = median_final_v(runs);   // v against Tu*
    const double e_av = median_final_u(runs);  // A'v against u*
    const bool ok = e_v <= 8.0 && e_av <= 9.0;
    report(8, "adjoint Ritz (desk): v<=8%, A'v<=9%", ok,
           "v " + fmt1(e_v) + "%, A'v " + fmt1(e_av) + "%");
  }

  // C9: ultraweak nested scheme at desk scale.
  if (selected(9)) {
    ExperimentConfig cfg = default_config("convection_ultraweak", std::nullopt, Method::D2rm);
    cfg.outer_iters = 10000;
    const auto runs = run_seeded(cfg, true);
    const double e_u = median_final_u(runs);
    std::vector<bool> decreasing;
    for (const auto& r : runs) {
      const auto errs = trained_checkpoint_errors(r, &CheckpointRow::rel_u);
      bool ok = true;
      for (size_t i = 1; i < errs.size(); ++i) ok = ok && errs[i] < errs[i - 1];
      decreasing.push_back(ok);
    }
    const bool ok = e_u <= 20.0 && majority(decreasing);
    report(9, "ultraweak nested scheme (desk): trial<=20% and decreasing", ok,
           "trial " + fmt1(e_u) + "%, decreasing " + (majority(decreasing) ? "yes" : "no"));
  }

  // C10: 2D convection at desk scale.
  if (selected(10)) {
    ExperimentConfig cfg = default_config("convection2d_strong", std::nullopt, Method::D2rm);
    cfg.outer_iters = 20000;
    const auto runs = run_seeded(cfg, true);
    const double e_u = median_final_u(runs);
    std::vector<bool> decreasing;
    for (const auto& r : runs) {
      const auto errs = trained_checkpoint_errors(r, &CheckpointRow::rel_u);
      bool ok = true;
      for (size_t i = 1; i < errs.size(); ++i) ok = ok && errs[i] < errs[i - 1];
      decreasing.push_back(ok);
    }
    const bool ok = e_u <= 15.0 && majority(decreasing);
    report(10, "2D convection (desk): monotone decrease, final <=15%", ok,
           "trial " + fmt1(e_u) + "%, decreasing " + (majority(decreasing) ? "yes" : "no"));
  }

  // C11: instability probe columns.
  if (selected(11)) {
    const auto t0 = Clock::now();
    const ProblemInstance inst = make_problem("poisson_weak_smooth");
    auto dir = [](const Point& p) { return sin(DualValue::axis(p[0], 0, 1) * M_PI); };
    const std::vector<double> eps{1e-1, 1e-2, 1e-3};
    const auto rows = instability_probe(inst, dir, eps, 44);
    bool ok = true;
    for (const auto& r : rows) ok = ok && std::abs(r.j_dist - 2.0) < 0.05;
    const double slope = rows[0].u_dist / rows[0].eps;
    for (const auto& r : rows) ok = ok && std::abs(r.u_dist / r.eps - slope) <= 0.01 * slope;
    ok = ok && rows[2].ratio >= 90.0 * rows[0].ratio;
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    ok = ok && secs < 5.0;
    report(11, "instability probe: constant 2, linear collapse, ratio blow-up", ok,
           "j_dist " + fmt1(rows[0].j_dist) + ", growth " + fmt1(rows[2].ratio / rows[0].ratio) +
               "x, " + fmt1(secs) + "s");
  }

  // C12: determinism of the reproduce pipeline.
  if (selected(12)) {
    namespace fs = std::filesystem;
    const std::string dir_a = "/tmp/ritznet_acceptance_repA";
    const std::string dir_b = "/tmp/ritznet_acceptance_repB";
    fs::remove_all(dir_a);
    fs::remove_all(dir_b);
    reproduce_table(2, "desk", dir_a, TrainSeeds{});
    reproduce_table(2, "desk", dir_b, TrainSeeds{});
    const std::string a = slurp(fs::path(dir_a) / "table2_desk.csv");
    const std::string b = slurp(fs::path(dir_b) / "table2_desk.csv");
    report(12, "reproduce --table 2 --scale desk is byte-identical", !a.empty() && a == b,
           std::to_string(a.size()) + " bytes");
  }

  std::cout << (failures == 0 ? "acceptance: all criteria passed\n"
                              : "acceptance: " + std::to_string(failures) +
                                    " criterion/criteria failed\n");
  return failures;
}
