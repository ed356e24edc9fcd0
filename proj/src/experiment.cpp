#include "ritznet/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace ritznet {

namespace {

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
std::string fmt(long v) { return std::to_string(v); }
std::string fmt(int v) { return std::to_string(v); }
std::string fmt(uint64_t v) { return std::to_string(v); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for " + key + ": '" + s + "'");
  }
}

long parse_long(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("bad integer value for " + key + ": '" + s + "'");
  }
}

std::vector<int> parse_widths(const std::string& s, const std::string& key) {
  std::vector<int> widths;
  for (const auto& part : split(s, ','))
    widths.push_back(static_cast<int>(parse_long(trim(part), key)));
  return widths;
}

std::string widths_to_string(const std::vector<int>& w) {
  std::string s;
  for (size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
  return s;
}

}  // namespace

Method method_from_string(const std::string& name) {
  if (name == "wan") return Method::Wan;
  if (name == "drm") return Method::Drm;
  if (name == "gdrm") return Method::Gdrm;
  if (name == "adjoint_drm") return Method::AdjointDrm;
  if (name == "d2rm") return Method::D2rm;
  throw ConfigError("unknown method: '" + name + "'");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Wan: return "wan";
    case Method::Drm: return "drm";
    case Method::Gdrm: return "gdrm";
    case Method::AdjointDrm: return "adjoint_drm";
    case Method::D2rm: return "d2rm";
  }
  throw InternalError("bad method enum");
}

SamplingPlan parse_plan(const std::string& text) {
  if (text == "default") throw ConfigError("parse_plan: 'default' has no explicit plan");
  if (text.rfind("uniform2d:", 0) == 0)
    return SamplingPlan::uniform2d(
        static_cast<int>(parse_long(text.substr(10), "sampling plan")));
  if (text.rfind("uniform:", 0) == 0)
    return SamplingPlan::uniform1d(static_cast<int>(parse_long(text.substr(8), "sampling plan")));
  if (text.rfind("beta:", 0) != 0) throw ConfigError("bad sampling plan: '" + text + "'");

  SamplingPlan plan;
  for (const auto& axis_text : split(text.substr(5), '|')) {
    AxisPlan axis;
    for (const auto& sample_text : split(axis_text, ';')) {
      const auto fields = split(trim(sample_text), ',');
      if (fields.size() != 3 && fields.size() != 4)
        throw ConfigError("bad sampling plan sample: '" + sample_text + "'");
      BetaSample s;
      s.count = static_cast<int>(parse_long(trim(fields[0]), "sample count"));
      s.a = parse_double(trim(fields[1]), "beta a");
      s.b = parse_double(trim(fields[2]), "beta b");
      s.reflect = fields.size() == 4;
      if (s.reflect && trim(fields[3]) != "r")
        throw ConfigError("bad sampling plan flag: '" + fields[3] + "'");
      axis.samples.push_back(s);
    }
    plan.axes.push_back(axis);
  }
  return plan;
}

std::string serialize_plan(const SamplingPlan& plan) {
  std::string out = "beta:";
  for (size_t ax = 0; ax < plan.axes.size(); ++ax) {
    if (ax) out += "|";
    const auto& samples = plan.axes[ax].samples;
    for (size_t i = 0; i < samples.size(); ++i) {
      if (i) out += ";";
      const auto& s = samples[i];
      out += fmt(s.count) + "," + fmt(s.a) + "," + fmt(s.b);
      if (s.reflect) out += ",r";
    }
  }
  return out;
}

ProblemInstance ExperimentConfig::instance() const { return make_problem(problem_id, alpha); }

void ExperimentConfig::validate() const {
  const ProblemInstance inst = instance();  // throws on unknown id / bad alpha
  activation_from_string(activation);
  switch (method) {
    case Method::Drm:
      if (inst.problem.kind != FormulationKind::WeakSPD)
        throw ConfigError("drm needs a weak SPD problem; use gdrm/d2rm/adjoint_drm");
      break;
    case Method::Gdrm:
      if (!inst.problem.has_T())
        throw ConfigError("gdrm needs a closed-form trial-to-test operator");
      break;
    case Method::AdjointDrm:
      if (inst.problem.kind != FormulationKind::Ultraweak)
        throw ConfigError("adjoint_drm needs the ultraweak formulation");
      break;
    default: break;
  }
  if (outer_iters < 0 || inner_per_outer < 0 || warmup_inner < 0)
    throw ConfigError("iteration budgets must be non-negative");
  for (const auto* w : {&u_widths, &v_widths, &tau_widths}) {
    if (w->empty()) throw ConfigError("network widths must be non-empty");
    for (int x : *w)
      if (x < 1) throw ConfigError("network widths must be positive");
  }
  if (!(lr_u > 0.0) || !(lr_v > 0.0) || !(lr_tau > 0.0))
    throw ConfigError("learning rates must be positive");
  if (plan && plan->dim() != inst.problem.dim)
    throw ConfigError("sampling plan dimension does not match the problem");
  if (output_dir.empty()) throw ConfigError("output directory must be set");
}

ExperimentConfig default_config(const std::string& problem_id, std::optional<double> alpha,
                                Method method) {
  ExperimentConfig cfg;
  cfg.problem_id = problem_id;
  cfg.alpha = alpha;
  cfg.method = method;
  const ProblemInstance inst = cfg.instance();
  const bool nested = method == Method::Wan || method == Method::D2rm;
  cfg.inner_per_outer = nested ? inst.default_inner : 0;
  cfg.warmup_inner = (method == Method::D2rm) ? inst.default_warmup : 0;
  if (inst.problem.dim == 2) {
    cfg.u_widths = cfg.v_widths = cfg.tau_widths = {50, 50, 50};
    cfg.outer_iters = 200000;
  }
  return cfg;
}

namespace {

using KvMap = std::map<std::string, std::string>;

KvMap parse_kv(const std::string& text) {
  KvMap kv;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("bad section header at line " + fmt(lineno));
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + fmt(lineno));
    const std::string key = section + "." + trim(line.substr(0, eq));
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  KvMap kv = parse_kv(text);
  auto take = [&](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  const std::string problem = take("experiment.problem").value_or("poisson_weak_smooth");
  std::optional<double> alpha;
  if (auto a = take("experiment.alpha")) alpha = parse_double(*a, "alpha");
  const Method method = method_from_string(take("experiment.method").value_or("drm"));

  ExperimentConfig cfg = default_config(problem, alpha, method);
  if (auto v = take("experiment.output")) cfg.output_dir = *v;
  if (auto v = take("schedule.outer_iters")) cfg.outer_iters = parse_long(*v, "outer_iters");
  if (auto v = take("schedule.inner_per_outer"))
    cfg.inner_per_outer = static_cast<int>(parse_long(*v, "inner_per_outer"));
  if (auto v = take("schedule.warmup_inner")) cfg.warmup_inner = parse_long(*v, "warmup_inner");
  if (auto v = take("network.u_widths")) cfg.u_widths = parse_widths(*v, "u_widths");
  if (auto v = take("network.v_widths")) cfg.v_widths = parse_widths(*v, "v_widths");
  if (auto v = take("network.tau_widths")) cfg.tau_widths = parse_widths(*v, "tau_widths");
  if (auto v = take("network.activation")) cfg.activation = *v;
  if (auto v = take("sampling.plan")) {
    if (*v != "default") cfg.plan = parse_plan(*v);
  }
  if (auto v = take("optimizer.lr_u")) cfg.lr_u = parse_double(*v, "lr_u");
  if (auto v = take("optimizer.lr_v")) cfg.lr_v = parse_double(*v, "lr_v");
  if (auto v = take("optimizer.lr_tau")) cfg.lr_tau = parse_double(*v, "lr_tau");
  if (auto v = take("optimizer.beta1")) cfg.beta1 = parse_double(*v, "beta1");
  if (auto v = take("optimizer.beta2")) cfg.beta2 = parse_double(*v, "beta2");
  if (auto v = take("optimizer.eps")) cfg.adam_eps = parse_double(*v, "eps");
  if (auto v = take("seeds.params")) cfg.seeds.params = static_cast<uint64_t>(parse_long(*v, "params seed"));
  if (auto v = take("seeds.batch")) cfg.seeds.batch = static_cast<uint64_t>(parse_long(*v, "batch seed"));
  if (auto v = take("seeds.metric")) cfg.seeds.metric = static_cast<uint64_t>(parse_long(*v, "metric seed"));

  if (!kv.empty()) throw ConfigError("unknown config key: '" + kv.begin()->first + "'");
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::string s;
  s += "[experiment]\n";
  s += "problem = " + cfg.problem_id + "\n";
  if (cfg.alpha) s += "alpha = " + fmt(*cfg.alpha) + "\n";
  s += "method = " + to_string(cfg.method) + "\n";
  s += "output = " + cfg.output_dir + "\n";
  s += "\n[schedule]\n";
  s += "outer_iters = " + fmt(cfg.outer_iters) + "\n";
  s += "inner_per_outer = " + fmt(cfg.inner_per_outer) + "\n";
  s += "warmup_inner = " + fmt(cfg.warmup_inner) + "\n";
  s += "\n[network]\n";
  s += "u_widths = " + widths_to_string(cfg.u_widths) + "\n";
  s += "v_widths = " + widths_to_string(cfg.v_widths) + "\n";
  s += "tau_widths = " + widths_to_string(cfg.tau_widths) + "\n";
  s += "activation = " + cfg.activation + "\n";
  s += "\n[sampling]\n";
  s += "plan = " + (cfg.plan ? serialize_plan(*cfg.plan) : std::string("default")) + "\n";
  s += "\n[optimizer]\n";
  s += "lr_u = " + fmt(cfg.lr_u) + "\n";
  s += "lr_v = " + fmt(cfg.lr_v) + "\n";
  s += "lr_tau = " + fmt(cfg.lr_tau) + "\n";
  s += "beta1 = " + fmt(cfg.beta1) + "\n";
  s += "beta2 = " + fmt(cfg.beta2) + "\n";
  s += "eps = " + fmt(cfg.adam_eps) + "\n";
  s += "\n[seeds]\n";
  s += "params = " + fmt(cfg.seeds.params) + "\n";
  s += "batch = " + fmt(cfg.seeds.batch) + "\n";
  s += "metric = " + fmt(cfg.seeds.metric) + "\n";
  return s;
}

namespace {

struct MethodSpecs {
  NetworkSpec u, v, tau;
};

MethodSpecs build_specs(const ExperimentConfig& cfg, const ProblemInstance& inst) {
  const Activation act = activation_from_string(cfg.activation);
  MethodSpecs s;
  s.u = NetworkSpec{inst.problem.dim, cfg.u_widths, act};
  s.v = NetworkSpec{inst.problem.dim, cfg.v_widths, act};
  s.tau = NetworkSpec{inst.problem.dim + 1, cfg.tau_widths, act};
  return s;
}

TrainResult run_cell(const ExperimentConfig& cfg) {
  cfg.validate();
  ProblemInstance inst = cfg.instance();
  if (cfg.plan) inst.default_plan = *cfg.plan;
  const MethodSpecs specs = build_specs(cfg, inst);

  LoopSchedule schedule;
  schedule.outer_iters = cfg.outer_iters;
  schedule.inner_per_outer = cfg.inner_per_outer;
  schedule.warmup_inner = cfg.warmup_inner;

  AdamParams au{cfg.lr_u, cfg.beta1, cfg.beta2, cfg.adam_eps};
  AdamParams av{cfg.lr_v, cfg.beta1, cfg.beta2, cfg.adam_eps};
  AdamParams at{cfg.lr_tau, cfg.beta1, cfg.beta2, cfg.adam_eps};

  switch (cfg.method) {
    case Method::Wan: return train_wan(inst, specs.u, specs.v, schedule, au, av, cfg.seeds);
    case Method::Drm:
    case Method::Gdrm: return train_ritz(inst, specs.u, schedule, au, cfg.seeds);
    case Method::AdjointDrm:
      return train_adjoint_ritz(inst, specs.v, schedule, av, cfg.seeds);
    case Method::D2rm: return train_d2rm(inst, specs.u, specs.tau, schedule, au, at, cfg.seeds);
  }
  throw InternalError("bad method enum");
}

std::string loss_column_name(Method m) {
  switch (m) {
    case Method::Wan: return "J";
    case Method::Drm:
    case Method::Gdrm: return "F_T";
    case Method::AdjointDrm: return "F_adj";
    case Method::D2rm: return "F_tau";
  }
  return "loss";
}

void write_losses_csv(const std::string& path, Method method, const TrainRecord& record) {
  std::ofstream out(path);
  out << "iteration,loop," << loss_column_name(method);
  if (method == Method::D2rm) out << ",L_u";
  out << "\n";
  for (const auto& row : record.iters) {
    out << row.iter << "," << to_string(row.tag) << "," << fmt(row.loss_primary);
    if (method == Method::D2rm) out << "," << fmt(row.loss_secondary);
    out << "\n";
  }
}

void write_errors_csv(const std::string& path, const TrainRecord& record) {
  std::ofstream out(path);
  out << "fraction,outer_iteration,relative_u,relative_v\n";
  for (const auto& row : record.checkpoints)
    out << fmt(row.fraction) << "," << row.outer_iter << "," << fmt(row.rel_u) << ","
        << fmt(row.rel_v) << "\n";
}

std::vector<Point> profile_grid(int dim) {
  std::vector<Point> pts;
  if (dim == 1) {
    for (int i = 0; i <= 1000; ++i) pts.push_back(Point(i / 1000.0));
  } else {
    for (int j = 0; j <= 100; ++j)
      for (int i = 0; i <= 100; ++i) pts.push_back(Point(i / 100.0, j / 100.0));
  }
  return pts;
}

void write_profile_csv(const std::string& path, const ExperimentConfig& cfg,
                       const ProblemInstance& inst, const MethodSpecs& specs,
                       const TrainResult& res) {
  const VariationalProblem& p = inst.problem;
  const auto pts = profile_grid(p.dim);
  const int n = static_cast<int>(pts.size());

  std::ofstream out(path);
  const std::string coords = p.dim == 1 ? "x" : "x,y";

  auto col = [&](const BatchDual& b, int i) { return b.value(i); };

  if (cfg.method == Method::AdjointDrm) {
    MaskedNetBatch v_eng(specs.v, inst.test_mask, p.dim, 1);
    const BatchDual& v = v_eng.eval(res.aux_params, pts);
    out << coords << ",v_nn,v_exact,v_error,au_nn,u_exact,au_error\n";
    for (int i = 0; i < n; ++i) {
      const Point& x = pts[static_cast<size_t>(i)];
      const double vex = p.exact_Tu(x).v;
      const double av = apply_adjoint(p, v.at(i));
      const double uex = p.exact_u(x).v;
      out << fmt(x[0]);
      if (p.dim == 2) out << "," << fmt(x[1]);
      out << "," << fmt(col(v, i)) << "," << fmt(vex) << "," << fmt(col(v, i) - vex) << ","
          << fmt(av) << "," << fmt(uex) << "," << fmt(av - uex) << "\n";
    }
    return;
  }

  MaskedNetBatch u_eng(specs.u, inst.trial_mask, p.dim, 0);
  const BatchDual& u = u_eng.eval(res.u_params, pts);
  const bool with_v = cfg.method == Method::D2rm;
  out << coords << ",u_nn,u_exact,u_error";
  if (with_v) out << ",v_nn,v_exact,v_error";
  out << "\n";

  BatchDual v;
  if (with_v) {
    TauNetBatch tau_eng(specs.tau, inst.tau_mask, p.dim, 0);
    v = tau_eng.eval(res.aux_params, pts, u);
  }
  for (int i = 0; i < n; ++i) {
    const Point& x = pts[static_cast<size_t>(i)];
    const double uex = p.exact_u(x).v;
    out << fmt(x[0]);
    if (p.dim == 2) out << "," << fmt(x[1]);
    out << "," << fmt(col(u, i)) << "," << fmt(uex) << "," << fmt(col(u, i) - uex);
    if (with_v) {
      const double vex = p.exact_Tu(x).v;
      out << "," << fmt(col(v, i)) << "," << fmt(vex) << "," << fmt(col(v, i) - vex);
    }
    out << "\n";
  }
}

void write_summary_csv(const std::string& path, const ExperimentConfig& cfg,
                       const ProblemInstance& inst, const TrainResult& res) {
  const TrainRecord& rec = res.record;
  const CheckpointRow& last = rec.checkpoints.back();
  double optimum = NAN, gap = NAN;
  // The min-max loss has no Ritz optimum to compare against.
  if (inst.problem.optimum_F && cfg.method != Method::Wan) {
    optimum = *inst.problem.optimum_F;
    gap = rec.final_loss() - optimum;
  }
  std::ofstream out(path);
  out << "problem,method,final_relative_u,final_relative_v,final_loss,optimum,optimum_gap,"
         "total_iterations,degenerate_events,wall_seconds\n";
  out << inst.display_id() << "," << to_string(cfg.method) << "," << fmt(last.rel_u) << ","
      << fmt(last.rel_v) << "," << fmt(rec.final_loss()) << "," << fmt(optimum) << ","
      << fmt(gap) << "," << rec.iters.size() << "," << rec.degenerate_events << ","
      << fmt(rec.wall_seconds) << "\n";
}

}  // namespace

TrainResult run_experiment_record(const ExperimentConfig& cfg) { return run_cell(cfg); }

TrainResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  ProblemInstance inst = cfg.instance();
  if (cfg.plan) inst.default_plan = *cfg.plan;
  const MethodSpecs specs = build_specs(cfg, inst);

  if (log)
    *log << "running " << to_string(cfg.method) << " on " << inst.display_id() << " ("
         << cfg.outer_iters << " outer iterations)\n";

  const TrainResult res = run_cell(cfg);

  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const std::string base = cfg.output_dir + "/";
  write_losses_csv(base + "losses.csv", cfg.method, res.record);
  write_errors_csv(base + "errors.csv", res.record);
  write_profile_csv(base + "profile.csv", cfg, inst, specs, res);
  write_summary_csv(base + "summary.csv", cfg, inst, res);
  std::ofstream(base + "config.cfg") << serialize_config(cfg);

  if (log) {
    const CheckpointRow& last = res.record.checkpoints.back();
    *log << "final relative_u = " << last.rel_u << "%";
    if (std::isfinite(last.rel_v)) *log << ", relative_v = " << last.rel_v << "%";
    *log << " -> " << cfg.output_dir << "\n";
  }
  return res;
}

namespace {

int worker_count(size_t n_cells) {
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("RITZNET_WORKERS")) workers = std::atoi(env);
  workers = std::max(1, std::min<int>(workers, static_cast<int>(n_cells)));
  return workers;
}

}  // namespace

void reproduce_table(int table, const std::string& scale, const std::string& output_dir,
                     const TrainSeeds& seeds, std::ostream* log) {
  if (scale != "full" && scale != "desk")
    throw ConfigError("reproduce: scale must be 'full' or 'desk'");
  const bool desk = scale == "desk";

  struct Cell {
    std::string problem;
    std::optional<double> alpha;
    Method method;
  };
  std::vector<Cell> cells;
  long full_outer = 0;
  switch (table) {
    case 2:
      full_outer = 5000;
      for (double a : {2.0, 5.0, 10.0})
        for (Method m : {Method::Wan, Method::Drm, Method::D2rm})
          cells.push_back({"poisson_weak_alpha", a, m});
      break;
    case 3:
      full_outer = 100000;
      for (double a : {0.6, 0.7, 0.8})
        for (Method m : {Method::Drm, Method::D2rm})
          cells.push_back({"poisson_weak_alpha", a, m});
      break;
    case 4:
      full_outer = 20000;
      for (Method m : {Method::Drm, Method::D2rm})
        cells.push_back({"poisson_weak_delta", std::nullopt, m});
      break;
    case 5:
      full_outer = 50000;
      cells.push_back({"convection_ultraweak", std::nullopt, Method::AdjointDrm});
      break;
    case 6:
      full_outer = 50000;
      cells.push_back({"convection_ultraweak", std::nullopt, Method::D2rm});
      break;
    default:
      throw ConfigError("reproduce: table must be one of 2, 3, 4, 5, 6");
  }
  const long outer = desk ? full_outer / 5 : full_outer;

  std::vector<ExperimentConfig> cfgs;
  for (const auto& cell : cells) {
    ExperimentConfig cfg = default_config(cell.problem, cell.alpha, cell.method);
    cfg.outer_iters = outer;
    cfg.seeds = seeds;
    cfgs.push_back(cfg);
  }

  std::vector<TrainRecord> records(cfgs.size());
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  const int workers = worker_count(cfgs.size());
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&]() {
      for (size_t i = next.fetch_add(1); i < cfgs.size(); i = next.fetch_add(1))
        records[i] = run_cell(cfgs[i]).record;
    });
  for (auto& th : pool) th.join();

  namespace fs = std::filesystem;
  fs::create_directories(output_dir);
  const std::string path = output_dir + "/table" + std::to_string(table) + "_" + scale + ".csv";
  std::ofstream out(path);
  out << "method,alpha,metric,p0,p4,p20,p40,p60,p100\n";
  auto emit = [&](size_t i, const char* metric, double CheckpointRow::*field) {
    out << to_string(cfgs[i].method) << ","
        << (cells[i].alpha ? fmt(*cells[i].alpha) : std::string()) << "," << metric;
    for (const auto& cp : records[i].checkpoints) out << "," << fmt(cp.*field);
    out << "\n";
  };
  for (size_t i = 0; i < cfgs.size(); ++i) {
    emit(i, "u", &CheckpointRow::rel_u);
    if (cfgs[i].method == Method::D2rm || cfgs[i].method == Method::AdjointDrm)
      emit(i, "v", &CheckpointRow::rel_v);
  }
  if (log) *log << "wrote " << path << "\n";
}

void probe_instability_csv(const std::vector<double>& eps_list, uint64_t direction_seed,
                           bool trained, const std::string& out_path, std::ostream* log) {
  const ProblemInstance inst = make_problem("poisson_weak_smooth");
  // Random smooth H^1_0 direction: a low-order Fourier sum with seeded
  // coefficients.
  Rng rng(direction_seed);
  std::array<double, 5> coeff{};
  for (auto& c : coeff) c = rng.uniform(-1.0, 1.0);
  auto direction = [coeff](const Point& p) {
    DualValue acc = DualValue::constant(0.0, 1);
    const DualValue x = DualValue::axis(p[0], 0, 1);
    for (size_t k = 0; k < coeff.size(); ++k)
      acc = acc + coeff[k] * sin((static_cast<double>(k) + 1.0) * 3.14159265358979323846 * x);
    return acc;
  };

  const auto rows = instability_probe(inst, direction, eps_list, 424242);
  namespace fs = std::filesystem;
  if (const auto dir = fs::path(out_path).parent_path(); !dir.empty())
    fs::create_directories(dir);
  std::ofstream out(out_path);
  out << "mode,eps,u_dist,j_dist,ratio\n";
  for (const auto& r : rows)
    out << "closed_form," << fmt(r.eps) << "," << fmt(r.u_dist) << "," << fmt(r.j_dist) << ","
        << fmt(r.ratio) << "\n";
  if (trained) {
    const NetworkSpec v_spec{1, {20, 20}, Activation::Tanh};
    const auto trained_rows =
        instability_probe_trained(inst, direction, eps_list, v_spec, 500, 1e-3, 424243);
    for (const auto& r : trained_rows)
      out << "trained," << fmt(r.eps) << "," << fmt(r.u_dist) << "," << fmt(r.j_dist) << ","
          << fmt(r.ratio) << "\n";
  }
  if (log) *log << "wrote " << out_path << "\n";
}

// ---------------------------------------------------------------------------
// Self-test suite: gradient/quadrature/identity checks at small scale.
// ---------------------------------------------------------------------------

namespace {

struct LossHarness {
  std::string name;
  Vec params0;
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> grad;
};

// Builds finite-difference-checkable closures for every loss on small nets
// and fixed batches, across the formulations that exercise distinct paths.
std::vector<LossHarness> make_loss_harnesses(uint64_t seed) {
  std::vector<LossHarness> harnesses;

  struct Ctx {
    ProblemInstance inst;
    QuadBatch batch;
    Vec f;
    NetworkSpec u_spec, v_spec, tau_spec;
    ParamStore u_params, v_params, tau_params;
  };
  auto make_ctx = [&](const std::string& id, std::optional<double> alpha, int batch_n) {
    auto ctx = std::make_shared<Ctx>();
    ctx->inst = make_problem(id, alpha);
    Rng rng(seed);
    const SamplingPlan plan = ctx->inst.problem.dim == 1 ? SamplingPlan::uniform1d(batch_n)
                                                         : SamplingPlan::uniform2d(batch_n);
    ctx->batch = make_batch(ctx->inst, plan, rng);
    ctx->f = load_density(ctx->inst.problem, ctx->batch.points);
    const int dim = ctx->inst.problem.dim;
    ctx->u_spec = NetworkSpec{dim, {8, 8}, Activation::Tanh};
    ctx->v_spec = NetworkSpec{dim, {8, 8}, Activation::Tanh};
    ctx->tau_spec = NetworkSpec{dim + 1, {8, 8}, Activation::Tanh};
    ctx->u_params = glorot_init(ctx->u_spec, seed + 1);
    ctx->v_params = glorot_init(ctx->v_spec, seed + 2);
    ctx->tau_params = glorot_init(ctx->tau_spec, seed + 3);
    return ctx;
  };

  // WAN loss, both parameter sets.
  for (bool wrt_u : {true, false}) {
    auto ctx = make_ctx("poisson_weak_smooth", std::nullopt, 40);
    auto eval = [ctx, wrt_u](const Vec& theta, Vec* grad) {
      const VariationalProblem& p = ctx->inst.problem;
      ParamStore up = ctx->u_params, vp = ctx->v_params;
      (wrt_u ? up : vp).values = theta;
      MaskedNetBatch u_eng(ctx->u_spec, ctx->inst.trial_mask, p.dim, p.trial_order);
      MaskedNetBatch v_eng(ctx->v_spec, ctx->inst.test_mask, p.dim, p.test_order);
      const BatchDual& u = u_eng.eval(up, ctx->batch.points);
      const BatchDual& v = v_eng.eval(vp, ctx->batch.points);
      const LossEval loss =
          loss_wan(p, u, v, ctx->batch.weights, ctx->f, 0.0, grad != nullptr);
      if (grad) {
        grad->setZero();
        if (wrt_u)
          u_eng.backward(loss.du, up, grad);
        else
          v_eng.backward(loss.dv, vp, grad);
      }
      return loss.value;
    };
    harnesses.push_back(
        {std::string("J_wan/") + (wrt_u ? "theta_u" : "theta_v"),
         (wrt_u ? ctx->u_params : ctx->v_params).values,
         [eval](const Vec& t) { return eval(t, nullptr); },
         [eval](const Vec& t) {
           Vec g(t.size());
           eval(t, &g);
           return g;
         }});
  }

  // WAN with a point load (ultraweak), v side: exercises the dv_pt path.
  {
    auto ctx = make_ctx("convection_ultraweak", std::nullopt, 40);
    auto eval = [ctx](const Vec& theta, Vec* grad) {
      const VariationalProblem& p = ctx->inst.problem;
      ParamStore vp = ctx->v_params;
      vp.values = theta;
      MaskedNetBatch u_eng(ctx->u_spec, ctx->inst.trial_mask, p.dim, p.trial_order);
      MaskedNetBatch v_eng(ctx->v_spec, ctx->inst.test_mask, p.dim, p.test_order);
      MaskedNetBatch v_pt(ctx->v_spec, ctx->inst.test_mask, p.dim, 0);
      const std::vector<Point> x0{p.load.point->x0};
      const BatchDual& u = u_eng.eval(ctx->u_params, ctx->batch.points);
      const BatchDual& v = v_eng.eval(vp, ctx->batch.points);
      const double v_x0 = v_pt.eval(vp, x0).value(0);
      const LossEval loss =
          loss_wan(p, u, v, ctx->batch.weights, ctx->f, v_x0, grad != nullptr);
      if (grad) {
        grad->setZero();
        v_eng.backward(loss.dv, vp, grad);
        v_pt.backward(loss.dv_pt, vp, grad);
      }
      return loss.value;
    };
    harnesses.push_back({"J_wan_pointload/theta_v", ctx->v_params.values,
                         [eval](const Vec& t) { return eval(t, nullptr); },
                         [eval](const Vec& t) {
                           Vec g(t.size());
                           eval(t, &g);
                           return g;
                         }});
  }

  // Generalized Ritz loss across formulations (identity, order-2, 2D, Dirac).
  struct RitzCase {
    std::string id;
    std::optional<double> alpha;
    int batch_n;
  };
  for (const auto& rc : std::vector<RitzCase>{{"poisson_weak_smooth", std::nullopt, 40},
                                              {"poisson_weak_alpha", 0.8, 40},
                                              {"poisson_strong", std::nullopt, 40},
                                              {"poisson_weak_delta", std::nullopt, 40},
                                              {"convection2d_strong", std::nullopt, 7}}) {
    auto ctx = make_ctx(rc.id, rc.alpha, rc.batch_n);
    auto eval = [ctx](const Vec& theta, Vec* grad) {
      const VariationalProblem& p = ctx->inst.problem;
      ParamStore up = ctx->u_params;
      up.values = theta;
      MaskedNetBatch u_eng(ctx->u_spec, ctx->inst.trial_mask, p.dim, p.trial_order);
      MaskedNetBatch u_pt(ctx->u_spec, ctx->inst.trial_mask, p.dim, p.trial_order);
      const BatchDual& u = u_eng.eval(up, ctx->batch.points);
      DualValue u_x0;
      if (p.load.point) u_x0 = u_pt.eval(up, {p.load.point->x0}).at(0);
      const LossEval loss =
          loss_ritz_T(p, u, ctx->batch.weights, ctx->f, u_x0, grad != nullptr);
      if (grad) {
        grad->setZero();
        u_eng.backward(loss.du, up, grad);
        if (p.load.point) u_pt.backward(loss.du_pt, up, grad);
      }
      return loss.value;
    };
    harnesses.push_back({"F_T/" + ctx->inst.display_id(), ctx->u_params.values,
                         [eval](const Vec& t) { return eval(t, nullptr); },
                         [eval](const Vec& t) {
                           Vec g(t.size());
                           eval(t, &g);
                           return g;
                         }});
  }

  // Nested-method losses: outer (through the composition into theta_u) and
  // inner (theta_tau), on weak, ultraweak and 2D problems.
  struct NestedCase {
    std::string id;
    int batch_n;
  };
  for (const auto& nc : std::vector<NestedCase>{{"poisson_weak_smooth", 40},
                                                {"convection_ultraweak", 40},
                                                {"convection2d_strong", 7}}) {
    for (bool outer : {true, false}) {
      auto ctx = make_ctx(nc.id, std::nullopt, nc.batch_n);
      auto eval = [ctx, outer](const Vec& theta, Vec* grad) {
        const VariationalProblem& p = ctx->inst.problem;
        ParamStore up = ctx->u_params, tp = ctx->tau_params;
        (outer ? up : tp).values = theta;
        const int u_order = std::max(p.trial_order, p.test_order);
        MaskedNetBatch u_eng(ctx->u_spec, ctx->inst.trial_mask, p.dim, u_order);
        TauNetBatch tau_eng(ctx->tau_spec, ctx->inst.tau_mask, p.dim, p.test_order);
        MaskedNetBatch u_pt(ctx->u_spec, ctx->inst.trial_mask, p.dim, p.test_order);
        TauNetBatch tau_pt(ctx->tau_spec, ctx->inst.tau_mask, p.dim, 0);
        const BatchDual& u = u_eng.eval(up, ctx->batch.points);
        const BatchDual& v = tau_eng.eval(tp, ctx->batch.points, u);
        double v_x0 = 0.0;
        BatchDual u_x0;
        if (p.load.point) {
          u_x0 = u_pt.eval(up, {p.load.point->x0});
          v_x0 = tau_pt.eval(tp, {p.load.point->x0}, u_x0).value(0);
        }
        if (outer) {
          const LossEval loss =
              loss_ritz_tau(p, v, ctx->batch.weights, ctx->f, v_x0, grad != nullptr);
          if (grad) {
            grad->setZero();
            BatchDual u_adj;
            tau_eng.backward(loss.dv, tp, nullptr, &u_adj);
            u_eng.backward(u_adj, up, grad);
            if (p.load.point) {
              BatchDual u_pt_adj;
              tau_pt.backward(loss.dv_pt, tp, nullptr, &u_pt_adj);
              u_pt.backward(u_pt_adj, up, grad);
            }
          }
          return loss.value;
        }
        const LossEval loss = loss_inner(p, u, v, ctx->batch.weights, grad != nullptr);
        if (grad) {
          grad->setZero();
          tau_eng.backward(loss.dv, tp, grad, nullptr);
        }
        return loss.value;
      };
      harnesses.push_back({std::string(outer ? "F_tau/" : "L_inner/") + nc.id,
                           (outer ? ctx->u_params : ctx->tau_params).values,
                           [eval](const Vec& t) { return eval(t, nullptr); },
                           [eval](const Vec& t) {
                             Vec g(t.size());
                             eval(t, &g);
                             return g;
                           }});
    }
  }

  // Adjoint Ritz loss (ultraweak, with the point load).
  {
    auto ctx = make_ctx("convection_ultraweak", std::nullopt, 40);
    auto eval = [ctx](const Vec& theta, Vec* grad) {
      const VariationalProblem& p = ctx->inst.problem;
      ParamStore vp = ctx->v_params;
      vp.values = theta;
      MaskedNetBatch v_eng(ctx->v_spec, ctx->inst.test_mask, p.dim, p.test_order);
      MaskedNetBatch v_pt(ctx->v_spec, ctx->inst.test_mask, p.dim, 0);
      const BatchDual& v = v_eng.eval(vp, ctx->batch.points);
      const double v_x0 = v_pt.eval(vp, {p.load.point->x0}).value(0);
      const LossEval loss =
          loss_adjoint_ritz(p, v, ctx->batch.weights, ctx->f, v_x0, grad != nullptr);
      if (grad) {
        grad->setZero();
        v_eng.backward(loss.dv, vp, grad);
        v_pt.backward(loss.dv_pt, vp, grad);
      }
      return loss.value;
    };
    harnesses.push_back({"F_adj/convection_ultraweak", ctx->v_params.values,
                         [eval](const Vec& t) { return eval(t, nullptr); },
                         [eval](const Vec& t) {
                           Vec g(t.size());
                           eval(t, &g);
                           return g;
                         }});
  }

  return harnesses;
}

double coordinate_fd_dev(const LossHarness& h, int n_coords, uint64_t seed) {
  const Vec g = h.grad(h.params0);
  Rng rng(seed);
  double worst = 0.0;
  for (int k = 0; k < n_coords; ++k) {
    const long j = static_cast<long>(rng.raw() % static_cast<uint64_t>(h.params0.size()));
    const double hj = 1e-5 * std::max(1.0, std::abs(h.params0[j]));
    Vec tp = h.params0, tm = h.params0;
    tp[j] += hj;
    tm[j] -= hj;
    const double fd = (h.value(tp) - h.value(tm)) / (2.0 * hj);
    const double dev = std::abs(fd - g[j]) / (std::abs(g[j]) + 1e-10);
    worst = std::max(worst, dev);
  }
  return worst;
}

}  // namespace

std::vector<GradientCheck> gradient_finite_difference_checks(uint64_t seed, int n_coords) {
  std::vector<GradientCheck> checks;
  for (const auto& h : make_loss_harnesses(seed))
    checks.push_back({h.name, coordinate_fd_dev(h, n_coords, seed + 7)});
  return checks;
}

int selftest(std::ostream& out) {
  int failures = 0;
  auto report = [&](const std::string& name, bool ok, const std::string& detail) {
    out << (ok ? "[PASS] " : "[FAIL] ") << name << " (" << detail << ")\n";
    if (!ok) ++failures;
  };

  // Gradients of every loss vs central finite differences.
  for (const auto& c : gradient_finite_difference_checks(91, 20))
    report("gradient " + c.name, c.max_rel_dev < 1e-5, "max rel dev " + fmt(c.max_rel_dev));

  // Quadrature: weight sums and a closed-form integral.
  {
    double worst = 0.0;
    for (uint64_t seed = 0; seed < 100; ++seed) {
      const QuadBatch b = sample_batch(SamplingPlan::uniform1d(200), seed);
      worst = std::max(worst, std::abs(b.total_weight() - 1.0));
    }
    report("quadrature weight sums", worst < 1e-12, "max |sum-1| " + fmt(worst));
    const QuadBatch b = sample_batch(SamplingPlan::uniform1d(10000), 3);
    const double integral = integrate(b, [](const Point& p) {
      const double t = 2.0 * p[0] - 1.0;
      return t * t;
    });
    report("quadrature int (2x-1)^2", std::abs(integral - 1.0 / 3.0) < 1e-4,
           "value " + fmt(integral));
  }

  // Discrete Ritz-gap identity on shared batches.
  {
    const ProblemInstance inst = make_problem("poisson_weak_smooth");
    const NetworkSpec spec{1, {10, 10}, Activation::Tanh};
    double worst = 0.0;
    for (uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed + 500);
      const QuadBatch batch = make_batch(inst, SamplingPlan::uniform1d(200), rng);
      MaskedNetBatch u_eng(spec, inst.trial_mask, 1, 1);
      const BatchDual& u = u_eng.eval(glorot_init(spec, seed), batch.points);
      BatchDual ue = BatchDual::zeros(batch.size(), 1, 1);
      for (int i = 0; i < batch.size(); ++i)
        ue.set(i, inst.problem.exact_u(batch.points[static_cast<size_t>(i)]));
      const auto [lhs, rhs] = ritz_gap_check(inst.problem, u, ue, batch.weights);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    report("Ritz gap identity", worst < 1e-10, "max |lhs-rhs| " + fmt(worst));
  }

  // Instability probe constants.
  {
    const ProblemInstance inst = make_problem("poisson_weak_smooth");
    auto dir = [](const Point& p) { return sin(DualValue::axis(p[0], 0, 1) * M_PI); };
    const auto rows = instability_probe(inst, dir, {1e-1, 1e-2, 1e-3}, 11);
    bool ok = true;
    for (const auto& r : rows) ok = ok && std::abs(r.j_dist - 2.0) < 0.05;
    ok = ok && rows.back().ratio > 90.0 * rows.front().ratio;
    report("instability probe", ok,
           "j_dist " + fmt(rows[0].j_dist) + ", ratio growth " +
               fmt(rows.back().ratio / rows.front().ratio) + "x");
  }

  out << (failures == 0 ? "selftest: all checks passed\n"
                        : "selftest: " + std::to_string(failures) + " check(s) failed\n");
  return failures;
}

}  // namespace ritznet
