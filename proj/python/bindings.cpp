#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "ritznet/experiment.hpp"

namespace py = pybind11;
using namespace ritznet;

namespace {

py::array_t<double> to_array(const Vec& v) {
  py::array_t<double> out(static_cast<size_t>(v.size()));
  std::copy(v.data(), v.data() + v.size(), out.mutable_data());
  return out;
}

py::dict record_to_dict(const TrainRecord& rec) {
  py::list iters;
  for (const auto& row : rec.iters)
    iters.append(py::make_tuple(row.iter, to_string(row.tag), row.loss_primary,
                                row.loss_secondary));
  py::list checkpoints;
  for (const auto& cp : rec.checkpoints)
    checkpoints.append(py::make_tuple(cp.fraction, cp.outer_iter, cp.rel_u, cp.rel_v));
  py::dict d;
  d["iterations"] = iters;
  d["checkpoints"] = checkpoints;
  d["final_loss"] = rec.final_loss();
  d["final_relative_u"] = rec.checkpoints.back().rel_u;
  d["final_relative_v"] = rec.checkpoints.back().rel_v;
  d["degenerate_events"] = rec.degenerate_events;
  d["wall_seconds"] = rec.wall_seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Neural-network variational PDE solvers: WAN, (generalized/adjoint) "
            "deep Ritz and the nested double-Ritz scheme.";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<DegenerateTestError>(m, "DegenerateTestError");

  m.def(
      "sample_batch",
      [](const std::string& plan, uint64_t seed) {
        const QuadBatch b = sample_batch(parse_plan(plan), seed);
        py::array_t<double> nodes({b.size(), b.dim});
        for (int i = 0; i < b.size(); ++i)
          for (int ax = 0; ax < b.dim; ++ax)
            nodes.mutable_at(i, ax) = b.points[static_cast<size_t>(i)][ax];
        return py::make_tuple(nodes, to_array(b.weights));
      },
      py::arg("plan"), py::arg("seed"),
      "Draw a randomized composite intermediate-point batch; plan grammar as in "
      "config files, e.g. 'uniform:200' or 'beta:100,1,1;100,10000,1,r'.");

  m.def(
      "integrate",
      [](const std::string& plan, uint64_t seed, const std::function<double(double, double)>& f) {
        const QuadBatch b = sample_batch(parse_plan(plan), seed);
        return integrate(b, [&](const Point& p) { return f(p[0], b.dim == 2 ? p[1] : 0.0); });
      },
      py::arg("plan"), py::arg("seed"), py::arg("integrand"));

  m.def(
      "sample_beta",
      [](double a, double b, uint64_t seed, int n) {
        Rng rng(seed);
        py::array_t<double> out(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) out.mutable_data()[i] = sample_beta(a, b, rng);
        return out;
      },
      py::arg("a"), py::arg("b"), py::arg("seed"), py::arg("n") = 1);

  m.def(
      "eval_network",
      [](const std::vector<int>& widths, const std::string& activation, uint64_t seed,
         py::array_t<double> xs, int order) {
        const NetworkSpec spec{1, widths, activation_from_string(activation)};
        const ParamStore params = glorot_init(spec, seed);
        MlpBatch engine(spec, 1, order);
        std::vector<Point> pts;
        for (py::ssize_t i = 0; i < xs.size(); ++i) pts.push_back(Point(xs.at(i)));
        const BatchDual& out = engine.forward(params, spatial_inputs(pts, 1, order));
        py::array_t<double> res({static_cast<int>(pts.size()), out.comps()});
        for (int i = 0; i < out.size(); ++i)
          for (int c = 0; c < out.comps(); ++c) res.mutable_at(i, c) = out.comp(i, c);
        return res;
      },
      py::arg("widths"), py::arg("activation"), py::arg("seed"), py::arg("xs"),
      py::arg("order") = 1,
      "Evaluate a seeded 1D network over points; columns are value and spatial "
      "derivatives up to the requested order.");

  m.def("problem_ids", []() {
    std::vector<std::string> ids;
    for (const auto& inst : registry()) ids.push_back(inst.display_id());
    return ids;
  });

  m.def(
      "run",
      [](const std::string& config_text) {
        const ExperimentConfig cfg = parse_config(config_text);
        return record_to_dict(run_experiment_record(cfg).record);
      },
      py::arg("config"),
      "Train per an experiment config (text form) and return the record.");

  m.def(
      "run_to_dir",
      [](const std::string& config_path) {
        const ExperimentConfig cfg = load_config(config_path);
        run_experiment(cfg);
        return cfg.output_dir;
      },
      py::arg("config_path"), "Run from a config file and write the CSV artifact set.");

  m.def(
      "probe_instability",
      [](const std::vector<double>& eps_list, uint64_t seed) {
        const ProblemInstance inst = make_problem("poisson_weak_smooth");
        auto dir = [](const Point& p) { return sin(DualValue::axis(p[0], 0, 1) * M_PI); };
        std::vector<py::tuple> rows;
        for (const auto& r : instability_probe(inst, dir, eps_list, seed))
          rows.push_back(py::make_tuple(r.eps, r.u_dist, r.j_dist, r.ratio));
        return rows;
      },
      py::arg("eps_list"), py::arg("seed") = 44);

  m.def(
      "reproduce",
      [](int table, const std::string& scale, const std::string& out_dir) {
        reproduce_table(table, scale, out_dir, TrainSeeds{});
      },
      py::arg("table"), py::arg("scale"), py::arg("out_dir"));

  m.def("selftest", []() {
    std::ostringstream out;
    const int failures = selftest(out);
    return py::make_tuple(failures, out.str());
  });

  m.def("default_config", [](const std::string& problem, py::object alpha,
                             const std::string& method) {
    std::optional<double> a;
    if (!alpha.is_none()) a = alpha.cast<double>();
    return serialize_config(default_config(problem, a, method_from_string(method)));
  },
        py::arg("problem"), py::arg("alpha") = py::none(), py::arg("method") = "drm",
        "Canonical config text with problem-aware defaults.");
}
