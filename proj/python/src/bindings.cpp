// Python bindings: exact OT, the interval estimator, cell-constant
// selection, Gaussian oracles, synthetic designs and the benchmark driver.

#include "cotpi/datagen.hpp"
#include "cotpi/errors.hpp"
#include "cotpi/estimator.hpp"
#include "cotpi/harness.hpp"
#include "cotpi/oracles.hpp"
#include "cotpi/ot.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace cotpi;

namespace {

DiscreteDistribution distribution(const Eigen::MatrixXd& points,
                                  const std::optional<Eigen::VectorXd>& weights) {
  if (!weights) return DiscreteDistribution::uniform(points);
  return DiscreteDistribution::normalized(points, *weights);
}

py::dict solution_dict(const OtSolution& s) {
  py::list coupling;
  for (const auto& e : s.coupling.entries) coupling.append(py::make_tuple(e.source, e.target, e.mass));
  py::dict out;
  out["value"] = s.value;
  out["coupling"] = coupling;
  return out;
}

py::dict interval_dict(const PiInterval& interval) {
  const auto& d = interval.diagnostics;
  py::dict diag;
  diag["cells_per_axis"] = py::make_tuple(d.cells_per_axis0, d.cells_per_axis1);
  diag["occupied_cells"] = py::make_tuple(d.occupied0, d.occupied1);
  diag["coupling_support"] = d.coupling_support;
  diag["clipped_cells"] = d.clipped_cells;
  diag["degenerate_propensity_fits"] = d.degenerate_propensity_fits;
  diag["propensity_training_folds"] = d.propensity_training_folds;
  diag["fold_estimates"] = d.fold_estimates;
  py::dict out;
  out["lower"] = interval.lower ? py::cast(*interval.lower) : py::none();
  out["upper"] = interval.upper ? py::cast(*interval.upper) : py::none();
  out["diagnostics"] = diag;
  return out;
}

EstimatorConfig make_config(double c, std::optional<double> r, const std::string& bound,
                            const std::string& design,
                            const std::optional<std::function<double(const Eigen::VectorXd&)>>& propensity,
                            double clip_eta, std::uint64_t seed) {
  EstimatorConfig cfg;
  cfg.c = c;
  cfg.r = r;
  cfg.bound = parse_bound(bound);
  cfg.design = parse_design(design);
  cfg.clip_eta = clip_eta;
  cfg.seed = seed;
  if (propensity) {
    // Python callables may not be re-entered without the GIL.
    auto fn = *propensity;
    cfg.propensity = PropensityModel(
        [fn](const Eigen::VectorXd& z) {
          py::gil_scoped_acquire gil;
          return fn(z);
        },
        clip_eta, "known");
  }
  return cfg;
}

py::dict observed_dict(const ObservedData& data) {
  py::dict out;
  out["z0"] = data.z0;
  out["y0"] = data.y0;
  out["z1"] = data.z1;
  out["y1"] = data.y1;
  return out;
}

py::object optional_float(const std::optional<double>& v) {
  return v ? py::cast(*v) : py::none();
}

}  // namespace

PYBIND11_MODULE(_cotpi, m) {
  m.doc() = "Covariate-assisted partial-identification intervals via adapted conditional OT";

  auto base = py::register_exception<Error>(m, "CotpiError", PyExc_RuntimeError);
  auto input = py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<SchemaError>(m, "SchemaError", input.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", base.ptr());

  m.def(
      "solve_exact_ot",
      [](const Eigen::MatrixXd& cost, const Eigen::VectorXd& mu, const Eigen::VectorXd& nu,
         bool maximize) {
        const auto a = DiscreteDistribution::normalized(Eigen::MatrixXd::Zero(mu.size(), 1), mu);
        const auto b = DiscreteDistribution::normalized(Eigen::MatrixXd::Zero(nu.size(), 1), nu);
        const CostMatrix c(cost);
        return solution_dict(maximize ? solve_exact_ot_max(a, b, c) : solve_exact_ot(a, b, c));
      },
      py::arg("cost"), py::arg("mu"), py::arg("nu"), py::arg("maximize") = false,
      "Exact transportation LP for an explicit cost matrix; masses are normalized.");

  m.def(
      "solve_1d_quantile_ot",
      [](const Eigen::VectorXd& x, const Eigen::VectorXd& y, std::optional<Eigen::VectorXd> wx,
         std::optional<Eigen::VectorXd> wy, const std::string& cost, bool maximize) {
        const auto a = distribution(x, wx);
        const auto b = distribution(y, wy);
        const auto tag = parse_quantile_cost(cost);
        return solution_dict(maximize ? solve_1d_quantile_ot_max(a, b, tag)
                                      : solve_1d_quantile_ot(a, b, tag));
      },
      py::arg("x"), py::arg("y"), py::arg("wx") = py::none(), py::arg("wy") = py::none(),
      py::arg("cost") = "squared", py::arg("maximize") = false);

  m.def(
      "wasserstein1",
      [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, std::optional<Eigen::VectorXd> wx,
         std::optional<Eigen::VectorXd> wy) {
        return wasserstein1(distribution(x, wx), distribution(y, wy)).value;
      },
      py::arg("x"), py::arg("y"), py::arg("wx") = py::none(), py::arg("wy") = py::none(),
      "W_1 between two point clouds (one point per row).");

  m.def(
      "estimate",
      [](const Eigen::MatrixXd& z0, const Eigen::MatrixXd& y0, const Eigen::MatrixXd& z1,
         const Eigen::MatrixXd& y1, const std::string& cost, const std::string& bound, double c,
         std::optional<double> r, const std::string& design,
         std::optional<std::function<double(const Eigen::VectorXd&)>> propensity,
         double clip_eta, std::uint64_t seed) {
        const auto prepared = prepare_samples(z0, y0, z1, y1);
        const auto cfg = make_config(c, r, bound, design, propensity, clip_eta, seed);
        const auto h = CostSpec::parse(cost);
        PiInterval interval;
        {
          py::gil_scoped_release release;
          interval = cotpi::estimate(prepared.sample0, prepared.sample1, h, cfg);
        }
        return interval_dict(interval);
      },
      py::arg("z0"), py::arg("y0"), py::arg("z1"), py::arg("y1"), py::arg("cost") = "squared",
      py::arg("bound") = "both", py::arg("c") = 1.0, py::arg("r") = py::none(),
      py::arg("design") = "bernoulli", py::arg("propensity") = py::none(),
      py::arg("clip_eta") = kDefaultClipEta, py::arg("seed") = 0,
      "Interval for raw two-group data. Covariates are normalized jointly into the unit "
      "cube; a `propensity` callable receives unit-cube coordinates.");

  m.def(
      "select_cell_constant",
      [](const Eigen::MatrixXd& z0, const Eigen::MatrixXd& y0, const Eigen::MatrixXd& z1,
         const Eigen::MatrixXd& y1, const std::vector<double>& candidates, std::size_t bootstrap,
         const std::string& cost, const std::string& bound, std::uint64_t seed) {
        const auto prepared = prepare_samples(z0, y0, z1, y1);
        const auto cfg = make_config(1.0, std::nullopt, bound, "bernoulli", std::nullopt,
                                     kDefaultClipEta, seed);
        const auto sel = select_cell_constant(prepared.sample0, prepared.sample1,
                                              CostSpec::parse(cost), cfg, candidates, bootstrap,
                                              seed);
        py::list curve;
        for (const auto& p : sel.curve) curve.append(py::make_tuple(p.c, p.mean, p.standard_error));
        return py::make_tuple(sel.chosen_c, curve);
      },
      py::arg("z0"), py::arg("y0"), py::arg("z1"), py::arg("y1"),
      py::arg("candidates") = std::vector<double>{0.6, 0.8, 1.0, 1.2, 1.4},
      py::arg("bootstrap") = 50, py::arg("cost") = "squared", py::arg("bound") = "lower",
      py::arg("seed") = 0, "Returns (chosen_c, [(c, mean, se), ...]).");

  m.def(
      "plugin_exact_match_estimate",
      [](const Eigen::MatrixXd& z0, const Eigen::MatrixXd& y0, const Eigen::MatrixXd& z1,
         const Eigen::MatrixXd& y1, const std::string& cost) {
        return plugin_exact_match_estimate(z0, y0, z1, y1, CostSpec::parse(cost));
      },
      py::arg("z0"), py::arg("y0"), py::arg("z1"), py::arg("y1"), py::arg("cost") = "absolute");

  m.def("bures_trace", &bures_trace, py::arg("sigma0"), py::arg("sigma1"));
  m.def("psd_sqrt", &psd_sqrt, py::arg("sigma"));
  m.def(
      "model_oracle", [](const std::string& model) { return synthetic_model_oracle(parse_model(model)); },
      py::arg("model"), "Population lower bound for h = (y0 - y1)^2 in model a, b or c.");

  m.def(
      "simulate",
      [](const std::string& model, const std::string& design, std::size_t n, double eta,
         double slope, std::uint64_t seed, std::size_t repetition) {
        RunConfig cfg;
        cfg.set("model", model);
        cfg.set("design", design);
        cfg.slope = slope;
        cfg.seed = seed;
        return observed_dict(draw_setting(cfg, n, eta, repetition).data);
      },
      py::arg("model") = "b", py::arg("design") = "bernoulli", py::arg("n") = 600,
      py::arg("eta") = 0.0, py::arg("slope") = 1.5, py::arg("seed") = 0,
      py::arg("repetition") = 0, "Raw draw {z0, y0, z1, y1}; n is the total sample size.");

  m.def(
      "run_benchmark",
      [](const std::map<std::string, std::string>& settings) {
        RunConfig cfg;
        cfg.apply(settings);
        BenchmarkResult result;
        {
          py::gil_scoped_release release;
          result = run_benchmark(cfg);
        }
        py::list rows, summary;
        for (const auto& r : result.rows) {
          py::dict d;
          d["model"] = r.model;
          d["design"] = r.design;
          d["n0"] = r.n0;
          d["n1"] = r.n1;
          d["N"] = r.total;
          d["c"] = r.c;
          d["r"] = r.r;
          d["eta"] = r.eta;
          d["rep"] = r.repetition;
          d["lower"] = optional_float(r.lower);
          d["upper"] = optional_float(r.upper);
          d["oracle"] = optional_float(r.oracle);
          d["rel_error"] = optional_float(r.relative_error);
          d["abs_error"] = optional_float(r.absolute_error);
          d["wall_ms"] = r.wall_ms;
          d["seed"] = r.seed;
          rows.append(d);
        }
        for (const auto& s : result.summary) {
          py::dict d;
          d["N"] = s.total;
          d["c"] = s.c;
          d["eta"] = s.eta;
          d["reps"] = s.reps;
          d["mean_estimate"] = s.mean_lower;
          d["oracle"] = optional_float(s.oracle);
          d["rel_error"] = optional_float(s.mean_relative_error);
          d["rel_sem"] = optional_float(s.sem_relative_error);
          d["abs_error"] = optional_float(s.mean_absolute_error);
          d["abs_sem"] = optional_float(s.sem_absolute_error);
          summary.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["summary"] = summary;
        out["notices"] = result.notices;
        return out;
      },
      py::arg("settings"),
      "Runs the Monte-Carlo benchmark for key=value settings (values as strings).");
}
