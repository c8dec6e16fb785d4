// cotpi: partial-identification intervals from the command line.
//
//   cotpi estimate  --data obs.csv [--cost squared] [--bound both] [--c 1.0]
//   cotpi simulate  --model b --sizes 600 --seed 1 --out obs.csv
//   cotpi select-c  --data obs.csv | --model b --sizes 600
//   cotpi benchmark --config run.cfg --reps 200 --jobs 8 --out rows.csv
//
// Settings are layered: defaults, then --config (key=value lines), then
// COTPI_<KEY> environment variables, then flags.

#include "cotpi/errors.hpp"
#include "cotpi/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kSchema = 2,
  kConfig = 3,
  kNumerical = 4,
  kInput = 5,
};

const std::vector<std::string> kSettingKeys = {
    "model", "design", "sizes", "n0",   "n1",      "c",    "r",         "eta",
    "cost",  "bound",  "propensity", "slope", "clip_eta", "reps", "jobs", "seed",
    "candidates", "bootstrap", "preset"};

struct Options {
  std::string config_path;
  std::string out;
  std::string data;
  std::map<std::string, std::string> flags;
};

void add_setting_flags(CLI::App* cmd, Options& opts, const std::vector<std::string>& keys) {
  for (const auto& key : keys) {
    std::string flag = "--" + key;
    for (auto& ch : flag) {
      if (ch == '_') ch = '-';
    }
    cmd->add_option_function<std::string>(
        flag, [&opts, key](const std::string& v) { opts.flags[key] = v; },
        "setting '" + key + "'");
  }
}

cotpi::RunConfig resolve(const Options& opts,
                         const std::map<std::string, std::string>& command_defaults = {}) {
  cotpi::RunConfig config;
  config.apply(command_defaults);
  if (!opts.config_path.empty()) config.apply(cotpi::parse_config_file(opts.config_path));
  config.apply(cotpi::environment_overrides(kSettingKeys));
  config.apply(opts.flags);
  config.validate();
  return config;
}

class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw cotpi::InputError("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  bool to_file() const { return file_.is_open(); }

 private:
  std::ofstream file_;
};

std::string show(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::setprecision(10) << *v;
  return s.str();
}

cotpi::EstimatorConfig file_estimator_config(const cotpi::RunConfig& config) {
  if (config.c_values.size() != 1) throw cotpi::ConfigError("estimate takes a single c");
  cotpi::EstimatorConfig est;
  est.c = config.c_values.front();
  est.r = config.r;
  est.bound = config.bound;
  est.clip_eta = config.clip_eta;
  est.seed = config.seed;
  if (config.design == "covariate_dependent") {
    // Propensities are unknown for file data and are fitted per fold.
    est.design = cotpi::Design::covariate_dependent;
  } else if (config.design != "bernoulli") {
    throw cotpi::ConfigError("estimate supports design=bernoulli or covariate_dependent");
  }
  return est;
}

int cmd_estimate(const Options& opts) {
  const auto config = resolve(opts, {{"bound", "both"}});
  if (opts.data.empty()) throw cotpi::ConfigError("estimate needs --data");
  const auto table = cotpi::read_observations_file(opts.data);
  const auto prepared = cotpi::prepare_table(table);
  const auto cost = cotpi::CostSpec::parse(config.cost);
  const auto est = file_estimator_config(config);
  const auto interval = cotpi::estimate(prepared.sample0, prepared.sample1, cost, est);
  const auto& d = interval.diagnostics;

  std::cout << "n0=" << prepared.sample0.size() << " n1=" << prepared.sample1.size()
            << " cost=" << cost.name() << " c=" << est.c << " r="
            << est.rate(prepared.sample0.covariate_dim(), prepared.sample0.outcome_dim()) << '\n'
            << "lower " << show(interval.lower) << '\n'
            << "upper " << show(interval.upper) << '\n'
            << "cells_per_axis " << d.cells_per_axis0 << ' ' << d.cells_per_axis1 << '\n'
            << "occupied_cells " << d.occupied0 << ' ' << d.occupied1 << '\n'
            << "coupling_support " << d.coupling_support << '\n'
            << "clipped_cells " << d.clipped_cells << '\n';
  if (d.degenerate_propensity_fits > 0) {
    std::cerr << "warning: " << d.degenerate_propensity_fits
              << " propensity fit(s) saw a single class; constant model used\n";
  }
  if (!opts.out.empty()) {
    Sink sink(opts.out);
    auto& out = sink.stream();
    auto field = [](const std::optional<double>& v) {
      if (!v) return std::string();
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", *v);
      return std::string(buf);
    };
    out << "lower,upper,n0,n1,occupied0,occupied1,coupling_support,clipped_cells\n"
        << field(interval.lower) << ',' << field(interval.upper) << ','
        << prepared.sample0.size() << ',' << prepared.sample1.size() << ',' << d.occupied0 << ','
        << d.occupied1 << ',' << d.coupling_support << ',' << d.clipped_cells << '\n';
  }
  return kOk;
}

int cmd_simulate(const Options& opts) {
  const auto config = resolve(opts);
  const std::size_t total =
      config.n0 > 0 ? config.n0 + config.n1 : config.sizes.front();
  const auto draw = cotpi::draw_setting(config, total, config.etas.front(), 0);
  Sink sink(opts.out);
  cotpi::write_observations(sink.stream(), draw.data);
  if (sink.to_file()) {
    std::cerr << "wrote " << draw.data.y0.rows() + draw.data.y1.rows() << " rows (seed "
              << draw.seed << ") to " << opts.out << '\n';
  }
  return kOk;
}

int cmd_select_c(const Options& opts) {
  const auto config = resolve(opts);
  const auto cost = cotpi::CostSpec::parse(config.cost);
  cotpi::PreparedSamples prepared;
  cotpi::EstimatorConfig est;
  if (!opts.data.empty()) {
    prepared = cotpi::prepare_table(cotpi::read_observations_file(opts.data));
    auto single = config;
    single.c_values = {1.0};
    est = file_estimator_config(single);
  } else {
    const std::size_t total = config.n0 > 0 ? config.n0 + config.n1 : config.sizes.front();
    const auto draw = cotpi::draw_setting(config, total, config.etas.front(), 0);
    prepared = cotpi::prepare_samples(draw.data.z0, draw.data.y0, draw.data.z1, draw.data.y1);
    est = cotpi::estimator_config_for(config, 1.0, prepared.record, config.seed);
  }
  const auto selection = cotpi::select_cell_constant(
      prepared.sample0, prepared.sample1, cost, est, config.candidates, config.bootstrap,
      config.seed);
  std::cout << "chosen_c " << selection.chosen_c << '\n';
  Sink sink(opts.out);
  auto& out = sink.stream();
  out << "c,mean,se\n";
  for (const auto& p : selection.curve) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.c, p.mean, p.standard_error);
    out << buf;
  }
  return kOk;
}

int cmd_benchmark(const Options& opts) {
  const auto config = resolve(opts);
  const auto result = cotpi::run_benchmark(config);
  if (!opts.out.empty()) {
    Sink sink(opts.out);
    cotpi::write_results(sink.stream(), result.rows);
  }
  cotpi::write_summary(std::cout, result);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariate-assisted partial-identification intervals"};
  app.require_subcommand(1);
  Options opts;

  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "key=value settings file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out, "output path ('-' for stdout)");
    cmd->add_option_function<std::string>(
        "--seed", [&](const std::string& v) { opts.flags["seed"] = v; }, "base seed");
    cmd->add_option_function<std::string>(
        "--reps", [&](const std::string& v) { opts.flags["reps"] = v; }, "repetitions");
    cmd->add_option_function<std::string>(
        "--jobs", [&](const std::string& v) { opts.flags["jobs"] = v; }, "worker threads");
  };

  auto* estimate = app.add_subcommand("estimate", "interval for an observation CSV");
  common(estimate);
  estimate->add_option("--data", opts.data, "observation CSV (w, y_k, z_k[, weight])")
      ->required()
      ->check(CLI::ExistingFile);
  add_setting_flags(estimate, opts, {"c", "r", "cost", "bound", "design", "clip_eta"});

  auto* simulate = app.add_subcommand("simulate", "draw a synthetic observation CSV");
  common(simulate);
  add_setting_flags(simulate, opts, {"model", "design", "sizes", "n0", "n1", "eta", "slope"});

  auto* select = app.add_subcommand("select-c", "bootstrap elbow choice of the cell constant");
  common(select);
  select->add_option("--data", opts.data, "observation CSV; synthetic draw when omitted")
      ->check(CLI::ExistingFile);
  add_setting_flags(select, opts,
                    {"candidates", "bootstrap", "cost", "bound", "design", "r", "clip_eta",
                     "model", "sizes", "n0", "n1", "propensity", "slope"});

  auto* benchmark = app.add_subcommand("benchmark", "Monte-Carlo error study on synthetic models");
  common(benchmark);
  add_setting_flags(benchmark, opts,
                    {"model", "design", "sizes", "n0", "n1", "c", "r", "eta", "cost", "bound",
                     "propensity", "slope", "clip_eta", "preset"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*estimate) return cmd_estimate(opts);
    if (*simulate) return cmd_simulate(opts);
    if (*select) return cmd_select_c(opts);
    if (*benchmark) return cmd_benchmark(opts);
  } catch (const cotpi::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kSchema;
  } catch (const cotpi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const cotpi::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  } catch (const cotpi::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
