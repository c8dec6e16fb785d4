#pragma once

// Tabular I/O and the Monte-Carlo benchmark driver behind the `cotpi` CLI.
//
// Observation files: comma-separated, header row naming the columns
//   w, y_1..y_{d_Y}, z_1..z_{d_Z}[, weight]
// in any order; w is 0 (control) or 1 (treated).
//
// Result files: one ResultRow per line under kResultHeader; missing values
// are empty fields. Numbers are written with 17 significant digits so a
// write/read cycle reproduces every row exactly.

#include "cotpi/datagen.hpp"
#include "cotpi/estimator.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cotpi {

struct ObservationTable {
  ObservedData data;
  /// Per-group weights from the optional weight column, normalized to one.
  std::optional<Eigen::VectorXd> weights0;
  std::optional<Eigen::VectorXd> weights1;
};

ObservationTable read_observations(std::istream& in);
ObservationTable read_observations_file(const std::string& path);
void write_observations(std::ostream& out, const ObservedData& data);

/// Normalizes covariates jointly and attaches file weights when present.
PreparedSamples prepare_table(const ObservationTable& table);

struct ResultRow {
  std::string model;
  std::string design;
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  std::size_t total = 0;
  double c = 1.0;
  double r = 0.0;
  double eta = 0.0;
  std::size_t repetition = 0;
  std::optional<double> lower;
  std::optional<double> upper;
  std::optional<double> oracle;
  std::optional<double> relative_error;
  std::optional<double> absolute_error;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const ResultRow&, const ResultRow&) = default;
};

extern const char* const kResultHeader;

void write_results(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results(std::istream& in);

/// Everything a CLI invocation needs. Populated from defaults, then a
/// key=value config file, then environment, then flags.
struct RunConfig {
  std::string model = "b";
  /// bernoulli | covariate_dependent | shift
  std::string design = "bernoulli";
  /// Total sample sizes N (n0 = n1 = N / 2 unless n0/n1 are fixed).
  std::vector<std::size_t> sizes{600};
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  std::vector<double> c_values{1.0};
  std::optional<double> r;
  std::vector<double> etas{0.0};
  std::string cost = "squared";
  Bound bound = Bound::lower;
  /// known | fit (covariate-dependent design)
  std::string propensity = "known";
  double slope = 1.5;
  double clip_eta = kDefaultClipEta;
  std::size_t reps = 500;
  std::size_t jobs = 1;
  std::uint64_t seed = 0;
  std::vector<double> candidates{0.6, 0.8, 1.0, 1.2, 1.4};
  std::size_t bootstrap = 50;

  /// Applies one key=value setting; unknown keys and bad values throw
  /// ConfigError.
  void set(const std::string& key, const std::string& value);
  void apply(const std::map<std::string, std::string>& settings);
  void validate() const;
};

/// Parses key=value lines; '#' starts a comment; blank lines are skipped.
std::map<std::string, std::string> parse_config_text(std::istream& in);
std::map<std::string, std::string> parse_config_file(const std::string& path);

/// Settings read from COTPI_<KEY> environment variables for the given keys.
std::map<std::string, std::string> environment_overrides(const std::vector<std::string>& keys);

struct SummaryRow {
  std::string model;
  std::string design;
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  std::size_t total = 0;
  double c = 1.0;
  double eta = 0.0;
  std::size_t reps = 0;
  double mean_lower = 0.0;
  std::optional<double> oracle;
  std::optional<double> mean_relative_error;
  std::optional<double> sem_relative_error;
  std::optional<double> mean_absolute_error;
  std::optional<double> sem_absolute_error;
};

struct BenchmarkResult {
  std::vector<ResultRow> rows;
  std::vector<SummaryRow> summary;
  std::vector<std::string> notices;
};

/// One repetition's data for a synthetic setting.
struct SyntheticDraw {
  ObservedData data;
  std::uint64_t seed;
};

SyntheticDraw draw_setting(const RunConfig& config, std::size_t total, double eta,
                           std::size_t repetition);

/// Estimator configuration for a synthetic run (known propensity wired to
/// the design's logistic assignment through the normalization record).
EstimatorConfig estimator_config_for(const RunConfig& config, double c,
                                     const NormalizationRecord& record, std::uint64_t seed);

/// Runs config.reps repetitions for every (size, c, eta) combination, on
/// config.jobs threads. Output is independent of the thread count.
BenchmarkResult run_benchmark(const RunConfig& config);

void write_summary(std::ostream& out, const BenchmarkResult& result);

/// Mean and standard error of the mean (SD / sqrt(n)); SEM is empty for n < 2.
std::pair<double, std::optional<double>> mean_and_sem(const std::vector<double>& values);

}  // namespace cotpi
