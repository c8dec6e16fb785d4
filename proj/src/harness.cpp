#include "cotpi/harness.hpp"

#include "cotpi/errors.hpp"
#include "cotpi/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace cotpi {

const char* const kResultHeader =
    "model,design,n0,n1,N,c,r,eta,rep,lower,upper,oracle,rel_error,abs_error,wall_ms,seed";

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> to_unsigned(const std::string& s) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

// Parses "name_k" into k >= 1.
std::optional<std::size_t> indexed_column(const std::string& name, const std::string& prefix) {
  if (name.size() <= prefix.size() || name.compare(0, prefix.size(), prefix) != 0) {
    return std::nullopt;
  }
  const auto k = to_unsigned(name.substr(prefix.size()));
  if (!k || *k == 0) return std::nullopt;
  return static_cast<std::size_t>(*k);
}

}  // namespace

ObservationTable read_observations(std::istream& in) {
  std::string line;
  long line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) {
      header = split(line, ',');
      break;
    }
  }
  if (header.empty()) throw SchemaError("missing header row");

  std::optional<std::size_t> w_col, weight_col;
  std::map<std::size_t, std::size_t> y_cols, z_cols;  // index k -> column
  for (std::size_t col = 0; col < header.size(); ++col) {
    const auto& name = header[col];
    if (name == "w") {
      w_col = col;
    } else if (name == "weight") {
      weight_col = col;
    } else if (auto k = indexed_column(name, "y_")) {
      if (!y_cols.emplace(*k, col).second) throw SchemaError("duplicate column " + name, line_no);
    } else if (auto k = indexed_column(name, "z_")) {
      if (!z_cols.emplace(*k, col).second) throw SchemaError("duplicate column " + name, line_no);
    } else {
      throw SchemaError("unexpected column '" + name + "'", line_no);
    }
  }
  if (!w_col) throw SchemaError("missing column w", line_no);
  if (y_cols.empty()) throw SchemaError("missing outcome columns y_1..", line_no);
  if (z_cols.empty()) throw SchemaError("missing covariate columns z_1..", line_no);
  if (y_cols.rbegin()->first != y_cols.size()) {
    throw SchemaError("outcome columns must be y_1..y_k without gaps", line_no);
  }
  if (z_cols.rbegin()->first != z_cols.size()) {
    throw SchemaError("covariate columns must be z_1..z_k without gaps", line_no);
  }
  const std::size_t dy = y_cols.size();
  const std::size_t dz = z_cols.size();

  std::vector<std::vector<double>> y[2], z[2];
  std::vector<double> weights[2];
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      throw SchemaError("expected " + std::to_string(header.size()) + " fields, found " +
                        std::to_string(fields.size()),
                        line_no);
    }
    auto value = [&](std::size_t col) {
      const auto v = to_double(fields[col]);
      if (!v) throw SchemaError("column " + header[col] + ": not a number", line_no);
      if (!std::isfinite(*v)) throw SchemaError("column " + header[col] + ": non-finite value", line_no);
      return *v;
    };
    const double w = value(*w_col);
    if (w != 0.0 && w != 1.0) throw SchemaError("column w must be 0 or 1", line_no);
    const int g = static_cast<int>(w);
    std::vector<double> yy(dy), zz(dz);
    for (const auto& [k, col] : y_cols) yy[k - 1] = value(col);
    for (const auto& [k, col] : z_cols) zz[k - 1] = value(col);
    y[g].push_back(std::move(yy));
    z[g].push_back(std::move(zz));
    if (weight_col) {
      const double wt = value(*weight_col);
      if (wt < 0.0) throw SchemaError("column weight must be nonnegative", line_no);
      weights[g].push_back(wt);
    }
  }

  auto to_matrix = [](const std::vector<std::vector<double>>& rows, std::size_t d) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
    return m;
  };
  ObservationTable table;
  table.data.y0 = to_matrix(y[0], dy);
  table.data.z0 = to_matrix(z[0], dz);
  table.data.y1 = to_matrix(y[1], dy);
  table.data.z1 = to_matrix(z[1], dz);
  if (weight_col) {
    for (int g = 0; g < 2; ++g) {
      Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(weights[g].data(),
                                                            static_cast<Eigen::Index>(weights[g].size()));
      if (v.size() > 0) {
        if (!(v.sum() > 0.0)) {
          throw SchemaError("group " + std::to_string(g) + " has zero total weight");
        }
        v /= v.sum();
      }
      (g == 0 ? table.weights0 : table.weights1) = std::move(v);
    }
  }
  return table;
}

ObservationTable read_observations_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  return read_observations(in);
}

void write_observations(std::ostream& out, const ObservedData& data) {
  const Eigen::Index dy = data.y0.rows() > 0 ? data.y0.cols() : data.y1.cols();
  const Eigen::Index dz = data.z0.rows() > 0 ? data.z0.cols() : data.z1.cols();
  out << "w";
  for (Eigen::Index j = 0; j < dy; ++j) out << ",y_" << j + 1;
  for (Eigen::Index j = 0; j < dz; ++j) out << ",z_" << j + 1;
  out << '\n';
  auto emit = [&](int g, const Eigen::MatrixXd& y, const Eigen::MatrixXd& z) {
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      out << g;
      for (Eigen::Index j = 0; j < dy; ++j) out << ',' << format_double(y(i, j));
      for (Eigen::Index j = 0; j < dz; ++j) out << ',' << format_double(z(i, j));
      out << '\n';
    }
  };
  emit(0, data.y0, data.z0);
  emit(1, data.y1, data.z1);
}

PreparedSamples prepare_table(const ObservationTable& table) {
  if (table.data.y0.rows() == 0) throw InputError("no control (w=0) rows");
  if (table.data.y1.rows() == 0) throw InputError("no treated (w=1) rows");
  PreparedSamples prepared =
      prepare_samples(table.data.z0, table.data.y0, table.data.z1, table.data.y1);
  if (table.weights0) prepared.sample0.weights = *table.weights0;
  if (table.weights1) prepared.sample1.weights = *table.weights1;
  return prepared;
}

void write_results(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultHeader << '\n';
  for (const auto& row : rows) {
    out << row.model << ',' << row.design << ',' << row.n0 << ',' << row.n1 << ',' << row.total
        << ',' << format_double(row.c) << ',' << format_double(row.r) << ','
        << format_double(row.eta) << ',' << row.repetition << ',' << format_optional(row.lower)
        << ',' << format_optional(row.upper) << ',' << format_optional(row.oracle) << ','
        << format_optional(row.relative_error) << ',' << format_optional(row.absolute_error)
        << ',' << format_double(row.wall_ms) << ',' << row.seed << '\n';
  }
}

std::vector<ResultRow> read_results(std::istream& in) {
  std::string line;
  long line_no = 0;
  if (!std::getline(in, line)) throw SchemaError("missing header row");
  ++line_no;
  if (trim(line) != kResultHeader) throw SchemaError("unexpected result header", line_no);
  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 16) throw SchemaError("expected 16 fields", line_no);
    auto number = [&](const std::string& s) {
      const auto v = to_double(s);
      if (!v) throw SchemaError("bad number '" + s + "'", line_no);
      return *v;
    };
    auto count = [&](const std::string& s) {
      const auto v = to_unsigned(s);
      if (!v) throw SchemaError("bad integer '" + s + "'", line_no);
      return *v;
    };
    auto optional = [&](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return number(s);
    };
    ResultRow row;
    row.model = f[0];
    row.design = f[1];
    row.n0 = count(f[2]);
    row.n1 = count(f[3]);
    row.total = count(f[4]);
    row.c = number(f[5]);
    row.r = number(f[6]);
    row.eta = number(f[7]);
    row.repetition = count(f[8]);
    row.lower = optional(f[9]);
    row.upper = optional(f[10]);
    row.oracle = optional(f[11]);
    row.relative_error = optional(f[12]);
    row.absolute_error = optional(f[13]);
    row.wall_ms = number(f[14]);
    row.seed = count(f[15]);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

template <class T, class Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split(value, ',')) {
    const auto v = parse(item);
    if (!v) throw ConfigError("bad value '" + item + "' for " + key);
    out.push_back(static_cast<T>(*v));
  }
  if (out.empty()) throw ConfigError(key + " needs at least one value");
  return out;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  auto real = [&] {
    const auto v = to_double(value);
    if (!v) throw ConfigError("bad value '" + value + "' for " + key);
    return *v;
  };
  auto count = [&] {
    const auto v = to_unsigned(value);
    if (!v) throw ConfigError("bad value '" + value + "' for " + key);
    return *v;
  };
  if (key == "model") {
    model = model_id(parse_model(value));
  } else if (key == "design") {
    if (value != "bernoulli" && value != "covariate_dependent" && value != "shift") {
      throw ConfigError("unknown design '" + value + "' (bernoulli, covariate_dependent, shift)");
    }
    design = value;
  } else if (key == "sizes" || key == "N") {
    sizes = parse_list<std::size_t>(key, value, to_unsigned);
  } else if (key == "n0") {
    n0 = count();
  } else if (key == "n1") {
    n1 = count();
  } else if (key == "c") {
    c_values = parse_list<double>(key, value, to_double);
  } else if (key == "r") {
    r = real();
  } else if (key == "eta") {
    etas = parse_list<double>(key, value, to_double);
  } else if (key == "cost") {
    CostSpec::parse(value);
    cost = value;
  } else if (key == "bound") {
    bound = parse_bound(value);
  } else if (key == "propensity") {
    if (value != "known" && value != "fit") throw ConfigError("propensity must be known or fit");
    propensity = value;
  } else if (key == "slope") {
    slope = real();
  } else if (key == "clip_eta") {
    clip_eta = real();
  } else if (key == "reps") {
    reps = count();
  } else if (key == "jobs") {
    jobs = count();
  } else if (key == "seed") {
    seed = count();
  } else if (key == "candidates") {
    candidates = parse_list<double>(key, value, to_double);
  } else if (key == "bootstrap") {
    bootstrap = count();
  } else if (key == "preset") {
    if (value == "desk") {
      reps = 50;
    } else if (value == "full") {
      reps = 500;
    } else {
      throw ConfigError("unknown preset '" + value + "' (desk or full)");
    }
  } else {
    throw ConfigError("unknown setting '" + key + "'");
  }
}

void RunConfig::apply(const std::map<std::string, std::string>& settings) {
  // Presets first so explicit settings override them.
  if (auto it = settings.find("preset"); it != settings.end()) set(it->first, it->second);
  for (const auto& [key, value] : settings) {
    if (key != "preset") set(key, value);
  }
}

void RunConfig::validate() const {
  if (reps == 0) throw ConfigError("reps must be at least 1");
  if (jobs == 0) throw ConfigError("jobs must be at least 1");
  if ((n0 == 0) != (n1 == 0)) throw ConfigError("set both n0 and n1, or neither");
  if (n0 == 0) {
    for (auto n : sizes) {
      if (n < 2) throw ConfigError("sample sizes must be at least 2");
    }
  }
  for (double c : c_values) {
    if (!(c > 0.0)) throw ConfigError("cell constants must be positive");
  }
  for (double e : etas) {
    if (!(e >= 0.0)) throw ConfigError("eta must be nonnegative");
  }
  if (r && !(*r > 0.0 && *r < 1.0)) throw ConfigError("r must lie in (0, 1)");
  if (!(clip_eta > 0.0 && clip_eta < 0.5)) throw ConfigError("clip_eta must lie in (0, 0.5)");
}

std::map<std::string, std::string> parse_config_text(std::istream& in) {
  std::map<std::string, std::string> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    out[trim(std::string_view(line).substr(0, eq))] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config_text(in);
}

std::map<std::string, std::string> environment_overrides(const std::vector<std::string>& keys) {
  std::map<std::string, std::string> out;
  for (const auto& key : keys) {
    std::string name = "COTPI_" + key;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::toupper(ch)); });
    if (const char* v = std::getenv(name.c_str()); v && *v) out[key] = v;
  }
  return out;
}

std::pair<double, std::optional<double>> mean_and_sem(const std::vector<double>& values) {
  if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::nullopt};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, std::nullopt};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(values.size()))};
}

namespace {

std::pair<std::size_t, std::size_t> group_sizes(const RunConfig& config, std::size_t total) {
  if (config.n0 > 0) return {config.n0, config.n1};
  return {total / 2, total - total / 2};
}

}  // namespace

SyntheticDraw draw_setting(const RunConfig& config, std::size_t total, double eta,
                           std::size_t repetition) {
  const auto [n0, n1] = group_sizes(config, total);
  // The draw depends on the sample size and repetition only, so settings
  // that differ in c (or eta) see common random numbers.
  const std::uint64_t seed = derive_seed(config.seed, n0 * 1'000'003ULL + n1, repetition);
  SyntheticDesign design;
  design.model = synthetic_model(parse_model(config.model));
  design.seed = seed;
  design.n0 = n0;
  design.n1 = n1;
  design.total = n0 + n1;
  if (config.design == "covariate_dependent") {
    design.assignment = Assignment::logistic(config.slope);
    return {sample_covariate_dependent(design), seed};
  }
  if (config.design == "shift") {
    design.shift_eta = eta;
    return {sample_with_covariate_shift(design), seed};
  }
  return {sample_bernoulli_design(design), seed};
}

EstimatorConfig estimator_config_for(const RunConfig& config, double c,
                                     const NormalizationRecord& record, std::uint64_t seed) {
  EstimatorConfig est;
  est.c = c;
  est.r = config.r;
  est.bound = config.bound;
  est.clip_eta = config.clip_eta;
  est.seed = seed;
  if (config.design == "covariate_dependent") {
    est.design = Design::covariate_dependent;
    if (config.propensity == "known") {
      const Assignment assignment = Assignment::logistic(config.slope);
      est.propensity = PropensityModel(
          [record, assignment](const Eigen::VectorXd& unit) {
            return assignment.probability(record.to_raw(unit));
          },
          config.clip_eta, "known");
    }
  }
  return est;
}

BenchmarkResult run_benchmark(const RunConfig& config) {
  config.validate();
  const CostSpec cost = CostSpec::parse(config.cost);
  const SyntheticModel model = parse_model(config.model);
  const bool has_oracle = cost.kind == CostKind::squared_difference && config.bound != Bound::upper;

  struct Setting {
    std::size_t total;
    double c;
    double eta;
  };
  std::vector<Setting> settings;
  const std::vector<std::size_t> totals =
      config.n0 > 0 ? std::vector<std::size_t>{config.n0 + config.n1} : config.sizes;
  const std::vector<double> etas =
      config.design == "shift" ? config.etas : std::vector<double>{0.0};
  for (auto total : totals) {
    for (double c : config.c_values) {
      for (double eta : etas) settings.push_back({total, c, eta});
    }
  }

  BenchmarkResult result;
  if (!has_oracle) {
    result.notices.push_back("no oracle for cost '" + config.cost + "' and bound '" +
                             to_string(config.bound) + "'; error columns omitted");
  }
  const std::optional<double> oracle =
      has_oracle ? std::optional<double>(synthetic_model_oracle(model)) : std::nullopt;

  const std::size_t tasks = settings.size() * config.reps;
  result.rows.resize(tasks);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= tasks) return;
      const Setting& s = settings[task / config.reps];
      const std::size_t rep = task % config.reps;
      try {
        const auto start = std::chrono::steady_clock::now();
        const SyntheticDraw draw = draw_setting(config, s.total, s.eta, rep);
        const PreparedSamples prepared =
            prepare_samples(draw.data.z0, draw.data.y0, draw.data.z1, draw.data.y1);
        const EstimatorConfig est = estimator_config_for(config, s.c, prepared.record,
                                                         derive_seed(draw.seed, 7));
        const PiInterval interval = estimate(prepared.sample0, prepared.sample1, cost, est);
        const auto stop = std::chrono::steady_clock::now();

        ResultRow row;
        row.model = config.model;
        row.design = config.design;
        row.n0 = prepared.sample0.size();
        row.n1 = prepared.sample1.size();
        row.total = row.n0 + row.n1;
        row.c = s.c;
        row.r = est.rate(prepared.sample0.covariate_dim(), prepared.sample0.outcome_dim());
        row.eta = s.eta;
        row.repetition = rep;
        row.lower = interval.lower;
        row.upper = interval.upper;
        row.oracle = oracle;
        if (oracle) {
          const double err = std::abs(interval.primary() - *oracle);
          row.absolute_error = err;
          row.relative_error = err / std::abs(*oracle);
        }
        row.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        row.seed = draw.seed;
        result.rows[task] = std::move(row);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(tasks);
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, std::max<std::size_t>(tasks, 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  for (std::size_t k = 0; k < settings.size(); ++k) {
    const auto first = result.rows.begin() + static_cast<std::ptrdiff_t>(k * config.reps);
    const auto last = first + static_cast<std::ptrdiff_t>(config.reps);
    std::vector<double> lowers, rel, abs;
    for (auto it = first; it != last; ++it) {
      lowers.push_back(it->lower.value_or(it->upper.value_or(0.0)));
      if (it->relative_error) rel.push_back(*it->relative_error);
      if (it->absolute_error) abs.push_back(*it->absolute_error);
    }
    SummaryRow summary;
    summary.model = config.model;
    summary.design = config.design;
    summary.n0 = first->n0;
    summary.n1 = first->n1;
    summary.total = settings[k].total;
    summary.c = settings[k].c;
    summary.eta = settings[k].eta;
    summary.reps = config.reps;
    summary.mean_lower = mean_and_sem(lowers).first;
    summary.oracle = oracle;
    if (!rel.empty()) {
      std::tie(summary.mean_relative_error, summary.sem_relative_error) = mean_and_sem(rel);
      std::tie(summary.mean_absolute_error, summary.sem_absolute_error) = mean_and_sem(abs);
    }
    result.summary.push_back(summary);
  }
  return result;
}

void write_summary(std::ostream& out, const BenchmarkResult& result) {
  for (const auto& notice : result.notices) out << "note: " << notice << '\n';
  auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("-");
    std::ostringstream s;
    s << std::setprecision(4) << *v;
    return s.str();
  };
  out << std::left << std::setw(6) << "model" << std::setw(21) << "design" << std::setw(8) << "N"
      << std::setw(7) << "c" << std::setw(7) << "eta" << std::setw(6) << "reps" << std::setw(11)
      << "mean_est" << std::setw(9) << "oracle" << std::setw(11) << "rel_err" << std::setw(11)
      << "rel_sem" << std::setw(11) << "abs_err" << "abs_sem" << '\n';
  for (const auto& s : result.summary) {
    out << std::left << std::setw(6) << s.model << std::setw(21) << s.design << std::setw(8)
        << s.total << std::setw(7) << s.c << std::setw(7) << s.eta << std::setw(6) << s.reps
        << std::setw(11) << cell(s.mean_lower) << std::setw(9) << cell(s.oracle) << std::setw(11)
        << cell(s.mean_relative_error) << std::setw(11) << cell(s.sem_relative_error)
        << std::setw(11) << cell(s.mean_absolute_error) << cell(s.sem_absolute_error) << '\n';
  }
}

}  // namespace cotpi
