#include "cotpi/estimator.hpp"

#include "cotpi/errors.hpp"
#include "cotpi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace cotpi {

CostSpec CostSpec::absolute() {
  CostSpec spec;
  spec.kind = CostKind::absolute_difference;
  spec.lipschitz_hint = 1.0;
  return spec;
}

CostSpec CostSpec::squared() {
  CostSpec spec;
  spec.kind = CostKind::squared_difference;
  return spec;
}

CostSpec CostSpec::negative_squared_sum() {
  CostSpec spec;
  spec.kind = CostKind::negative_squared_sum;
  spec.convex_1d = false;
  return spec;
}

CostSpec CostSpec::from_function(PointCost h, std::optional<double> lipschitz) {
  if (!h) throw ConfigError("custom cost needs a function");
  CostSpec spec;
  spec.kind = CostKind::custom;
  spec.convex_1d = false;
  spec.custom = std::move(h);
  spec.lipschitz_hint = lipschitz;
  return spec;
}

CostSpec CostSpec::parse(std::string_view name) {
  if (name == "absolute" || name == "absolute_difference") return absolute();
  if (name == "squared" || name == "squared_difference") return squared();
  if (name == "negative_squared_sum") return negative_squared_sum();
  throw ConfigError("unknown cost '" + std::string(name) +
                    "' (expected absolute, squared or negative_squared_sum)");
}

double CostSpec::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& y0,
                            const Eigen::Ref<const Eigen::RowVectorXd>& y1) const {
  switch (kind) {
    case CostKind::absolute_difference:
      return (y0 - y1).norm();
    case CostKind::squared_difference:
      return (y0 - y1).squaredNorm();
    case CostKind::negative_squared_sum:
      return -(y0 + y1).squaredNorm();
    case CostKind::custom:
      return custom(y0, y1);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

std::string CostSpec::name() const {
  switch (kind) {
    case CostKind::absolute_difference: return "absolute";
    case CostKind::squared_difference: return "squared";
    case CostKind::negative_squared_sum: return "negative_squared_sum";
    case CostKind::custom: return "custom";
  }
  return "unknown";
}

std::optional<QuantileCost> CostSpec::quantile_tag() const {
  if (!convex_1d) return std::nullopt;
  if (kind == CostKind::absolute_difference) return QuantileCost::absolute;
  if (kind == CostKind::squared_difference) return QuantileCost::squared;
  return std::nullopt;
}

Bound parse_bound(std::string_view name) {
  if (name == "lower") return Bound::lower;
  if (name == "upper") return Bound::upper;
  if (name == "both") return Bound::both;
  throw ConfigError("unknown bound '" + std::string(name) + "' (expected lower, upper or both)");
}

Design parse_design(std::string_view name) {
  if (name == "bernoulli") return Design::bernoulli;
  if (name == "covariate_dependent" || name == "covariate-dependent") {
    return Design::covariate_dependent;
  }
  throw ConfigError("unknown design '" + std::string(name) + "'");
}

std::string to_string(Bound b) {
  return b == Bound::lower ? "lower" : b == Bound::upper ? "upper" : "both";
}

std::string to_string(Design d) {
  return d == Design::bernoulli ? "bernoulli" : "covariate_dependent";
}

double EstimatorConfig::default_rate(std::size_t covariate_dim, std::size_t outcome_dim) {
  return 1.0 / static_cast<double>(covariate_dim + std::max<std::size_t>(2, outcome_dim));
}

double EstimatorConfig::rate(std::size_t covariate_dim, std::size_t outcome_dim) const {
  return r.value_or(default_rate(covariate_dim, outcome_dim));
}

void EstimatorConfig::validate() const {
  if (r && !(*r > 0.0 && *r < 1.0)) throw ConfigError("rate exponent r must lie in (0, 1)");
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("cell constant c must be positive");
  if (!(clip_eta > 0.0 && clip_eta < 0.5)) throw ConfigError("clip_eta must lie in (0, 0.5)");
  if (design == Design::covariate_dependent && folds != 2) {
    throw ConfigError("cross-fitting supports exactly two folds");
  }
}

double PiInterval::primary() const {
  if (lower) return *lower;
  if (upper) return *upper;
  throw InputError("interval has no computed bound");
}

PreparedSamples prepare_samples(const Eigen::MatrixXd& covariates0,
                                const Eigen::MatrixXd& outcomes0,
                                const Eigen::MatrixXd& covariates1,
                                const Eigen::MatrixXd& outcomes1) {
  auto normalized = normalize_covariates(covariates0, covariates1);
  return {WeightedSample::uniform(std::move(normalized.group0), outcomes0, 0),
          WeightedSample::uniform(std::move(normalized.group1), outcomes1, 1),
          std::move(normalized.record)};
}

Coupling covariate_coupling(const DiscreteDistribution& cells0,
                            const DiscreteDistribution& cells1) {
  if (cells0.dim() == 1 && cells1.dim() == 1) {
    return solve_1d_quantile_ot(cells0, cells1, QuantileCost::absolute).coupling;
  }
  return wasserstein1(cells0, cells1).coupling;
}

double outcome_ot_value(const DiscreteDistribution& y0, const DiscreteDistribution& y1,
                        const CostSpec& cost, Bound direction) {
  if (direction == Bound::both) throw ConfigError("outcome OT needs a single direction");
  if (y0.dim() != y1.dim()) throw InputError("outcome dimensions differ between groups");
  const auto tag = cost.quantile_tag();
  if (tag && y0.dim() == 1) {
    return direction == Bound::lower ? solve_1d_quantile_ot(y0, y1, *tag).value
                                     : solve_1d_quantile_ot_max(y0, y1, *tag).value;
  }
  const CostMatrix matrix = make_cost_matrix(y0, y1, [&cost](const auto& a, const auto& b) {
    return cost(a, b);
  });
  return direction == Bound::lower ? solve_exact_ot(y0, y1, matrix).value
                                   : solve_exact_ot_max(y0, y1, matrix).value;
}

double adapted_cot_value(const AdaptedEmpirical& group0, const AdaptedEmpirical& group1,
                         const CostSpec& cost, Bound direction, Diagnostics* diagnostics) {
  const Coupling coupling = covariate_coupling(group0.cell_marginal, group1.cell_marginal);
  double value = 0.0;
  for (const auto& entry : coupling.entries) {
    value += entry.mass * outcome_ot_value(group0.conditionals[entry.source],
                                           group1.conditionals[entry.target], cost, direction);
  }
  if (diagnostics) {
    diagnostics->occupied0 = group0.occupied();
    diagnostics->occupied1 = group1.occupied();
    diagnostics->coupling_support = coupling.entries.size();
    diagnostics->coupling_marginal_error =
        coupling.marginal_error(group0.cell_marginal, group1.cell_marginal);
  }
  return value;
}

namespace {

void check_pair(const WeightedSample& sample0, const WeightedSample& sample1) {
  sample0.validate();
  sample1.validate();
  if (sample0.covariate_dim() != sample1.covariate_dim()) {
    throw InputError("covariate dimensions differ between groups");
  }
  if (sample0.outcome_dim() != sample1.outcome_dim()) {
    throw InputError("outcome dimensions differ between groups");
  }
}

struct BoundValues {
  std::optional<double> lower;
  std::optional<double> upper;
};

BoundValues evaluate_bounds(const AdaptedEmpirical& a0, const AdaptedEmpirical& a1,
                            const CostSpec& cost, Bound bound, Diagnostics& diagnostics) {
  BoundValues out;
  if (bound != Bound::upper) out.lower = adapted_cot_value(a0, a1, cost, Bound::lower, &diagnostics);
  if (bound != Bound::lower) out.upper = adapted_cot_value(a0, a1, cost, Bound::upper, &diagnostics);
  if (out.lower && out.upper && *out.lower > *out.upper + kMarginalTolerance) {
    throw NumericalError("lower bound exceeds upper bound");
  }
  return out;
}

}  // namespace

PiInterval estimate_bernoulli(const WeightedSample& sample0, const WeightedSample& sample1,
                              const CostSpec& cost, const EstimatorConfig& config) {
  config.validate();
  check_pair(sample0, sample1);
  const double r = config.rate(sample0.covariate_dim(), sample0.outcome_dim());
  const CellGrid grid0 = build_grid(sample0.size(), sample0.covariate_dim(), r, config.c);
  const CellGrid grid1 = build_grid(sample1.size(), sample1.covariate_dim(), r, config.c);
  const AdaptedEmpirical a0 = build_adapted_empirical(sample0, grid0);
  const AdaptedEmpirical a1 = build_adapted_empirical(sample1, grid1);

  PiInterval interval;
  interval.diagnostics.cells_per_axis0 = grid0.cells_per_axis();
  interval.diagnostics.cells_per_axis1 = grid1.cells_per_axis();
  const auto values = evaluate_bounds(a0, a1, cost, config.bound, interval.diagnostics);
  interval.lower = values.lower;
  interval.upper = values.upper;
  return interval;
}

PiInterval estimate_covariate_dependent(const WeightedSample& sample0,
                                        const WeightedSample& sample1, const CostSpec& cost,
                                        const EstimatorConfig& config) {
  config.validate();
  check_pair(sample0, sample1);
  const std::size_t n0 = sample0.size();
  const std::size_t n1 = sample1.size();
  const double r = config.rate(sample0.covariate_dim(), sample0.outcome_dim());

  // Pooled unit index: group 0 rows first, then group 1 rows.
  const FoldAssignment folds = split_folds(n0 + n1, derive_seed(config.seed, 0xf01d));
  std::vector<std::size_t> rows0[2], rows1[2];
  for (std::size_t u = 0; u < n0 + n1; ++u) {
    const int f = folds.fold_of[u];
    if (u < n0) {
      rows0[f].push_back(u);
    } else {
      rows1[f].push_back(u - n0);
    }
  }

  PiInterval interval;
  double lower_sum = 0.0;
  double upper_sum = 0.0;
  for (int fold = 0; fold < 2; ++fold) {
    if (rows0[fold].empty() || rows1[fold].empty()) {
      throw InputError("cross-fitting fold " + std::to_string(fold) +
                       " has no units from one of the groups");
    }
    const int other = 1 - fold;
    PropensityModel model = [&] {
      if (config.propensity) return *config.propensity;
      Eigen::MatrixXd z(static_cast<Eigen::Index>(rows0[other].size() + rows1[other].size()),
                        sample0.covariates.cols());
      std::vector<int> w;
      Eigen::Index k = 0;
      for (std::size_t i : rows0[other]) {
        z.row(k++) = sample0.covariates.row(static_cast<Eigen::Index>(i));
        w.push_back(0);
      }
      for (std::size_t i : rows1[other]) {
        z.row(k++) = sample1.covariates.row(static_cast<Eigen::Index>(i));
        w.push_back(1);
      }
      PropensityModel fitted = fit_propensity(z, w, config.clip_eta);
      fitted.trained_on_fold = other;
      return fitted;
    }();
    if (model.trained_on_fold == fold) {
      throw InputError("propensity model was trained on the fold it weights");
    }
    if (model.degenerate) ++interval.diagnostics.degenerate_propensity_fits;
    interval.diagnostics.propensity_training_folds.push_back(model.trained_on_fold.value_or(-1));

    WeightedSample sub0 = sample0.subset(rows0[fold]);
    WeightedSample sub1 = sample1.subset(rows1[fold]);
    const CellGrid grid0 = build_grid(sub0.size(), sub0.covariate_dim(), r, config.c);
    const CellGrid grid1 = build_grid(sub1.size(), sub1.covariate_dim(), r, config.c);
    const CellWeights w0 = cell_weights(sub0, grid0, model, 0);
    const CellWeights w1 = cell_weights(sub1, grid1, model, 1);
    sub0.weights = w0.weights;
    sub1.weights = w1.weights;
    interval.diagnostics.clipped_cells += w0.clipped_cells + w1.clipped_cells;
    interval.diagnostics.cells_per_axis0 = grid0.cells_per_axis();
    interval.diagnostics.cells_per_axis1 = grid1.cells_per_axis();

    const auto values = evaluate_bounds(build_adapted_empirical(sub0, grid0),
                                        build_adapted_empirical(sub1, grid1), cost, config.bound,
                                        interval.diagnostics);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    interval.diagnostics.fold_estimates.emplace_back(values.lower.value_or(nan),
                                                     values.upper.value_or(nan));
    lower_sum += values.lower.value_or(0.0);
    upper_sum += values.upper.value_or(0.0);
  }
  if (config.bound != Bound::upper) interval.lower = lower_sum / 2.0;
  if (config.bound != Bound::lower) interval.upper = upper_sum / 2.0;
  return interval;
}

PiInterval estimate(const WeightedSample& sample0, const WeightedSample& sample1,
                    const CostSpec& cost, const EstimatorConfig& config) {
  return config.design == Design::bernoulli
             ? estimate_bernoulli(sample0, sample1, cost, config)
             : estimate_covariate_dependent(sample0, sample1, cost, config);
}

std::size_t elbow_index(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.empty()) throw ConfigError("elbow needs matching non-empty x, y");
  const std::size_t last = x.size() - 1;
  const double dx = x[last] - x[0];
  const double dy = y[last] - y[0];
  const double chord = std::hypot(dx, dy);
  const double slack = 1e-12 * std::max(1.0, chord);
  std::size_t best = 0;
  double best_distance = -1.0;
  for (std::size_t k = 0; k <= last; ++k) {
    const double distance =
        chord > 0.0 ? std::abs(dx * (y[0] - y[k]) - (x[0] - x[k]) * dy) / chord
                    : std::hypot(x[k] - x[0], y[k] - y[0]);
    if (distance > best_distance + slack) {
      best_distance = distance;
      best = k;
    }
  }
  return best;
}

namespace {

WeightedSample resample(const WeightedSample& sample, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, sample.size() - 1);
  std::vector<std::size_t> rows(sample.size());
  for (auto& row : rows) row = pick(rng);
  return sample.subset(rows);
}

}  // namespace

CellConstantSelection select_cell_constant(const WeightedSample& sample0,
                                           const WeightedSample& sample1, const CostSpec& cost,
                                           const EstimatorConfig& config,
                                           const std::vector<double>& candidates,
                                           std::size_t bootstrap, std::uint64_t seed) {
  if (candidates.size() < 3) throw ConfigError("elbow selection needs at least 3 candidates");
  if (!std::is_sorted(candidates.begin(), candidates.end())) {
    throw ConfigError("candidate cell constants must be sorted ascending");
  }
  if (bootstrap == 0) throw ConfigError("bootstrap count must be positive");
  check_pair(sample0, sample1);

  std::vector<std::vector<double>> values(candidates.size());
  for (std::size_t b = 0; b < bootstrap; ++b) {
    auto rng = make_rng(derive_seed(seed, 0xb0075, b));
    const WeightedSample boot0 = resample(sample0, rng);
    const WeightedSample boot1 = resample(sample1, rng);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      EstimatorConfig cfg = config;
      cfg.c = candidates[k];
      cfg.seed = derive_seed(seed, 0xf01d, b);
      values[k].push_back(estimate(boot0, boot1, cost, cfg).primary());
    }
  }

  CellConstantSelection selection;
  std::vector<double> x, y;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const auto& v = values[k];
    double mean = 0.0;
    for (double e : v) mean += e;
    mean /= static_cast<double>(v.size());
    double se = std::numeric_limits<double>::quiet_NaN();
    if (v.size() > 1) {
      double ss = 0.0;
      for (double e : v) ss += (e - mean) * (e - mean);
      se = std::sqrt(ss / static_cast<double>(v.size() - 1)) /
           std::sqrt(static_cast<double>(v.size()));
    }
    selection.curve.push_back({candidates[k], mean, se});
    x.push_back(candidates[k]);
    y.push_back(mean);
  }
  selection.chosen_c = candidates[elbow_index(x, y)];
  return selection;
}

double plugin_exact_match_estimate(const Eigen::MatrixXd& covariates0,
                                   const Eigen::MatrixXd& outcomes0,
                                   const Eigen::MatrixXd& covariates1,
                                   const Eigen::MatrixXd& outcomes1, const CostSpec& cost) {
  const auto n = outcomes0.rows();
  if (n == 0 || outcomes1.rows() != n || covariates0.rows() != n || covariates1.rows() != n) {
    throw InputError("exact matching needs equally sized, non-empty paired groups");
  }
  if (covariates0.cols() != covariates1.cols() || covariates0 != covariates1) {
    throw InputError("exact matching needs pairwise identical covariates");
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) total += cost(outcomes0.row(i), outcomes1.row(i));
  return total / static_cast<double>(n);
}

}  // namespace cotpi
