#pragma once

// Adapted conditional-optimal-transport estimator of the sharp bounds
//     V_c  = inf over covariate-preserving couplings of E h(Y(0), Y(1))
//     V~_c = sup over the same couplings,
// computed from two groups' observed (covariate, outcome) samples.
//
// Each group is discretized on its own grid; the two discretized covariate
// marginals are coupled by an optimal W_1 coupling; every positive-mass pair
// of cells contributes the OT value between the cells' outcome
// distributions, weighted by the pair's mass.

#include "cotpi/discretize.hpp"
#include "cotpi/ot.hpp"
#include "cotpi/reweight.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cotpi {

enum class CostKind { absolute_difference, squared_difference, negative_squared_sum, custom };

/// The objective h(y0, y1).
///   absolute_difference   ||y0 - y1||_2
///   squared_difference    ||y0 - y1||_2^2
///   negative_squared_sum  -||y0 + y1||_2^2
///   custom                user function
struct CostSpec {
  CostKind kind = CostKind::squared_difference;
  std::optional<double> lipschitz_hint;
  /// Enables the monotone quantile fast path for one-dimensional outcomes.
  bool convex_1d = true;
  PointCost custom;

  static CostSpec absolute();
  static CostSpec squared();
  static CostSpec negative_squared_sum();
  static CostSpec from_function(PointCost h, std::optional<double> lipschitz = std::nullopt);
  /// "absolute", "squared" or "negative_squared_sum".
  static CostSpec parse(std::string_view name);

  double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& y0,
                    const Eigen::Ref<const Eigen::RowVectorXd>& y1) const;
  std::string name() const;
  /// The 1-D quantile tag when the fast path applies.
  std::optional<QuantileCost> quantile_tag() const;
};

enum class Bound { lower, upper, both };
enum class Design { bernoulli, covariate_dependent };

Bound parse_bound(std::string_view name);
Design parse_design(std::string_view name);
std::string to_string(Bound b);
std::string to_string(Design d);

struct EstimatorConfig {
  /// Grid rate exponent; defaults to 1 / (d_Z + max(2, d_Y)).
  std::optional<double> r;
  double c = 1.0;
  Bound bound = Bound::both;
  Design design = Design::bernoulli;
  /// Known propensity on unit-cube covariates. When empty under the
  /// covariate-dependent design, a logistic model is fitted per fold.
  std::optional<PropensityModel> propensity;
  double clip_eta = kDefaultClipEta;
  int folds = 2;
  std::uint64_t seed = 0;

  static double default_rate(std::size_t covariate_dim, std::size_t outcome_dim);
  double rate(std::size_t covariate_dim, std::size_t outcome_dim) const;
  void validate() const;
};

struct Diagnostics {
  std::size_t cells_per_axis0 = 0;
  std::size_t cells_per_axis1 = 0;
  std::size_t occupied0 = 0;
  std::size_t occupied1 = 0;
  /// Positive-mass cell pairs of the covariate coupling.
  std::size_t coupling_support = 0;
  std::size_t clipped_cells = 0;
  std::size_t degenerate_propensity_fits = 0;
  /// Propensity models used per fold and their training fold (-1 = known).
  std::vector<int> propensity_training_folds;
  /// Per-fold (lower, upper) under cross-fitting.
  std::vector<std::pair<double, double>> fold_estimates;
  /// Largest marginal violation of the covariate coupling.
  double coupling_marginal_error = 0.0;
};

struct PiInterval {
  std::optional<double> lower;
  std::optional<double> upper;
  Diagnostics diagnostics;

  /// The lower bound when computed, otherwise the upper.
  double primary() const;
};

/// Raw two-group data prepared for estimation: covariates normalized jointly
/// into the unit cube, uniform weights.
struct PreparedSamples {
  WeightedSample sample0;
  WeightedSample sample1;
  NormalizationRecord record;
};

PreparedSamples prepare_samples(const Eigen::MatrixXd& covariates0,
                                const Eigen::MatrixXd& outcomes0,
                                const Eigen::MatrixXd& covariates1,
                                const Eigen::MatrixXd& outcomes1);

/// Estimator value for two adapted empirical distributions: W_1-couple the
/// cell marginals, then integrate the per-cell-pair OT value (minimum for
/// Bound::lower, maximum for Bound::upper).
double adapted_cot_value(const AdaptedEmpirical& group0, const AdaptedEmpirical& group1,
                         const CostSpec& cost, Bound direction, Diagnostics* diagnostics = nullptr);

/// Optimal W_1 coupling between two discretized covariate marginals.
Coupling covariate_coupling(const DiscreteDistribution& cells0, const DiscreteDistribution& cells1);

/// OT value between two outcome distributions, using the quantile fast path
/// when the outcomes are one-dimensional and the cost is convex.
double outcome_ot_value(const DiscreteDistribution& y0, const DiscreteDistribution& y1,
                        const CostSpec& cost, Bound direction);

/// Bernoulli design: uniform weights within each group.
PiInterval estimate_bernoulli(const WeightedSample& sample0, const WeightedSample& sample1,
                              const CostSpec& cost, const EstimatorConfig& config);

/// Covariate-dependent design: two-fold cross-fitting with group-wise
/// self-normalized propensity weights; the final interval averages the folds.
PiInterval estimate_covariate_dependent(const WeightedSample& sample0,
                                        const WeightedSample& sample1, const CostSpec& cost,
                                        const EstimatorConfig& config);

/// Dispatches on `config.design`.
PiInterval estimate(const WeightedSample& sample0, const WeightedSample& sample1,
                    const CostSpec& cost, const EstimatorConfig& config);

struct CurvePoint {
  double c;
  double mean;
  double standard_error;
};

struct CellConstantSelection {
  double chosen_c;
  std::vector<CurvePoint> curve;
};

/// Elbow of a curve: the point farthest (perpendicular distance) from the
/// chord joining the first and last points. Ties go to the earliest point.
std::size_t elbow_index(const std::vector<double>& x, const std::vector<double>& y);

/// Bootstrap selection of the cell constant: for each candidate c, the mean
/// estimate over `bootstrap` resamples (size-preserving, per group), then the
/// elbow of the (c, mean) curve.
CellConstantSelection select_cell_constant(const WeightedSample& sample0,
                                           const WeightedSample& sample1, const CostSpec& cost,
                                           const EstimatorConfig& config,
                                           const std::vector<double>& candidates,
                                           std::size_t bootstrap = 50, std::uint64_t seed = 0);

/// Plug-in value under exact covariate matching of paired data: the only
/// coupling that preserves both empirical (outcome, covariate) laws pairs
/// unit i with unit i, giving (1/n) sum_i h(Y_i(0), Y_i(1)).
double plugin_exact_match_estimate(const Eigen::MatrixXd& covariates0,
                                   const Eigen::MatrixXd& outcomes0,
                                   const Eigen::MatrixXd& covariates1,
                                   const Eigen::MatrixXd& outcomes1, const CostSpec& cost);

}  // namespace cotpi
