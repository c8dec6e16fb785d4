#pragma once

// Propensity models, group-wise self-normalized cell weights, and the
// two-fold split used for cross-fitting.

#include "cotpi/discretize.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace cotpi {

inline constexpr double kDefaultClipEta = 0.05;

/// z -> e(z), the probability of treatment at covariate z (unit-cube
/// coordinates). Evaluations are clipped to [clip_eta, 1 - clip_eta].
class PropensityModel {
 public:
  using Function = std::function<double(const Eigen::VectorXd&)>;

  PropensityModel(Function fn, double clip_eta = kDefaultClipEta, std::string origin = "known");

  static PropensityModel constant(double value, double clip_eta = kDefaultClipEta);

  struct Evaluation {
    double value;
    bool clipped;
  };
  Evaluation evaluate(const Eigen::VectorXd& z) const;
  double operator()(const Eigen::VectorXd& z) const { return evaluate(z).value; }

  double clip_eta() const noexcept { return clip_eta_; }
  /// "known" for user-supplied functions, "logistic" for fitted models.
  const std::string& origin() const noexcept { return origin_; }

  /// Cross-fitting provenance: the fold whose data trained the model, if any.
  std::optional<int> trained_on_fold;
  /// Set when the training data held a single class and the model fell back
  /// to a constant.
  bool degenerate = false;
  /// Fitted logistic coefficients (intercept first); empty for known models.
  Eigen::VectorXd coefficients;

 private:
  Function fn_;
  double clip_eta_;
  std::string origin_;
};

struct CellWeights {
  Eigen::VectorXd weights;     ///< per observation, sums to 1
  std::size_t clipped_cells = 0;  ///< cells whose propensity hit the clip bounds
};

/// Group-wise self-normalized inverse-propensity weights. The propensity is
/// evaluated at each occupied cell's center g; raw weight 1/(1 - e(g)) for
/// the control group and 1/e(g) for the treated group, normalized so that the
/// per-observation weights sum to one.
CellWeights cell_weights(const WeightedSample& sample, const CellGrid& grid,
                         const PropensityModel& model, int group);

struct FoldAssignment {
  std::vector<std::uint8_t> fold_of;

  std::size_t size(int fold) const;
  std::vector<std::size_t> members(int fold) const;
};

/// Uniformly random split of n units into two folds whose sizes differ by at
/// most one. Deterministic in `seed`.
FoldAssignment split_folds(std::size_t n, std::uint64_t seed);

struct LogisticFitOptions {
  double gradient_tolerance = 1e-8;
  int max_iterations = 200;
};

/// Logistic regression of treatment on covariates (with intercept) fitted by
/// iteratively reweighted least squares. Single-class data yields a constant
/// model at the clipped empirical treatment rate with `degenerate` set.
PropensityModel fit_propensity(const Eigen::MatrixXd& covariates,
                               const std::vector<int>& treatments,
                               double clip_eta = kDefaultClipEta,
                               const LogisticFitOptions& options = {});

}  // namespace cotpi
