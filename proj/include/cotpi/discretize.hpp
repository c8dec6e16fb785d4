#pragma once

// Covariate discretization: regular grids on the unit cube, cell-center
// projection, and adapted empirical distributions (covariates replaced by
// their cell centers, outcomes aggregated per cell).

#include "cotpi/ot.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <vector>

namespace cotpi {

/// Per-axis affine map from raw covariates into [0, 1], fitted on the pooled
/// rows of both groups.
struct NormalizationRecord {
  Eigen::VectorXd min;
  Eigen::VectorXd max;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(min.size()); }
  /// Maps raw rows into the unit cube, clamping anything outside the fitted
  /// range. Constant axes map to 0.5.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
  Eigen::VectorXd apply_point(const Eigen::VectorXd& raw) const;
  /// Inverse map (no clamping). Constant axes map back to their value.
  Eigen::VectorXd to_raw(const Eigen::VectorXd& unit) const;
};

struct NormalizedCovariates {
  Eigen::MatrixXd group0;
  Eigen::MatrixXd group1;
  NormalizationRecord record;
};

NormalizedCovariates normalize_covariates(const Eigen::MatrixXd& raw0, const Eigen::MatrixXd& raw1);

using CellIndex = std::uint64_t;

/// Regular grid of m^d cubes of edge 1/m covering [0, 1]^d. Cells are
/// half-open [(k-1)/m, k/m) per axis, except the last one which is closed
/// at 1, so every point of the cube lies in exactly one cell.
class CellGrid {
 public:
  CellGrid(std::size_t dim, std::size_t cells_per_axis);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t cells_per_axis() const noexcept { return m_; }
  double edge() const noexcept { return 1.0 / static_cast<double>(m_); }
  CellIndex cell_count() const noexcept { return count_; }

  /// Row-major linear index of the per-axis cell coordinates.
  CellIndex locate(const Eigen::Ref<const Eigen::RowVectorXd>& z) const;
  Eigen::VectorXd center(CellIndex cell) const;

 private:
  std::size_t dim_;
  std::size_t m_;
  CellIndex count_;
};

/// Sizes a grid for `n` observations: target cell count
/// K = max(1, round(c * n^(r * d))) and m = max(1, round(K^(1/d))) per axis.
CellGrid build_grid(std::size_t n, std::size_t dim, double r, double c);

struct CellProjection {
  CellIndex cell;
  Eigen::VectorXd center;
};

/// Cell containing `z` and its center. Coordinates must already be in [0, 1].
CellProjection project(const CellGrid& grid, const Eigen::Ref<const Eigen::RowVectorXd>& z);

/// Observed data of one treatment group, covariates in unit-cube coordinates.
struct WeightedSample {
  Eigen::MatrixXd covariates;  ///< n x d_Z
  Eigen::MatrixXd outcomes;    ///< n x d_Y
  Eigen::VectorXd weights;     ///< n, nonnegative, sums to 1
  int group = 0;

  std::size_t size() const noexcept { return static_cast<std::size_t>(outcomes.rows()); }
  std::size_t covariate_dim() const noexcept { return static_cast<std::size_t>(covariates.cols()); }
  std::size_t outcome_dim() const noexcept { return static_cast<std::size_t>(outcomes.cols()); }

  /// Equal weights 1/n.
  static WeightedSample uniform(Eigen::MatrixXd covariates, Eigen::MatrixXd outcomes, int group);
  /// Subsample keeping `rows`, weights reset to uniform.
  WeightedSample subset(const std::vector<std::size_t>& rows) const;
  /// Throws InputError on shape mismatch, empty sample, covariates outside
  /// the unit cube, non-finite values or weights not summing to one.
  void validate() const;
};

/// Discretized covariate marginal over occupied cell centers, with the
/// outcome distribution of each occupied cell. `cells[k]`, the k-th atom of
/// `cell_marginal` and `conditionals[k]` all refer to the same cell.
struct AdaptedEmpirical {
  DiscreteDistribution cell_marginal;
  std::vector<CellIndex> cells;
  std::vector<DiscreteDistribution> conditionals;
  /// Observations per occupied cell (unweighted).
  std::vector<std::size_t> counts;

  std::size_t occupied() const noexcept { return cells.size(); }
};

AdaptedEmpirical build_adapted_empirical(const WeightedSample& sample, const CellGrid& grid);

/// Occupied cells mapped to the rows of `sample` they contain, in row order.
std::map<CellIndex, std::vector<std::size_t>> group_by_cell(const WeightedSample& sample,
                                                            const CellGrid& grid);

}  // namespace cotpi
