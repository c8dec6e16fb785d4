#include "cotpi/discretize.hpp"

#include "cotpi/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace cotpi {

Eigen::MatrixXd NormalizationRecord::apply(const Eigen::MatrixXd& raw) const {
  if (static_cast<std::size_t>(raw.cols()) != dim()) {
    throw InputError("covariate matrix has " + std::to_string(raw.cols()) +
                     " columns, normalization expects " + std::to_string(dim()));
  }
  Eigen::MatrixXd out(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) {
    const double lo = min(j);
    const double range = max(j) - lo;
    for (Eigen::Index i = 0; i < raw.rows(); ++i) {
      out(i, j) = range > 0.0 ? std::clamp((raw(i, j) - lo) / range, 0.0, 1.0) : 0.5;
    }
  }
  return out;
}

Eigen::VectorXd NormalizationRecord::apply_point(const Eigen::VectorXd& raw) const {
  return apply(raw.transpose()).row(0).transpose();
}

Eigen::VectorXd NormalizationRecord::to_raw(const Eigen::VectorXd& unit) const {
  if (static_cast<std::size_t>(unit.size()) != dim()) {
    throw InputError("point dimension does not match normalization record");
  }
  Eigen::VectorXd out(unit.size());
  for (Eigen::Index j = 0; j < unit.size(); ++j) {
    const double range = max(j) - min(j);
    out(j) = range > 0.0 ? min(j) + unit(j) * range : min(j);
  }
  return out;
}

NormalizedCovariates normalize_covariates(const Eigen::MatrixXd& raw0,
                                          const Eigen::MatrixXd& raw1) {
  if (raw0.cols() != raw1.cols()) {
    throw InputError("covariate column counts differ between groups (" +
                     std::to_string(raw0.cols()) + " vs " + std::to_string(raw1.cols()) + ")");
  }
  if (raw0.rows() + raw1.rows() == 0) throw InputError("cannot normalize an empty sample");
  if (!raw0.allFinite() || !raw1.allFinite()) throw InputError("covariates must be finite");

  const Eigen::Index d = raw0.cols();
  NormalizationRecord record{Eigen::VectorXd(d), Eigen::VectorXd(d)};
  for (Eigen::Index j = 0; j < d; ++j) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    if (raw0.rows() > 0) {
      lo = std::min(lo, raw0.col(j).minCoeff());
      hi = std::max(hi, raw0.col(j).maxCoeff());
    }
    if (raw1.rows() > 0) {
      lo = std::min(lo, raw1.col(j).minCoeff());
      hi = std::max(hi, raw1.col(j).maxCoeff());
    }
    record.min(j) = lo;
    record.max(j) = hi;
  }
  return {record.apply(raw0), record.apply(raw1), record};
}

CellGrid::CellGrid(std::size_t dim, std::size_t cells_per_axis) : dim_(dim), m_(cells_per_axis) {
  if (dim_ == 0) throw ConfigError("grid dimension must be positive");
  if (m_ == 0) throw ConfigError("grid needs at least one cell per axis");
  count_ = 1;
  for (std::size_t k = 0; k < dim_; ++k) {
    if (count_ > (CellIndex{1} << 62) / m_) throw ConfigError("grid has too many cells");
    count_ *= m_;
  }
}

CellIndex CellGrid::locate(const Eigen::Ref<const Eigen::RowVectorXd>& z) const {
  if (static_cast<std::size_t>(z.size()) != dim_) {
    throw InputError("point has dimension " + std::to_string(z.size()) + ", grid has " +
                     std::to_string(dim_));
  }
  CellIndex index = 0;
  for (std::size_t j = 0; j < dim_; ++j) {
    const double x = z(static_cast<Eigen::Index>(j));
    if (!(x >= 0.0 && x <= 1.0)) {
      throw InputError("coordinate " + std::to_string(x) + " lies outside [0, 1]");
    }
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(x * static_cast<double>(m_)),
                                         m_ - 1);
    index = index * m_ + k;
  }
  return index;
}

Eigen::VectorXd CellGrid::center(CellIndex cell) const {
  if (cell >= count_) throw InputError("cell index out of range");
  Eigen::VectorXd c(static_cast<Eigen::Index>(dim_));
  for (std::size_t j = dim_; j-- > 0;) {
    c(static_cast<Eigen::Index>(j)) =
        (static_cast<double>(cell % m_) + 0.5) / static_cast<double>(m_);
    cell /= m_;
  }
  return c;
}

CellGrid build_grid(std::size_t n, std::size_t dim, double r, double c) {
  if (!(r > 0.0 && r < 1.0)) throw ConfigError("rate exponent r must lie in (0, 1)");
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("cell constant c must be positive");
  if (n == 0) throw ConfigError("grid needs a positive sample size");
  if (dim == 0) throw ConfigError("grid dimension must be positive");

  const double d = static_cast<double>(dim);
  const double target = c * std::pow(static_cast<double>(n), r * d);
  const double cells = std::max(1.0, std::round(target));
  const double per_axis = std::max(1.0, std::round(std::pow(cells, 1.0 / d)));
  return CellGrid(dim, static_cast<std::size_t>(per_axis));
}

CellProjection project(const CellGrid& grid, const Eigen::Ref<const Eigen::RowVectorXd>& z) {
  const CellIndex cell = grid.locate(z);
  return {cell, grid.center(cell)};
}

WeightedSample WeightedSample::uniform(Eigen::MatrixXd covariates, Eigen::MatrixXd outcomes,
                                       int group) {
  const Eigen::Index n = outcomes.rows();
  WeightedSample s{std::move(covariates), std::move(outcomes),
                   Eigen::VectorXd::Constant(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0),
                   group};
  return s;
}

WeightedSample WeightedSample::subset(const std::vector<std::size_t>& rows) const {
  Eigen::MatrixXd z(static_cast<Eigen::Index>(rows.size()), covariates.cols());
  Eigen::MatrixXd y(static_cast<Eigen::Index>(rows.size()), outcomes.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    z.row(static_cast<Eigen::Index>(k)) = covariates.row(static_cast<Eigen::Index>(rows[k]));
    y.row(static_cast<Eigen::Index>(k)) = outcomes.row(static_cast<Eigen::Index>(rows[k]));
  }
  return uniform(std::move(z), std::move(y), group);
}

void WeightedSample::validate() const {
  const std::string name = "group " + std::to_string(group);
  if (outcomes.rows() == 0) throw InputError(name + " is empty");
  if (covariates.rows() != outcomes.rows() || weights.size() != outcomes.rows()) {
    throw InputError(name + ": covariate, outcome and weight row counts differ");
  }
  if (covariates.cols() == 0 || outcomes.cols() == 0) {
    throw InputError(name + ": covariates and outcomes need at least one column");
  }
  if (!outcomes.allFinite()) throw InputError(name + ": outcomes must be finite");
  if (!covariates.allFinite() || (covariates.array() < 0.0).any() ||
      (covariates.array() > 1.0).any()) {
    throw InputError(name + ": covariates must be normalized into [0, 1]");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw InputError(name + ": weights must be finite and nonnegative");
  }
  if (std::abs(weights.sum() - 1.0) > kWeightSumTolerance) {
    throw InputError(name + ": weights sum to " + std::to_string(weights.sum()));
  }
}

std::map<CellIndex, std::vector<std::size_t>> group_by_cell(const WeightedSample& sample,
                                                            const CellGrid& grid) {
  std::map<CellIndex, std::vector<std::size_t>> cells;
  for (Eigen::Index i = 0; i < sample.covariates.rows(); ++i) {
    cells[grid.locate(sample.covariates.row(i))].push_back(static_cast<std::size_t>(i));
  }
  return cells;
}

AdaptedEmpirical build_adapted_empirical(const WeightedSample& sample, const CellGrid& grid) {
  sample.validate();
  if (sample.covariate_dim() != grid.dim()) {
    throw InputError("sample covariate dimension does not match the grid");
  }
  const auto by_cell = group_by_cell(sample, grid);

  std::vector<CellIndex> cells;
  std::vector<DiscreteDistribution> conditionals;
  std::vector<std::size_t> counts;
  std::vector<double> masses;
  for (const auto& [cell, rows] : by_cell) {
    double mass = 0.0;
    for (std::size_t i : rows) mass += sample.weights(static_cast<Eigen::Index>(i));
    if (!(mass > 0.0)) continue;

    Eigen::MatrixXd y(static_cast<Eigen::Index>(rows.size()), sample.outcomes.cols());
    Eigen::VectorXd w(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      y.row(static_cast<Eigen::Index>(k)) = sample.outcomes.row(static_cast<Eigen::Index>(rows[k]));
      w(static_cast<Eigen::Index>(k)) = sample.weights(static_cast<Eigen::Index>(rows[k]));
    }
    cells.push_back(cell);
    if (rows.size() == sample.size()) {
      // One occupied cell: hand the sample through unchanged.
      conditionals.emplace_back(sample.outcomes, sample.weights);
    } else {
      conditionals.push_back(DiscreteDistribution::normalized(std::move(y), std::move(w)));
    }
    counts.push_back(rows.size());
    masses.push_back(mass);
  }

  Eigen::MatrixXd centers(static_cast<Eigen::Index>(cells.size()),
                          static_cast<Eigen::Index>(grid.dim()));
  Eigen::VectorXd marginal(static_cast<Eigen::Index>(cells.size()));
  for (std::size_t k = 0; k < cells.size(); ++k) {
    centers.row(static_cast<Eigen::Index>(k)) = grid.center(cells[k]).transpose();
    marginal(static_cast<Eigen::Index>(k)) = masses[k];
  }
  return {DiscreteDistribution::normalized(std::move(centers), std::move(marginal)),
          std::move(cells), std::move(conditionals), std::move(counts)};
}

}  // namespace cotpi
