#include "cotpi/reweight.hpp"

#include "cotpi/errors.hpp"
#include "cotpi/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cotpi {

PropensityModel::PropensityModel(Function fn, double clip_eta, std::string origin)
    : fn_(std::move(fn)), clip_eta_(clip_eta), origin_(std::move(origin)) {
  if (!fn_) throw ConfigError("propensity model needs a function");
  if (!(clip_eta_ > 0.0 && clip_eta_ < 0.5)) throw ConfigError("clip_eta must lie in (0, 0.5)");
}

PropensityModel PropensityModel::constant(double value, double clip_eta) {
  return PropensityModel([value](const Eigen::VectorXd&) { return value; }, clip_eta, "known");
}

PropensityModel::Evaluation PropensityModel::evaluate(const Eigen::VectorXd& z) const {
  const double raw = fn_(z);
  if (std::isnan(raw)) throw NumericalError("propensity model returned NaN");
  const double lo = clip_eta_;
  const double hi = 1.0 - clip_eta_;
  if (raw < lo) return {lo, true};
  if (raw > hi) return {hi, true};
  return {raw, false};
}

CellWeights cell_weights(const WeightedSample& sample, const CellGrid& grid,
                         const PropensityModel& model, int group) {
  if (group != 0 && group != 1) throw InputError("group must be 0 or 1");
  if (sample.size() == 0) throw InputError("cannot weight an empty sample");
  if (sample.covariate_dim() != grid.dim()) {
    throw InputError("sample covariate dimension does not match the grid");
  }
  const auto by_cell = group_by_cell(sample, grid);

  CellWeights out;
  out.weights.resize(static_cast<Eigen::Index>(sample.size()));
  std::vector<double> raw;
  raw.reserve(by_cell.size());
  for (const auto& [cell, rows] : by_cell) {
    const auto e = model.evaluate(grid.center(cell));
    if (e.clipped) ++out.clipped_cells;
    raw.push_back(group == 0 ? 1.0 / (1.0 - e.value) : 1.0 / e.value);
  }
  // Scaling by the largest raw weight first makes a constant propensity
  // give exactly 1/n.
  const double top = *std::max_element(raw.begin(), raw.end());
  double denominator = 0.0;
  std::size_t k = 0;
  for (const auto& [cell, rows] : by_cell) {
    raw[k] /= top;
    denominator += raw[k++] * static_cast<double>(rows.size());
  }
  k = 0;
  for (const auto& [cell, rows] : by_cell) {
    const double w = raw[k++] / denominator;
    for (std::size_t i : rows) out.weights(static_cast<Eigen::Index>(i)) = w;
  }
  return out;
}

std::size_t FoldAssignment::size(int fold) const {
  return static_cast<std::size_t>(
      std::count(fold_of.begin(), fold_of.end(), static_cast<std::uint8_t>(fold)));
}

std::vector<std::size_t> FoldAssignment::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

FoldAssignment split_folds(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw InputError("cross-fitting needs at least two units");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  auto rng = make_rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  FoldAssignment folds;
  folds.fold_of.assign(n, 0);
  for (std::size_t k = (n + 1) / 2; k < n; ++k) folds.fold_of[perm[k]] = 1;
  return folds;
}

namespace {

double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

}  // namespace

PropensityModel fit_propensity(const Eigen::MatrixXd& covariates,
                               const std::vector<int>& treatments, double clip_eta,
                               const LogisticFitOptions& options) {
  const auto n = covariates.rows();
  if (n == 0 || static_cast<std::size_t>(n) != treatments.size()) {
    throw InputError("propensity fit needs one treatment label per covariate row");
  }
  const auto treated = std::count(treatments.begin(), treatments.end(), 1);
  for (int t : treatments) {
    if (t != 0 && t != 1) throw InputError("treatment labels must be 0 or 1");
  }

  if (treated == 0 || treated == n) {
    const double rate = static_cast<double>(treated) / static_cast<double>(n);
    auto model = PropensityModel::constant(std::clamp(rate, clip_eta, 1.0 - clip_eta), clip_eta);
    model.degenerate = true;
    return model;
  }

  const Eigen::Index p = covariates.cols() + 1;
  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  x.rightCols(p - 1) = covariates;
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = treatments[static_cast<std::size_t>(i)];

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const Eigen::VectorXd eta = x * beta;
    Eigen::VectorXd prob(n), curvature(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      prob(i) = sigmoid(eta(i));
      curvature(i) = prob(i) * (1.0 - prob(i));
    }
    const Eigen::VectorXd gradient = x.transpose() * (y - prob) / static_cast<double>(n);
    if (gradient.lpNorm<Eigen::Infinity>() < options.gradient_tolerance) break;
    Eigen::MatrixXd hessian = x.transpose() * curvature.asDiagonal() * x / static_cast<double>(n);
    hessian.diagonal().array() += 1e-12;
    const Eigen::VectorXd step = hessian.ldlt().solve(gradient);
    if (!step.allFinite()) break;
    beta += step;
  }

  PropensityModel model(
      [beta](const Eigen::VectorXd& z) {
        return sigmoid(beta(0) + beta.tail(beta.size() - 1).dot(z));
      },
      clip_eta, "logistic");
  model.coefficients = beta;
  return model;
}

}  // namespace cotpi
