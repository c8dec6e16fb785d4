#include "cotpi/ot.hpp"

#include "cotpi/errors.hpp"
#include "network_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace cotpi {

DiscreteDistribution::DiscreteDistribution(Eigen::MatrixXd points, Eigen::VectorXd weights)
    : points_(std::move(points)), weights_(std::move(weights)) {
  if (weights_.size() == 0) throw InputError("distribution needs at least one atom");
  if (points_.rows() != weights_.size()) {
    throw InputError("distribution has " + std::to_string(points_.rows()) + " points but " +
                     std::to_string(weights_.size()) + " weights");
  }
  if (points_.cols() == 0) throw InputError("distribution points have dimension 0");
  if (!points_.allFinite()) throw InputError("distribution has a non-finite support point");
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    const double w = weights_(i);
    if (!std::isfinite(w) || w < 0.0) {
      throw InputError("distribution weight " + std::to_string(i) + " is negative or non-finite");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    throw InputError("distribution weights sum to " + std::to_string(total) + ", expected 1");
  }
}

DiscreteDistribution DiscreteDistribution::normalized(Eigen::MatrixXd points,
                                                      Eigen::VectorXd masses) {
  if (masses.size() == 0) throw InputError("distribution needs at least one atom");
  if ((masses.array() < 0.0).any() || !masses.allFinite()) {
    throw InputError("distribution masses must be finite and nonnegative");
  }
  const double total = masses.sum();
  if (!(total > 0.0)) throw InputError("distribution masses sum to zero");
  masses /= total;
  return DiscreteDistribution(std::move(points), std::move(masses));
}

DiscreteDistribution DiscreteDistribution::uniform(Eigen::MatrixXd points) {
  const Eigen::Index n = points.rows();
  if (n == 0) throw InputError("distribution needs at least one atom");
  return DiscreteDistribution(std::move(points),
                              Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

DiscreteDistribution DiscreteDistribution::dirac(const Eigen::VectorXd& point) {
  return DiscreteDistribution(point.transpose(), Eigen::VectorXd::Ones(1));
}

DiscreteDistribution DiscreteDistribution::on_line(const std::vector<double>& values,
                                                   const std::vector<double>& masses) {
  if (values.size() != masses.size()) throw InputError("values and masses differ in length");
  const auto n = static_cast<Eigen::Index>(values.size());
  Eigen::MatrixXd points(n, 1);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    points(i, 0) = values[static_cast<std::size_t>(i)];
    w(i) = masses[static_cast<std::size_t>(i)];
  }
  return normalized(std::move(points), std::move(w));
}

DiscreteDistribution DiscreteDistribution::on_line(const std::vector<double>& values) {
  return on_line(values, std::vector<double>(values.size(), 1.0));
}

CostMatrix::CostMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  for (Eigen::Index i = 0; i < entries_.rows(); ++i) {
    for (Eigen::Index j = 0; j < entries_.cols(); ++j) {
      if (!std::isfinite(entries_(i, j))) {
        throw InputError("cost entry (" + std::to_string(i) + ", " + std::to_string(j) +
                         ") is not finite");
      }
    }
  }
}

CostMatrix make_cost_matrix(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                            const PointCost& h) {
  const auto n0 = static_cast<Eigen::Index>(mu.size());
  const auto n1 = static_cast<Eigen::Index>(nu.size());
  Eigen::MatrixXd c(n0, n1);
  for (Eigen::Index i = 0; i < n0; ++i) {
    for (Eigen::Index j = 0; j < n1; ++j) {
      c(i, j) = h(mu.points().row(i), nu.points().row(j));
    }
  }
  return CostMatrix(std::move(c));
}

Eigen::VectorXd Coupling::row_sums(std::size_t n_source) const {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_source));
  for (const auto& e : entries) sums(static_cast<Eigen::Index>(e.source)) += e.mass;
  return sums;
}

Eigen::VectorXd Coupling::col_sums(std::size_t n_target) const {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_target));
  for (const auto& e : entries) sums(static_cast<Eigen::Index>(e.target)) += e.mass;
  return sums;
}

double Coupling::marginal_error(const DiscreteDistribution& mu,
                                const DiscreteDistribution& nu) const {
  const double rows = (row_sums(mu.size()) - mu.weights()).cwiseAbs().maxCoeff();
  const double cols = (col_sums(nu.size()) - nu.weights()).cwiseAbs().maxCoeff();
  return std::max(rows, cols);
}

double Coupling::total_cost(const CostMatrix& cost) const {
  double total = 0.0;
  for (const auto& e : entries) total += e.mass * cost(e.source, e.target);
  return total;
}

namespace {

void check_dimensions(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                      const CostMatrix& cost) {
  if (cost.rows() != mu.size() || cost.cols() != nu.size()) {
    throw InputError("cost matrix is " + std::to_string(cost.rows()) + "x" +
                     std::to_string(cost.cols()) + " but supports have sizes " +
                     std::to_string(mu.size()) + " and " + std::to_string(nu.size()));
  }
}

// Atoms that survive pruning, with their masses rescaled to the pruned total.
struct Pruned {
  std::vector<std::size_t> index;
  std::vector<double> mass;
};

Pruned prune(const Eigen::VectorXd& weights) {
  Pruned p;
  double kept = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    if (weights(i) >= kPruneThreshold) {
      p.index.push_back(static_cast<std::size_t>(i));
      p.mass.push_back(weights(i));
      kept += weights(i);
    }
  }
  if (p.index.empty()) throw InputError("distribution has no atom above the prune threshold");
  const double total = weights.sum();
  for (double& m : p.mass) m *= total / kept;
  return p;
}

}  // namespace

OtSolution solve_exact_ot(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                          const CostMatrix& cost) {
  check_dimensions(mu, nu, cost);
  const Pruned rows = prune(mu.weights());
  const Pruned cols = prune(nu.weights());

  OtSolution solution;
  if (rows.index.size() == 1 || cols.index.size() == 1) {
    // Forced coupling: a single atom on one side carries everything.
    for (std::size_t a = 0; a < rows.index.size(); ++a) {
      for (std::size_t b = 0; b < cols.index.size(); ++b) {
        const double mass = rows.index.size() == 1 ? cols.mass[b] : rows.mass[a];
        solution.coupling.entries.push_back({rows.index[a], cols.index[b], mass});
      }
    }
    solution.value = solution.coupling.total_cost(cost);
    return solution;
  }

  Eigen::MatrixXd reduced(static_cast<Eigen::Index>(rows.index.size()),
                          static_cast<Eigen::Index>(cols.index.size()));
  for (std::size_t a = 0; a < rows.index.size(); ++a) {
    for (std::size_t b = 0; b < cols.index.size(); ++b) {
      reduced(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
          cost(rows.index[a], cols.index[b]);
    }
  }
  const auto result = detail::network_simplex(rows.mass, cols.mass, reduced);
  solution.value = result.value;
  solution.coupling.entries.reserve(result.entries.size());
  for (const auto& e : result.entries) {
    solution.coupling.entries.push_back({rows.index[e.source], cols.index[e.target], e.mass});
  }
  return solution;
}

OtSolution solve_exact_ot_max(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                              const CostMatrix& cost) {
  check_dimensions(mu, nu, cost);
  OtSolution solution = solve_exact_ot(mu, nu, CostMatrix(-cost.entries()));
  solution.value = solution.coupling.total_cost(cost);
  return solution;
}

QuantileCost parse_quantile_cost(std::string_view tag) {
  if (tag == "absolute") return QuantileCost::absolute;
  if (tag == "squared") return QuantileCost::squared;
  throw InputError("unsupported 1-D cost tag '" + std::string(tag) +
                   "' (expected absolute or squared)");
}

double evaluate(QuantileCost cost, double difference) noexcept {
  return cost == QuantileCost::absolute ? std::abs(difference) : difference * difference;
}

namespace {

std::vector<std::size_t> sorted_order(const DiscreteDistribution& d, bool descending) {
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto& p = d.points();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double xa = p(static_cast<Eigen::Index>(a), 0);
    const double xb = p(static_cast<Eigen::Index>(b), 0);
    return descending ? xa > xb : xa < xb;
  });
  return order;
}

// Walks the two cumulative distribution functions in lockstep and emits one
// coupling entry per segment between consecutive breakpoints.
OtSolution quantile_match(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                          QuantileCost cost, bool antitone) {
  if (mu.dim() != 1 || nu.dim() != 1) {
    throw InputError("quantile coupling requires one-dimensional supports");
  }
  const auto ox = sorted_order(mu, false);
  const auto oy = sorted_order(nu, antitone);

  std::vector<double> cx(ox.size()), cy(oy.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < ox.size(); ++k) cx[k] = acc += mu.weight(ox[k]);
  acc = 0.0;
  for (std::size_t k = 0; k < oy.size(); ++k) cy[k] = acc += nu.weight(oy[k]);
  // Both totals are 1 up to round-off; pin the last breakpoints so the walk
  // ends on the same level.
  cx.back() = 1.0;
  cy.back() = 1.0;

  OtSolution solution;
  std::size_t i = 0;
  std::size_t j = 0;
  double level = 0.0;
  while (i < ox.size() && j < oy.size()) {
    const double cut = std::min(cx[i], cy[j]);
    const double mass = cut - level;
    if (mass > 0.0) {
      const double dx = mu.points()(static_cast<Eigen::Index>(ox[i]), 0) -
                        nu.points()(static_cast<Eigen::Index>(oy[j]), 0);
      solution.coupling.entries.push_back({ox[i], oy[j], mass});
      solution.value += mass * evaluate(cost, dx);
      level = cut;
    }
    if (cx[i] <= cut) ++i;
    if (cy[j] <= cut) ++j;
  }
  return solution;
}

}  // namespace

OtSolution solve_1d_quantile_ot(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                                QuantileCost cost) {
  return quantile_match(mu, nu, cost, false);
}

OtSolution solve_1d_quantile_ot_max(const DiscreteDistribution& mu,
                                    const DiscreteDistribution& nu, QuantileCost cost) {
  return quantile_match(mu, nu, cost, true);
}

OtSolution wasserstein1(const DiscreteDistribution& mu, const DiscreteDistribution& nu) {
  if (mu.dim() != nu.dim()) {
    throw InputError("wasserstein1: supports have dimensions " + std::to_string(mu.dim()) +
                     " and " + std::to_string(nu.dim()));
  }
  return solve_exact_ot(
      mu, nu,
      make_cost_matrix(mu, nu, [](const auto& x, const auto& y) { return (x - y).norm(); }));
}

}  // namespace cotpi
