#pragma once

// Exact discrete optimal transport.
//
// The transportation problem
//     min  sum_ij cost(i, j) * pi_ij
//     s.t. sum_j pi_ij = mu_i,  sum_i pi_ij = nu_j,  pi >= 0
// is solved exactly with a primal network simplex. One-dimensional problems
// with a cost that is convex in (x - y) have a closed-form optimizer (the
// monotone quantile coupling), exposed as a separate fast path.

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <string_view>
#include <vector>

namespace cotpi {

inline constexpr double kWeightSumTolerance = 1e-12;
inline constexpr double kMarginalTolerance = 1e-9;
/// Masses below this are pruned before solving; their total is redistributed
/// proportionally over the remaining atoms.
inline constexpr double kPruneThreshold = 1e-15;

/// Finite set of support points in R^d with probability masses.
/// Points are stored one per row.
class DiscreteDistribution {
 public:
  /// Validates: equal lengths >= 1, masses >= 0 and finite, total within
  /// kWeightSumTolerance of 1, finite points.
  DiscreteDistribution(Eigen::MatrixXd points, Eigen::VectorXd weights);

  /// Rescales nonnegative masses to sum to one before validating.
  static DiscreteDistribution normalized(Eigen::MatrixXd points, Eigen::VectorXd masses);
  static DiscreteDistribution uniform(Eigen::MatrixXd points);
  static DiscreteDistribution dirac(const Eigen::VectorXd& point);
  /// One-dimensional convenience constructor; masses are normalized.
  static DiscreteDistribution on_line(const std::vector<double>& values,
                                      const std::vector<double>& masses);
  static DiscreteDistribution on_line(const std::vector<double>& values);

  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(points_.cols()); }
  const Eigen::MatrixXd& points() const noexcept { return points_; }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double weight(std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }
  auto point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)); }

 private:
  Eigen::MatrixXd points_;
  Eigen::VectorXd weights_;
};

/// n0 x n1 matrix of finite transport costs; entry (i, j) = h(x_i, y_j).
class CostMatrix {
 public:
  explicit CostMatrix(Eigen::MatrixXd entries);

  std::size_t rows() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
  double operator()(std::size_t i, std::size_t j) const {
    return entries_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
  const Eigen::MatrixXd& entries() const noexcept { return entries_; }

 private:
  Eigen::MatrixXd entries_;
};

using PointCost = std::function<double(const Eigen::Ref<const Eigen::RowVectorXd>&,
                                       const Eigen::Ref<const Eigen::RowVectorXd>&)>;

/// Evaluates `h` on every support pair. Throws InputError on a non-finite
/// entry, naming the offending pair.
CostMatrix make_cost_matrix(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                            const PointCost& h);

struct CouplingEntry {
  std::size_t source;
  std::size_t target;
  double mass;

  friend bool operator==(const CouplingEntry&, const CouplingEntry&) = default;
};

/// Sparse joint mass assignment between two distributions.
struct Coupling {
  std::vector<CouplingEntry> entries;

  Eigen::VectorXd row_sums(std::size_t n_source) const;
  Eigen::VectorXd col_sums(std::size_t n_target) const;
  /// Largest absolute marginal violation against (mu, nu).
  double marginal_error(const DiscreteDistribution& mu, const DiscreteDistribution& nu) const;
  double total_cost(const CostMatrix& cost) const;
};

struct OtSolution {
  double value = 0.0;
  Coupling coupling;
};

/// Global minimum of the transportation LP. The coupling is a vertex of the
/// transportation polytope, so it has at most n0 + n1 - 1 positive entries.
OtSolution solve_exact_ot(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                          const CostMatrix& cost);

/// Global maximum, obtained by solving with the negated cost.
OtSolution solve_exact_ot_max(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                              const CostMatrix& cost);

/// Costs of the form h(x, y) = g(x - y) with g convex.
enum class QuantileCost { absolute, squared };

QuantileCost parse_quantile_cost(std::string_view tag);
double evaluate(QuantileCost cost, double difference) noexcept;

/// Monotone (comonotone) quantile matching between two distributions on the
/// line. Minimizes E g(X - Y) for convex g.
OtSolution solve_1d_quantile_ot(const DiscreteDistribution& mu, const DiscreteDistribution& nu,
                                QuantileCost cost);

/// Antitone (countermonotone) quantile matching. Maximizes E g(X - Y) for
/// convex g.
OtSolution solve_1d_quantile_ot_max(const DiscreteDistribution& mu,
                                    const DiscreteDistribution& nu, QuantileCost cost);

/// W_1 with the Euclidean ground metric.
OtSolution wasserstein1(const DiscreteDistribution& mu, const DiscreteDistribution& nu);

}  // namespace cotpi
