#include "brute_force.hpp"

#include "cotpi/errors.hpp"
#include "cotpi/ot.hpp"
#include "cotpi/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace cotpi;

namespace {

const PointCost kAbs = [](const auto& a, const auto& b) { return (a - b).norm(); };
const PointCost kSq = [](const auto& a, const auto& b) { return (a - b).squaredNorm(); };

void check_coupling(const OtSolution& s, const DiscreteDistribution& mu,
                    const DiscreteDistribution& nu, const CostMatrix& cost) {
  CHECK(s.coupling.marginal_error(mu, nu) <= 1e-9);
  CHECK(s.coupling.total_cost(cost) == doctest::Approx(s.value).epsilon(1e-12));
  for (const auto& e : s.coupling.entries) CHECK(e.mass >= 0.0);
}

DiscreteDistribution random_line(Rng& rng, std::size_t n, bool rational_weights) {
  std::uniform_real_distribution<double> unit(-2.0, 2.0);
  std::uniform_int_distribution<int> integer(1, 9);
  std::vector<double> values(n), masses(n, 1.0);
  for (auto& v : values) v = unit(rng);
  if (rational_weights) {
    for (auto& m : masses) m = integer(rng);
  }
  return DiscreteDistribution::on_line(values, masses);
}

}  // namespace

TEST_SUITE("distribution") {
  TEST_CASE("rejects malformed input") {
    Eigen::MatrixXd pts(2, 1);
    pts << 0.0, 1.0;
    CHECK_THROWS_AS(DiscreteDistribution(pts, Eigen::Vector2d(0.5, 0.6)), InputError);
    CHECK_THROWS_AS(DiscreteDistribution(pts, Eigen::Vector2d(1.5, -0.5)), InputError);
    CHECK_THROWS_AS(DiscreteDistribution(pts, Eigen::Vector3d(0.2, 0.3, 0.5)), InputError);
    CHECK_THROWS_AS(DiscreteDistribution(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0)), InputError);
    pts(1, 0) = std::nan("");
    CHECK_THROWS_AS(DiscreteDistribution(pts, Eigen::Vector2d(0.5, 0.5)), InputError);
  }

  TEST_CASE("cost matrix rejects non-finite entries") {
    Eigen::MatrixXd c(1, 2);
    c << 1.0, INFINITY;
    CHECK_THROWS_AS(CostMatrix{c}, InputError);
  }
}

TEST_SUITE("solve_exact_ot") {
  TEST_CASE("dirac to dirac") {
    const auto mu = DiscreteDistribution::on_line({0.0});
    const auto nu = DiscreteDistribution::on_line({3.0});
    const auto cost = make_cost_matrix(mu, nu, kAbs);
    const auto s = solve_exact_ot(mu, nu, cost);
    CHECK(s.value == doctest::Approx(3.0));
    REQUIRE(s.coupling.entries.size() == 1);
    CHECK(s.coupling.entries[0] == CouplingEntry{0, 0, 1.0});
    CHECK(solve_exact_ot_max(mu, nu, cost).value == doctest::Approx(3.0));
  }

  TEST_CASE("identical two-point laws") {
    const auto mu = DiscreteDistribution::on_line({0.0, 1.0});
    const auto cost = make_cost_matrix(mu, mu, kAbs);
    CHECK(solve_exact_ot(mu, mu, cost).value == doctest::Approx(0.0));
    CHECK(solve_exact_ot_max(mu, mu, cost).value == doctest::Approx(1.0));
  }

  TEST_CASE("shifted uniform triples") {
    const auto mu = DiscreteDistribution::on_line({1.0, 2.0, 3.0});
    const auto nu = DiscreteDistribution::on_line({4.0, 5.0, 6.0});
    const auto cost = make_cost_matrix(mu, nu, kAbs);
    CHECK(solve_exact_ot(mu, nu, cost).value == doctest::Approx(3.0));
    CHECK(solve_exact_ot_max(mu, nu, cost).value == doctest::Approx(3.0));
  }

  TEST_CASE("frozen non-uniform instance") {
    // Values from an independent LP solve (HiGHS).
    const auto mu = DiscreteDistribution::on_line({0.0, 1.0, 2.5, -1.0, 3.0},
                                                  {0.1, 0.2, 0.3, 0.15, 0.25});
    const auto nu = DiscreteDistribution::on_line({0.5, 2.0, -0.5}, {0.4, 0.35, 0.25});
    const auto sq = make_cost_matrix(mu, nu, kSq);
    const auto ab = make_cost_matrix(mu, nu, kAbs);
    const auto lo = solve_exact_ot(mu, nu, sq);
    const auto hi = solve_exact_ot_max(mu, nu, sq);
    CHECK(lo.value == doctest::Approx(1.1875).epsilon(1e-12));
    CHECK(hi.value == doctest::Approx(6.1375).epsilon(1e-12));
    CHECK(solve_exact_ot(mu, nu, ab).value == doctest::Approx(0.925).epsilon(1e-12));
    CHECK(solve_exact_ot_max(mu, nu, ab).value == doctest::Approx(2.275).epsilon(1e-12));
    check_coupling(lo, mu, nu, sq);
    check_coupling(hi, mu, nu, sq);
    CHECK(lo.coupling.entries.size() <= mu.size() + nu.size() - 1);
  }

  TEST_CASE("tiny masses are pruned and redistributed") {
    const auto mu = DiscreteDistribution::on_line({0.0, 1.0, 5.0}, {0.5, 0.5 - 1e-17, 1e-17});
    const auto nu = DiscreteDistribution::on_line({0.0, 1.0});
    const auto cost = make_cost_matrix(mu, nu, kAbs);
    const auto s = solve_exact_ot(mu, nu, cost);
    CHECK(s.value == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.coupling.marginal_error(mu, nu) <= 1e-9);
  }

  TEST_CASE("property: exact on random permutation instances") {
    auto rng = make_rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> size(1, 5);
    for (int t = 0; t < 300; ++t) {
      const int n = size(rng);
      Eigen::MatrixXd c(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) c(i, j) = unit(rng);
      }
      const auto mu = DiscreteDistribution::uniform(Eigen::MatrixXd::Zero(n, 1));
      const CostMatrix cost(c);
      const auto [lo, hi] = testing::permutation_extremes(c);
      const auto s = solve_exact_ot(mu, mu, cost);
      CHECK(std::abs(s.value - lo) <= 1e-9);
      CHECK(std::abs(solve_exact_ot_max(mu, mu, cost).value - hi) <= 1e-9);
      check_coupling(s, mu, mu, cost);
    }
  }

  TEST_CASE("property: symmetric cost gives symmetric value") {
    auto rng = make_rng(12);
    for (int t = 0; t < 50; ++t) {
      const auto mu = random_line(rng, 1 + t % 7, true);
      const auto nu = random_line(rng, 1 + (t * 3) % 9, true);
      const double a = solve_exact_ot(mu, nu, make_cost_matrix(mu, nu, kSq)).value;
      const double b = solve_exact_ot(nu, mu, make_cost_matrix(nu, mu, kSq)).value;
      CHECK(std::abs(a - b) <= 1e-9);
    }
  }

  TEST_CASE("property: lipschitz stability in the marginals") {
    auto rng = make_rng(13);
    std::normal_distribution<double> noise(0.0, 0.1);
    for (int t = 0; t < 50; ++t) {
      const auto mu = random_line(rng, 6, false);
      const auto nu = random_line(rng, 5, true);
      Eigen::MatrixXd p = mu.points();
      Eigen::MatrixXd q = nu.points();
      for (Eigen::Index i = 0; i < p.rows(); ++i) p(i, 0) += noise(rng);
      for (Eigen::Index i = 0; i < q.rows(); ++i) q(i, 0) += noise(rng);
      const DiscreteDistribution mu2(p, mu.weights());
      const DiscreteDistribution nu2(q, nu.weights());
      const double w = solve_exact_ot(mu, nu, make_cost_matrix(mu, nu, kAbs)).value;
      const double w2 = solve_exact_ot(mu2, nu2, make_cost_matrix(mu2, nu2, kAbs)).value;
      const double bound = wasserstein1(mu, mu2).value + wasserstein1(nu, nu2).value;
      CHECK(std::abs(w - w2) <= bound + 1e-9);
    }
  }
}

TEST_SUITE("solve_1d_quantile_ot") {
  TEST_CASE("examples") {
    const auto a = DiscreteDistribution::on_line({1.0, 2.0, 3.0});
    const auto b = DiscreteDistribution::on_line({4.0, 5.0, 6.0});
    CHECK(solve_1d_quantile_ot(a, b, QuantileCost::squared).value == doctest::Approx(9.0));
    const auto c = DiscreteDistribution::on_line({0.3, -1.0, 2.0}, {1.0, 2.0, 3.0});
    CHECK(solve_1d_quantile_ot(c, c, QuantileCost::absolute).value == doctest::Approx(0.0));
    const auto d = DiscreteDistribution::on_line({0.0, 1.0});
    const auto e = DiscreteDistribution::on_line({0.0, 2.0});
    CHECK(solve_1d_quantile_ot(d, e, QuantileCost::absolute).value == doctest::Approx(0.5));
  }

  TEST_CASE("tags") {
    CHECK(parse_quantile_cost("absolute") == QuantileCost::absolute);
    CHECK(parse_quantile_cost("squared") == QuantileCost::squared);
    CHECK_THROWS_AS(parse_quantile_cost("cubic"), InputError);
  }

  TEST_CASE("rejects multivariate input") {
    const auto mu = DiscreteDistribution::dirac(Eigen::Vector2d(0.0, 1.0));
    CHECK_THROWS_AS(solve_1d_quantile_ot(mu, mu, QuantileCost::squared), InputError);
  }

  TEST_CASE("property: agrees with the LP for random instances") {
    auto rng = make_rng(21);
    std::uniform_int_distribution<std::size_t> size(1, 50);
    for (int t = 0; t < 100; ++t) {
      const auto mu = random_line(rng, size(rng), true);
      const auto nu = random_line(rng, size(rng), true);
      for (auto tag : {QuantileCost::absolute, QuantileCost::squared}) {
        const PointCost& h = tag == QuantileCost::absolute ? kAbs : kSq;
        const auto cost = make_cost_matrix(mu, nu, h);
        const auto fast = solve_1d_quantile_ot(mu, nu, tag);
        CHECK(std::abs(fast.value - solve_exact_ot(mu, nu, cost).value) <= 1e-9);
        CHECK(fast.coupling.marginal_error(mu, nu) <= 1e-9);
      }
      const auto sq = make_cost_matrix(mu, nu, kSq);
      CHECK(std::abs(solve_1d_quantile_ot_max(mu, nu, QuantileCost::squared).value -
                     solve_exact_ot_max(mu, nu, sq).value) <= 1e-9);
    }
  }
}

TEST_SUITE("wasserstein1") {
  TEST_CASE("examples") {
    const auto mu = DiscreteDistribution::on_line({0.2, 0.4, 0.9});
    CHECK(wasserstein1(mu, mu).value == doctest::Approx(0.0));
    const auto a = DiscreteDistribution::dirac(Eigen::Vector2d(0.0, 0.0));
    const auto b = DiscreteDistribution::dirac(Eigen::Vector2d(3.0, 4.0));
    CHECK(wasserstein1(a, b).value == doctest::Approx(5.0));
  }

  TEST_CASE("frozen planar instance") {
    Eigen::MatrixXd p(4, 2), q(3, 2);
    p << 0, 0, 1, 0, 0, 1, 1, 1;
    q << 0.5, 0.5, 2, 0, 0, 2;
    const DiscreteDistribution mu(p, Eigen::Vector4d(0.1, 0.2, 0.3, 0.4));
    const DiscreteDistribution nu(q, Eigen::Vector3d(0.5, 0.25, 0.25));
    CHECK(wasserstein1(mu, nu).value == doctest::Approx(0.874264068711929).epsilon(1e-12));
  }

  TEST_CASE("random 4x4 against permutations") {
    auto rng = make_rng(31);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
      Eigen::MatrixXd p(4, 2), q(4, 2);
      for (Eigen::Index i = 0; i < 4; ++i) {
        p.row(i) << unit(rng), unit(rng);
        q.row(i) << unit(rng), unit(rng);
      }
      const auto mu = DiscreteDistribution::uniform(p);
      const auto nu = DiscreteDistribution::uniform(q);
      const auto cost = make_cost_matrix(mu, nu, kAbs);
      CHECK(std::abs(wasserstein1(mu, nu).value -
                     testing::permutation_extremes(cost.entries()).first) <= 1e-9);
    }
  }
}
