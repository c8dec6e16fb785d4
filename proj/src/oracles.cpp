#include "cotpi/oracles.hpp"

#include "cotpi/errors.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cotpi {

namespace {

constexpr double kEigenFloor = -1e-10;

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> checked_eigen(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw InputError("covariance must be a non-empty square matrix");
  }
  if (!sigma.allFinite()) throw InputError("covariance must be finite");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InputError("covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  if (eig.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() < kEigenFloor * scale) {
    throw InputError("covariance is not positive semidefinite");
  }
  return eig;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sigma) {
  const auto eig = checked_eigen(sigma);
  const Eigen::VectorXd roots = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

double bures_trace(const Eigen::MatrixXd& sigma0, const Eigen::MatrixXd& sigma1) {
  if (sigma0.rows() != sigma1.rows() || sigma0.cols() != sigma1.cols()) {
    throw InputError("covariances have different dimensions");
  }
  const Eigen::MatrixXd root0 = psd_sqrt(sigma0);
  checked_eigen(sigma1);
  Eigen::MatrixXd middle = root0 * sigma1 * root0;
  middle = 0.5 * (middle + middle.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(middle, Eigen::EigenvaluesOnly);
  const double cross = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
  return std::max(0.0, sigma0.trace() + sigma1.trace() - 2.0 * cross);
}

void GaussianModelSpec::validate() const {
  if (!f0 || !f1) throw InputError("Gaussian model needs both mean functions");
  if (sigma0.rows() != sigma1.rows()) throw InputError("noise covariances differ in dimension");
  checked_eigen(sigma0);
  checked_eigen(sigma1);
}

namespace {

double vc_integrand(const GaussianModelSpec& spec, const Eigen::VectorXd& z, double location_s) {
  const Eigen::VectorXd m0 = spec.f0(z);
  const Eigen::VectorXd m1 = spec.f1(z);
  if (spec.model == NoiseModel::location) return (m0 - m1).squaredNorm() + location_s;
  const Eigen::MatrixXd a = m0.asDiagonal() * spec.sigma0 * m0.asDiagonal();
  const Eigen::MatrixXd b = m1.asDiagonal() * spec.sigma1 * m1.asDiagonal();
  return bures_trace(a, b);
}

}  // namespace

McEstimate gaussian_vc(const GaussianModelSpec& spec, std::size_t mc_samples, std::uint64_t seed) {
  if (mc_samples < 100) throw ConfigError("Monte-Carlo oracle needs at least 100 samples");
  spec.validate();
  if (!spec.z_law) throw InputError("Gaussian model needs a covariate law");
  const double s = spec.model == NoiseModel::location ? bures_trace(spec.sigma0, spec.sigma1) : 0.0;
  auto rng = make_rng(seed);
  std::vector<double> draws(mc_samples);
  for (auto& d : draws) d = vc_integrand(spec, spec.z_law(rng), 0.0);
  const double mean = mean_of(draws);
  return {mean + s, standard_error(draws, mean)};
}

double gaussian_vc_quadrature(const GaussianModelSpec& spec, const std::vector<double>& breakpoints,
                              double tolerance) {
  if (!(tolerance > 0.0)) throw ConfigError("quadrature tolerance must be positive");
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end())) {
    throw ConfigError("quadrature breakpoints must be sorted");
  }
  spec.validate();
  const double s = spec.model == NoiseModel::location ? bures_trace(spec.sigma0, spec.sigma1) : 0.0;
  const double inv_root_two_pi = 1.0 / std::sqrt(2.0 * boost::math::constants::pi<double>());
  Eigen::VectorXd z(1);
  auto integrand = [&](double t) {
    z(0) = t;
    return vc_integrand(spec, z, 0.0) * inv_root_two_pi * std::exp(-0.5 * t * t);
  };
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> edges{-inf};
  edges.insert(edges.end(), breakpoints.begin(), breakpoints.end());
  edges.push_back(inf);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        integrand, edges[k], edges[k + 1], 15, tolerance);
  }
  if (!std::isfinite(total)) throw NumericalError("oracle quadrature diverged");
  return total + s;
}

double gaussian_vc_affine_exact(const AffineGaussianLocation& model) {
  const Eigen::MatrixXd d = model.a0 - model.a1;
  const Eigen::VectorXd shift = d * model.z_mean + model.b0 - model.b1;
  checked_eigen(model.z_cov);
  return (d * model.z_cov * d.transpose()).trace() + shift.squaredNorm() +
         bures_trace(model.sigma0, model.sigma1);
}

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) throw InputError("normal quantile needs u in (0, 1)");
  static const boost::math::normal standard;
  return boost::math::quantile(standard, u);
}

FrechetHoeffdingBounds frechet_hoeffding_bounds(const ConditionalQuantile& quantile0,
                                                const ConditionalQuantile& quantile1,
                                                const GaussianModelSpec::CovariateLaw& z_law,
                                                std::size_t mc_samples, std::size_t quad_points,
                                                std::uint64_t seed) {
  if (quad_points < 10) throw ConfigError("quantile quadrature needs at least 10 nodes");
  if (mc_samples == 0) throw ConfigError("Monte-Carlo average needs at least one sample");
  std::vector<double> nodes(quad_points);
  for (std::size_t k = 0; k < quad_points; ++k) {
    nodes[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(quad_points);
  }
  auto rng = make_rng(seed);
  std::vector<double> lows(mc_samples), highs(mc_samples);
  std::vector<double> q0(quad_points), q1(quad_points);
  for (std::size_t s = 0; s < mc_samples; ++s) {
    const Eigen::VectorXd z = z_law(rng);
    for (std::size_t k = 0; k < quad_points; ++k) {
      q0[k] = quantile0(nodes[k], z);
      q1[k] = quantile1(nodes[k], z);
    }
    double lo = 0.0, hi = 0.0;
    for (std::size_t k = 0; k < quad_points; ++k) {
      const double a = q0[k] - q1[k];
      const double b = q0[k] - q1[quad_points - 1 - k];  // node 1 - u
      lo += a * a;
      hi += b * b;
    }
    lows[s] = lo / static_cast<double>(quad_points);
    highs[s] = hi / static_cast<double>(quad_points);
  }
  const double lower = mean_of(lows);
  const double upper = mean_of(highs);
  return {lower, upper, standard_error(lows, lower), standard_error(highs, upper)};
}

ConditionalQuantile gaussian_conditional_quantile(const GaussianModelSpec& spec, int group) {
  if (spec.outcome_dim() != 1) throw InputError("conditional quantiles need a scalar outcome");
  const auto& f = group == 0 ? spec.f0 : spec.f1;
  const double sd = std::sqrt((group == 0 ? spec.sigma0 : spec.sigma1)(0, 0));
  if (spec.model == NoiseModel::location) {
    return [f, sd](double u, const Eigen::VectorXd& z) { return f(z)(0) + sd * normal_quantile(u); };
  }
  // f(z) * eps with symmetric eps has the law of |f(z)| * eps.
  return [f, sd](double u, const Eigen::VectorXd& z) {
    return std::abs(f(z)(0)) * sd * normal_quantile(u);
  };
}

}  // namespace cotpi
