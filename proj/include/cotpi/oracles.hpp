#pragma once

// Ground-truth bound values for Gaussian-noise outcome models with
// h(y0, y1) = ||y0 - y1||^2.
//
// Location model: Y(w) = f_w(Z) + eps_w, eps_w ~ N(0, Sigma_w)
//     V_c = E ||f0(Z) - f1(Z)||^2 + S(Sigma_0, Sigma_1)
// Scale model:    Y(w)_j = f_w(Z)_j * eps_{w,j}
//     V_c = E S(D(f0(Z)) Sigma_0 D(f0(Z)), D(f1(Z)) Sigma_1 D(f1(Z)))
// where S(A, B) = Tr(A + B - 2 (A^1/2 B A^1/2)^1/2) and D(v) = diag(v).

#include "cotpi/rng.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

namespace cotpi {

/// Symmetric PSD square root via eigendecomposition, eigenvalues clamped at
/// zero. Throws InputError if an eigenvalue is below -1e-10 or the matrix is
/// not symmetric.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& sigma);

/// S(Sigma_0, Sigma_1), the squared-W2 covariance term between centered
/// Gaussians. Clamped at zero.
double bures_trace(const Eigen::MatrixXd& sigma0, const Eigen::MatrixXd& sigma1);

enum class NoiseModel { location, scale };

struct GaussianModelSpec {
  using MeanFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using CovariateLaw = std::function<Eigen::VectorXd(Rng&)>;

  NoiseModel model = NoiseModel::location;
  MeanFunction f0;
  MeanFunction f1;
  Eigen::MatrixXd sigma0;
  Eigen::MatrixXd sigma1;
  CovariateLaw z_law;

  std::size_t outcome_dim() const noexcept { return static_cast<std::size_t>(sigma0.rows()); }
  /// Throws InputError on non-PSD or mismatched covariances.
  void validate() const;
};

struct McEstimate {
  double value;
  double standard_error;
};

/// V_c by Monte Carlo over the covariate law.
McEstimate gaussian_vc(const GaussianModelSpec& spec, std::size_t mc_samples, std::uint64_t seed);

/// V_c for a model with scalar standard-normal covariate, integrated over z
/// by adaptive Gauss-Kronrod quadrature (deterministic). Kinks of the
/// integrand, if known, go in `breakpoints` (sorted).
double gaussian_vc_quadrature(const GaussianModelSpec& spec,
                              const std::vector<double>& breakpoints = {},
                              double tolerance = 1e-12);

/// Location model with affine means f_w(z) = A_w z + b_w and Gaussian
/// covariate Z ~ N(m, C). Exact:
///   V_c = Tr(D C D^T) + ||D m + b0 - b1||^2 + S(Sigma_0, Sigma_1),  D = A0 - A1.
struct AffineGaussianLocation {
  Eigen::MatrixXd a0, a1;
  Eigen::VectorXd b0, b1;
  Eigen::VectorXd z_mean;
  Eigen::MatrixXd z_cov;
  Eigen::MatrixXd sigma0, sigma1;
};

double gaussian_vc_affine_exact(const AffineGaussianLocation& model);

/// (u, z) -> F^{-1}(u | z), the conditional quantile function of a scalar outcome.
using ConditionalQuantile = std::function<double(double, const Eigen::VectorXd&)>;

struct FrechetHoeffdingBounds {
  double lower;
  double upper;
  double lower_standard_error;
  double upper_standard_error;
};

/// Comonotone / countermonotone bounds for h = (y0 - y1)^2:
///   lower = E_Z int_0^1 (F0^{-1}(u|Z) - F1^{-1}(u|Z))^2 du
///   upper = E_Z int_0^1 (F0^{-1}(u|Z) - F1^{-1}(1-u|Z))^2 du
/// The u-integral uses `quad_points` midpoint nodes; the Z-expectation is a
/// Monte-Carlo average.
FrechetHoeffdingBounds frechet_hoeffding_bounds(const ConditionalQuantile& quantile0,
                                                const ConditionalQuantile& quantile1,
                                                const GaussianModelSpec::CovariateLaw& z_law,
                                                std::size_t mc_samples,
                                                std::size_t quad_points = 1024,
                                                std::uint64_t seed = 0);

/// Standard normal quantile.
double normal_quantile(double u);

/// Conditional quantile functions for a scalar Gaussian model.
ConditionalQuantile gaussian_conditional_quantile(const GaussianModelSpec& spec, int group);

}  // namespace cotpi
