#pragma once

// Reproducible samplers for Gaussian location/scale outcome models under
// Bernoulli, covariate-dependent and covariate-shifted designs.

#include "cotpi/oracles.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace cotpi {

/// The three scalar benchmark models (Z, eps ~ N(0, 1)):
///   linear_location     f0 = -0.6 z,         f1 = 1.6 z
///   quadratic_location  f0 = -0.2 z^2,       f1 = 0.6 z^2
///   scale               f0 = 0.5 z - 0.35,   f1 = 1.1 z + 0.35  (Y = f * eps)
enum class SyntheticModel { linear_location, quadratic_location, scale };

/// Accepts "a"/"b"/"c" or the enumerator names.
SyntheticModel parse_model(std::string_view name);
std::string model_id(SyntheticModel model);  // "a", "b" or "c"
GaussianModelSpec synthetic_model(SyntheticModel model);
/// Population V_c for h = (y0 - y1)^2 (closed form for a and b, quadrature for c).
double synthetic_model_oracle(SyntheticModel model);

struct Assignment {
  enum class Kind { bernoulli, logistic, custom };
  Kind kind = Kind::bernoulli;
  double p = 0.5;       ///< bernoulli treatment probability
  double slope = 1.5;   ///< logistic: e(z) = 1 / (1 + exp(-slope * z_1))
  std::function<double(const Eigen::VectorXd&)> custom;

  static Assignment bernoulli(double p = 0.5);
  static Assignment logistic(double slope = 1.5);
  /// e(z) on raw covariates.
  double probability(const Eigen::VectorXd& z) const;
};

struct SyntheticDesign {
  GaussianModelSpec model;
  Assignment assignment;
  double shift_eta = 0.0;
  std::size_t n0 = 0;     ///< fixed group sizes (Bernoulli / shift designs)
  std::size_t n1 = 0;
  std::size_t total = 0;  ///< N for the covariate-dependent design
  /// Redraw when random assignment leaves a group empty (otherwise error).
  bool resample_empty = true;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Raw (unnormalized) observed data of both groups, one row per unit.
struct ObservedData {
  Eigen::MatrixXd z0, y0;
  Eigen::MatrixXd z1, y1;
};

/// Outcomes for the rows of `z` drawn from group `group` of the model.
Eigen::MatrixXd draw_outcomes(const GaussianModelSpec& model, const Eigen::MatrixXd& z, int group,
                              Rng& rng);
Eigen::MatrixXd draw_covariates(const GaussianModelSpec& model, std::size_t n, Rng& rng);

/// Groups drawn independently at sizes n0, n1.
ObservedData sample_bernoulli_design(const SyntheticDesign& design);
/// N units, W_i ~ Bernoulli(e(Z_i)); the counterfactual outcome is dropped.
ObservedData sample_covariate_dependent(const SyntheticDesign& design);
/// Control covariates from the model's law; treated covariates additionally
/// perturbed by shift_eta * N(0, I).
ObservedData sample_with_covariate_shift(const SyntheticDesign& design);

/// n twins sharing covariates, with Y(0), Y(1), Z independent standard
/// normals (true V_c = 0 for any metric cost).
ObservedData sample_paired_null(std::size_t n, std::uint64_t seed);

}  // namespace cotpi
