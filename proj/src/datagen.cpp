#include "cotpi/datagen.hpp"

#include "cotpi/errors.hpp"

#include <cmath>
#include <random>

namespace cotpi {

SyntheticModel parse_model(std::string_view name) {
  if (name == "a" || name == "linear_location") return SyntheticModel::linear_location;
  if (name == "b" || name == "quadratic_location") return SyntheticModel::quadratic_location;
  if (name == "c" || name == "scale") return SyntheticModel::scale;
  throw ConfigError("unknown model '" + std::string(name) + "' (expected a, b or c)");
}

std::string model_id(SyntheticModel model) {
  switch (model) {
    case SyntheticModel::linear_location: return "a";
    case SyntheticModel::quadratic_location: return "b";
    case SyntheticModel::scale: return "c";
  }
  return "?";
}

namespace {

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

Eigen::VectorXd standard_normal_vector(Rng& rng, Eigen::Index d) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(d);
  for (Eigen::Index j = 0; j < d; ++j) v(j) = normal(rng);
  return v;
}

}  // namespace

GaussianModelSpec synthetic_model(SyntheticModel model) {
  GaussianModelSpec spec;
  spec.sigma0 = Eigen::MatrixXd::Identity(1, 1);
  spec.sigma1 = Eigen::MatrixXd::Identity(1, 1);
  spec.z_law = [](Rng& rng) { return standard_normal_vector(rng, 1); };
  switch (model) {
    case SyntheticModel::linear_location:
      spec.model = NoiseModel::location;
      spec.f0 = [](const Eigen::VectorXd& z) { return scalar(-0.6 * z(0)); };
      spec.f1 = [](const Eigen::VectorXd& z) { return scalar(1.6 * z(0)); };
      break;
    case SyntheticModel::quadratic_location:
      spec.model = NoiseModel::location;
      spec.f0 = [](const Eigen::VectorXd& z) { return scalar(-0.2 * z(0) * z(0)); };
      spec.f1 = [](const Eigen::VectorXd& z) { return scalar(0.6 * z(0) * z(0)); };
      break;
    case SyntheticModel::scale:
      spec.model = NoiseModel::scale;
      spec.f0 = [](const Eigen::VectorXd& z) { return scalar(0.5 * z(0) - 0.35); };
      spec.f1 = [](const Eigen::VectorXd& z) { return scalar(1.1 * z(0) + 0.35); };
      break;
  }
  return spec;
}

double synthetic_model_oracle(SyntheticModel model) {
  switch (model) {
    case SyntheticModel::linear_location:
      return 2.2 * 2.2;  // E (2.2 Z)^2
    case SyntheticModel::quadratic_location:
      return 0.64 * 3.0;  // E (0.8 Z^2)^2, E Z^4 = 3
    case SyntheticModel::scale: {
      // |f0| and |f1| kink where the mean functions cross zero.
      static const double value =
          gaussian_vc_quadrature(synthetic_model(SyntheticModel::scale), {-0.35 / 1.1, 0.7});
      return value;
    }
  }
  return 0.0;
}

Assignment Assignment::bernoulli(double p) {
  Assignment a;
  a.kind = Kind::bernoulli;
  a.p = p;
  return a;
}

Assignment Assignment::logistic(double slope) {
  Assignment a;
  a.kind = Kind::logistic;
  a.slope = slope;
  return a;
}

double Assignment::probability(const Eigen::VectorXd& z) const {
  switch (kind) {
    case Kind::bernoulli: return p;
    case Kind::logistic: return 1.0 / (1.0 + std::exp(-slope * z(0)));
    case Kind::custom: return custom(z);
  }
  return p;
}

void SyntheticDesign::validate() const {
  if (!model.f0 || !model.f1 || !model.z_law) throw ConfigError("design needs a complete model");
  model.validate();
  if (assignment.kind == Assignment::Kind::bernoulli && !(assignment.p > 0.0 && assignment.p < 1.0)) {
    throw ConfigError("Bernoulli treatment probability must lie in (0, 1)");
  }
  if (assignment.kind == Assignment::Kind::custom && !assignment.custom) {
    throw ConfigError("custom assignment needs a propensity function");
  }
  if (!(shift_eta >= 0.0)) throw ConfigError("shift_eta must be nonnegative");
}

Eigen::MatrixXd draw_covariates(const GaussianModelSpec& model, std::size_t n, Rng& rng) {
  const auto rows = static_cast<Eigen::Index>(n);
  if (n == 0) return Eigen::MatrixXd(0, 1);
  Eigen::VectorXd first = model.z_law(rng);
  Eigen::MatrixXd z(rows, first.size());
  z.row(0) = first.transpose();
  for (Eigen::Index i = 1; i < rows; ++i) z.row(i) = model.z_law(rng).transpose();
  return z;
}

Eigen::MatrixXd draw_outcomes(const GaussianModelSpec& model, const Eigen::MatrixXd& z, int group,
                              Rng& rng) {
  const auto& f = group == 0 ? model.f0 : model.f1;
  const Eigen::MatrixXd root = psd_sqrt(group == 0 ? model.sigma0 : model.sigma1);
  const Eigen::Index d = root.rows();
  Eigen::MatrixXd y(z.rows(), d);
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Eigen::VectorXd mean = f(z.row(i).transpose());
    const Eigen::VectorXd noise = root * standard_normal_vector(rng, d);
    if (model.model == NoiseModel::location) {
      y.row(i) = (mean + noise).transpose();
    } else {
      y.row(i) = mean.cwiseProduct(noise).transpose();
    }
  }
  return y;
}

ObservedData sample_bernoulli_design(const SyntheticDesign& design) {
  design.validate();
  if (design.n0 == 0 || design.n1 == 0) throw ConfigError("group sizes must be at least 1");
  ObservedData data;
  auto rng0 = make_rng(derive_seed(design.seed, 0));
  data.z0 = draw_covariates(design.model, design.n0, rng0);
  data.y0 = draw_outcomes(design.model, data.z0, 0, rng0);
  auto rng1 = make_rng(derive_seed(design.seed, 1));
  data.z1 = draw_covariates(design.model, design.n1, rng1);
  data.y1 = draw_outcomes(design.model, data.z1, 1, rng1);
  return data;
}

ObservedData sample_covariate_dependent(const SyntheticDesign& design) {
  design.validate();
  if (design.total < 2) throw ConfigError("covariate-dependent design needs N >= 2");
  for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
    auto rng = make_rng(derive_seed(design.seed, 2, attempt));
    const Eigen::MatrixXd z = draw_covariates(design.model, design.total, rng);
    const Eigen::MatrixXd y0 = draw_outcomes(design.model, z, 0, rng);
    const Eigen::MatrixXd y1 = draw_outcomes(design.model, z, 1, rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Eigen::Index> rows0, rows1;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double e = design.assignment.probability(z.row(i).transpose());
      (unit(rng) < e ? rows1 : rows0).push_back(i);
    }
    if (rows0.empty() || rows1.empty()) {
      if (!design.resample_empty) throw InputError("random assignment left a group empty");
      continue;
    }
    ObservedData data;
    data.z0 = z(rows0, Eigen::all);
    data.y0 = y0(rows0, Eigen::all);
    data.z1 = z(rows1, Eigen::all);
    data.y1 = y1(rows1, Eigen::all);
    return data;
  }
  throw InputError("random assignment kept leaving a group empty");
}

ObservedData sample_with_covariate_shift(const SyntheticDesign& design) {
  design.validate();
  if (design.n0 == 0 || design.n1 == 0) throw ConfigError("group sizes must be at least 1");
  ObservedData data = sample_bernoulli_design(design);
  if (design.shift_eta > 0.0) {
    // Fresh outcomes for the perturbed covariates; separate stream keeps the
    // eta = 0 case identical to the Bernoulli design.
    auto rng = make_rng(derive_seed(design.seed, 3));
    for (Eigen::Index i = 0; i < data.z1.rows(); ++i) {
      data.z1.row(i) += design.shift_eta *
                        standard_normal_vector(rng, data.z1.cols()).transpose();
    }
    data.y1 = draw_outcomes(design.model, data.z1, 1, rng);
  }
  return data;
}

ObservedData sample_paired_null(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ConfigError("paired sample needs n >= 1");
  auto rng = make_rng(derive_seed(seed, 4));
  std::normal_distribution<double> normal;
  ObservedData data;
  data.z0.resize(static_cast<Eigen::Index>(n), 1);
  data.y0.resize(static_cast<Eigen::Index>(n), 1);
  data.y1.resize(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < data.z0.rows(); ++i) {
    data.z0(i, 0) = normal(rng);
    data.y0(i, 0) = normal(rng);
    data.y1(i, 0) = normal(rng);
  }
  data.z1 = data.z0;
  return data;
}

}  // namespace cotpi
