#include "spinchain/gaussian_oracle.hpp"

#include <cmath>
#include <numbers>

namespace spinchain {

GaussianOracle::GaussianOracle(const Model& model) : size_(model.size()) {
  if (!model.potential().is_zero()) {
    throw Error(ErrorCode::PotentialNotGaussian,
                "closed-form backend requires psi_b = Zero");
  }
  field_ = Eigen::Map<const Eigen::VectorXd>(model.field().data(),
                                             static_cast<Eigen::Index>(size_));
  precision_ = model.interaction().sparse();
  factor_.compute(precision_);
  if (factor_.info() != Eigen::Success) {
    throw Error(ErrorCode::FactorizationFailed, "precision matrix is not positive definite");
  }
  const auto n = static_cast<Eigen::Index>(size_);
  ones_response_ = factor_.solve(Eigen::VectorXd::Ones(n));
  ones_quadratic_ = ones_response_.sum();
  field_response_ = factor_.solve(field_);

  const Eigen::SparseMatrix<double> lower = factor_.matrixL();
  log_det_ = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) log_det_ += 2.0 * std::log(lower.coeff(k, k));
}

Eigen::VectorXd GaussianOracle::rhs(double sigma) const {
  return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(size_), sigma) - field_;
}

Eigen::VectorXd GaussianOracle::solve(const Eigen::VectorXd& b) const {
  return factor_.solve(b);
}

Eigen::VectorXd GaussianOracle::mean(double sigma) const {
  // M^{-1}(sigma 1 - s), reusing the two cached solves.
  return sigma * ones_response_ - field_response_;
}

void GaussianOracle::require_dense() const {
  if (size_ > kDenseLimit) {
    throw Error(ErrorCode::DimensionTooLarge,
                "dense covariance requested for N = " + std::to_string(size_) +
                    "; use covariance_column()");
  }
}

GaussianGce GaussianOracle::gce_moments(double sigma) const {
  require_dense();
  const auto n = static_cast<Eigen::Index>(size_);
  GaussianGce out;
  out.mean = mean(sigma);
  out.covariance = factor_.solve(Eigen::MatrixXd::Identity(n, n));
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();
  out.log_partition = log_partition(sigma);
  return out;
}

Eigen::VectorXd GaussianOracle::ce_mean(double m) const {
  // Any sigma works; the conditional law does not depend on it.
  const Eigen::VectorXd mu = mean(0.0);
  const double shift = (static_cast<double>(size_) * m - mu.sum()) / ones_quadratic_;
  return mu + shift * ones_response_;
}

GaussianCe GaussianOracle::ce_moments(double m) const {
  require_dense();
  const auto n = static_cast<Eigen::Index>(size_);
  GaussianCe out;
  out.mean = ce_mean(m);
  Eigen::MatrixXd cov = factor_.solve(Eigen::MatrixXd::Identity(n, n));
  cov = 0.5 * (cov + cov.transpose()).eval();
  out.covariance = cov - ones_response_ * ones_response_.transpose() / ones_quadratic_;
  return out;
}

double GaussianOracle::log_partition(double sigma) const {
  const Eigen::VectorXd b = rhs(sigma);
  const double quad = b.dot(mean(sigma));
  const auto n = static_cast<double>(size_);
  return 0.5 * quad + 0.5 * (n * std::log(2.0 * std::numbers::pi) - log_det_);
}

double GaussianOracle::free_energy(double sigma) const {
  return log_partition(sigma) / static_cast<double>(size_);
}

double GaussianOracle::sigma_of_m(double m) const {
  // 1^T M^{-1}(sigma 1 - s) = N m
  return (static_cast<double>(size_) * m + field_response_.sum()) / ones_quadratic_;
}

Eigen::VectorXd GaussianOracle::covariance_column(std::size_t j) const {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size_));
  e(static_cast<Eigen::Index>(j)) = 1.0;
  return factor_.solve(e);
}

double GaussianOracle::covariance(std::size_t i, std::size_t j) const {
  return covariance_column(j)(static_cast<Eigen::Index>(i));
}

double GaussianOracle::ce_covariance(std::size_t i, std::size_t j) const {
  const auto a = static_cast<Eigen::Index>(i);
  const auto b = static_cast<Eigen::Index>(j);
  return covariance(i, j) - ones_response_(a) * ones_response_(b) / ones_quadratic_;
}

SpinConfig GaussianOracle::sample_gce(double sigma, CounterRng& rng) const {
  const auto n = static_cast<Eigen::Index>(size_);
  Eigen::VectorXd z(n);
  for (Eigen::Index k = 0; k < n; ++k) z(k) = rng.normal();
  // M = L L^T  =>  L^{-T} z ~ N(0, M^{-1})
  const Eigen::VectorXd noise = factor_.matrixU().solve(z);
  const Eigen::VectorXd x = mean(sigma) + noise;
  return SpinConfig{std::vector<double>(x.data(), x.data() + n), std::nullopt};
}

SpinConfig GaussianOracle::sample_ce(double m, CounterRng& rng) const {
  SpinConfig cfg = sample_gce(0.0, rng);
  const auto n = static_cast<double>(size_);
  double total = 0.0;
  for (double v : cfg.x) total += v;
  const double shift = (n * m - total) / ones_quadratic_;
  for (std::size_t i = 0; i < size_; ++i) {
    cfg.x[i] += shift * ones_response_(static_cast<Eigen::Index>(i));
  }
  // Remove the O(eps) residual left by the shift.
  const double residual = m - cfg.mean();
  for (double& v : cfg.x) v += residual;
  cfg.mean_constraint = m;
  return cfg;
}

}  // namespace spinchain
