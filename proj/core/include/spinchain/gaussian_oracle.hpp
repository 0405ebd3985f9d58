#pragma once

// Exact backend for psi_b = 0: the gce is N(M^{-1}(sigma 1 - s), M^{-1}) and
// the ce is that Gaussian conditioned on 1^T x = N m.

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "spinchain/model.hpp"
#include "spinchain/rng.hpp"

namespace spinchain {

struct GaussianGce {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double log_partition = 0.0;
};

struct GaussianCe {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

class GaussianOracle {
 public:
  /// Largest N for which dense covariances are formed.
  static constexpr std::size_t kDenseLimit = 4096;

  /// Throws PotentialNotGaussian unless psi_b is Zero, FactorizationFailed if
  /// M is not positive definite.
  explicit GaussianOracle(const Model& model);

  std::size_t size() const { return size_; }

  GaussianGce gce_moments(double sigma) const;
  GaussianCe ce_moments(double m) const;
  /// Conditional mean mu(0) + shift Sigma 1; no dense algebra.
  Eigen::VectorXd ce_mean(double m) const;

  /// A_gce(sigma) = (1/N) log Z.
  double free_energy(double sigma) const;
  double log_partition(double sigma) const;
  /// Unique sigma with (1/N) 1^T mu(sigma) = m.
  double sigma_of_m(double m) const;

  // Banded building blocks; usable at any N.
  Eigen::VectorXd mean(double sigma) const;
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// Sigma 1 = M^{-1} 1.
  const Eigen::VectorXd& ones_response() const { return ones_response_; }
  /// 1^T M^{-1} 1 = var(sum X_i).
  double ones_quadratic() const { return ones_quadratic_; }
  double log_det_precision() const { return log_det_; }
  Eigen::VectorXd covariance_column(std::size_t j) const;
  double covariance(std::size_t i, std::size_t j) const;
  /// Sigma_c(i, j) = Sigma(i, j) - (Sigma 1)_i (Sigma 1)_j / (1^T Sigma 1).
  double ce_covariance(std::size_t i, std::size_t j) const;

  /// Exact draw x = mu + L^{-T} z with M = L L^T.
  SpinConfig sample_gce(double sigma, CounterRng& rng) const;
  /// gce draw shifted along Sigma 1 onto the hyperplane mean = m.
  SpinConfig sample_ce(double m, CounterRng& rng) const;

 private:
  using Factor = Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower,
                                      Eigen::NaturalOrdering<int>>;

  Eigen::VectorXd rhs(double sigma) const;
  void require_dense() const;

  std::size_t size_;
  Eigen::VectorXd field_;
  Eigen::SparseMatrix<double> precision_;
  Factor factor_;
  Eigen::VectorXd ones_response_;
  double ones_quadratic_ = 0.0;
  Eigen::VectorXd field_response_;  // M^{-1} s
  double log_det_ = 0.0;
};

}  // namespace spinchain
