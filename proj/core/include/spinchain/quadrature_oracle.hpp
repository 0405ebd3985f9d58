#pragma once

// Tensor-grid Gauss-Legendre integration over [-L, L]^N for N <= 4. The ce is
// integrated over (x_1..x_{N-1}) with x_N = N m - sum_{i<N} x_i; the constant
// Hausdorff Jacobian sqrt(N) cancels in every normalised expectation.

#include <cstddef>

#include "spinchain/model.hpp"

namespace spinchain {

struct QuadratureSpec {
  static constexpr std::size_t kMaxDimension = 4;

  double half_width = 8.0;
  std::size_t nodes = 80;

  /// n >= 16 and L >= 6; throws InvalidArgument otherwise.
  void validate() const;
  QuadratureSpec refined(double factor = 1.5) const;
};

/// Upper bound on the Gaussian tail mass discarded by the truncation,
/// exp(-delta (L - mu_max)^2 / 2) with mu_max a bound on the mode location.
double quadrature_tail_bound(const Model& model, double sigma, const QuadratureSpec& q);

double gce_log_partition_bruteforce(const Model& model, double sigma,
                                    const QuadratureSpec& q = {});
double gce_expectation_bruteforce(const Model& model, double sigma, const Observable& f,
                                  const QuadratureSpec& q = {});
double gce_covariance_bruteforce(const Model& model, double sigma, const Observable& f,
                                 const Observable& g, const QuadratureSpec& q = {});

double ce_expectation_bruteforce(const Model& model, double m, const Observable& f,
                                 const QuadratureSpec& q = {});
double ce_covariance_bruteforce(const Model& model, double m, const Observable& f,
                                const Observable& g, const QuadratureSpec& q = {});

}  // namespace spinchain
