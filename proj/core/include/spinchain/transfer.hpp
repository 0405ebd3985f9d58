#pragma once

// Transfer-operator engine for nearest-neighbour chains.
//
// The gce weight factorises as prod_k w_k(x_k) prod_k K_k(x_k, x_{k+1}) with
//   w_k(x)    = exp(-psi_b(x) - x^2/2 - (s_k - sigma) x + i xi (x - m_k)/sqrt(N))
//   K_k(x, y) = exp(-M_{k,k+1} x y).
// Each integral over R is replaced by a Gauss-Legendre sum on [-L, L], so a
// partition function becomes a chain of n x n matrix-vector products. Vectors
// are renormalised after every step and their log scales carried separately.
//
// Canonical-ensemble quantities use the inverse Fourier identity
//   E_ce[f] - E_gce[f] = int E[(f - E f) e^{i xi S}] dxi / int E[e^{i xi S}] dxi,
// with S = N^{-1/2} sum_k (X_k - m_k) and sigma matched to m.

#include <complex>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spinchain/model.hpp"

namespace spinchain {

struct TransferGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
  double half_width = 8.0;

  static TransferGrid gauss_legendre(double half_width = 8.0, std::size_t nodes = 160);
  std::size_t size() const { return nodes.size(); }
};

struct FourierQuadrature {
  double xi_max = 40.0;
  std::size_t nodes = 800;
  /// Each enlargement doubles xi_max and the node count.
  int max_enlargements = 2;
  double tail_tolerance = 1e-10;
};

struct TransferOptions {
  TransferGrid grid = TransferGrid::gauss_legendre();
  FourierQuadrature fourier;
  unsigned threads = 1;
  /// When non-empty, every Fourier integration writes xi, re_cf, im_cf here.
  std::filesystem::path diagnostics_csv;
};

struct SigmaMatch {
  double sigma = 0.0;
  double achieved_mean = 0.0;
  int iterations = 0;
};

/// Canonical quantity from the Fourier identity, with its gce counterpart.
struct CeEstimate {
  double ce = 0.0;
  double gce = 0.0;
  double sigma = 0.0;
  /// max(|Im num|, |Im den|) / |den|.
  double imag_residual = 0.0;
  double xi_max = 0.0;
  double difference() const { return ce - gce; }
};

struct DensityEstimate {
  double value = 0.0;
  double imag_residual = 0.0;
  double xi_max = 0.0;
};

class TransferEngine {
 public:
  /// Throws RangeNotSupported for R > 1.
  explicit TransferEngine(const Model& model, TransferOptions options = {});
  ~TransferEngine();
  TransferEngine(TransferEngine&&) noexcept;
  TransferEngine& operator=(TransferEngine&&) noexcept;

  const Model& model() const { return model_; }
  const TransferOptions& options() const { return options_; }

  // ---- grand canonical ----------------------------------------------------
  double gce_log_partition(double sigma) const;
  std::vector<double> gce_site_means(double sigma) const;
  double gce_mean_spin(double sigma) const;
  double gce_covariance(double sigma, std::size_t i, std::size_t j) const;
  double gce_expectation(double sigma, const Observable& f) const;
  double gce_covariance(double sigma, const Observable& f, const Observable& g) const;
  /// E[(sum_{k=first}^{last} (X_k - m_k))^r] for r = 0..order.
  std::vector<double> gce_block_central_moments(double sigma, std::size_t first,
                                                std::size_t last, int order) const;
  /// var(sum_k X_k) / N = d^2 A_gce / d sigma^2.
  double gce_sum_variance_per_site(double sigma) const;

  // ---- tilted chain -------------------------------------------------------
  /// E[exp(i xi S)] with S centred at `means`.
  std::complex<double> characteristic_function(double sigma, double xi,
                                               std::span<const double> means) const;
  /// E[f exp(i xi S)]; f must have contiguous support and a term expansion.
  std::complex<double> tilted_expectation(double sigma, double xi, const Observable& f,
                                          std::span<const double> means) const;

  // ---- sigma <-> m --------------------------------------------------------
  /// Safeguarded Newton on the increasing map sigma -> mean spin.
  SigmaMatch sigma_of_m(double m) const;

  // ---- canonical via Fourier inversion ------------------------------------
  CeEstimate ce_expectation_fourier(double m, const Observable& f) const;
  CeEstimate ce_covariance_fourier(double m, const Observable& f, const Observable& g) const;
  /// E_ce[X_k] for every site in one integration.
  std::vector<double> ce_site_means_fourier(double m) const;
  /// cov_ce(X_i, X_j) for each j in `others` (all >= i) in one integration.
  std::vector<CeEstimate> ce_spin_covariances_fourier(double m, std::size_t i,
                                                      std::span<const std::size_t> others) const;

  /// Density of S at 0 under the gce at `sigma`: (1/2pi) int E[e^{i xi S}] dxi.
  DensityEstimate density_at_zero(double sigma) const;

 private:
  struct Impl;
  Model model_;
  TransferOptions options_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace spinchain
