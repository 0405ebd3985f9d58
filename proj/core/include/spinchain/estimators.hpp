#pragma once

#include <cstddef>
#include <span>
#include <utility>

namespace spinchain {

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double ess = 0.0;
  std::size_t n = 0;
};

struct DecayFit {
  double rate = 0.0;
  double amplitude = 0.0;
  double r_squared = 0.0;
  std::size_t points_used = 0;
  double noise_floor = 0.0;
};

struct PowerLawFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::pair<double, double> slope_ci{0.0, 0.0};  // 95%
  std::size_t points = 0;
};

/// Initial positive sequence estimate of the effective sample size.
double effective_sample_size(std::span<const double> samples);

/// Mean with a batch-means standard error over ceil(sqrt(n)) batches.
/// Throws TooFewSamples for n < 100.
MomentEstimate mc_mean(std::span<const double> samples);

/// cov(f, g) with a jackknife-over-batches standard error.
MomentEstimate mc_covariance(std::span<const double> f, std::span<const double> g);

/// E[Y^3] / |A| (order 3) or E[Y^4] / |A|^2 (order 4) for centred block sums Y.
MomentEstimate moment_ratio(std::span<const double> block_sums, int order,
                            std::size_t block_size);

/// Least squares of log c on d after dropping |c| <= noise_floor.
/// Throws TooFewPoints with fewer than 3 survivors.
DecayFit fit_exponential_decay(std::span<const double> distances,
                               std::span<const double> magnitudes, double noise_floor);

/// Least squares of log delta on log n. Throws TooFewPoints (< 4) or
/// NonPositiveValue.
PowerLawFit fit_power_law(std::span<const double> sizes, std::span<const double> deltas);

}  // namespace spinchain
