#include "spinchain/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <unsupported/Eigen/FFT>

#include "spinchain/errors.hpp"
#include "spinchain/numerics.hpp"

namespace spinchain {

namespace {

constexpr std::size_t kMinSamples = 100;

void require_samples(std::size_t n) {
  if (n < kMinSamples) {
    throw Error(ErrorCode::TooFewSamples,
                "need at least 100 samples, got " + std::to_string(n));
  }
}

double mean_of(std::span<const double> v) {
  CompensatedSum<double> s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

struct Batches {
  std::size_t count = 0;
  std::size_t length = 0;
};

Batches batches_for(std::size_t n) {
  Batches b;
  b.count = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  b.length = n / b.count;
  return b;
}

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_se = 0.0;
};

/// Ordinary least squares; points are sorted first so the result does not
/// depend on input order.
Line fit_line(std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  const auto n = static_cast<double>(pts.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : pts) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  Line line;
  line.slope = sxy / sxx;
  line.intercept = my - line.slope * mx;
  double sse = 0.0;
  for (const auto& [x, y] : pts) {
    const double r = y - (line.intercept + line.slope * x);
    sse += r * r;
  }
  line.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  line.slope_se = pts.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return line;
}

}  // namespace

double effective_sample_size(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 2) return static_cast<double>(n);
  const double mu = mean_of(samples);
  // Autocovariances by zero-padded FFT.
  std::size_t padded = 1;
  while (padded < 2 * n) padded <<= 1;
  std::vector<double> centred(padded, 0.0);
  for (std::size_t t = 0; t < n; ++t) centred[t] = samples[t] - mu;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spectrum;
  fft.fwd(spectrum, centred);
  for (auto& z : spectrum) z = std::norm(z);
  std::vector<double> acf;
  fft.inv(acf, spectrum);
  auto autocov = [&](std::size_t lag) { return acf[lag] / static_cast<double>(n); };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return static_cast<double>(n);

  // Geyer: sum consecutive pairs Gamma_k = c(2k) + c(2k+1) while positive,
  // enforcing monotone decrease.
  double tau = -c0;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double gamma = autocov(2 * k) + autocov(2 * k + 1);
    if (gamma <= 0.0) break;
    gamma = std::min(gamma, previous);
    previous = gamma;
    tau += 2.0 * gamma;
  }
  tau /= c0;
  const double ess = static_cast<double>(n) / std::max(tau, 1e-12);
  return std::min(ess, static_cast<double>(n));
}

MomentEstimate mc_mean(std::span<const double> samples) {
  const std::size_t n = samples.size();
  require_samples(n);
  MomentEstimate out;
  out.n = n;
  out.value = mean_of(samples);

  const auto b = batches_for(n);
  std::vector<double> means(b.count);
  for (std::size_t k = 0; k < b.count; ++k) {
    means[k] = mean_of(samples.subspan(k * b.length, b.length));
  }
  const double grand = mean_of(means);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  const double batch_var = ss / static_cast<double>(b.count - 1);
  out.std_error = std::sqrt(batch_var / static_cast<double>(b.count));
  out.ess = effective_sample_size(samples);
  return out;
}

MomentEstimate mc_covariance(std::span<const double> f, std::span<const double> g) {
  if (f.size() != g.size()) {
    throw Error(ErrorCode::DimensionMismatch, "covariance streams differ in length");
  }
  const std::size_t n = f.size();
  require_samples(n);
  const auto b = batches_for(n);
  const std::size_t used = b.count * b.length;

  // Per-batch sums of f, g, f g; leave-one-out covariances from the totals.
  std::vector<double> sf(b.count, 0.0), sg(b.count, 0.0), sfg(b.count, 0.0);
  for (std::size_t k = 0; k < b.count; ++k) {
    CompensatedSum<double> a, c, d;
    for (std::size_t t = k * b.length; t < (k + 1) * b.length; ++t) {
      a.add(f[t]);
      c.add(g[t]);
      d.add(f[t] * g[t]);
    }
    sf[k] = a.value();
    sg[k] = c.value();
    sfg[k] = d.value();
  }
  CompensatedSum<double> tf, tg, tfg;
  for (std::size_t k = 0; k < b.count; ++k) {
    tf.add(sf[k]);
    tg.add(sg[k]);
    tfg.add(sfg[k]);
  }
  auto cov_from = [](double sum_f, double sum_g, double sum_fg, double count) {
    return sum_fg / count - (sum_f / count) * (sum_g / count);
  };

  std::vector<double> loo(b.count);
  const auto rest = static_cast<double>(used - b.length);
  for (std::size_t k = 0; k < b.count; ++k) {
    loo[k] = cov_from(tf.value() - sf[k], tg.value() - sg[k], tfg.value() - sfg[k], rest);
  }
  const double loo_mean = mean_of(loo);
  double ss = 0.0;
  for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);

  MomentEstimate out;
  out.n = n;
  const double mf = mean_of(f);
  const double mg = mean_of(g);
  std::vector<double> products(n);
  for (std::size_t t = 0; t < n; ++t) products[t] = (f[t] - mf) * (g[t] - mg);
  out.value = mean_of(products);
  out.std_error = std::sqrt(static_cast<double>(b.count - 1) / static_cast<double>(b.count) * ss);
  out.ess = effective_sample_size(products);
  return out;
}

MomentEstimate moment_ratio(std::span<const double> block_sums, int order,
                            std::size_t block_size) {
  if (order != 3 && order != 4) {
    throw Error(ErrorCode::InvalidArgument, "moment order must be 3 or 4");
  }
  require_samples(block_sums.size());
  const double a = static_cast<double>(block_size);
  const double scale = order == 3 ? a : a * a;
  std::vector<double> powered(block_sums.size());
  for (std::size_t t = 0; t < block_sums.size(); ++t) {
    powered[t] = std::pow(block_sums[t], order) / scale;
  }
  return mc_mean(powered);
}

DecayFit fit_exponential_decay(std::span<const double> distances,
                               std::span<const double> magnitudes, double noise_floor) {
  if (distances.size() != magnitudes.size()) {
    throw Error(ErrorCode::DimensionMismatch, "distances and magnitudes differ in length");
  }
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < distances.size(); ++k) {
    const double c = std::abs(magnitudes[k]);
    if (c > noise_floor) pts.emplace_back(distances[k], std::log(c));
  }
  if (pts.size() < 3) {
    throw Error(ErrorCode::TooFewPoints,
                std::to_string(pts.size()) + " points above the noise floor; need 3");
  }
  const Line line = fit_line(std::move(pts));
  DecayFit fit;
  fit.rate = -line.slope;
  fit.amplitude = std::exp(line.intercept);
  fit.r_squared = line.r_squared;
  fit.noise_floor = noise_floor;
  fit.points_used = 0;
  for (double c : magnitudes) fit.points_used += std::abs(c) > noise_floor ? 1 : 0;
  return fit;
}

PowerLawFit fit_power_law(std::span<const double> sizes, std::span<const double> deltas) {
  if (sizes.size() != deltas.size()) {
    throw Error(ErrorCode::DimensionMismatch, "sizes and deltas differ in length");
  }
  if (sizes.size() < 4) {
    throw Error(ErrorCode::TooFewPoints, "power-law fit needs at least 4 points");
  }
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (!(sizes[k] > 0.0) || !(deltas[k] > 0.0)) {
      throw Error(ErrorCode::NonPositiveValue, "power-law fit needs positive values", k);
    }
    pts.emplace_back(std::log(sizes[k]), std::log(deltas[k]));
  }
  const Line line = fit_line(std::move(pts));
  PowerLawFit fit;
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  fit.r_squared = line.r_squared;
  fit.points = sizes.size();
  const boost::math::students_t dist(static_cast<double>(sizes.size() - 2));
  const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
  fit.slope_ci = {line.slope - t * line.slope_se, line.slope + t * line.slope_se};
  return fit;
}

}  // namespace spinchain
