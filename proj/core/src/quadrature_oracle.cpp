#include "spinchain/quadrature_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "spinchain/numerics.hpp"

namespace spinchain {

void QuadratureSpec::validate() const {
  if (nodes < 16) throw Error(ErrorCode::InvalidArgument, "quadrature needs >= 16 nodes");
  if (half_width < 6.0) {
    throw Error(ErrorCode::InvalidArgument, "quadrature half-width must be >= 6");
  }
}

QuadratureSpec QuadratureSpec::refined(double factor) const {
  QuadratureSpec out = *this;
  out.nodes = static_cast<std::size_t>(std::ceil(static_cast<double>(nodes) * factor));
  return out;
}

double quadrature_tail_bound(const Model& model, double sigma, const QuadratureSpec& q) {
  double field = 0.0;
  for (double s : model.field()) field = std::max(field, std::abs(sigma - s));
  // Gershgorin: the quadratic part has curvature >= delta, the perturbation
  // shifts the mode by at most |psi_b'| / delta.
  const double delta = model.margin();
  const double mode = (field + model.potential().sup_derivative()) / delta;
  const double gap = std::max(0.0, q.half_width - mode);
  return std::exp(-0.5 * delta * gap * gap);
}

namespace {

using Integrand = std::function<double(std::span<const double>)>;

struct GridIntegral {
  double log_mass = 0.0;       // log of the quadrature sum of exp(log density)
  std::vector<double> means;   // normalised expectations of the integrands
};

/// Integrates exp(log_density(x)) h_k(x) over the tensor grid of the first
/// `free_dims` coordinates; `complete` fills the remaining coordinates.
GridIntegral integrate_grid(std::size_t size, std::size_t free_dims, const QuadratureSpec& q,
                            const std::function<void(std::vector<double>&)>& complete,
                            const std::function<double(std::span<const double>)>& log_density,
                            const std::vector<Integrand>& integrands) {
  q.validate();
  const auto rule = GaussLegendreRule::on_interval(-q.half_width, q.half_width, q.nodes);
  const std::size_t n = rule.size();
  std::size_t total = 1;
  for (std::size_t d = 0; d < free_dims; ++d) total *= n;

  std::vector<double> x(size, 0.0);
  std::vector<std::size_t> idx(free_dims, 0);

  auto load_point = [&](std::size_t flat) {
    double weight = 1.0;
    for (std::size_t d = 0; d < free_dims; ++d) {
      idx[d] = flat % n;
      flat /= n;
      x[d] = rule.nodes[idx[d]];
      weight *= rule.weights[idx[d]];
    }
    complete(x);
    return weight;
  };

  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < total; ++p) {
    load_point(p);
    peak = std::max(peak, log_density(x));
  }

  CompensatedSum<double> mass;
  std::vector<CompensatedSum<double>> sums(integrands.size());
  for (std::size_t p = 0; p < total; ++p) {
    const double w = load_point(p) * std::exp(log_density(x) - peak);
    mass.add(w);
    for (std::size_t k = 0; k < integrands.size(); ++k) sums[k].add(w * integrands[k](x));
  }

  GridIntegral out;
  out.log_mass = peak + std::log(mass.value());
  out.means.reserve(integrands.size());
  for (auto& s : sums) out.means.push_back(s.value() / mass.value());
  return out;
}

void check_dimension(const Model& model) {
  if (model.size() > QuadratureSpec::kMaxDimension) {
    throw Error(ErrorCode::DimensionTooLarge,
                "brute-force quadrature supports N <= 4, got N = " +
                    std::to_string(model.size()));
  }
}

GridIntegral gce_integral(const Model& model, double sigma, const QuadratureSpec& q,
                          const std::vector<Integrand>& integrands) {
  check_dimension(model);
  const std::size_t n = model.size();
  return integrate_grid(
      n, n, q, [](std::vector<double>&) {},
      [&](std::span<const double> x) { return gce_log_density_unnormalized(model, sigma, x); },
      integrands);
}

GridIntegral ce_integral(const Model& model, double m, const QuadratureSpec& q,
                         const std::vector<Integrand>& integrands) {
  check_dimension(model);
  const std::size_t n = model.size();
  const double total = static_cast<double>(n) * m;
  if (n == 1) {
    // The hyperplane is the single point x = m.
    const std::vector<double> x{m};
    GridIntegral out;
    for (const auto& h : integrands) out.means.push_back(h(x));
    return out;
  }
  return integrate_grid(
      n, n - 1, q,
      [n, total](std::vector<double>& x) {
        double partial = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) partial += x[i];
        x[n - 1] = total - partial;
      },
      [&](std::span<const double> x) { return -hamiltonian(model, x); }, integrands);
}

Integrand as_integrand(const Observable& f) {
  return [&f](std::span<const double> x) { return f(x); };
}

}  // namespace

double gce_log_partition_bruteforce(const Model& model, double sigma, const QuadratureSpec& q) {
  return gce_integral(model, sigma, q, {}).log_mass;
}

double gce_expectation_bruteforce(const Model& model, double sigma, const Observable& f,
                                  const QuadratureSpec& q) {
  return gce_integral(model, sigma, q, {as_integrand(f)}).means[0];
}

double gce_covariance_bruteforce(const Model& model, double sigma, const Observable& f,
                                 const Observable& g, const QuadratureSpec& q) {
  const auto r = gce_integral(
      model, sigma, q,
      {as_integrand(f), as_integrand(g),
       [&](std::span<const double> x) { return f(x) * g(x); }});
  return r.means[2] - r.means[0] * r.means[1];
}

double ce_expectation_bruteforce(const Model& model, double m, const Observable& f,
                                 const QuadratureSpec& q) {
  return ce_integral(model, m, q, {as_integrand(f)}).means[0];
}

double ce_covariance_bruteforce(const Model& model, double m, const Observable& f,
                                const Observable& g, const QuadratureSpec& q) {
  const auto r = ce_integral(
      model, m, q,
      {as_integrand(f), as_integrand(g),
       [&](std::span<const double> x) { return f(x) * g(x); }});
  return r.means[2] - r.means[0] * r.means[1];
}

}  // namespace spinchain
