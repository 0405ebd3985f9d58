#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "helpers.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/estimators.hpp"
#include "spinchain/gaussian_oracle.hpp"
#include "spinchain/quadrature_oracle.hpp"
#include "spinchain/rng.hpp"
#include "spinchain/transfer.hpp"

using namespace spinchain;
using namespace testing;

namespace {

QuadratureSpec fine_quadrature() {
  QuadratureSpec q;
  q.nodes = 96;
  return q;
}

}  // namespace

TEST_SUITE("transfer") {
  TEST_CASE("grid weights sum to 2L") {
    const auto grid = TransferGrid::gauss_legendre(8.0, 160);
    double total = 0.0;
    for (double w : grid.weights) total += w;
    CHECK(std::abs(total - 16.0) < 1e-12);
  }

  TEST_CASE("range above one is rejected") {
    try {
      TransferEngine e(chain(6, 0.2, {}, SingleSitePotential::zero(), 0.0, 2));
      FAIL("expected RangeNotSupported");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::RangeNotSupported);
    }
  }

  TEST_CASE("uncoupled Gaussian log partition") {
    const std::size_t n = 10;
    const TransferEngine e(chain(n, 0.0));
    const double sigma = 0.6;
    CHECK(std::abs(e.gce_log_partition(sigma) -
                   n * (sigma * sigma / 2 + 0.5 * std::log(2 * std::numbers::pi))) < 1e-9);
    CHECK(std::abs(e.gce_covariance(sigma, 3, 3) - 1.0) < 1e-9);
  }

  TEST_CASE("Gaussian exactness") {
    for (std::size_t n : {8, 32, 128}) {
      const Model model = chain(n, 0.3, alternating(n, 0.2));
      const GaussianOracle g(model);
      const TransferEngine e(model);
      const double sigma = 0.35;
      CHECK(std::abs(e.gce_log_partition(sigma) - n * g.free_energy(sigma)) < 1e-6);
      const auto means = e.gce_site_means(sigma);
      const Eigen::VectorXd mu = g.mean(sigma);
      for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(means[k] - mu(static_cast<Eigen::Index>(k))) < 1e-7);
      for (auto [i, j] : {std::pair<std::size_t, std::size_t>{0, 0}, {1, 2}, {n / 2, n / 2 + 3}}) {
        CHECK(std::abs(e.gce_covariance(sigma, i, j) - g.covariance(i, j)) < 1e-6);
        CHECK(e.gce_covariance(sigma, j, i) == e.gce_covariance(sigma, i, j));
      }
      const double v = g.ones_quadratic() / static_cast<double>(n);
      CHECK(std::abs(e.gce_sum_variance_per_site(sigma) - v) < 1e-6);
      for (double xi : {0.3, 1.1, 2.5}) {
        const auto cf = e.characteristic_function(sigma, xi, means);
        CHECK(std::abs(cf - std::exp(-xi * xi * v / 2)) < 1e-8);
      }
      const auto m = e.sigma_of_m(0.1);
      CHECK(std::abs(m.sigma - g.sigma_of_m(0.1)) < 1e-9);
      CHECK(std::abs(m.achieved_mean - 0.1) < 1e-9);
    }
  }

  TEST_CASE("Cosine N = 3 against quadrature") {
    const Model model = chain(3, 0.3, alternating(3, 0.2), cosine());
    const TransferEngine e(model);
    const auto q = fine_quadrature();
    const double sigma = 0.25;
    CHECK(std::abs(e.gce_log_partition(sigma) - gce_log_partition_bruteforce(model, sigma, q)) <
          1e-6);
    const auto means = e.gce_site_means(sigma);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(means[i] - gce_expectation_bruteforce(model, sigma, Observable::spin(i), q)) <
            1e-6);
      for (std::size_t j = i; j < 3; ++j) {
        CHECK(std::abs(e.gce_covariance(sigma, i, j) -
                       gce_covariance_bruteforce(model, sigma, Observable::spin(i),
                                                 Observable::spin(j), q)) < 1e-6);
      }
    }
    const auto f = Observable::site_function(1, [](double x) { return std::cos(3 * x); }, 3.0);
    CHECK(std::abs(e.ce_expectation_fourier(0.1, f).ce -
                   ce_expectation_bruteforce(model, 0.1, f, q)) < 1e-5);
    CHECK(std::abs(e.ce_expectation_fourier(0.1, Observable::spin(0)).ce -
                   ce_expectation_bruteforce(model, 0.1, Observable::spin(0), q)) < 1e-5);
  }

  TEST_CASE("symmetric chain has zero means") {
    const TransferEngine e(chain(9, 0.3, {}, cosine()));
    for (double m : e.gce_site_means(0.0)) CHECK(std::abs(m) < 1e-9);
  }

  TEST_CASE("mean spin is the derivative of the free energy") {
    const std::size_t n = 12;
    const TransferEngine e(chain(n, 0.3, alternating(n, 0.2), cosine()));
    const double h = 1e-4;
    const double fd = (e.gce_log_partition(0.3 + h) - e.gce_log_partition(0.3 - h)) / (2 * h * n);
    CHECK(std::abs(e.gce_mean_spin(0.3) - fd) < 1e-6);
  }

  TEST_CASE("characteristic function axioms") {
    CounterRng rng(31, 0);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 2 + rng.below(14);
      const double c = 0.45 * (2 * rng.uniform() - 1);
      std::vector<double> s(n);
      for (auto& v : s) v = 0.5 * rng.normal();
      const auto potential =
          rng.uniform() < 0.5 ? SingleSitePotential::zero()
                              : SingleSitePotential::cosine(rng.uniform(), 1 + rng.uniform());
      const TransferEngine e(chain(n, c, s, potential), TransferOptions{
                                                             TransferGrid::gauss_legendre(8.0, 64)});
      const double sigma = rng.normal();
      const auto means = e.gce_site_means(sigma);
      const double xi = 6 * rng.normal();
      const auto at0 = e.characteristic_function(sigma, 0.0, means);
      CHECK(std::abs(at0 - 1.0) < 1e-12);
      const auto plus = e.characteristic_function(sigma, xi, means);
      const auto minus = e.characteristic_function(sigma, -xi, means);
      CHECK(std::abs(plus) <= 1 + 1e-12);
      CHECK(std::abs(plus - std::conj(minus)) < 1e-12);
    }
  }

  TEST_CASE("tilted expectation") {
    const std::size_t n = 8;
    const Model model = chain(n, 0.3, alternating(n, 0.2));
    const GaussianOracle g(model);
    const TransferEngine e(model);
    const double sigma = 0.2;
    const auto means = e.gce_site_means(sigma);
    CHECK(std::abs(e.tilted_expectation(sigma, 0.0, Observable::spin(3), means) - means[3]) <
          1e-12);
    // E[X_i e^{i xi S}] = (m_i + i xi (Sigma 1)_i / sqrt(N)) cf(xi) for a Gaussian.
    const double xi = 1.3;
    const Eigen::VectorXd s1 = g.ones_response();
    const std::complex<double> expected =
        (means[3] + std::complex<double>(0.0, xi * s1(3) / std::sqrt(double(n)))) *
        std::exp(-xi * xi * g.ones_quadratic() / (2.0 * n));
    const auto got = e.tilted_expectation(sigma, xi, Observable::spin(3), means);
    CHECK(std::abs(got - expected) < 1e-8);
    CHECK(std::abs(e.tilted_expectation(sigma, -xi, Observable::spin(3), means) - std::conj(got)) <
          1e-12);
    CHECK_THROWS_AS(e.tilted_expectation(sigma, xi,
                                         Observable::product(Observable::spin(0), Observable::spin(2)),
                                         means),
                    Error);
    const auto custom = Observable::custom({1}, [](std::span<const double> x) { return x[1]; }, 1.0);
    CHECK_THROWS_AS(e.tilted_expectation(sigma, xi, custom, means), Error);
  }

  TEST_CASE("ce via Fourier inversion: Gaussian") {
    const std::size_t n = 12;
    const Model model = chain(n, 0.3, alternating(n, 0.2));
    const GaussianOracle g(model);
    const TransferEngine e(model);
    const double m = 0.1;
    const auto ce = g.ce_moments(m);
    const auto est = e.ce_expectation_fourier(m, Observable::spin(2));
    CHECK(std::abs(est.ce - ce.mean(2)) < 1e-6);
    CHECK(est.imag_residual < 1e-9);
    CHECK(std::abs(e.ce_covariance_fourier(m, Observable::spin(2), Observable::spin(3)).ce -
                   ce.covariance(2, 3)) < 1e-6);
    std::vector<std::size_t> others{2, 4, 7};
    const auto batch = e.ce_spin_covariances_fourier(m, 2, others);
    for (std::size_t k = 0; k < others.size(); ++k) {
      CHECK(std::abs(batch[k].ce - ce.covariance(2, static_cast<Eigen::Index>(others[k]))) < 1e-6);
    }
    // Gaussian ce means coincide with gce means at the matched sigma.
    CHECK(std::abs(est.ce - est.gce) < 1e-8);
  }

  TEST_CASE("ce via Fourier inversion: identities") {
    const std::size_t n = 10;
    const TransferEngine e(chain(n, 0.3, alternating(n, 0.2), cosine()));
    const double m = 0.1;
    CHECK(std::abs(e.ce_expectation_fourier(m, Observable::constant(1.0)).ce - 1.0) < 1e-10);
    CHECK(std::abs(e.ce_expectation_fourier(m, Observable::window_mean(0, n - 1)).ce - m) < 1e-8);
    const auto f = Observable::site_function(4, [](double x) { return std::sin(x); }, 1.0);
    CHECK(std::abs(e.ce_covariance_fourier(m, f, Observable::window_sum(0, n - 1)).ce) < 1e-8);
    CHECK(e.ce_covariance_fourier(m, f, f).ce >= -1e-9);
    // per-site ce means sum to N m, and agree with the one-pass version
    const auto all = e.ce_site_means_fourier(m);
    double total = 0.0, total_single = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      total += all[k];
      const double single = e.ce_expectation_fourier(m, Observable::spin(k)).ce;
      total_single += single;
      CHECK(std::abs(single - all[k]) < 1e-9);
    }
    CHECK(std::abs(total - n * m) < 1e-6 * n * m);
    CHECK(std::abs(total_single - n * m) < 1e-6 * n * m);
  }

  TEST_CASE("density at zero") {
    const TransferEngine identity(chain(16, 0.0));
    const auto d = identity.density_at_zero(0.0);
    CHECK(std::abs(d.value - 1.0 / std::sqrt(2 * std::numbers::pi)) < 1e-8);
    CHECK(d.imag_residual < 1e-10);
    const std::size_t n = 24;
    const Model model = chain(n, 0.3, alternating(n, 0.2));
    const GaussianOracle g(model);
    const double v = g.ones_quadratic() / n;
    CHECK(std::abs(TransferEngine(model).density_at_zero(0.4).value -
                   1.0 / std::sqrt(2 * std::numbers::pi * v)) < 1e-6);
    const TransferEngine cos16(chain(16, 0.3, alternating(16, 0.2), cosine()));
    CHECK(cos16.density_at_zero(cos16.sigma_of_m(0.1).sigma).value > 0.0);
  }

  TEST_CASE("sigma of m round trip") {
    const std::size_t n = 20;
    const TransferEngine e(chain(n, 0.3, alternating(n, 0.2), cosine()));
    const auto match = e.sigma_of_m(0.1);
    CHECK(std::abs(e.gce_mean_spin(match.sigma) - 0.1) < 1e-9);
    const double m0 = e.gce_mean_spin(0.0);
    CHECK(std::abs(e.sigma_of_m(m0).sigma) < 1e-8);
  }

  TEST_CASE("xi truncation errors and diagnostics") {
    TransferOptions opts;
    opts.fourier.xi_max = 0.5;
    opts.fourier.nodes = 20;
    opts.fourier.max_enlargements = 2;
    const TransferEngine tight(chain(4, 0.3, alternating(4, 0.2), cosine()), opts);
    try {
      (void)tight.density_at_zero(0.0);
      FAIL("expected FourierTruncationInsufficient");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FourierTruncationInsufficient);
    }

    TransferOptions verbose;
    verbose.diagnostics_csv = std::filesystem::temp_directory_path() / "spinchain_xi_test.csv";
    std::filesystem::remove(verbose.diagnostics_csv);
    const TransferEngine e(chain(4, 0.3, alternating(4, 0.2), cosine()), verbose);
    (void)e.density_at_zero(0.0);
    std::ifstream in(verbose.diagnostics_csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "xi,re_cf,im_cf");
    std::size_t rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 800);
  }

  TEST_CASE("thread count does not change results") {
    const Model model = chain(16, 0.3, alternating(16, 0.2), cosine());
    TransferOptions one, four;
    four.threads = 4;
    const auto a = TransferEngine(model, one).ce_expectation_fourier(0.1, Observable::spin(3));
    const auto b = TransferEngine(model, four).ce_expectation_fourier(0.1, Observable::spin(3));
    CHECK(std::abs(a.ce - b.ce) < 1e-12);
  }

  TEST_CASE("grid refinement") {
    const std::size_t n = 8;
    const Model model = chain(n, 0.3, alternating(n, 0.2), cosine());
    TransferOptions coarse, fine;
    fine.grid = TransferGrid::gauss_legendre(8.0, 320);
    const TransferEngine a(model, coarse), b(model, fine);
    const double sigma = 0.2;
    CHECK(std::abs(a.gce_log_partition(sigma) - b.gce_log_partition(sigma)) < 1e-7);
    const auto ma = a.gce_site_means(sigma), mb = b.gce_site_means(sigma);
    for (std::size_t k = 0; k < n; ++k) CHECK(std::abs(ma[k] - mb[k]) < 1e-7);
    CHECK(std::abs(a.gce_covariance(sigma, 2, 3) - b.gce_covariance(sigma, 2, 3)) < 1e-7);
    CHECK(std::abs(a.ce_expectation_fourier(0.1, Observable::spin(2)).ce -
                   b.ce_expectation_fourier(0.1, Observable::spin(2)).ce) < 1e-7);
  }

  TEST_CASE("gce decay on the Cosine chain") {
    const TransferEngine e(chain(32, 0.3, alternating(32, 0.2), cosine()));
    const double sigma = e.sigma_of_m(0.1).sigma;
    std::vector<double> d, c;
    for (std::size_t k = 1; k <= 12; ++k) {
      d.push_back(double(k));
      c.push_back(std::abs(e.gce_covariance(sigma, 0, k)));
    }
    const auto fit = fit_exponential_decay(d, c, 1e-11);
    CHECK(fit.rate > 0.0);
    CHECK(fit.r_squared > 0.95);
  }
}
