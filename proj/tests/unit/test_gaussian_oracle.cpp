#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "helpers.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/estimators.hpp"
#include "spinchain/gaussian_oracle.hpp"
#include "spinchain/rng.hpp"

using namespace spinchain;
using namespace testing;

TEST_SUITE("gaussian_oracle") {
  TEST_CASE("rejects non-Gaussian potentials") {
    try {
      GaussianOracle g(chain(3, 0.2, {}, cosine()));
      FAIL("expected PotentialNotGaussian");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PotentialNotGaussian);
    }
  }

  TEST_CASE("gce moments") {
    const GaussianOracle identity(chain(4, 0.0));
    const auto g = identity.gce_moments(0.7);
    for (int i = 0; i < 4; ++i) CHECK(g.mean(i) == doctest::Approx(0.7));
    CHECK((g.covariance - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-14);

    const GaussianOracle three(chain(3, 0.25));
    const auto mu = three.mean(1.0);
    CHECK(mu(0) == doctest::Approx(6.0 / 7.0));
    CHECK(mu(1) == doctest::Approx(4.0 / 7.0));
    CHECK(mu(2) == doctest::Approx(6.0 / 7.0));

    const GaussianOracle shifted(chain(5, 0.2, std::vector<double>(5, 0.4)));
    CHECK(shifted.mean(0.4).norm() < 1e-14);
  }

  TEST_CASE("precision times covariance is the identity") {
    const Model model(chain_spec(12, 0.3, alternating(12, 0.2)));
    const GaussianOracle g(model);
    const auto cov = g.gce_moments(0.1).covariance;
    const Eigen::MatrixXd m = model.interaction().dense();
    CHECK((m * cov - Eigen::MatrixXd::Identity(12, 12)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }

  TEST_CASE("ce moments") {
    const std::size_t n = 6;
    const GaussianOracle identity(chain(n, 0.0));
    const auto ce = identity.ce_moments(0.3);
    for (Eigen::Index i = 0; i < 6; ++i) CHECK(ce.mean(i) == doctest::Approx(0.3));
    CHECK(ce.covariance(0, 1) == doctest::Approx(-1.0 / n));
    CHECK(ce.covariance(0, 0) == doctest::Approx(1.0 - 1.0 / n));
    CHECK(ce.covariance(0, 1) == doctest::Approx(-ce.covariance(0, 0) / (n - 1)));

    const GaussianOracle two(chain(2, 0.0));
    const auto c2 = two.ce_moments(0.0).covariance;
    CHECK(c2(0, 0) == doctest::Approx(0.5));
    CHECK(c2(0, 1) == doctest::Approx(-0.5));
    CHECK(c2(1, 1) == doctest::Approx(0.5));

    const GaussianOracle coupled(chain(9, 0.3, alternating(9, 0.2)));
    const Eigen::VectorXd mu = coupled.mean(0.45);
    const auto at_mean = coupled.ce_moments(mu.mean());
    CHECK((at_mean.mean - mu).cwiseAbs().maxCoeff() < 1e-12);
    const auto c = coupled.ce_moments(0.1);
    CHECK(std::abs(c.mean.sum() - 9 * 0.1) < 1e-9 * 0.9);
    CHECK((c.covariance * Eigen::VectorXd::Ones(9)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(coupled.ce_covariance(2, 5) == doctest::Approx(c.covariance(2, 5)).epsilon(1e-12));
  }

  TEST_CASE("symmetric model identity") {
    for (std::size_t n : {8, 64}) {
      const double c = 0.3 / static_cast<double>(n - 1);
      const GaussianOracle g(Model(ModelSpec{InteractionMatrix::uniform(n, n - 1, c),
                                             SingleSitePotential::zero(),
                                             std::vector<double>(n, 0.2), 0.0}));
      const auto ce = g.ce_moments(0.1).covariance;
      for (Eigen::Index i = 0; i < ce.rows(); ++i) {
        for (Eigen::Index j = 0; j < ce.cols(); ++j) {
          if (i != j) {
            CHECK(std::abs(ce(i, j) + ce(i, i) / static_cast<double>(n - 1)) < 1e-9);
          }
        }
      }
    }
  }

  TEST_CASE("free energy") {
    const GaussianOracle identity(chain(5, 0.0));
    const double s = 0.8;
    CHECK(identity.free_energy(s) ==
          doctest::Approx(s * s / 2 + 0.5 * std::log(2 * std::numbers::pi)));
    const double h = 1e-5;
    const double slope = (identity.free_energy(0.3 + h) - identity.free_energy(0.3 - h)) / (2 * h);
    CHECK(slope == doctest::Approx(0.3).epsilon(1e-8));
  }

  TEST_CASE("variance identity and band") {
    std::vector<double> band;
    for (std::size_t n : {8, 16, 64, 256, 1024}) {
      const GaussianOracle g(chain(n, 0.3, alternating(n, 0.2)));
      const double v = g.ones_quadratic() / static_cast<double>(n);
      const double h = 1e-3;
      const double fd =
          (g.free_energy(0.2 + h) - 2 * g.free_energy(0.2) + g.free_energy(0.2 - h)) / (h * h);
      CHECK(std::abs(fd - v) < 1e-6);
      band.push_back(v);
    }
    const auto [lo, hi] = std::minmax_element(band.begin(), band.end());
    CHECK(*hi / *lo < 3.0);
  }

  TEST_CASE("sigma of m") {
    const GaussianOracle identity(chain(4, 0.0));
    CHECK(identity.sigma_of_m(0.3) == doctest::Approx(0.3));
    const GaussianOracle shifted(chain(4, 0.0, std::vector<double>(4, 0.25)));
    CHECK(shifted.sigma_of_m(0.3) == doctest::Approx(0.55));
    const GaussianOracle three(chain(3, 0.25));
    const double sigma = three.sigma_of_m(2.0 / 3.0);
    CHECK(three.mean(sigma).mean() == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    // mean(1) = (6/7 + 4/7 + 6/7)/3 = 16/21, linear in sigma
    CHECK(sigma == doctest::Approx((2.0 / 3.0) / (16.0 / 21.0)));
    const GaussianOracle coupled(chain(33, 0.3, alternating(33, 0.2)));
    CHECK(std::abs(coupled.mean(coupled.sigma_of_m(-0.4)).mean() + 0.4) < 1e-10);
  }

  TEST_CASE("covariance decays exponentially") {
    const GaussianOracle g(chain(40, 0.25));
    const auto col = g.covariance_column(0);
    std::vector<double> d, c;
    for (int k = 1; k <= 12; ++k) {
      d.push_back(k);
      c.push_back(std::abs(col(k)));
    }
    const auto fit = fit_exponential_decay(d, c, 1e-11);
    CHECK(fit.rate > 0.0);
    CHECK(std::exp(-fit.rate) < 1.0);
  }

  TEST_CASE("ce covariance difference halves with N") {
    double previous = 0.0;
    for (std::size_t n : {64, 128, 256, 512}) {
      const GaussianOracle g(chain(n, 0.3, alternating(n, 0.2)));
      const double diff = std::abs(g.ce_covariance(0, 2) - g.covariance(0, 2));
      if (previous > 0.0) CHECK(std::abs(previous / diff - 2.0) < 0.2);
      previous = diff;
    }
  }

  TEST_CASE("exact gce sampler") {
    const std::size_t n = 16;
    const GaussianOracle g(chain(n, 0.3, alternating(n, 0.2)));
    const double sigma = 0.3;
    const auto exact = g.gce_moments(sigma);
    const int draws = 200000;
    std::vector<std::vector<double>> xs(n);
    for (int k = 0; k < draws; ++k) {
      CounterRng rng(21, 0, static_cast<std::uint64_t>(k));
      const auto x = g.sample_gce(sigma, rng).x;
      for (std::size_t i = 0; i < n; ++i) xs[i].push_back(x[i]);
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto m = mc_mean(xs[i]);
      CHECK(std::abs(m.value - exact.mean(static_cast<Eigen::Index>(i))) < 4 * m.std_error);
    }
    for (std::size_t i = 0; i + 1 < n; i += 3) {
      const auto c = mc_covariance(xs[i], xs[i + 1]);
      CHECK(std::abs(c.value - exact.covariance(static_cast<Eigen::Index>(i),
                                                static_cast<Eigen::Index>(i + 1))) <
            4 * c.std_error);
    }
    CounterRng a(5, 1), b(5, 1);
    const auto xa = g.sample_gce(sigma, a).x;
    const auto xb = g.sample_gce(sigma, b).x;
    CHECK(std::memcmp(xa.data(), xb.data(), sizeof(double) * n) == 0);
  }

  TEST_CASE("standard normal marginals pass Kolmogorov-Smirnov") {
    const GaussianOracle g(chain(2, 0.0));
    std::vector<double> u;
    for (int k = 0; k < 100000; ++k) {
      CounterRng rng(17, 3, static_cast<std::uint64_t>(k));
      u.push_back(g.sample_gce(0.0, rng).x[0]);
    }
    std::sort(u.begin(), u.end());
    double d = 0.0;
    const double n = static_cast<double>(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double cdf = 0.5 * std::erfc(-u[k] / std::numbers::sqrt2);
      d = std::max({d, std::abs(cdf - k / n), std::abs((k + 1) / n - cdf)});
    }
    // p > 0.01 corresponds to sqrt(n) D < 1.628
    CHECK(std::sqrt(n) * d < 1.628);
  }

  TEST_CASE("exact ce sampler") {
    const GaussianOracle two(chain(2, 0.0));
    for (int k = 0; k < 100; ++k) {
      CounterRng rng(1, 9, static_cast<std::uint64_t>(k));
      const auto c = two.sample_ce(0.0, rng);
      CHECK(std::abs(c.x[0] + c.x[1]) < 1e-12);
      CHECK(c.satisfies_constraint());
    }
    const std::size_t n = 8;
    const GaussianOracle g(chain(n, 0.3, alternating(n, 0.2)));
    const auto exact = g.ce_moments(0.1);
    std::vector<double> a, b;
    for (int k = 0; k < 100000; ++k) {
      CounterRng rng(2, 9, static_cast<std::uint64_t>(k));
      const auto c = g.sample_ce(0.1, rng);
      REQUIRE(std::abs(c.mean() - 0.1) <= 1e-10);
      a.push_back(c.x[0]);
      b.push_back(c.x[1]);
    }
    const auto cov = mc_covariance(a, b);
    CHECK(std::abs(cov.value - exact.covariance(0, 1)) < 4 * cov.std_error);
  }
}
