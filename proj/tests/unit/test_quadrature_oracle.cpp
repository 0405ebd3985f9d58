#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "spinchain/errors.hpp"
#include "spinchain/gaussian_oracle.hpp"
#include "spinchain/quadrature_oracle.hpp"

using namespace spinchain;
using namespace testing;

TEST_SUITE("quadrature_oracle") {
  TEST_CASE("grid validation and dimension limit") {
    QuadratureSpec q;
    q.nodes = 8;
    CHECK_THROWS_AS(q.validate(), Error);
    QuadratureSpec small;
    small.half_width = 4.0;
    CHECK_THROWS_AS(small.validate(), Error);
    try {
      gce_expectation_bruteforce(chain(5, 0.1), 0.0, Observable::spin(0));
      FAIL("expected DimensionTooLarge");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DimensionTooLarge);
    }
  }

  TEST_CASE("Gaussian gce agreement") {
    const auto model = chain(3, 0.25, {0.1, 0.0, -0.1});
    const GaussianOracle g(model);
    const double sigma = 0.4;
    const auto mom = g.gce_moments(sigma);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(gce_expectation_bruteforce(model, sigma, Observable::spin(i)) -
                     mom.mean(static_cast<Eigen::Index>(i))) < 1e-7);
      for (std::size_t j = i; j < 3; ++j) {
        CHECK(std::abs(gce_covariance_bruteforce(model, sigma, Observable::spin(i),
                                                 Observable::spin(j)) -
                       mom.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) <
              1e-7);
      }
    }
    CHECK(std::abs(gce_log_partition_bruteforce(model, sigma) - 3 * g.free_energy(sigma)) < 1e-6);
  }

  TEST_CASE("normalisation and odd symmetry") {
    const auto model = chain(3, 0.3, {}, cosine());
    CHECK(gce_expectation_bruteforce(model, 0.2, Observable::constant(1.0)) ==
          doctest::Approx(1.0).epsilon(1e-12));
    const auto odd =
        Observable::linear_combination(1.0, Observable::spin(0), 1.0, Observable::spin(2));
    CHECK(std::abs(gce_expectation_bruteforce(model, 0.0, odd)) < 1e-9);
  }

  TEST_CASE("self-convergence under refinement") {
    const auto model = chain(3, 0.3, {0.2, -0.2, 0.2}, cosine());
    QuadratureSpec q;
    const auto fine = q.refined(1.5);
    const auto f = Observable::site_function(1, [](double x) { return std::sin(x); }, 1.0);
    CHECK(std::abs(gce_expectation_bruteforce(model, 0.3, f, q) -
                   gce_expectation_bruteforce(model, 0.3, f, fine)) < 1e-7);
    CHECK(std::abs(ce_expectation_bruteforce(model, 0.1, f, q) -
                   ce_expectation_bruteforce(model, 0.1, f, fine)) < 1e-6);
  }

  TEST_CASE("ce examples") {
    const auto two = chain(2, 0.0);
    CHECK(std::abs(ce_expectation_bruteforce(two, 0.0, Observable::spin(0))) < 1e-12);

    const auto model = chain(3, 0.25, {0.1, 0.0, -0.1});
    const GaussianOracle g(model);
    const auto ce = g.ce_moments(0.2);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(std::abs(ce_expectation_bruteforce(model, 0.2, Observable::spin(i)) -
                     ce.mean(static_cast<Eigen::Index>(i))) < 1e-6);
      for (std::size_t j = i; j < 3; ++j) {
        CHECK(std::abs(ce_covariance_bruteforce(model, 0.2, Observable::spin(i),
                                                Observable::spin(j)) -
                       ce.covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) <
              1e-6);
      }
    }

    const auto cos_model = chain(3, 0.3, alternating(3, 0.2), cosine());
    CHECK(ce_expectation_bruteforce(cos_model, 0.15, Observable::window_mean(0, 2)) ==
          doctest::Approx(0.15).epsilon(1e-10));
    const auto f = Observable::site_function(0, [](double x) { return std::cos(x); }, 1.0);
    CHECK(std::abs(ce_covariance_bruteforce(cos_model, 0.15, f, Observable::window_sum(0, 2))) <
          1e-8);
  }

  TEST_CASE("symmetric Cosine model satisfies the ce pair identity") {
    // N = 3 with all pairs equally coupled and a constant field.
    InteractionMatrix m(3, 2);
    m.set_coupling(0, 1, 0.2);
    m.set_coupling(1, 2, 0.2);
    m.set_coupling(0, 2, 0.2);
    const Model model(ModelSpec{m, cosine(), {0.1, 0.1, 0.1}, 0.0});
    const double var = ce_covariance_bruteforce(model, 0.2, Observable::spin(0), Observable::spin(0));
    const double cov = ce_covariance_bruteforce(model, 0.2, Observable::spin(0), Observable::spin(1));
    CHECK(std::abs(cov + var / 2) < 1e-6);
  }
}
