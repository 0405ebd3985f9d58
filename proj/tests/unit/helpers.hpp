#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <doctest.h>

#include "spinchain/errors.hpp"

#include "spinchain/model.hpp"

namespace testing {

using spinchain::InteractionMatrix;
using spinchain::Model;
using spinchain::ModelSpec;
using spinchain::SingleSitePotential;

inline ModelSpec chain_spec(std::size_t n, double coupling, std::vector<double> field = {},
                            SingleSitePotential potential = SingleSitePotential::zero(),
                            double sigma = 0.0, std::size_t range = 1) {
  if (field.empty()) field.assign(n, 0.0);
  return ModelSpec{InteractionMatrix::uniform(n, range, coupling), potential, std::move(field),
                   sigma};
}

inline Model chain(std::size_t n, double coupling, std::vector<double> field = {},
                   SingleSitePotential potential = SingleSitePotential::zero(),
                   double sigma = 0.0, std::size_t range = 1) {
  return Model(chain_spec(n, coupling, std::move(field), potential, sigma, range));
}

inline std::vector<double> alternating(std::size_t n, double v) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = i % 2 == 0 ? v : -v;
  return s;
}

inline SingleSitePotential cosine() { return SingleSitePotential::cosine(1.0, 2.0); }

/// Runs `fn` and checks it throws spinchain::Error with `code`.
template <typename Fn>
void check_error(Fn&& fn, spinchain::ErrorCode code) {
  try {
    fn();
    FAIL("expected " << std::string(spinchain::to_string(code)));
  } catch (const spinchain::Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace testing
