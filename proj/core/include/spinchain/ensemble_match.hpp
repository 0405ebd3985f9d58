#pragma once

#include <cstdint>
#include <string_view>

#include "spinchain/model.hpp"
#include "spinchain/samplers.hpp"
#include "spinchain/transfer.hpp"

namespace spinchain {

enum class MatchBackend { ClosedForm, Transfer, StochasticApproximation };

std::string_view to_string(MatchBackend backend);
/// ClosedForm for psi_b = Zero, else Transfer for R <= 1, else StochasticApproximation.
MatchBackend preferred_backend(const Model& model);

struct MatchOptions {
  TransferOptions transfer;
  // Stochastic approximation: sigma_{k+1} = sigma_k + a0 / (1 + k / tau) (m - m_hat).
  double gain = 1.0;
  double gain_decay = 10.0;
  int max_iterations = 60;
  std::uint64_t sweeps_per_iterate = 200000;
  /// Stop once the 3-SE interval of the residual contains 0 and is narrower than 2 tol.
  double tolerance = 1e-2;
  std::uint64_t seed = 1;
};

struct MatchResult {
  double sigma = 0.0;
  double m = 0.0;
  double achieved_mean = 0.0;
  double residual = 0.0;
  /// Standard error of achieved_mean (zero for deterministic backends).
  double std_error = 0.0;
  MatchBackend backend = MatchBackend::ClosedForm;
  int iterations = 0;
};

/// Throws BackendInapplicable or NoConvergence.
MatchResult sigma_of_m(const Model& model, double m, MatchBackend backend,
                       const MatchOptions& options = {});

struct MeanSpin {
  double value = 0.0;
  double std_error = 0.0;
};

MeanSpin mean_spin(const Model& model, double sigma, MatchBackend backend,
                   const MatchOptions& options = {});

/// A_gce(sigma) = log Z / N; ClosedForm or Transfer only.
double free_energy(const Model& model, double sigma, MatchBackend backend,
                   const MatchOptions& options = {});

/// H_N(m) = sigma(m) m - A_gce(sigma(m)).
double legendre_transform(const Model& model, double m, MatchBackend backend,
                          const MatchOptions& options = {});

}  // namespace spinchain
