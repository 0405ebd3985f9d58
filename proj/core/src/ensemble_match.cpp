#include "spinchain/ensemble_match.hpp"

#include <cmath>

#include "spinchain/estimators.hpp"
#include "spinchain/gaussian_oracle.hpp"

namespace spinchain {

std::string_view to_string(MatchBackend backend) {
  switch (backend) {
    case MatchBackend::ClosedForm: return "closed_form";
    case MatchBackend::Transfer: return "transfer";
    case MatchBackend::StochasticApproximation: return "stochastic_approximation";
  }
  return "unknown";
}

MatchBackend preferred_backend(const Model& model) {
  if (model.potential().is_zero()) return MatchBackend::ClosedForm;
  if (model.range() <= 1) return MatchBackend::Transfer;
  return MatchBackend::StochasticApproximation;
}

namespace {

void require_applicable(const Model& model, MatchBackend backend) {
  if (backend == MatchBackend::ClosedForm && !model.potential().is_zero()) {
    throw Error(ErrorCode::BackendInapplicable, "closed form needs psi_b = Zero");
  }
  if (backend == MatchBackend::Transfer && model.range() > 1) {
    throw Error(ErrorCode::BackendInapplicable, "transfer needs R <= 1");
  }
}

MeanSpin mcmc_mean_spin(const Model& model, double sigma, std::uint64_t sweeps,
                        std::uint64_t seed, std::uint32_t chain) {
  auto config = SamplerConfig::defaults(Ensemble::Gce, sweeps, seed);
  config.chain_id = chain;
  std::vector<double> trace;
  trace.reserve(sweeps);
  run_chain(model, Ensemble::Gce, sigma, config,
            [&](const ChainState& s) { trace.push_back(s.config.mean()); });
  const auto est = mc_mean(trace);
  return {est.value, est.std_error};
}

}  // namespace

MatchResult sigma_of_m(const Model& model, double m, MatchBackend backend,
                       const MatchOptions& options) {
  require_applicable(model, backend);
  MatchResult out;
  out.m = m;
  out.backend = backend;
  switch (backend) {
    case MatchBackend::ClosedForm: {
      const GaussianOracle oracle(model);
      out.sigma = oracle.sigma_of_m(m);
      out.achieved_mean = oracle.mean(out.sigma).mean();
      out.iterations = 1;
      break;
    }
    case MatchBackend::Transfer: {
      const TransferEngine engine(model, options.transfer);
      const auto match = engine.sigma_of_m(m);
      out.sigma = match.sigma;
      out.achieved_mean = match.achieved_mean;
      out.iterations = match.iterations;
      break;
    }
    case MatchBackend::StochasticApproximation: {
      double sigma = m;
      for (double s : model.field()) sigma += s / static_cast<double>(model.size());
      for (int k = 0; k < options.max_iterations; ++k) {
        const auto est = mcmc_mean_spin(model, sigma, options.sweeps_per_iterate, options.seed,
                                        static_cast<std::uint32_t>(k));
        out.sigma = sigma;
        out.achieved_mean = est.value;
        out.std_error = est.std_error;
        out.iterations = k + 1;
        const double residual = m - est.value;
        const double half_width = 3.0 * est.std_error;
        if (std::abs(residual) <= half_width && half_width < options.tolerance) break;
        if (k + 1 == options.max_iterations) {
          throw Error(ErrorCode::NoConvergence,
                      "stochastic approximation did not settle within " +
                          std::to_string(options.max_iterations) + " iterations");
        }
        sigma += options.gain / (1.0 + k / options.gain_decay) * residual;
      }
      break;
    }
  }
  out.residual = std::abs(out.achieved_mean - m);
  return out;
}

MeanSpin mean_spin(const Model& model, double sigma, MatchBackend backend,
                   const MatchOptions& options) {
  require_applicable(model, backend);
  switch (backend) {
    case MatchBackend::ClosedForm:
      return {GaussianOracle(model).mean(sigma).mean(), 0.0};
    case MatchBackend::Transfer:
      return {TransferEngine(model, options.transfer).gce_mean_spin(sigma), 0.0};
    case MatchBackend::StochasticApproximation:
      return mcmc_mean_spin(model, sigma, options.sweeps_per_iterate, options.seed, 0);
  }
  return {};
}

double free_energy(const Model& model, double sigma, MatchBackend backend,
                   const MatchOptions& options) {
  require_applicable(model, backend);
  switch (backend) {
    case MatchBackend::ClosedForm:
      return GaussianOracle(model).free_energy(sigma);
    case MatchBackend::Transfer:
      return TransferEngine(model, options.transfer).gce_log_partition(sigma) /
             static_cast<double>(model.size());
    case MatchBackend::StochasticApproximation:
      break;
  }
  throw Error(ErrorCode::BackendInapplicable,
              "free energy needs the closed-form or transfer backend");
}

double legendre_transform(const Model& model, double m, MatchBackend backend,
                          const MatchOptions& options) {
  if (backend == MatchBackend::StochasticApproximation) {
    throw Error(ErrorCode::BackendInapplicable,
                "Legendre transform needs the closed-form or transfer backend");
  }
  const auto match = sigma_of_m(model, m, backend, options);
  return match.sigma * m - free_energy(model, match.sigma, backend, options);
}

}  // namespace spinchain
