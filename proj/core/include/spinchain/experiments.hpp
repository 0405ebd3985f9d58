#pragma once

// Experiment registry. Each experiment sweeps a parameter of the configured
// model family, records a raw table and returns verdicts with their thresholds.
// Per-experiment knobs are read from a config section named after the
// experiment id (without the "exp-" prefix), e.g. [observable-scaling].

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "spinchain/config.hpp"
#include "spinchain/report.hpp"
#include "spinchain/transfer.hpp"

namespace spinchain {

struct ExperimentContext {
  ModelConfig config = ModelConfig::default_model();
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool verbose = false;
  /// Per-xi diagnostics land here when verbose.
  std::filesystem::path out_dir;

  TransferOptions transfer_options(const std::string& tag = "") const;
  double mean_spin() const;

  double number(const std::string& section, const std::string& key, double fallback) const;
  std::size_t count(const std::string& section, const std::string& key,
                    std::size_t fallback) const;
  std::vector<std::size_t> sizes(const std::string& section, const std::string& key,
                                 std::vector<std::size_t> fallback) const;
};

ExperimentReport exp_observable_scaling(const ExperimentContext& ctx);
ExperimentReport exp_correlation_scaling(const ExperimentContext& ctx);
ExperimentReport exp_ce_spin_decay(const ExperimentContext& ctx);
ExperimentReport exp_gce_decay(const ExperimentContext& ctx);
ExperimentReport exp_g0_stability(const ExperimentContext& ctx);
ExperimentReport exp_moment_scaling(const ExperimentContext& ctx);
ExperimentReport exp_variance_band(const ExperimentContext& ctx);
ExperimentReport exp_sampler_check(const ExperimentContext& ctx);
ExperimentReport exp_mean_conservation(const ExperimentContext& ctx);
/// Gaussian closed form vs quadrature vs transfer.
ExperimentReport oracle_triangle(const ExperimentContext& ctx);
/// Fourier ce formulas vs brute-force ce quadrature at N = 3.
ExperimentReport fourier_identity(const ExperimentContext& ctx);

struct ExperimentEntry {
  std::string id;
  std::string claim;
  std::function<ExperimentReport(const ExperimentContext&)> run;
};

const std::vector<ExperimentEntry>& experiment_registry();
const ExperimentEntry* find_experiment(const std::string& id);

}  // namespace spinchain
