#pragma once

// Metropolis samplers. The gce chain uses random-scan single-site moves; the
// ce chain uses pair exchanges (x_i + eta, x_j - eta), which keep sum x_i fixed
// and never look at sigma.
//
// Every draw of move `k` in sweep `t` comes from CounterRng(seed, chain_id, t,
// k << 3), so a trajectory depends only on (seed, chain_id, config).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <vector>

#include "spinchain/model.hpp"

namespace spinchain {

enum class Ensemble { Gce, Ce };

struct SamplerConfig {
  std::uint64_t n_sweeps = 100000;  // including burn-in
  std::uint64_t burn_in_sweeps = 20000;
  std::uint64_t thin = 1;
  double target_acceptance = 0.44;
  std::uint64_t seed = 1;
  std::uint32_t chain_id = 0;
  std::uint64_t reproject_every = 1000;
  double initial_step = 1.0;
  /// Sweeps per adaptation window during burn-in.
  std::uint64_t adapt_window = 50;

  /// Burn-in 20% (at least 10^4 but below n_sweeps), target 0.44 gce / 0.30 ce.
  static SamplerConfig defaults(Ensemble ensemble, std::uint64_t n_sweeps,
                                std::uint64_t seed = 1);
  /// Throws InvalidSamplerConfig.
  void validate() const;
};

struct ChainState {
  Ensemble ensemble = Ensemble::Gce;
  SpinConfig config;
  /// Per-site widths for the gce, a single width for the ce.
  std::vector<double> step_sizes;
  std::vector<std::uint64_t> window_proposed;
  std::vector<std::uint64_t> window_accepted;
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  std::uint64_t sweep = 0;
  std::uint64_t adapt_round = 0;
  bool frozen = false;
  std::uint64_t seed = 0;
  std::uint32_t chain_id = 0;
  double largest_reprojection = 0.0;

  double acceptance_rate() const {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  }
};

/// gce: all sites 0. ce: all sites m, tagged MeanSpin(m).
ChainState initialize(const Model& model, Ensemble ensemble, double m,
                      const SamplerConfig& config);

void gce_sweep(const Model& model, double sigma, ChainState& state);
void ce_sweep(const Model& model, ChainState& state);

/// log h <- log h + k^{-0.6} (acceptance - target); no-op once frozen.
void adapt(ChainState& state, std::span<const double> window_acceptance, double target);

/// Shifts x by (m - mean) 1 and returns the per-site displacement.
/// Throws DriftTooLarge above 1e-6.
double reproject(ChainState& state, double m);

struct RunSummary {
  std::uint64_t samples = 0;
  double acceptance = 0.0;  // post burn-in
  std::vector<double> step_sizes;
  double largest_reprojection = 0.0;
};

using SampleCallback = std::function<void(const ChainState&)>;

/// Runs burn-in (with adaptation) then the production sweeps, invoking
/// `on_sample` every `thin` production sweeps. `parameter` is sigma for the
/// gce and m for the ce.
RunSummary run_chain(const Model& model, Ensemble ensemble, double parameter,
                     const SamplerConfig& config, const SampleCallback& on_sample);

/// Binary trace: little-endian u64 header (N, stride, count) then count * N f64.
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, std::uint64_t size, std::uint64_t stride);
  ~TraceWriter();
  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  void write(std::span<const double> x);
  void close();
  std::uint64_t count() const { return count_; }

 private:
  std::ofstream out_;
  std::uint64_t size_;
  std::uint64_t count_ = 0;
};

struct Trace {
  std::uint64_t size = 0;
  std::uint64_t stride = 0;
  std::vector<double> values;  // row-major, count * size
  std::uint64_t count() const { return size == 0 ? 0 : values.size() / size; }
};

Trace read_trace(const std::filesystem::path& path);

}  // namespace spinchain
