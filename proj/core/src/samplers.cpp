#include "spinchain/samplers.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "spinchain/rng.hpp"

namespace spinchain {

SamplerConfig SamplerConfig::defaults(Ensemble ensemble, std::uint64_t n_sweeps,
                                      std::uint64_t seed) {
  SamplerConfig c;
  c.n_sweeps = n_sweeps;
  c.burn_in_sweeps = std::max<std::uint64_t>(n_sweeps / 5, 10000);
  if (c.burn_in_sweeps >= n_sweeps) c.burn_in_sweeps = n_sweeps / 5;
  c.target_acceptance = ensemble == Ensemble::Gce ? 0.44 : 0.30;
  c.seed = seed;
  return c;
}

void SamplerConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw Error(ErrorCode::InvalidSamplerConfig, what);
  };
  if (n_sweeps == 0) fail("n_sweeps must be positive");
  if (burn_in_sweeps >= n_sweeps) fail("burn_in_sweeps must be below n_sweeps");
  if (thin < 1) fail("thin must be >= 1");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) {
    fail("target_acceptance must lie in (0, 1)");
  }
  if (!(initial_step > 0.0) || !std::isfinite(initial_step)) {
    fail("initial proposal width must be positive");
  }
  if (adapt_window == 0) fail("adapt_window must be positive");
}

ChainState initialize(const Model& model, Ensemble ensemble, double m,
                      const SamplerConfig& config) {
  config.validate();
  ChainState s;
  s.ensemble = ensemble;
  const std::size_t n = model.size();
  const std::size_t widths = ensemble == Ensemble::Gce ? n : 1;
  s.step_sizes.assign(widths, config.initial_step);
  s.window_proposed.assign(widths, 0);
  s.window_accepted.assign(widths, 0);
  s.seed = config.seed;
  s.chain_id = config.chain_id;
  if (ensemble == Ensemble::Gce) {
    s.config.x.assign(n, 0.0);
  } else {
    s.config.x.assign(n, m);
    s.config.mean_constraint = m;
  }
  return s;
}

void gce_sweep(const Model& model, double sigma, ChainState& state) {
  const std::size_t n = model.size();
  auto& x = state.config.x;
  for (std::size_t move = 0; move < n; ++move) {
    CounterRng rng(state.seed, state.chain_id, state.sweep, std::uint64_t{move} << 3);
    const auto i = static_cast<std::size_t>(rng.below(n));
    const double proposal = x[i] + state.step_sizes[i] * rng.normal();
    const double delta = energy_delta_single(model, sigma, x, i, proposal);
    ++state.window_proposed[i];
    ++state.proposed;
    if (delta <= 0.0 || rng.uniform() < std::exp(-delta)) {
      x[i] = proposal;
      ++state.window_accepted[i];
      ++state.accepted;
    }
  }
  ++state.sweep;
}

void ce_sweep(const Model& model, ChainState& state) {
  const std::size_t n = model.size();
  auto& x = state.config.x;
  if (n < 2) {
    ++state.sweep;
    return;
  }
  const double h = state.step_sizes[0];
  for (std::size_t move = 0; move < n; ++move) {
    CounterRng rng(state.seed, state.chain_id, state.sweep, std::uint64_t{move} << 3);
    const auto i = static_cast<std::size_t>(rng.below(n));
    auto j = static_cast<std::size_t>(rng.below(n - 1));
    if (j >= i) ++j;
    const double eta = h * rng.normal();
    const double delta = energy_delta_pair(model, x, i, j, eta);
    ++state.window_proposed[0];
    ++state.proposed;
    if (delta <= 0.0 || rng.uniform() < std::exp(-delta)) {
      x[i] += eta;
      x[j] -= eta;
      ++state.window_accepted[0];
      ++state.accepted;
    }
  }
  ++state.sweep;
}

void adapt(ChainState& state, std::span<const double> window_acceptance, double target) {
  if (state.frozen) return;
  if (window_acceptance.size() != state.step_sizes.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one acceptance rate per proposal width");
  }
  ++state.adapt_round;
  const double gain = std::pow(static_cast<double>(state.adapt_round), -0.6);
  for (std::size_t k = 0; k < state.step_sizes.size(); ++k) {
    state.step_sizes[k] *= std::exp(gain * (window_acceptance[k] - target));
  }
}

double reproject(ChainState& state, double m) {
  const double displacement = m - state.config.mean();
  if (std::abs(displacement) > 1e-6) {
    throw Error(ErrorCode::DriftTooLarge,
                "mean-spin drift " + std::to_string(displacement) + " exceeds 1e-6");
  }
  for (double& v : state.config.x) v += displacement;
  state.largest_reprojection = std::max(state.largest_reprojection, std::abs(displacement));
  return std::abs(displacement);
}

namespace {

void close_window(ChainState& state, double target) {
  std::vector<double> rates(state.step_sizes.size());
  for (std::size_t k = 0; k < rates.size(); ++k) {
    rates[k] = state.window_proposed[k] == 0
                   ? target
                   : static_cast<double>(state.window_accepted[k]) /
                         static_cast<double>(state.window_proposed[k]);
  }
  adapt(state, rates, target);
  std::fill(state.window_proposed.begin(), state.window_proposed.end(), 0);
  std::fill(state.window_accepted.begin(), state.window_accepted.end(), 0);
}

}  // namespace

RunSummary run_chain(const Model& model, Ensemble ensemble, double parameter,
                     const SamplerConfig& config, const SampleCallback& on_sample) {
  ChainState state = initialize(model, ensemble, parameter, config);
  auto sweep = [&] {
    if (ensemble == Ensemble::Gce) {
      gce_sweep(model, parameter, state);
    } else {
      ce_sweep(model, state);
      if (config.reproject_every > 0 && state.sweep % config.reproject_every == 0) {
        reproject(state, parameter);
      }
    }
  };

  while (state.sweep < config.burn_in_sweeps) {
    sweep();
    if (state.sweep % config.adapt_window == 0) close_window(state, config.target_acceptance);
  }
  state.frozen = true;
  state.proposed = 0;
  state.accepted = 0;

  RunSummary summary;
  std::uint64_t production = 0;
  while (state.sweep < config.n_sweeps) {
    sweep();
    ++production;
    if (production % config.thin == 0) {
      on_sample(state);
      ++summary.samples;
    }
  }
  summary.acceptance = state.acceptance_rate();
  summary.step_sizes = state.step_sizes;
  summary.largest_reprojection = state.largest_reprojection;
  return summary;
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return to_little(v);
}

}  // namespace

TraceWriter::TraceWriter(const std::filesystem::path& path, std::uint64_t size,
                         std::uint64_t stride)
    : out_(path, std::ios::binary | std::ios::trunc), size_(size) {
  if (!out_) throw Error(ErrorCode::Io, "cannot open trace file " + path.string());
  put(out_, size);
  put(out_, stride);
  put(out_, std::uint64_t{0});
}

TraceWriter::~TraceWriter() {
  try {
    close();
  } catch (...) {
  }
}

void TraceWriter::write(std::span<const double> x) {
  if (x.size() != size_) throw Error(ErrorCode::DimensionMismatch, "trace row length");
  for (double v : x) put(out_, v);
  ++count_;
}

void TraceWriter::close() {
  if (!out_.is_open()) return;
  out_.seekp(2 * sizeof(std::uint64_t));
  put(out_, count_);
  out_.close();
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open trace file " + path.string());
  Trace t;
  t.size = get<std::uint64_t>(in);
  t.stride = get<std::uint64_t>(in);
  const auto count = get<std::uint64_t>(in);
  t.values.resize(count * t.size);
  for (double& v : t.values) v = get<double>(in);
  if (!in) throw Error(ErrorCode::Io, "truncated trace file " + path.string());
  return t;
}

}  // namespace spinchain
