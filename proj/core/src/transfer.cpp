#include "spinchain/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <mutex>
#include <thread>

#include "spinchain/numerics.hpp"

namespace spinchain {

namespace transfer_detail {

using Cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using RowMat2 = Eigen::Matrix<double, Eigen::Dynamic, 2, Eigen::RowMajor>;

/// out = K in, with K real and `in` complex (viewed as an n x 2 real matrix).
void apply_kernel(const Eigen::MatrixXd& kernel, const Vec& in, Vec& out) {
  const auto n = in.size();
  out.resize(n);
  Eigen::Map<const RowMat2> src(reinterpret_cast<const double*>(in.data()), n, 2);
  Eigen::Map<RowMat2> dst(reinterpret_cast<double*>(out.data()), n, 2);
  dst.noalias() = kernel * src;
}

/// Divides by the largest modulus and returns its log (0 for a zero vector).
double renormalize(Vec& v) {
  const double peak = v.cwiseAbs().maxCoeff();
  if (!(peak > 0.0) || !std::isfinite(peak)) return 0.0;
  v /= peak;
  return std::log(peak);
}

/// mantissa * exp(log_scale)
struct Scaled {
  Cplx mantissa{0.0, 0.0};
  double log_scale = 0.0;
};

Cplx ratio(const Scaled& a, const Scaled& b) {
  if (a.mantissa == Cplx{0.0, 0.0}) return {0.0, 0.0};
  return a.mantissa / b.mantissa * std::exp(a.log_scale - b.log_scale);
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::mutex failure_mutex;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += threads) fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct FourierRun {
  std::vector<Cplx> integrals;  // integrals[0] is int cf
  double xi_max = 0.0;
};

}  // namespace transfer_detail

using namespace transfer_detail;

TransferGrid TransferGrid::gauss_legendre(double half_width, std::size_t count) {
  const auto rule = GaussLegendreRule::on_interval(-half_width, half_width, count);
  return TransferGrid{rule.nodes, rule.weights, half_width};
}

// ---------------------------------------------------------------------------

struct TransferEngine::Impl {
  struct Chain {
    std::vector<Vec> weight;  // quadrature weight folded in
  };

  struct Pass {
    std::vector<Vec> fwd;
    std::vector<double> fwd_log;
    std::vector<Vec> bwd;
    std::vector<double> bwd_log;
    Scaled partition;
  };

  std::size_t sites = 0;
  Eigen::Index nodes = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd base_log_weight;  // log q - psi_b(x) - x^2/2
  std::vector<double> field;
  std::vector<Eigen::MatrixXd> kernels;
  std::vector<std::size_t> bond_kernel;  // bond k -> kernels index

  Impl(const Model& model, const TransferGrid& grid) {
    sites = model.size();
    nodes = static_cast<Eigen::Index>(grid.size());
    x = Eigen::Map<const Eigen::VectorXd>(grid.nodes.data(), nodes);
    base_log_weight.resize(nodes);
    for (Eigen::Index a = 0; a < nodes; ++a) {
      base_log_weight(a) =
          std::log(grid.weights[static_cast<std::size_t>(a)]) - model.potential().full(x(a));
    }
    field.assign(model.field().begin(), model.field().end());

    std::map<double, std::size_t> by_coupling;
    for (std::size_t k = 0; k + 1 < sites; ++k) {
      const double c = model.interaction()(k, k + 1);
      auto [it, inserted] = by_coupling.try_emplace(c, kernels.size());
      if (inserted) {
        Eigen::MatrixXd kernel(nodes, nodes);
        for (Eigen::Index r = 0; r < nodes; ++r) {
          for (Eigen::Index col = 0; col < nodes; ++col) {
            kernel(r, col) = std::exp(-c * x(r) * x(col));
          }
        }
        kernels.push_back(std::move(kernel));
      }
      bond_kernel.push_back(it->second);
    }
  }

  const Eigen::MatrixXd& kernel(std::size_t bond) const { return kernels[bond_kernel[bond]]; }

  Chain build_chain(double sigma, double xi, std::span<const double> means) const {
    Chain chain;
    chain.weight.resize(sites);
    const double scale = xi / std::sqrt(static_cast<double>(sites));
    for (std::size_t k = 0; k < sites; ++k) {
      Vec w(nodes);
      const double centre = means.empty() ? 0.0 : means[k];
      for (Eigen::Index a = 0; a < nodes; ++a) {
        const double magnitude = std::exp(base_log_weight(a) - (field[k] - sigma) * x(a));
        w(a) = std::polar(magnitude, scale * (x(a) - centre));
      }
      chain.weight[k] = std::move(w);
    }
    return chain;
  }

  Pass run(const Chain& chain, bool backward) const {
    Pass pass;
    pass.fwd.resize(sites);
    pass.fwd_log.resize(sites);
    Vec tmp(nodes);
    pass.fwd[0] = chain.weight[0];
    pass.fwd_log[0] = renormalize(pass.fwd[0]);
    for (std::size_t k = 1; k < sites; ++k) {
      apply_kernel(kernel(k - 1), pass.fwd[k - 1], tmp);
      pass.fwd[k] = chain.weight[k].cwiseProduct(tmp);
      pass.fwd_log[k] = pass.fwd_log[k - 1] + renormalize(pass.fwd[k]);
    }
    pass.partition = {pass.fwd[sites - 1].sum(), pass.fwd_log[sites - 1]};

    if (backward) {
      pass.bwd.resize(sites);
      pass.bwd_log.resize(sites);
      pass.bwd[sites - 1] = Vec::Ones(nodes);
      pass.bwd_log[sites - 1] = 0.0;
      for (std::size_t k = sites - 1; k-- > 0;) {
        const Vec carried = chain.weight[k + 1].cwiseProduct(pass.bwd[k + 1]);
        apply_kernel(kernel(k), carried, pass.bwd[k]);
        pass.bwd_log[k] = pass.bwd_log[k + 1] + renormalize(pass.bwd[k]);
      }
    }
    return pass;
  }

  Eigen::VectorXd on_nodes(const SiteFn& fn) const {
    Eigen::VectorXd v(nodes);
    for (Eigen::Index a = 0; a < nodes; ++a) v(a) = fn(x(a));
    return v;
  }

  /// <phi(X_k)> against the pass, unnormalised.
  Scaled site_value(const Pass& pass, std::size_t k, const Eigen::VectorXd& phi) const {
    const Cplx v = (pass.fwd[k].array() * phi.array().cast<Cplx>() * pass.bwd[k].array()).sum();
    return {v, pass.fwd_log[k] + pass.bwd_log[k]};
  }

  Scaled term_value(const Chain& chain, const Pass& pass, const ProductTerm& term) const {
    if (term.is_constant()) {
      return {term.coefficient * pass.partition.mantissa, pass.partition.log_scale};
    }
    const std::size_t first = term.first_site();
    const std::size_t last = term.last_site();
    if (last >= sites) {
      throw Error(ErrorCode::DimensionMismatch, "observable support exceeds lattice", last);
    }
    auto site_factor = [&](std::size_t k) {
      Eigen::VectorXd phi = Eigen::VectorXd::Ones(nodes);
      for (const auto& f : term.sites) {
        if (f.site == k) phi = phi.cwiseProduct(on_nodes(f.fn));
      }
      return phi;
    };

    Vec v = pass.fwd[first].cwiseProduct(site_factor(first).cast<Cplx>());
    double log_scale = pass.fwd_log[first];
    Vec tmp(nodes);
    for (std::size_t k = first + 1; k <= last; ++k) {
      const ProductTerm::BondFactor* bond = nullptr;
      for (const auto& b : term.bonds) {
        if (b.left == k - 1) bond = &b;
      }
      if (bond) {
        Eigen::MatrixXd modified = kernel(k - 1);
        // (K v)(y) = sum_x K(y, x) v(x): column index is the left site.
        for (Eigen::Index col = 0; col < nodes; ++col) {
          for (Eigen::Index r = 0; r < nodes; ++r) modified(r, col) *= bond->fn(x(col), x(r));
        }
        apply_kernel(modified, v, tmp);
      } else {
        apply_kernel(kernel(k - 1), v, tmp);
      }
      v = chain.weight[k].cwiseProduct(tmp).cwiseProduct(site_factor(k).cast<Cplx>());
      log_scale += renormalize(v);
    }
    const Cplx value = v.cwiseProduct(pass.bwd[last]).sum();
    return {term.coefficient * value, log_scale + pass.bwd_log[last]};
  }

  Cplx expectation(const Chain& chain, const Pass& pass, const Observable& f,
                   const Scaled& reference) const {
    Cplx acc{0.0, 0.0};
    for (const auto& t : f.terms()) acc += ratio(term_value(chain, pass, t), reference);
    return acc;
  }

  std::vector<double> site_means(const Pass& pass) const {
    std::vector<double> means(sites);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(nodes);
    for (std::size_t k = 0; k < sites; ++k) {
      means[k] = ratio(site_value(pass, k, x), site_value(pass, k, ones)).real();
    }
    return means;
  }

  /// E[(sum_{k in block} (X_k - m_k))^r], r = 0..order, by carrying one
  /// vector per power through the block with binomial mixing.
  std::vector<double> block_moments(const Chain& chain, const Pass& pass,
                                    std::span<const double> means, std::size_t first,
                                    std::size_t last, int order) const {
    const auto powers = static_cast<std::size_t>(order + 1);
    std::vector<std::vector<double>> binom(powers, std::vector<double>(powers, 0.0));
    for (std::size_t r = 0; r < powers; ++r) {
      binom[r][0] = 1.0;
      for (std::size_t q = 1; q <= r; ++q) {
        binom[r][q] = binom[r - 1][q - 1] + (q < r ? binom[r - 1][q] : 0.0);
      }
    }
    auto centred_powers = [&](std::size_t k) {
      std::vector<Eigen::VectorXd> y(powers, Eigen::VectorXd::Ones(nodes));
      const Eigen::VectorXd shifted = x.array() - means[k];
      for (std::size_t r = 1; r < powers; ++r) y[r] = y[r - 1].cwiseProduct(shifted);
      return y;
    };

    std::vector<Vec> p(powers);
    {
      const auto y = centred_powers(first);
      for (std::size_t r = 0; r < powers; ++r) {
        p[r] = pass.fwd[first].cwiseProduct(y[r].cast<Cplx>());
      }
    }
    double log_scale = pass.fwd_log[first];
    std::vector<Vec> carried(powers, Vec(nodes));
    for (std::size_t k = first + 1; k <= last; ++k) {
      for (std::size_t r = 0; r < powers; ++r) apply_kernel(kernel(k - 1), p[r], carried[r]);
      const auto y = centred_powers(k);
      for (std::size_t r = 0; r < powers; ++r) {
        Vec mixed = Vec::Zero(nodes);
        for (std::size_t q = 0; q <= r; ++q) {
          mixed += binom[r][q] * y[r - q].cast<Cplx>().cwiseProduct(carried[q]);
        }
        p[r] = chain.weight[k].cwiseProduct(mixed);
      }
      const double peak = p[0].cwiseAbs().maxCoeff();
      if (peak > 0.0) {
        for (auto& v : p) v /= peak;
        log_scale += std::log(peak);
      }
    }
    std::vector<double> out(powers);
    const Scaled norm{p[0].cwiseProduct(pass.bwd[last]).sum(), log_scale + pass.bwd_log[last]};
    for (std::size_t r = 0; r < powers; ++r) {
      const Scaled value{p[r].cwiseProduct(pass.bwd[last]).sum(), norm.log_scale};
      out[r] = ratio(value, norm).real();
    }
    return out;
  }

  /// Integrates per-node vectors whose first entry is the characteristic
  /// function; `node_values(chain, pass)` normalises by the xi = 0 partition.
  template <typename NodeFn>
  FourierRun fourier(const TransferOptions& options, double sigma, std::span<const double> means,
                     const Scaled& z0, bool need_backward, std::size_t width,
                     NodeFn&& node_values) const {
    const Impl& impl = *this;
  FourierQuadrature fq = options.fourier;
  for (int enlargement = 0;; ++enlargement) {
    double tail = 0.0;
    for (double xi : {-fq.xi_max, fq.xi_max}) {
      const auto chain = impl.build_chain(sigma, xi, means);
      tail = std::max(tail, std::abs(ratio(impl.run(chain, false).partition, z0)));
    }
    if (tail < fq.tail_tolerance) break;
    if (enlargement == fq.max_enlargements) {
      throw Error(ErrorCode::FourierTruncationInsufficient,
                  "|cf(+-" + std::to_string(fq.xi_max) + ")| = " + std::to_string(tail));
    }
    fq.xi_max *= 2.0;
    fq.nodes *= 2;
  }

  const auto rule = GaussLegendreRule::on_interval(-fq.xi_max, fq.xi_max, fq.nodes);
  std::vector<std::vector<Cplx>> per_node(rule.size());
  parallel_for(rule.size(), options.threads, [&](std::size_t k) {
    const auto chain = impl.build_chain(sigma, rule.nodes[k], means);
    const auto pass = impl.run(chain, need_backward);
    per_node[k] = node_values(chain, pass);
  });

  FourierRun run;
  run.xi_max = fq.xi_max;
  std::vector<CompensatedSum<double>> re(width), im(width);
  for (std::size_t k = 0; k < rule.size(); ++k) {
    for (std::size_t c = 0; c < width; ++c) {
      re[c].add(rule.weights[k] * per_node[k][c].real());
      im[c].add(rule.weights[k] * per_node[k][c].imag());
    }
  }
  for (std::size_t c = 0; c < width; ++c) run.integrals.emplace_back(re[c].value(), im[c].value());

  if (!options.diagnostics_csv.empty()) {
    std::ofstream csv(options.diagnostics_csv);
    csv << "xi,re_cf,im_cf\n";
    csv.precision(17);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      csv << rule.nodes[k] << ',' << per_node[k][0].real() << ',' << per_node[k][0].imag()
          << '\n';
    }
  }
  return run;
}
};

// ---------------------------------------------------------------------------

TransferEngine::TransferEngine(const Model& model, TransferOptions options)
    : model_(model), options_(std::move(options)) {
  if (model_.range() > 1) {
    throw Error(ErrorCode::RangeNotSupported,
                "transfer engine needs nearest-neighbour range, got R = " +
                    std::to_string(model_.range()));
  }
  if (options_.grid.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "transfer grid needs at least two nodes");
  }
  impl_ = std::make_unique<Impl>(model_, options_.grid);
}

TransferEngine::~TransferEngine() = default;
TransferEngine::TransferEngine(TransferEngine&&) noexcept = default;
TransferEngine& TransferEngine::operator=(TransferEngine&&) noexcept = default;

double TransferEngine::gce_log_partition(double sigma) const {
  const auto chain = impl_->build_chain(sigma, 0.0, {});
  const auto pass = impl_->run(chain, false);
  return std::log(pass.partition.mantissa.real()) + pass.partition.log_scale;
}

std::vector<double> TransferEngine::gce_site_means(double sigma) const {
  const auto chain = impl_->build_chain(sigma, 0.0, {});
  return impl_->site_means(impl_->run(chain, true));
}

double TransferEngine::gce_mean_spin(double sigma) const {
  const auto means = gce_site_means(sigma);
  CompensatedSum<double> acc;
  for (double v : means) acc.add(v);
  return acc.value() / static_cast<double>(means.size());
}

double TransferEngine::gce_covariance(double sigma, std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  const auto chain = impl_->build_chain(sigma, 0.0, {});
  const auto pass = impl_->run(chain, true);
  const auto means = impl_->site_means(pass);
  ProductTerm term;
  const double mi = means[i];
  const double mj = means[j];
  if (i == j) {
    term.sites.push_back({i, [mi](double z) { return (z - mi) * (z - mi); }});
  } else {
    term.sites.push_back({i, [mi](double z) { return z - mi; }});
    term.sites.push_back({j, [mj](double z) { return z - mj; }});
  }
  return ratio(impl_->term_value(chain, pass, term), pass.partition).real();
}

double TransferEngine::gce_expectation(double sigma, const Observable& f) const {
  const auto chain = impl_->build_chain(sigma, 0.0, {});
  const auto pass = impl_->run(chain, true);
  return impl_->expectation(chain, pass, f, pass.partition).real();
}

double TransferEngine::gce_covariance(double sigma, const Observable& f,
                                      const Observable& g) const {
  const auto chain = impl_->build_chain(sigma, 0.0, {});
  const auto pass = impl_->run(chain, true);
  const double ef = impl_->expectation(chain, pass, f, pass.partition).real();
  const double eg = impl_->expectation(chain, pass, g, pass.partition).real();
  const double efg =
      impl_->expectation(chain, pass, Observable::product(f, g), pass.partition).real();
  return efg - ef * eg;
}

std::vector<double> TransferEngine::gce_block_central_moments(double sigma, std::size_t first,
                                                              std::size_t last,
                                                              int order) const {
  if (first > last || last >= model_.size() || order < 0) {
    throw Error(ErrorCode::InvalidArgument, "invalid block or order", first, last);
  }
  const auto chain = impl_->build_chain(sigma, 0.0, {});
  const auto pass = impl_->run(chain, true);
  const auto means = impl_->site_means(pass);
  return impl_->block_moments(chain, pass, means, first, last, order);
}

double TransferEngine::gce_sum_variance_per_site(double sigma) const {
  const auto m = gce_block_central_moments(sigma, 0, model_.size() - 1, 2);
  return (m[2] - m[1] * m[1]) / static_cast<double>(model_.size());
}

std::complex<double> TransferEngine::characteristic_function(
    double sigma, double xi, std::span<const double> means) const {
  const auto chain0 = impl_->build_chain(sigma, 0.0, {});
  const auto pass0 = impl_->run(chain0, false);
  const auto chain = impl_->build_chain(sigma, xi, means);
  const auto pass = impl_->run(chain, false);
  return ratio(pass.partition, pass0.partition);
}

namespace {

void require_transfer_observable(const Observable& f) {
  if (!f.contiguous()) {
    throw Error(ErrorCode::NonContiguousSupport,
                "observable '" + f.name() + "' needs a contiguous support");
  }
  (void)f.terms();  // throws UnsupportedObservable for custom evaluators
}

}  // namespace

std::complex<double> TransferEngine::tilted_expectation(double sigma, double xi,
                                                        const Observable& f,
                                                        std::span<const double> means) const {
  require_transfer_observable(f);
  const auto chain0 = impl_->build_chain(sigma, 0.0, {});
  const auto pass0 = impl_->run(chain0, false);
  const auto chain = impl_->build_chain(sigma, xi, means);
  const auto pass = impl_->run(chain, true);
  return impl_->expectation(chain, pass, f, pass0.partition);
}

SigmaMatch TransferEngine::sigma_of_m(double m) const {
  auto mean_at = [&](double sigma) { return gce_mean_spin(sigma); };

  double width = 10.0;
  double lo = m - width;
  double hi = m + width;
  for (int attempt = 0;; ++attempt) {
    if (mean_at(lo) < m && mean_at(hi) > m) break;
    if (attempt == 3) {
      throw Error(ErrorCode::BracketNotFound,
                  "mean spin " + std::to_string(m) + " not bracketed by sigma in [" +
                      std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    width *= 2.0;
    lo = m - width;
    hi = m + width;
  }

  double mean_field = 0.0;
  for (double s : model_.field()) mean_field += s;
  mean_field /= static_cast<double>(model_.size());

  SigmaMatch out;
  double sigma = std::clamp(m + mean_field, lo, hi);
  for (int iter = 1; iter <= 200; ++iter) {
    out.iterations = iter;
    const auto chain = impl_->build_chain(sigma, 0.0, {});
    const auto pass = impl_->run(chain, true);
    const auto means = impl_->site_means(pass);
    CompensatedSum<double> acc;
    for (double v : means) acc.add(v);
    const double achieved = acc.value() / static_cast<double>(model_.size());
    const double residual = achieved - m;
    out.sigma = sigma;
    out.achieved_mean = achieved;
    if (std::abs(residual) < 1e-13) return out;
    (residual < 0.0 ? lo : hi) = sigma;

    const auto moments = impl_->block_moments(chain, pass, means, 0, model_.size() - 1, 2);
    const double slope =
        (moments[2] - moments[1] * moments[1]) / static_cast<double>(model_.size());
    double next = sigma - residual / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == sigma || hi - lo < 1e-15 * std::max(1.0, std::abs(sigma))) break;
    sigma = next;
  }
  if (std::abs(out.achieved_mean - m) >= 1e-9) {
    throw Error(ErrorCode::NoConvergence,
                "sigma(m) search stalled with residual " +
                    std::to_string(out.achieved_mean - m));
  }
  return out;
}

namespace {

double imag_residual(std::initializer_list<Cplx> numerators, Cplx denominator) {
  double worst = std::abs(denominator.imag());
  for (const auto& n : numerators) worst = std::max(worst, std::abs(n.imag()));
  return worst / std::abs(denominator);
}

}  // namespace

CeEstimate TransferEngine::ce_expectation_fourier(double m, const Observable& f) const {
  require_transfer_observable(f);
  const auto match = sigma_of_m(m);
  const auto chain0 = impl_->build_chain(match.sigma, 0.0, {});
  const auto pass0 = impl_->run(chain0, true);
  const auto means = impl_->site_means(pass0);
  const Scaled z0 = pass0.partition;
  const double gce_f = impl_->expectation(chain0, pass0, f, z0).real();

  const auto run = impl_->fourier(
      options_, match.sigma, means, z0, true, 2,
      [&](const Impl::Chain& chain, const Impl::Pass& pass) {
        return std::vector<Cplx>{ratio(pass.partition, z0), impl_->expectation(chain, pass, f, z0)};
      });
  const Cplx den = run.integrals[0];
  const Cplx num = run.integrals[1] - gce_f * den;

  CeEstimate out;
  out.gce = gce_f;
  out.ce = gce_f + (num / den).real();
  out.sigma = match.sigma;
  out.imag_residual = imag_residual({num}, den);
  out.xi_max = run.xi_max;
  return out;
}

CeEstimate TransferEngine::ce_covariance_fourier(double m, const Observable& f,
                                                 const Observable& g) const {
  require_transfer_observable(f);
  require_transfer_observable(g);
  const Observable fg = Observable::product(f, g);
  const auto match = sigma_of_m(m);
  const auto chain0 = impl_->build_chain(match.sigma, 0.0, {});
  const auto pass0 = impl_->run(chain0, true);
  const auto means = impl_->site_means(pass0);
  const Scaled z0 = pass0.partition;
  const double ef = impl_->expectation(chain0, pass0, f, z0).real();
  const double eg = impl_->expectation(chain0, pass0, g, z0).real();
  const double efg = impl_->expectation(chain0, pass0, fg, z0).real();

  const auto run = impl_->fourier(
      options_, match.sigma, means, z0, true, 4,
      [&](const Impl::Chain& chain, const Impl::Pass& pass) {
        return std::vector<Cplx>{ratio(pass.partition, z0), impl_->expectation(chain, pass, f, z0),
                                 impl_->expectation(chain, pass, g, z0),
                                 impl_->expectation(chain, pass, fg, z0)};
      });
  const Cplx den = run.integrals[0];
  const Cplx num_f = run.integrals[1] - ef * den;
  const Cplx num_g = run.integrals[2] - eg * den;
  const Cplx num_fg = run.integrals[3] - ef * run.integrals[2] - eg * run.integrals[1] +
                      ef * eg * den;
  const double shift_f = (num_f / den).real();
  const double shift_g = (num_g / den).real();

  CeEstimate out;
  out.gce = efg - ef * eg;
  // num_fg / den is E_ce[(f - E f)(g - E g)] with gce centring.
  out.ce = (num_fg / den).real() - shift_f * shift_g;
  out.sigma = match.sigma;
  out.imag_residual = imag_residual({num_f, num_g, num_fg}, den);
  out.xi_max = run.xi_max;
  return out;
}

std::vector<double> TransferEngine::ce_site_means_fourier(double m) const {
  const auto match = sigma_of_m(m);
  const auto chain0 = impl_->build_chain(match.sigma, 0.0, {});
  const auto pass0 = impl_->run(chain0, true);
  const auto means = impl_->site_means(pass0);
  const Scaled z0 = pass0.partition;
  const std::size_t n = model_.size();
  const Eigen::VectorXd& nodes = impl_->x;

  const auto run = impl_->fourier(
      options_, match.sigma, means, z0, true, n + 1,
      [&](const Impl::Chain&, const Impl::Pass& pass) {
        std::vector<Cplx> values(n + 1);
        values[0] = ratio(pass.partition, z0);
        for (std::size_t k = 0; k < n; ++k) {
          values[k + 1] = ratio(impl_->site_value(pass, k, nodes), z0);
        }
        return values;
      });
  const Cplx den = run.integrals[0];
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = means[k] + ((run.integrals[k + 1] - means[k] * den) / den).real();
  }
  return out;
}

std::vector<CeEstimate> TransferEngine::ce_spin_covariances_fourier(
    double m, std::size_t i, std::span<const std::size_t> others) const {
  const std::size_t n = model_.size();
  for (std::size_t j : others) {
    if (j < i || j >= n) {
      throw Error(ErrorCode::InvalidArgument, "partner sites must lie in [i, N)", i, j);
    }
  }
  std::vector<std::size_t> partners(others.begin(), others.end());
  std::sort(partners.begin(), partners.end());

  const auto match = sigma_of_m(m);
  const auto chain0 = impl_->build_chain(match.sigma, 0.0, {});
  const auto pass0 = impl_->run(chain0, true);
  const auto means = impl_->site_means(pass0);
  const Scaled z0 = pass0.partition;
  const Eigen::VectorXd centred_i = impl_->x.array() - means[i];
  const std::size_t width = 2 + 2 * partners.size();

  // cf, E[(X_i - m_i) e], then per partner j: E[(X_j - m_j) e], E[(X_i - m_i)(X_j - m_j) e].
  auto row_values = [&](const Impl::Chain& chain, const Impl::Pass& pass) {
    std::vector<Cplx> values(width);
    values[0] = ratio(pass.partition, z0);
    values[1] = ratio(impl_->site_value(pass, i, centred_i), z0);
    Vec v = pass.fwd[i].cwiseProduct(centred_i.cast<Cplx>());
    double log_scale = pass.fwd_log[i];
    std::size_t k = i;
    Vec tmp(impl_->nodes);
    for (std::size_t p = 0; p < partners.size(); ++p) {
      const std::size_t j = partners[p];
      while (k < j) {
        apply_kernel(impl_->kernel(k), v, tmp);
        ++k;
        v = chain.weight[k].cwiseProduct(tmp);
        log_scale += renormalize(v);
      }
      const Eigen::VectorXd centred_j = impl_->x.array() - means[j];
      values[2 + 2 * p] = ratio(impl_->site_value(pass, j, centred_j), z0);
      const Cplx joint = v.cwiseProduct(centred_j.cast<Cplx>()).cwiseProduct(pass.bwd[j]).sum();
      values[3 + 2 * p] = ratio({joint, log_scale + pass.bwd_log[j]}, z0);
    }
    return values;
  };

  const auto gce_values = row_values(chain0, pass0);
  const auto run = impl_->fourier(options_, match.sigma, means, z0, true, width, row_values);
  const Cplx den = run.integrals[0];
  const Cplx num_i = run.integrals[1];

  // Centred observables have zero gce mean, so the numerators are the raw integrals.
  std::vector<CeEstimate> out;
  for (std::size_t p = 0; p < partners.size(); ++p) {
    const Cplx num_j = run.integrals[2 + 2 * p];
    const Cplx num_ij = run.integrals[3 + 2 * p];
    CeEstimate est;
    est.gce = gce_values[3 + 2 * p].real();
    est.ce = (num_ij / den).real() - (num_i / den).real() * (num_j / den).real();
    est.sigma = match.sigma;
    est.imag_residual = imag_residual({num_i, num_j, num_ij}, den);
    est.xi_max = run.xi_max;
    out.push_back(est);
  }
  return out;
}

DensityEstimate TransferEngine::density_at_zero(double sigma) const {
  const auto chain0 = impl_->build_chain(sigma, 0.0, {});
  const auto pass0 = impl_->run(chain0, true);
  const auto means = impl_->site_means(pass0);
  const Scaled z0 = pass0.partition;
  const auto run = impl_->fourier(options_, sigma, means, z0, false, 1,
                                     [&](const Impl::Chain&, const Impl::Pass& pass) {
                                       return std::vector<Cplx>{ratio(pass.partition, z0)};
                                     });
  DensityEstimate out;
  out.value = run.integrals[0].real() / (2.0 * std::numbers::pi);
  out.imag_residual = std::abs(run.integrals[0].imag()) / std::abs(run.integrals[0]);
  out.xi_max = run.xi_max;
  return out;
}

}  // namespace spinchain
