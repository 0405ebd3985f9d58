#include "spinchain/model.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>

namespace spinchain {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::NotDiagonallyDominant: return "NotDiagonallyDominant";
    case ErrorCode::NotBanded: return "NotBanded";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SameSite: return "SameSite";
    case ErrorCode::PotentialNotGaussian: return "PotentialNotGaussian";
    case ErrorCode::FactorizationFailed: return "FactorizationFailed";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::RangeNotSupported: return "RangeNotSupported";
    case ErrorCode::NonContiguousSupport: return "NonContiguousSupport";
    case ErrorCode::UnsupportedObservable: return "UnsupportedObservable";
    case ErrorCode::FourierTruncationInsufficient: return "FourierTruncationInsufficient";
    case ErrorCode::BracketNotFound: return "BracketNotFound";
    case ErrorCode::BackendInapplicable: return "BackendInapplicable";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::InvalidSamplerConfig: return "InvalidSamplerConfig";
    case ErrorCode::DriftTooLarge: return "DriftTooLarge";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> first,
             std::optional<std::size_t> second)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      first_(first),
      second_(second) {}

// ---------------------------------------------------------------------------

double SingleSitePotential::value(double z) const {
  if (kind_ == PotentialKind::Zero) return 0.0;
  return amplitude_ * std::cos(frequency_ * z);
}

double SingleSitePotential::derivative(double z) const {
  if (kind_ == PotentialKind::Zero) return 0.0;
  return -amplitude_ * frequency_ * std::sin(frequency_ * z);
}

double SingleSitePotential::second_derivative(double z) const {
  if (kind_ == PotentialKind::Zero) return 0.0;
  return -amplitude_ * frequency_ * frequency_ * std::cos(frequency_ * z);
}

double SingleSitePotential::sup_value() const {
  return kind_ == PotentialKind::Zero ? 0.0 : std::abs(amplitude_);
}

double SingleSitePotential::sup_derivative() const {
  return kind_ == PotentialKind::Zero ? 0.0 : std::abs(amplitude_ * frequency_);
}

double SingleSitePotential::sup_second_derivative() const {
  return kind_ == PotentialKind::Zero ? 0.0
                                      : std::abs(amplitude_ * frequency_ * frequency_);
}

// ---------------------------------------------------------------------------

InteractionMatrix::InteractionMatrix(std::size_t size, std::size_t range)
    : size_(size), range_(range) {
  for (std::size_t k = 1; k <= range; ++k) {
    const std::size_t len = k < size ? size - k : 0;
    upper_.emplace_back(len, 0.0);
    lower_.emplace_back(len, 0.0);
  }
}

InteractionMatrix InteractionMatrix::uniform(std::size_t size, std::size_t range,
                                             double coupling) {
  InteractionMatrix m(size, range);
  for (std::size_t k = 0; k < range; ++k) {
    std::fill(m.upper_[k].begin(), m.upper_[k].end(), coupling);
    std::fill(m.lower_[k].begin(), m.lower_[k].end(), coupling);
  }
  return m;
}

InteractionMatrix InteractionMatrix::from_bands(
    std::size_t size, const std::vector<std::vector<double>>& bands) {
  InteractionMatrix m(size, bands.size());
  for (std::size_t k = 0; k < bands.size(); ++k) {
    if (bands[k].size() != m.upper_[k].size()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "band " + std::to_string(k + 1) + " has " +
                      std::to_string(bands[k].size()) + " entries, expected " +
                      std::to_string(m.upper_[k].size()));
    }
    m.upper_[k] = bands[k];
    m.lower_[k] = bands[k];
  }
  return m;
}

InteractionMatrix InteractionMatrix::from_dense(const Eigen::MatrixXd& dense,
                                                std::size_t range) {
  if (dense.rows() != dense.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "interaction matrix must be square");
  }
  const auto n = static_cast<std::size_t>(dense.rows());
  InteractionMatrix m(n, range);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      const std::size_t dist = i > j ? i - j : j - i;
      if (dist == 0) {
        if (v != 1.0) {
          throw Error(ErrorCode::DimensionMismatch, "diagonal entry must equal 1", i, i);
        }
      } else if (dist > range) {
        if (v != 0.0) {
          throw Error(ErrorCode::NotBanded,
                      "entry (" + std::to_string(i) + "," + std::to_string(j) +
                          ") lies outside range " + std::to_string(range),
                      i, j);
        }
      } else {
        m.set_entry(i, j, v);
      }
    }
  }
  return m;
}

double InteractionMatrix::operator()(std::size_t i, std::size_t j) const {
  if (i == j) return 1.0;
  if (i < j) {
    const std::size_t k = j - i;
    return k <= range_ ? upper_[k - 1][i] : 0.0;
  }
  const std::size_t k = i - j;
  return k <= range_ ? lower_[k - 1][j] : 0.0;
}

void InteractionMatrix::set_coupling(std::size_t i, std::size_t j, double value) {
  set_entry(i, j, value);
  set_entry(j, i, value);
}

void InteractionMatrix::set_entry(std::size_t i, std::size_t j, double value) {
  if (i >= size_ || j >= size_) {
    throw Error(ErrorCode::DimensionMismatch, "coupling index out of range", i, j);
  }
  const std::size_t k = i > j ? i - j : j - i;
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "diagonal is fixed to 1", i, j);
  if (k > range_) {
    throw Error(ErrorCode::NotBanded, "coupling outside interaction range", i, j);
  }
  if (i < j) {
    upper_[k - 1][i] = value;
  } else {
    lower_[k - 1][j] = value;
  }
}

double InteractionMatrix::row_dot(std::size_t i, std::span<const double> x) const {
  double acc = x[i];
  for (std::size_t k = 1; k <= range_; ++k) {
    if (i + k < size_) acc += upper_[k - 1][i] * x[i + k];
    if (i >= k) acc += lower_[k - 1][i - k] * x[i - k];
  }
  return acc;
}

double InteractionMatrix::off_diagonal_abs_sum(std::size_t i) const {
  double acc = 0.0;
  for (std::size_t k = 1; k <= range_; ++k) {
    if (i + k < size_) acc += std::abs(upper_[k - 1][i]);
    if (i >= k) acc += std::abs(lower_[k - 1][i - k]);
  }
  return acc;
}

Eigen::MatrixXd InteractionMatrix::dense() const {
  const auto n = static_cast<Eigen::Index>(size_);
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t k = 1; k <= range_; ++k) {
    for (std::size_t i = 0; i + k < size_; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(i + k);
      out(r, c) = upper_[k - 1][i];
      out(c, r) = lower_[k - 1][i];
    }
  }
  return out;
}

Eigen::SparseMatrix<double> InteractionMatrix::sparse() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(size_ * (2 * range_ + 1));
  for (std::size_t i = 0; i < size_; ++i) {
    triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), 1.0);
  }
  for (std::size_t k = 1; k <= range_; ++k) {
    for (std::size_t i = 0; i + k < size_; ++i) {
      const int r = static_cast<int>(i);
      const int c = static_cast<int>(i + k);
      if (upper_[k - 1][i] != 0.0) triplets.emplace_back(r, c, upper_[k - 1][i]);
      if (lower_[k - 1][i] != 0.0) triplets.emplace_back(c, r, lower_[k - 1][i]);
    }
  }
  const auto n = static_cast<Eigen::Index>(size_);
  Eigen::SparseMatrix<double> out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

// ---------------------------------------------------------------------------

ValidationReport validate_model(const ModelSpec& spec) {
  ValidationReport report;
  const auto& m = spec.interaction;
  const std::size_t n = m.size();

  report.sup_value = spec.potential.sup_value();
  report.sup_derivative = spec.potential.sup_derivative();
  report.sup_second_derivative = spec.potential.sup_second_derivative();

  if (spec.field.size() != n) {
    report.issues.push_back({ErrorCode::DimensionMismatch,
                             "field has " + std::to_string(spec.field.size()) +
                                 " entries but N = " + std::to_string(n),
                             spec.field.size(), n});
  }
  if (n == 0) {
    report.issues.push_back({ErrorCode::DimensionMismatch, "lattice is empty", 0, 0});
    return report;
  }

  for (std::size_t k = 1; k <= m.range(); ++k) {
    for (std::size_t i = 0; i + k < n; ++i) {
      if (m(i, i + k) != m(i + k, i)) {
        report.issues.push_back({ErrorCode::NonSymmetric,
                                 "M(" + std::to_string(i) + "," + std::to_string(i + k) +
                                     ") != M(" + std::to_string(i + k) + "," +
                                     std::to_string(i) + ")",
                                 i, i + k});
      }
    }
  }

  report.margin = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double row_margin = 1.0 - m.off_diagonal_abs_sum(i);
    if (i == 0 || row_margin < report.margin) {
      report.margin = row_margin;
      report.margin_row = i;
    }
  }
  if (!(report.margin > 0.0)) {
    report.issues.push_back({ErrorCode::NotDiagonallyDominant,
                             "row " + std::to_string(report.margin_row) +
                                 " has diagonal-dominance margin " +
                                 std::to_string(report.margin),
                             report.margin_row, std::nullopt});
  }

  for (std::size_t i = 0; i < spec.field.size(); ++i) {
    if (!std::isfinite(spec.field[i])) {
      report.issues.push_back({ErrorCode::InvalidArgument, "non-finite field entry", i,
                               std::nullopt});
    }
  }
  if (!std::isfinite(spec.sigma)) {
    report.issues.push_back({ErrorCode::InvalidArgument, "non-finite sigma", std::nullopt,
                             std::nullopt});
  }
  return report;
}

Model::Model(ModelSpec spec) : spec_(std::move(spec)) {
  const auto report = validate_model(spec_);
  if (!report.passed()) {
    const auto& issue = report.issues.front();
    throw Error(issue.code, issue.message, issue.first, issue.second);
  }
  margin_ = report.margin;
}

Model Model::with_sigma(double sigma) const {
  Model copy = *this;
  copy.spec_.sigma = sigma;
  return copy;
}

double SpinConfig::mean() const {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

bool SpinConfig::satisfies_constraint() const {
  if (!mean_constraint) return true;
  return std::abs(mean() - *mean_constraint) <= kConstraintTolerance;
}

// ---------------------------------------------------------------------------

double hamiltonian(const Model& model, std::span<const double> x) {
  const auto& m = model.interaction();
  const auto& psi = model.potential();
  const auto s = model.field();
  double energy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    energy += psi.value(x[i]) + s[i] * x[i] + 0.5 * x[i] * m.row_dot(i, x);
  }
  return energy;
}

double gce_log_density_unnormalized(const Model& model, double sigma,
                                    std::span<const double> x) {
  const double total = std::accumulate(x.begin(), x.end(), 0.0);
  return sigma * total - hamiltonian(model, x);
}

double energy_delta_single(const Model& model, double sigma, std::span<const double> x,
                           std::size_t i, double x_new) {
  const auto& m = model.interaction();
  const double x_old = x[i];
  const double d = x_new - x_old;
  if (d == 0.0) return 0.0;
  // Off-diagonal part of (Mx)_i, symmetrised so asymmetric bands never reach here.
  double neighbours = 0.0;
  const std::size_t n = x.size();
  for (std::size_t k = 1; k <= m.range(); ++k) {
    if (i + k < n) neighbours += m(i, i + k) * x[i + k];
    if (i >= k) neighbours += m(i, i - k) * x[i - k];
  }
  const auto& psi = model.potential();
  return psi.value(x_new) - psi.value(x_old) + (model.field()[i] - sigma) * d +
         0.5 * (x_new * x_new - x_old * x_old) + d * neighbours;
}

double energy_delta_pair(const Model& model, std::span<const double> x, std::size_t i,
                         std::size_t j, double eta) {
  if (i == j) throw Error(ErrorCode::SameSite, "pair move needs two sites", i, j);
  if (eta == 0.0) return 0.0;
  const auto& m = model.interaction();
  const auto& psi = model.potential();
  const auto s = model.field();
  const double xi_new = x[i] + eta;
  const double xj_new = x[j] - eta;
  const double local = psi.value(xi_new) - psi.value(x[i]) + psi.value(xj_new) -
                       psi.value(x[j]) + (s[i] - s[j]) * eta;
  // 1/2 x'Mx' - 1/2 xMx with x' = x + eta (e_i - e_j)
  const double quadratic =
      eta * (m.row_dot(i, x) - m.row_dot(j, x)) + eta * eta * (1.0 - m(i, j));
  return local + quadratic;
}

std::vector<double> hamiltonian_gradient(const Model& model, std::span<const double> x) {
  const auto& m = model.interaction();
  const auto& psi = model.potential();
  const auto s = model.field();
  std::vector<double> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    grad[i] = psi.derivative(x[i]) + s[i] + m.row_dot(i, x);
  }
  return grad;
}

// ---------------------------------------------------------------------------

double ProductTerm::evaluate(std::span<const double> x) const {
  double v = coefficient;
  for (const auto& f : sites) v *= f.fn(x[f.site]);
  for (const auto& b : bonds) v *= b.fn(x[b.left], x[b.left + 1]);
  return v;
}

std::size_t ProductTerm::first_site() const {
  std::size_t lo = static_cast<std::size_t>(-1);
  for (const auto& f : sites) lo = std::min(lo, f.site);
  for (const auto& b : bonds) lo = std::min(lo, b.left);
  return lo;
}

std::size_t ProductTerm::last_site() const {
  std::size_t hi = 0;
  for (const auto& f : sites) hi = std::max(hi, f.site);
  for (const auto& b : bonds) hi = std::max(hi, b.left + 1);
  return hi;
}

namespace {

Observable::Evaluator evaluator_from_terms(std::vector<ProductTerm> terms) {
  return [terms = std::move(terms)](std::span<const double> x) {
    double acc = 0.0;
    for (const auto& t : terms) acc += t.evaluate(x);
    return acc;
  };
}

ProductTerm multiply_terms(const ProductTerm& a, const ProductTerm& b) {
  ProductTerm out;
  out.coefficient = a.coefficient * b.coefficient;
  out.sites = a.sites;
  for (const auto& f : b.sites) {
    auto it = std::find_if(out.sites.begin(), out.sites.end(),
                           [&](const auto& g) { return g.site == f.site; });
    if (it == out.sites.end()) {
      out.sites.push_back(f);
    } else {
      it->fn = [lhs = it->fn, rhs = f.fn](double z) { return lhs(z) * rhs(z); };
    }
  }
  out.bonds = a.bonds;
  for (const auto& f : b.bonds) {
    auto it = std::find_if(out.bonds.begin(), out.bonds.end(),
                           [&](const auto& g) { return g.left == f.left; });
    if (it == out.bonds.end()) {
      out.bonds.push_back(f);
    } else {
      it->fn = [lhs = it->fn, rhs = f.fn](double u, double v) {
        return lhs(u, v) * rhs(u, v);
      };
    }
  }
  return out;
}

}  // namespace

std::vector<std::size_t> Observable::merge_support(const std::vector<std::size_t>& a,
                                                   const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

Observable Observable::constant(double value) {
  Observable f;
  f.name_ = "const";
  ProductTerm t;
  t.coefficient = value;
  f.expansion_ = std::vector<ProductTerm>{t};
  f.evaluator_ = evaluator_from_terms(*f.expansion_);
  return f;
}

Observable Observable::spin(std::size_t site) {
  auto f = site_function(site, [](double z) { return z; }, 1.0, "x");
  f.name_ = "x" + std::to_string(site);
  return f;
}

Observable Observable::site_function(std::size_t site, SiteFn fn, double gradient_bound,
                                     std::string name) {
  Observable f;
  f.support_ = {site};
  f.gradient_bound_ = gradient_bound;
  f.name_ = std::move(name);
  ProductTerm t;
  t.sites.push_back({site, std::move(fn)});
  f.expansion_ = std::vector<ProductTerm>{t};
  f.evaluator_ = evaluator_from_terms(*f.expansion_);
  return f;
}

Observable Observable::bond_function(std::size_t site, BondFn fn, double gradient_bound,
                                     std::string name) {
  Observable f;
  f.support_ = {site, site + 1};
  f.gradient_bound_ = gradient_bound;
  f.name_ = std::move(name);
  ProductTerm t;
  t.bonds.push_back({site, std::move(fn)});
  f.expansion_ = std::vector<ProductTerm>{t};
  f.evaluator_ = evaluator_from_terms(*f.expansion_);
  return f;
}

Observable Observable::window_sum(std::size_t first, std::size_t last, double weight) {
  if (last < first) throw Error(ErrorCode::InvalidArgument, "empty window", first, last);
  Observable f;
  f.name_ = "sum[" + std::to_string(first) + ".." + std::to_string(last) + "]";
  std::vector<ProductTerm> terms;
  for (std::size_t k = first; k <= last; ++k) {
    f.support_.push_back(k);
    ProductTerm t;
    t.coefficient = weight;
    t.sites.push_back({k, [](double z) { return z; }});
    terms.push_back(std::move(t));
  }
  // |grad f|_2 = |w| sqrt(|S|)
  f.gradient_bound_ = std::abs(weight) * std::sqrt(static_cast<double>(last - first + 1));
  f.expansion_ = std::move(terms);
  f.evaluator_ = [first, last, weight](std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t k = first; k <= last; ++k) acc += x[k];
    return weight * acc;
  };
  return f;
}

Observable Observable::window_mean(std::size_t first, std::size_t last) {
  auto f = window_sum(first, last, 1.0 / static_cast<double>(last - first + 1));
  f.name_ = "mean[" + std::to_string(first) + ".." + std::to_string(last) + "]";
  return f;
}

Observable Observable::custom(std::vector<std::size_t> support, Evaluator evaluator,
                              double gradient_bound, std::string name) {
  Observable f;
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  f.support_ = std::move(support);
  f.evaluator_ = std::move(evaluator);
  f.gradient_bound_ = gradient_bound;
  f.name_ = std::move(name);
  return f;
}

Observable Observable::linear_combination(double a, const Observable& f, double b,
                                          const Observable& g) {
  Observable out;
  out.support_ = merge_support(f.support_, g.support_);
  out.gradient_bound_ = std::abs(a) * f.gradient_bound_ + std::abs(b) * g.gradient_bound_;
  out.name_ = "lin(" + f.name_ + "," + g.name_ + ")";
  if (f.has_expansion() && g.has_expansion()) {
    std::vector<ProductTerm> terms;
    for (auto t : *f.expansion_) {
      t.coefficient *= a;
      terms.push_back(std::move(t));
    }
    for (auto t : *g.expansion_) {
      t.coefficient *= b;
      terms.push_back(std::move(t));
    }
    out.expansion_ = std::move(terms);
  }
  out.evaluator_ = [a, b, fe = f.evaluator_, ge = g.evaluator_](std::span<const double> x) {
    return a * fe(x) + b * ge(x);
  };
  return out;
}

Observable Observable::product(const Observable& f, const Observable& g) {
  Observable out;
  out.support_ = merge_support(f.support_, g.support_);
  // No useful sup-norm bound for a product of unbounded functions.
  out.gradient_bound_ = std::numeric_limits<double>::infinity();
  out.name_ = f.name_ + "*" + g.name_;
  if (f.has_expansion() && g.has_expansion()) {
    std::vector<ProductTerm> terms;
    for (const auto& s : *f.expansion_) {
      for (const auto& t : *g.expansion_) terms.push_back(multiply_terms(s, t));
    }
    out.expansion_ = std::move(terms);
  }
  out.evaluator_ = [fe = f.evaluator_, ge = g.evaluator_](std::span<const double> x) {
    return fe(x) * ge(x);
  };
  return out;
}

double Observable::operator()(std::span<const double> x) const { return evaluator_(x); }

bool Observable::contiguous() const {
  if (support_.empty()) return true;
  return support_.back() - support_.front() + 1 == support_.size();
}

const std::vector<ProductTerm>& Observable::terms() const {
  if (!expansion_) {
    throw Error(ErrorCode::UnsupportedObservable,
                "observable '" + name_ + "' has no product-term expansion");
  }
  return *expansion_;
}

}  // namespace spinchain
