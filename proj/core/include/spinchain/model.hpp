#pragma once

// Lattice model: H(x) = sum_i [psi_b(x_i) + s_i x_i] + 1/2 x^T M x with unit
// diagonal M, banded to range R. Sites are 0-based throughout the library.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "spinchain/errors.hpp"

namespace spinchain {

enum class PotentialKind { Zero, Cosine };

/// Bounded single-site perturbation psi_b. Cosine(a, b) is a*cos(b z).
class SingleSitePotential {
 public:
  static SingleSitePotential zero() { return {PotentialKind::Zero, 0.0, 0.0}; }
  static SingleSitePotential cosine(double amplitude, double frequency) {
    return {PotentialKind::Cosine, amplitude, frequency};
  }

  PotentialKind kind() const { return kind_; }
  double amplitude() const { return amplitude_; }
  double frequency() const { return frequency_; }
  bool is_zero() const { return kind_ == PotentialKind::Zero; }

  double value(double z) const;
  double derivative(double z) const;
  double second_derivative(double z) const;

  /// psi(z) = z^2/2 + psi_b(z).
  double full(double z) const { return 0.5 * z * z + value(z); }

  double sup_value() const;
  double sup_derivative() const;
  double sup_second_derivative() const;

 private:
  SingleSitePotential(PotentialKind kind, double a, double b)
      : kind_(kind), amplitude_(a), frequency_(b) {}

  PotentialKind kind_;
  double amplitude_;
  double frequency_;
};

/// Symmetric banded coupling matrix with implicit unit diagonal.
///
/// Both triangles are stored so that asymmetric input survives until
/// validation reports it; every constructor except set_entry() keeps them
/// equal.
class InteractionMatrix {
 public:
  InteractionMatrix(std::size_t size, std::size_t range);

  static InteractionMatrix uniform(std::size_t size, std::size_t range, double coupling);
  /// bands[k-1][i] = M(i, i+k); each band k must have size - k entries.
  static InteractionMatrix from_bands(std::size_t size,
                                      const std::vector<std::vector<double>>& bands);
  /// Throws NotBanded for nonzero entries beyond `range` and
  /// DimensionMismatch for a non-unit diagonal or non-square input.
  static InteractionMatrix from_dense(const Eigen::MatrixXd& dense, std::size_t range);

  std::size_t size() const { return size_; }
  std::size_t range() const { return range_; }

  /// M(i, j); 1 on the diagonal, 0 outside the band.
  double operator()(std::size_t i, std::size_t j) const;

  /// Sets both M(i, j) and M(j, i).
  void set_coupling(std::size_t i, std::size_t j, double value);
  /// Sets only M(i, j).
  void set_entry(std::size_t i, std::size_t j, double value);

  /// (M x)_i using the band only.
  double row_dot(std::size_t i, std::span<const double> x) const;
  double off_diagonal_abs_sum(std::size_t i) const;

  Eigen::MatrixXd dense() const;
  Eigen::SparseMatrix<double> sparse() const;

 private:
  std::size_t size_;
  std::size_t range_;
  // upper_[k-1][i] = M(i, i+k), lower_[k-1][i] = M(i+k, i)
  std::vector<std::vector<double>> upper_;
  std::vector<std::vector<double>> lower_;
};

struct ModelSpec {
  InteractionMatrix interaction;
  SingleSitePotential potential = SingleSitePotential::zero();
  std::vector<double> field;  // s_i, length N
  double sigma = 0.0;         // gce external field; the ce never reads it
};

struct ValidationIssue {
  ErrorCode code;
  std::string message;
  std::optional<std::size_t> first;
  std::optional<std::size_t> second;
};

struct ValidationReport {
  double margin = 0.0;  // delta = min_i (1 - sum_{j != i} |M_ij|)
  std::size_t margin_row = 0;
  double sup_value = 0.0;
  double sup_derivative = 0.0;
  double sup_second_derivative = 0.0;
  std::vector<ValidationIssue> issues;

  bool passed() const { return issues.empty(); }
};

ValidationReport validate_model(const ModelSpec& spec);

/// A ModelSpec that passed validation. Every computation takes a Model.
class Model {
 public:
  /// Throws the first validation issue as an Error.
  explicit Model(ModelSpec spec);

  const ModelSpec& spec() const { return spec_; }
  const InteractionMatrix& interaction() const { return spec_.interaction; }
  const SingleSitePotential& potential() const { return spec_.potential; }
  std::span<const double> field() const { return spec_.field; }
  double sigma() const { return spec_.sigma; }
  std::size_t size() const { return spec_.field.size(); }
  std::size_t range() const { return spec_.interaction.range(); }
  double margin() const { return margin_; }

  Model with_sigma(double sigma) const;

 private:
  ModelSpec spec_;
  double margin_;
};

struct SpinConfig {
  static constexpr double kConstraintTolerance = 1e-10;

  std::vector<double> x;
  std::optional<double> mean_constraint;  // MeanSpin(m) tag

  double mean() const;
  bool satisfies_constraint() const;
};

/// H(x) via the band form.
double hamiltonian(const Model& model, std::span<const double> x);
/// sigma * sum x_i - H(x).
double gce_log_density_unnormalized(const Model& model, double sigma,
                                    std::span<const double> x);
/// Change of (H - sigma * sum x) when x_i is replaced by x_new; O(R).
double energy_delta_single(const Model& model, double sigma, std::span<const double> x,
                           std::size_t i, double x_new);
/// Change of H for (x_i, x_j) -> (x_i + eta, x_j - eta); sigma-free. Throws SameSite.
double energy_delta_pair(const Model& model, std::span<const double> x, std::size_t i,
                         std::size_t j, double eta);
std::vector<double> hamiltonian_gradient(const Model& model, std::span<const double> x);

// ---------------------------------------------------------------------------
// Observables

using SiteFn = std::function<double(double)>;
using BondFn = std::function<double(double, double)>;

/// coefficient * prod_k site_fn_k(x_{site_k}) * prod_l bond_fn_l(x_l, x_{l+1}).
struct ProductTerm {
  struct SiteFactor {
    std::size_t site;
    SiteFn fn;
  };
  struct BondFactor {
    std::size_t left;  // bond (left, left + 1)
    BondFn fn;
  };

  double coefficient = 1.0;
  std::vector<SiteFactor> sites;
  std::vector<BondFactor> bonds;

  double evaluate(std::span<const double> x) const;
  /// Smallest site touched; only meaningful when the term has factors.
  std::size_t first_site() const;
  std::size_t last_site() const;
  bool is_constant() const { return sites.empty() && bonds.empty(); }
};

/// Local function f with declared support and gradient sup-norm bound.
///
/// Observables built from the factories carry a product-term expansion, which
/// is what the transfer engine contracts. custom() observables carry only an
/// evaluator and are served by the quadrature and Monte Carlo backends.
class Observable {
 public:
  using Evaluator = std::function<double(std::span<const double>)>;

  static Observable constant(double value);
  static Observable spin(std::size_t site);
  static Observable site_function(std::size_t site, SiteFn fn, double gradient_bound,
                                  std::string name = "phi");
  /// f(x) = fn(x_site, x_{site+1}).
  static Observable bond_function(std::size_t site, BondFn fn, double gradient_bound,
                                  std::string name = "bond");
  /// sum_{k=first}^{last} weight * x_k.
  static Observable window_sum(std::size_t first, std::size_t last, double weight = 1.0);
  static Observable window_mean(std::size_t first, std::size_t last);
  static Observable custom(std::vector<std::size_t> support, Evaluator evaluator,
                           double gradient_bound, std::string name = "custom");

  /// a * f + b * g.
  static Observable linear_combination(double a, const Observable& f, double b,
                                       const Observable& g);
  /// f * g; term expansions are multiplied out.
  static Observable product(const Observable& f, const Observable& g);

  double operator()(std::span<const double> x) const;

  const std::vector<std::size_t>& support() const { return support_; }
  double gradient_bound() const { return gradient_bound_; }
  const std::string& name() const { return name_; }
  bool contiguous() const;
  bool has_expansion() const { return expansion_.has_value(); }
  const std::vector<ProductTerm>& terms() const;

 private:
  Observable() = default;
  static std::vector<std::size_t> merge_support(const std::vector<std::size_t>& a,
                                                const std::vector<std::size_t>& b);

  std::vector<std::size_t> support_;
  double gradient_bound_ = 0.0;
  std::string name_;
  std::optional<std::vector<ProductTerm>> expansion_;
  Evaluator evaluator_;
};

}  // namespace spinchain
