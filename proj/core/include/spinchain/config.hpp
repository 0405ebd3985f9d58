#pragma once

// Key-value model configuration. Grammar is documented in docs/config.md.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spinchain/model.hpp"

namespace spinchain {

struct CouplingSpec {
  enum class Kind { Uniform, Bands };
  Kind kind = Kind::Uniform;
  double uniform = 0.0;
  std::vector<std::vector<double>> bands;  // bands[k-1] for distance k
};

struct FieldSpec {
  enum class Kind { Constant, Alternating, Values };
  Kind kind = Kind::Constant;
  double value = 0.0;
  std::vector<double> values;

  std::vector<double> resolve(std::size_t size) const;
};

/// Parsed configuration. The lattice size may be overridden when building so
/// one file can drive an N-sweep.
class ModelConfig {
 public:
  static ModelConfig parse(std::string_view text, const std::string& source = "<string>");
  static ModelConfig load(const std::filesystem::path& path);

  /// Built-in default non-Gaussian model (R = 1, coupling 0.3, Cosine(1, 2),
  /// alternating field 0.2, m = 0.1).
  static ModelConfig default_model(std::size_t size = 64);

  ModelSpec build() const { return build(size); }
  ModelSpec build(std::size_t lattice_size) const;

  /// Same configuration with the perturbation switched off.
  ModelConfig gaussian() const;

  /// Canonical text form; stable across formatting of the source file.
  std::string canonical() const;
  /// FNV-1a 64-bit hash of canonical(), hex encoded.
  std::string digest() const;

  /// Optional extra sections ([experiment], [sampler], ...) as raw strings.
  std::optional<std::string> extra(const std::string& section, const std::string& key) const;
  std::optional<double> extra_number(const std::string& section, const std::string& key) const;
  std::optional<std::vector<double>> extra_list(const std::string& section,
                                                const std::string& key) const;
  void set_extra(const std::string& section, const std::string& key, const std::string& value);

  std::size_t size = 0;
  std::size_t range = 1;
  CouplingSpec couplings;
  FieldSpec field;
  SingleSitePotential potential = SingleSitePotential::zero();
  double sigma = 0.0;
  std::optional<double> mean_spin;

 private:
  std::map<std::string, std::map<std::string, std::string>> extras_;
};

}  // namespace spinchain
