#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spinchain {

enum class ErrorCode {
  NonSymmetric,
  NotDiagonallyDominant,
  NotBanded,
  DimensionMismatch,
  SameSite,
  PotentialNotGaussian,
  FactorizationFailed,
  DimensionTooLarge,
  RangeNotSupported,
  NonContiguousSupport,
  UnsupportedObservable,
  FourierTruncationInsufficient,
  BracketNotFound,
  BackendInapplicable,
  NoConvergence,
  InvalidSamplerConfig,
  DriftTooLarge,
  TooFewSamples,
  TooFewPoints,
  NonPositiveValue,
  ConfigParse,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code and, where meaningful, the
/// offending lattice indices (0-based).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> first = std::nullopt,
        std::optional<std::size_t> second = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> first_index() const noexcept { return first_; }
  std::optional<std::size_t> second_index() const noexcept { return second_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> first_;
  std::optional<std::size_t> second_;
};

}  // namespace spinchain
