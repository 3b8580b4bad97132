// Shared aliases and error types.
//
// Unit conventions used throughout the toolkit: kV, kA, ohm, MW, km, s.
// These are mutually consistent (kV = ohm * kA, MW = kV * kA, MW = kA^2 * ohm),
// so no conversion constants appear in the numerics.
#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace dctps {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Invalid configuration or malformed input data.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A snapshot that cannot be served within the configured limits
/// (overload, voltage collapse, or no supportive substation available).
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dctps
