// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fedsim {

/// Invalid configuration, mismatched dimensions, or an unusable argument
/// detected before any math runs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A non-finite value (NaN/Inf) or a numerically unusable system was produced
/// mid-computation. The message carries the failing context (layer index,
/// epoch index, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fedsim
