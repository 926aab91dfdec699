// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

/// Flat parameter vector. All model weights live in one contiguous buffer so
/// that client updates, aggregation and meta-gradient algebra are plain
/// vector arithmetic.
using ParamVector = std::vector<double>;

inline void check_same_size(const ParamVector& a, const ParamVector& b,
                            const char* what) {
  if (a.size() != b.size()) {
    throw ConfigError(std::string(what) + ": length mismatch (" +
                      std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  }
}

inline bool all_finite(const ParamVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

inline void check_finite(const ParamVector& v, const char* context) {
  if (!all_finite(v)) {
    throw NumericError(std::string(context) + ": non-finite value");
  }
}

inline ParamVector add(const ParamVector& a, const ParamVector& b) {
  check_same_size(a, b, "add");
  ParamVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline ParamVector sub(const ParamVector& a, const ParamVector& b) {
  check_same_size(a, b, "sub");
  ParamVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline ParamVector scale(double c, const ParamVector& v) {
  ParamVector r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) r[i] = c * v[i];
  return r;
}

/// r = c * x + y
inline ParamVector axpy(double c, const ParamVector& x, const ParamVector& y) {
  check_same_size(x, y, "axpy");
  ParamVector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = c * x[i] + y[i];
  return r;
}

/// y += c * x
inline void axpy_in_place(ParamVector& y, double c, const ParamVector& x) {
  check_same_size(x, y, "axpy_in_place");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline double dot(const ParamVector& a, const ParamVector& b) {
  check_same_size(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm(const ParamVector& v) { return std::sqrt(dot(v, v)); }

/// Elementwise mean of k equal-length vectors via a running mean
/// (m += (x - m) / k). The running form returns each input exactly when all
/// inputs are identical, which a plain sum-then-divide does not guarantee in
/// floating point; aggregation of identical client results must be a no-op.
inline ParamVector mean_of(const std::vector<ParamVector>& vs) {
  if (vs.empty()) throw ConfigError("mean_of: empty list");
  ParamVector m = vs[0];
  for (std::size_t k = 1; k < vs.size(); ++k) {
    check_same_size(vs[k], m, "mean_of");
    const double inv = 1.0 / static_cast<double>(k + 1);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += (vs[k][i] - m[i]) * inv;
  }
  return m;
}

}  // namespace fedsim
