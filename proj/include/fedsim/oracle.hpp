// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fedsim/batch.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/model.hpp"
#include "fedsim/param_vector.hpp"

namespace fedsim {

/// Dense d x d Hessian of forward_loss at phi, built column by column from
/// central differences of the exact gradient. Test-oracle quality only; cost
/// is 2d gradient evaluations.
inline std::vector<double> dense_hessian_fd(const ModelSpec& spec, const ParamVector& phi,
                                            const Batch& batch, double step = 1e-5) {
  if (!(step > 0.0)) throw ConfigError("dense_hessian_fd: step must be positive");
  const std::size_t d = phi.size();
  std::vector<double> h(d * d, 0.0);
  ParamVector p = phi;
  for (std::size_t j = 0; j < d; ++j) {
    p[j] = phi[j] + step;
    const ParamVector gp = gradient(spec, p, batch);
    p[j] = phi[j] - step;
    const ParamVector gm = gradient(spec, p, batch);
    p[j] = phi[j];
    for (std::size_t i = 0; i < d; ++i) h[i * d + j] = (gp[i] - gm[i]) / (2.0 * step);
  }
  return h;
}

/// Solves A x = b by Gaussian elimination with partial pivoting. A is row
/// major d x d and is consumed. Near-zero pivots signal an unusable system.
inline ParamVector solve_dense(std::vector<double> a, ParamVector b) {
  const std::size_t d = b.size();
  if (a.size() != d * d) throw ConfigError("solve_dense: matrix/vector size mismatch");
  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  if (scale == 0.0) scale = 1.0;
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < d; ++i) {
      if (std::abs(a[i * d + k]) > std::abs(a[piv * d + k])) piv = i;
    }
    if (std::abs(a[piv * d + k]) <= 1e-12 * scale) {
      throw NumericError("solve_dense: singular or near-singular system at pivot " + std::to_string(k));
    }
    if (piv != k) {
      for (std::size_t j = k; j < d; ++j) std::swap(a[k * d + j], a[piv * d + j]);
      std::swap(b[k], b[piv]);
    }
    for (std::size_t i = k + 1; i < d; ++i) {
      const double f = a[i * d + k] / a[k * d + k];
      if (f == 0.0) continue;
      for (std::size_t j = k; j < d; ++j) a[i * d + j] -= f * a[k * d + j];
      b[i] -= f * b[k];
    }
  }
  ParamVector x(d, 0.0);
  for (std::size_t ii = d; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t j = ii + 1; j < d; ++j) s -= a[ii * d + j] * x[j];
    x[ii] = s / a[ii * d + ii];
  }
  check_finite(x, "solve_dense: solution");
  return x;
}

/// Exact implicit meta-gradient reference: returns (I + H/lambda)^-1 g with
/// H the explicit finite-difference Hessian of the loss at phi. Ground truth
/// for the production estimators; never called on the hot path.
inline ParamVector implicit_meta_gradient_oracle(const ModelSpec& spec, const ParamVector& phi,
                                                 double lambda, const ParamVector& g,
                                                 const Batch& batch, double fd_step = 1e-5) {
  if (!(lambda > 0.0)) throw ConfigError("implicit_meta_gradient_oracle: lambda must be positive");
  check_same_size(phi, g, "implicit_meta_gradient_oracle");
  if (phi.size() > 256) {
    throw ConfigError("implicit_meta_gradient_oracle: dimension too large for a dense Hessian");
  }
  const std::size_t d = phi.size();
  std::vector<double> m = dense_hessian_fd(spec, phi, batch, fd_step);
  const double inv_lambda = 1.0 / lambda;
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) m[i * d + j] *= inv_lambda;
    m[i * d + i] += 1.0;
  }
  return solve_dense(std::move(m), g);
}

}  // namespace fedsim
