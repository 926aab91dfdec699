// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>

#include "fedsim/errors.hpp"
#include "fedsim/param_vector.hpp"

namespace fedsim {

/// Gradient callback: maps parameters to the gradient of some scalar loss.
using GradFn = std::function<ParamVector(const ParamVector&)>;

/// Hessian-free Hessian-vector product by central finite differences on the
/// gradient:
///
///   H v ~= (grad(phi + delta v) - grad(phi - delta v)) / (2 delta)
///
/// Two gradient evaluations, no second-order code. For losses with
/// rho-Lipschitz Hessian the error is bounded by rho * delta * ||v||^2, and
/// for quadratic losses the formula is exact up to rounding.
inline ParamVector hvp_hessian_free(const GradFn& grad_fn, const ParamVector& phi,
                                    const ParamVector& v, double delta) {
  if (!(delta > 0.0)) throw ConfigError("hvp_hessian_free: delta must be positive");
  check_same_size(phi, v, "hvp_hessian_free");
  check_finite(phi, "hvp_hessian_free: phi");
  check_finite(v, "hvp_hessian_free: v");
  const ParamVector g_plus = grad_fn(axpy(delta, v, phi));
  const ParamVector g_minus = grad_fn(axpy(-delta, v, phi));
  check_same_size(g_plus, phi, "hvp_hessian_free: grad_fn result");
  check_same_size(g_minus, phi, "hvp_hessian_free: grad_fn result");
  ParamVector out(phi.size());
  const double inv = 1.0 / (2.0 * delta);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (g_plus[i] - g_minus[i]) * inv;
  check_finite(out, "hvp_hessian_free: result");
  return out;
}

}  // namespace fedsim
