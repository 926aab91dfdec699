// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fedsim/batch.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/hvp.hpp"
#include "fedsim/model.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/tasks.hpp"

namespace fedsim {

enum class LossMode { CustomL2, Basic };
enum class ClientOptimizer { Sgd, Adam };

/// Local optimization settings. alpha is the client step size, lambda the
/// strength of the (lambda/2)||phi - theta||^2 attachment term, epochs the
/// number of full passes, beta_local the outer step size of the client-side
/// meta baselines, fd_delta their Hessian-free step.
struct LocalConfig {
  double alpha = 0.01;
  double lambda = 1.0;
  int epochs = 1;
  int batch_size = 10;
  LossMode loss_mode = LossMode::CustomL2;
  double beta_local = 0.25;
  double fd_delta = 0.25;
  ClientOptimizer optimizer = ClientOptimizer::Sgd;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (alpha < 0.0) throw ConfigError("LocalConfig: alpha must be non-negative");
    if (lambda < 0.0) throw ConfigError("LocalConfig: lambda must be non-negative");
    if (epochs < 1) throw ConfigError("LocalConfig: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("LocalConfig: batch_size must be >= 1");
    if (beta_local < 0.0) throw ConfigError("LocalConfig: beta_local must be non-negative");
    if (!(fd_delta > 0.0)) throw ConfigError("LocalConfig: fd_delta must be positive");
  }
};

namespace detail {

/// Shuffled index chunks for one epoch. The shuffle stream is derived from
/// the caller's per-(round, client) seed plus the epoch index.
inline std::vector<int> epoch_order(int n, std::uint64_t base_seed, int epoch) {
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng = make_rng(derive_seed(base_seed, {static_cast<std::uint64_t>(epoch)}));
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;
};

/// One SGD or Adam step on phi given the already-assembled gradient.
inline void apply_step(ParamVector& phi, const ParamVector& g, const LocalConfig& cfg,
                       AdamState& adam) {
  if (cfg.optimizer == ClientOptimizer::Sgd) {
    axpy_in_place(phi, -cfg.alpha, g);
    return;
  }
  if (adam.m.empty()) {
    adam.m.assign(phi.size(), 0.0);
    adam.v.assign(phi.size(), 0.0);
  }
  ++adam.step;
  const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam.step));
  for (std::size_t i = 0; i < phi.size(); ++i) {
    adam.m[i] = cfg.adam_beta1 * adam.m[i] + (1.0 - cfg.adam_beta1) * g[i];
    adam.v[i] = cfg.adam_beta2 * adam.v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
    phi[i] -= cfg.alpha * (adam.m[i] / c1) / (std::sqrt(adam.v[i] / c2) + cfg.adam_eps);
  }
}

/// E epochs of mini-batch steps on gradient(phi) + lambda (phi - theta).
/// lambda == 0 takes the identical code path as the basic update, so the two
/// agree bit for bit under a shared seed.
inline ParamVector local_sgd(const Batch& data, const ParamVector& theta, const LocalConfig& cfg,
                             const ModelSpec& spec, std::uint64_t rng_seed, double lambda,
                             long* grad_evals) {
  cfg.validate();
  if (data.n < 1) throw ConfigError("client update: empty training data");
  ParamVector phi = theta;
  AdamState adam;
  ParamVector g_total;
  for (int e = 0; e < cfg.epochs; ++e) {
    const std::vector<int> order = epoch_order(data.n, rng_seed, e);
    for (int start = 0; start < data.n; start += cfg.batch_size) {
      const int stop = std::min(data.n, start + cfg.batch_size);
      const Batch mb = take_rows(data, {order.begin() + start, order.begin() + stop});
      ParamVector g = gradient(spec, phi, mb);
      if (grad_evals) ++*grad_evals;
      if (lambda != 0.0) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += lambda * (phi[i] - theta[i]);
      }
      apply_step(phi, g, cfg, adam);
    }
    if (!all_finite(phi)) {
      throw NumericError("client update: non-finite parameters at epoch " + std::to_string(e));
    }
  }
  return phi;
}

}  // namespace detail

/// Local solve of the attached objective f(phi) + (lambda/2)||phi - theta||^2
/// starting from theta. Used by FedSIM, its variants with custom loss,
/// FedProx, and the pFedMe-style mode.
inline ParamVector client_update(const ClientPartition& partition, const ParamVector& theta,
                                 const LocalConfig& cfg, const ModelSpec& spec,
                                 std::uint64_t rng_seed, long* grad_evals = nullptr) {
  if (cfg.loss_mode != LossMode::CustomL2) {
    throw ConfigError("client_update: loss_mode must be custom_l2");
  }
  return detail::local_sgd(partition.train, theta, cfg, spec, rng_seed, cfg.lambda, grad_evals);
}

/// Plain local mini-batch SGD from theta (FedAvg, Fed-Reptile, basic-loss
/// ablation).
inline ParamVector client_update_basic(const ClientPartition& partition, const ParamVector& theta,
                                       const LocalConfig& cfg, const ModelSpec& spec,
                                       std::uint64_t rng_seed, long* grad_evals = nullptr) {
  if (cfg.loss_mode != LossMode::Basic) {
    throw ConfigError("client_update_basic: loss_mode must be basic");
  }
  return detail::local_sgd(partition.train, theta, cfg, spec, rng_seed, 0.0, grad_evals);
}

namespace detail {

inline void require_splits(const ClientPartition& p, const char* what) {
  if (!p.support || !p.query || p.support->n < 1 || p.query->n < 1) {
    throw ConfigError(std::string(what) + ": partition lacks support/query splits");
  }
}

/// Shared E-epoch meta loop for the two client-side meta baselines. Each
/// support mini-batch drives one meta step: an inner adaptation step on the
/// mini-batch, an outer gradient on the full query set, and (second order
/// only) a Hessian-vector correction on the same mini-batch. With E=1 and a
/// full support batch this is exactly one textbook meta update.
inline ParamVector meta_sgd(const ClientPartition& partition, const ParamVector& theta,
                            const LocalConfig& cfg, const ModelSpec& spec, std::uint64_t rng_seed,
                            bool second_order, long* grad_evals) {
  cfg.validate();
  require_splits(partition, second_order ? "fedmeta_update" : "perfedavg_fo_update");
  const Batch& support = *partition.support;
  const Batch& query = *partition.query;
  ParamVector w = theta;
  for (int e = 0; e < cfg.epochs; ++e) {
    const std::vector<int> order = epoch_order(support.n, rng_seed, e);
    for (int start = 0; start < support.n; start += cfg.batch_size) {
      const int stop = std::min(support.n, start + cfg.batch_size);
      const Batch mb = take_rows(support, {order.begin() + start, order.begin() + stop});
      const ParamVector inner_g = gradient(spec, w, mb);
      if (grad_evals) ++*grad_evals;
      const ParamVector adapted = axpy(-cfg.alpha, inner_g, w);
      ParamVector meta_g = gradient(spec, adapted, query);
      if (grad_evals) ++*grad_evals;
      if (second_order) {
        const ParamVector hv = hvp_hessian_free(
            [&](const ParamVector& p) { return gradient(spec, p, mb); }, w, meta_g, cfg.fd_delta);
        if (grad_evals) *grad_evals += 2;
        axpy_in_place(meta_g, -cfg.alpha, hv);
      }
      axpy_in_place(w, -cfg.beta_local, meta_g);
    }
    if (!all_finite(w)) {
      throw NumericError("meta update: non-finite parameters at epoch " + std::to_string(e));
    }
  }
  return w;
}

}  // namespace detail

/// First-order personalized-initialization update: inner step on a support
/// mini-batch, outer step from the query gradient at the adapted point, with
/// the second-order term dropped.
inline ParamVector perfedavg_fo_update(const ClientPartition& partition, const ParamVector& theta,
                                       const LocalConfig& cfg, const ModelSpec& spec,
                                       std::uint64_t rng_seed, long* grad_evals = nullptr) {
  return detail::meta_sgd(partition, theta, cfg, spec, rng_seed, false, grad_evals);
}

/// Full meta update including the second-order term, realized Hessian-free:
/// meta_grad = g_q - alpha * HVP(w, g_q; support mini-batch).
inline ParamVector fedmeta_update(const ClientPartition& partition, const ParamVector& theta,
                                  const LocalConfig& cfg, const ModelSpec& spec,
                                  std::uint64_t rng_seed, long* grad_evals = nullptr) {
  return detail::meta_sgd(partition, theta, cfg, spec, rng_seed, true, grad_evals);
}

}  // namespace fedsim
