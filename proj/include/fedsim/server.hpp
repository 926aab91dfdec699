// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "fedsim/batch.hpp"
#include "fedsim/client.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/hvp.hpp"
#include "fedsim/model.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/round_record.hpp"
#include "fedsim/strategy.hpp"
#include "fedsim/tasks.hpp"

namespace fedsim {

enum class FoMode { WeightDiff, ServerData };
enum class SoMode { ServerData, Off };
enum class BetaSchedule { Constant, LinearDecay };

struct ServerConfig {
  double beta = 0.25;
  double delta_fd = 0.25;
  double delta_weight = 0.25;
  int m = 10;
  StrategyKind strategy = StrategyKind::Fedsim;
  FoMode fo_mode = FoMode::WeightDiff;
  SoMode so_mode = SoMode::ServerData;
  int server_batch_size = 32;
  BetaSchedule schedule = BetaSchedule::Constant;
  int total_rounds = 1;
  int workers = 1;

  void validate(int n_clients) const {
    if (beta < 0.0) throw ConfigError("ServerConfig: beta must be non-negative");
    if (m < 1 || m > n_clients) throw ConfigError("ServerConfig: m must be in [1, n_clients]");
    if (so_mode == SoMode::ServerData && !(delta_fd > 0.0)) {
      throw ConfigError("ServerConfig: delta_fd must be positive when so_mode=server_data");
    }
    if (delta_weight < 0.0) throw ConfigError("ServerConfig: delta_weight must be non-negative");
    if (server_batch_size < 1) throw ConfigError("ServerConfig: server_batch_size must be >= 1");
    if (total_rounds < 1) throw ConfigError("ServerConfig: total_rounds must be >= 1");
    if (workers < 1) throw ConfigError("ServerConfig: workers must be >= 1");
  }
};

/// Applies the ablation variants' forced settings (basic loss is forced at
/// the client call site).
inline ServerConfig normalize_config(ServerConfig scfg) {
  switch (scfg.strategy) {
    case StrategyKind::FedsimVar2: scfg.fo_mode = FoMode::ServerData; break;
    case StrategyKind::FedsimVar3: scfg.so_mode = SoMode::Off; break;
    case StrategyKind::PfedmeMode: scfg.so_mode = SoMode::Off; break;
    default: break;
  }
  return scfg;
}

struct MetaGradientParts {
  ParamVector v;
  std::optional<ParamVector> d;
  ParamVector meta_grad;
  long grad_evals_server = 0;
};

/// Weight-difference first-order estimate v = theta - phi.
inline ParamVector first_order_estimate(const ParamVector& theta, const ParamVector& phi) {
  return sub(theta, phi);
}

/// Server-data first-order alternative: the gradient of the loss at phi over
/// a query batch drawn from the server pool.
inline ParamVector first_order_from_server_data(const ModelSpec& spec, const ParamVector& phi,
                                                const Batch& server_query) {
  if (server_query.n < 1) {
    throw ConfigError("first_order_from_server_data: empty server query batch");
  }
  return gradient(spec, phi, server_query);
}

/// Hessian-free second-order estimate over a server batch: exactly two
/// gradient evaluations.
inline ParamVector second_order_estimate(const ModelSpec& spec, const ParamVector& phi,
                                         const ParamVector& v, const Batch& server_batch,
                                         double delta_fd) {
  if (server_batch.n < 1) throw ConfigError("second_order_estimate: empty server batch");
  return hvp_hessian_free([&](const ParamVector& p) { return gradient(spec, p, server_batch); },
                          phi, v, delta_fd);
}

/// Assembles the per-client meta-gradient from (theta, phi, server batches)
/// only; nothing about the client's local trajectory enters here.
inline MetaGradientParts compute_meta_parts(const ModelSpec& spec, const ParamVector& theta,
                                            const ParamVector& phi, FoMode fo_mode, SoMode so_mode,
                                            double delta_weight, double delta_fd,
                                            const Batch* hessian_batch, const Batch* query_batch) {
  MetaGradientParts parts;
  if (fo_mode == FoMode::WeightDiff) {
    parts.v = first_order_estimate(theta, phi);
  } else {
    if (!query_batch) throw ConfigError("compute_meta_parts: fo_mode=server_data needs a query batch");
    parts.v = first_order_from_server_data(spec, phi, *query_batch);
    parts.grad_evals_server += 1;
  }
  if (so_mode == SoMode::ServerData) {
    if (!hessian_batch) throw ConfigError("compute_meta_parts: so_mode=server_data needs a server batch");
    parts.d = second_order_estimate(spec, phi, parts.v, *hessian_batch, delta_fd);
    parts.grad_evals_server += 2;
    parts.meta_grad.resize(parts.v.size());
    for (std::size_t i = 0; i < parts.v.size(); ++i) {
      parts.meta_grad[i] = parts.v[i] - delta_weight * (*parts.d)[i];
    }
  } else {
    parts.meta_grad = parts.v;
  }
  return parts;
}

/// Server step size at a given round.
inline double schedule_step(double beta0, int round_index, int total_rounds, BetaSchedule schedule) {
  if (total_rounds < 1) throw ConfigError("schedule_step: total_rounds must be >= 1");
  if (schedule == BetaSchedule::Constant) return beta0;
  const double f = 1.0 - static_cast<double>(round_index) / total_rounds;
  return beta0 * std::max(0.0, f);
}

/// Permutation-invariant elementwise mean: entries are reduced in client-id
/// order (ties keep their given order), so shuffling the input list cannot
/// change the result bit pattern.
inline ParamVector aggregate_mean(std::vector<std::pair<int, ParamVector>> entries) {
  if (entries.empty()) throw ConfigError("aggregate_mean: empty list");
  std::stable_sort(entries.begin(), entries.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<ParamVector> vs;
  vs.reserve(entries.size());
  for (auto& e : entries) vs.push_back(std::move(e.second));
  return mean_of(vs);
}

/// a + w (b - a), with the endpoints returned exactly.
inline ParamVector interpolate(const ParamVector& a, const ParamVector& b, double w) {
  if (w == 0.0) return a;
  if (w == 1.0) return b;
  check_same_size(a, b, "interpolate");
  ParamVector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + w * (b[i] - a[i]);
  return r;
}

namespace detail {

inline std::vector<int> sample_client_indices(int n, int m, std::uint64_t seed) {
  std::vector<int> all(n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> picked;
  picked.reserve(m);
  std::mt19937_64 rng = make_rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), m, rng);
  return picked;
}

inline Batch sample_server_batch(const Batch& pooled, int batch_size, std::uint64_t seed) {
  if (pooled.n < 1) throw ConfigError("sample_server_batch: empty server pool");
  const int k = std::min(batch_size, pooled.n);
  std::vector<int> all(pooled.n);
  std::iota(all.begin(), all.end(), 0);
  std::vector<int> rows;
  rows.reserve(k);
  std::mt19937_64 rng = make_rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(rows), k, rng);
  return take_rows(pooled, rows);
}

template <typename Fn>
inline void parallel_for_index(int n, int workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto work = [&] {
    while (true) {
      const int i = next.fetch_add(1);
      if (i >= n) break;
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int t = std::min(workers, n);
  pool.reserve(t);
  for (int k = 0; k < t; ++k) pool.emplace_back(work);
  for (std::thread& th : pool) th.join();
  for (std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/// One round of the meta-update family (fedsim, its variants, pfedme_mode):
/// sample m clients, run local updates, apply the per-client meta step
/// phi_tilde = phi - beta * meta_grad, and average. pfedme_mode instead mixes
/// theta_prev toward the plain average of the personalized models, with beta
/// acting as the mixing rate.
inline std::pair<ParamVector, RoundRecord> fedsim_round(const ParamVector& theta_prev,
                                                        const TaskSuite& suite,
                                                        const ServerConfig& scfg_in,
                                                        const LocalConfig& lcfg_in,
                                                        int round_index, std::uint64_t rng_seed) {
  const ServerConfig scfg = normalize_config(scfg_in);
  if (!is_fedsim_family(scfg.strategy)) {
    throw ConfigError("fedsim_round: strategy is not in the fedsim family");
  }
  scfg.validate(static_cast<int>(suite.clients.size()));
  lcfg_in.validate();
  check_finite(theta_prev, "fedsim_round: theta_prev");

  const bool pfedme = scfg.strategy == StrategyKind::PfedmeMode;
  const double beta_t =
      schedule_step(scfg.beta, round_index, scfg.total_rounds, scfg.schedule);
  const bool need_meta = !pfedme && beta_t != 0.0;
  const bool need_so = need_meta && scfg.so_mode == SoMode::ServerData;
  const bool need_fo_server = need_meta && scfg.fo_mode == FoMode::ServerData;

  Batch hessian_batch;
  Batch query_batch;
  if (need_so) {
    if (suite.server.empty()) {
      throw ConfigError("fedsim_round: so_mode=server_data requires non-empty server data");
    }
    hessian_batch = detail::sample_server_batch(
        suite.server.pooled, scfg.server_batch_size,
        server_batch_seed(rng_seed, static_cast<std::uint64_t>(round_index)));
  }
  if (need_fo_server) {
    if (suite.server.empty()) {
      throw ConfigError("fedsim_round: fo_mode=server_data requires non-empty server data");
    }
    query_batch = detail::sample_server_batch(
        suite.server.pooled, scfg.server_batch_size,
        derive_seed(rng_seed, {stream::kServerBatch, static_cast<std::uint64_t>(round_index), 1}));
  }

  const std::vector<int> picked = detail::sample_client_indices(
      static_cast<int>(suite.clients.size()), scfg.m,
      derive_seed(rng_seed, {stream::kSampling, static_cast<std::uint64_t>(round_index)}));

  LocalConfig lcfg = lcfg_in;
  lcfg.loss_mode = scfg.strategy == StrategyKind::FedsimVar1 ? LossMode::Basic : LossMode::CustomL2;

  std::vector<std::pair<int, ParamVector>> tilde(picked.size());
  std::vector<long> client_evals(picked.size(), 0);
  std::vector<long> server_evals(picked.size(), 0);
  detail::parallel_for_index(static_cast<int>(picked.size()), scfg.workers, [&](int k) {
    const ClientPartition& cp = suite.clients[picked[k]];
    const std::uint64_t seed_c = client_seed(rng_seed, static_cast<std::uint64_t>(round_index),
                                             static_cast<std::uint64_t>(cp.client_id));
    ParamVector phi =
        lcfg.loss_mode == LossMode::Basic
            ? client_update_basic(cp, theta_prev, lcfg, suite.model_spec, seed_c, &client_evals[k])
            : client_update(cp, theta_prev, lcfg, suite.model_spec, seed_c, &client_evals[k]);
    if (need_meta) {
      MetaGradientParts parts = compute_meta_parts(
          suite.model_spec, theta_prev, phi, scfg.fo_mode, scfg.so_mode, scfg.delta_weight,
          scfg.delta_fd, need_so ? &hessian_batch : nullptr,
          need_fo_server ? &query_batch : nullptr);
      server_evals[k] = parts.grad_evals_server;
      axpy_in_place(phi, -beta_t, parts.meta_grad);
    }
    tilde[k] = {cp.client_id, std::move(phi)};
  });

  const ParamVector averaged = aggregate_mean(std::move(tilde));
  ParamVector theta = pfedme ? interpolate(theta_prev, averaged, beta_t) : averaged;
  check_finite(theta, "fedsim_round: theta_t");

  RoundRecord rec;
  rec.round = round_index;
  rec.strategy = scfg.strategy;
  rec.beta_used = beta_t;
  rec.theta_norm = norm(theta);
  for (long c : client_evals) rec.client_grad_evals += c;
  for (long s : server_evals) rec.server_grad_evals += s;
  return {std::move(theta), rec};
}

/// One round of a baseline strategy: plain averaging (fedavg/fedprox),
/// interpolated averaging (fed_reptile), or averaging of locally
/// meta-updated models (perfedavg_fo/fedmeta).
inline std::pair<ParamVector, RoundRecord> baseline_round(const ParamVector& theta_prev,
                                                          const TaskSuite& suite,
                                                          const ServerConfig& scfg_in,
                                                          const LocalConfig& lcfg_in,
                                                          int round_index, std::uint64_t rng_seed) {
  const ServerConfig scfg = normalize_config(scfg_in);
  if (is_fedsim_family(scfg.strategy)) {
    throw ConfigError("baseline_round: strategy is not a baseline");
  }
  scfg.validate(static_cast<int>(suite.clients.size()));
  lcfg_in.validate();
  check_finite(theta_prev, "baseline_round: theta_prev");

  const double beta_t =
      schedule_step(scfg.beta, round_index, scfg.total_rounds, scfg.schedule);
  const std::vector<int> picked = detail::sample_client_indices(
      static_cast<int>(suite.clients.size()), scfg.m,
      derive_seed(rng_seed, {stream::kSampling, static_cast<std::uint64_t>(round_index)}));

  LocalConfig lcfg = lcfg_in;
  const StrategyKind st = scfg.strategy;
  if (st == StrategyKind::Fedavg || st == StrategyKind::FedReptile) lcfg.loss_mode = LossMode::Basic;
  if (st == StrategyKind::Fedprox) lcfg.loss_mode = LossMode::CustomL2;

  std::vector<std::pair<int, ParamVector>> models(picked.size());
  std::vector<long> client_evals(picked.size(), 0);
  detail::parallel_for_index(static_cast<int>(picked.size()), scfg.workers, [&](int k) {
    const ClientPartition& cp = suite.clients[picked[k]];
    const std::uint64_t seed_c = client_seed(rng_seed, static_cast<std::uint64_t>(round_index),
                                             static_cast<std::uint64_t>(cp.client_id));
    ParamVector w;
    switch (st) {
      case StrategyKind::Fedavg:
      case StrategyKind::FedReptile:
        w = client_update_basic(cp, theta_prev, lcfg, suite.model_spec, seed_c, &client_evals[k]);
        break;
      case StrategyKind::Fedprox:
        w = client_update(cp, theta_prev, lcfg, suite.model_spec, seed_c, &client_evals[k]);
        break;
      case StrategyKind::PerfedavgFo:
        w = perfedavg_fo_update(cp, theta_prev, lcfg, suite.model_spec, seed_c, &client_evals[k]);
        break;
      case StrategyKind::Fedmeta:
        w = fedmeta_update(cp, theta_prev, lcfg, suite.model_spec, seed_c, &client_evals[k]);
        break;
      default:
        throw ConfigError("baseline_round: unhandled strategy");
    }
    models[k] = {cp.client_id, std::move(w)};
  });

  const ParamVector averaged = aggregate_mean(std::move(models));
  ParamVector theta =
      st == StrategyKind::FedReptile ? interpolate(theta_prev, averaged, beta_t) : averaged;
  check_finite(theta, "baseline_round: theta_t");

  RoundRecord rec;
  rec.round = round_index;
  rec.strategy = st;
  rec.theta_norm = norm(theta);
  if (st == StrategyKind::FedReptile) {
    rec.beta_used = beta_t;
  } else if (st == StrategyKind::PerfedavgFo || st == StrategyKind::Fedmeta) {
    rec.beta_used = lcfg.beta_local;
  } else {
    rec.beta_used = 0.0;
  }
  for (long c : client_evals) rec.client_grad_evals += c;
  return {std::move(theta), rec};
}

/// Strategy dispatcher for the simulation loop.
inline std::pair<ParamVector, RoundRecord> run_round(const ParamVector& theta_prev,
                                                     const TaskSuite& suite,
                                                     const ServerConfig& scfg,
                                                     const LocalConfig& lcfg, int round_index,
                                                     std::uint64_t rng_seed) {
  return is_fedsim_family(scfg.strategy)
             ? fedsim_round(theta_prev, suite, scfg, lcfg, round_index, rng_seed)
             : baseline_round(theta_prev, suite, scfg, lcfg, round_index, rng_seed);
}

}  // namespace fedsim
