// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "fedsim/batch.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/model.hpp"
#include "fedsim/rng.hpp"

namespace fedsim {

enum class SuiteKind { SineRegression, RotatedClusters, GlyphImages };

inline const char* suite_kind_name(SuiteKind k) {
  switch (k) {
    case SuiteKind::SineRegression: return "sine_regression";
    case SuiteKind::RotatedClusters: return "rotated_clusters";
    case SuiteKind::GlyphImages: return "glyph_images";
  }
  return "?";
}

/// One client's data. Descriptor keys are task specific (amplitude/phase,
/// rotation angle, label_k counts).
struct ClientPartition {
  int client_id = 0;
  Batch train;
  Batch eval;
  std::optional<Batch> support;
  std::optional<Batch> query;
  std::map<std::string, double> descriptor;
};

struct ServerDataset {
  std::vector<int> reserved_ids;
  std::vector<Batch> partitions;
  Batch pooled;

  bool empty() const { return pooled.n == 0; }
};

struct TaskSuite {
  SuiteKind suite_kind = SuiteKind::SineRegression;
  std::vector<ClientPartition> clients;
  ServerDataset server;
  ModelSpec model_spec;

  bool classification() const { return model_spec.loss == LossKind::SoftmaxCrossEntropy; }
};

namespace detail {

inline int eval_count_for(int samples_per_client) {
  return std::max(2, samples_per_client / 5);
}

}  // namespace detail

/// Sine regression: client i fits y = a_i sin(x + p_i), a_i ~ U[0.1, 5],
/// p_i ~ U[0, pi], x ~ U[-5, 5]. The heterogeneity knob is the (a, p) spread.
inline TaskSuite gen_sine_tasks(int n_clients, int samples_per_client, std::uint64_t rng_seed) {
  if (n_clients < 2) throw ConfigError("gen_sine_tasks: need at least 2 clients");
  if (samples_per_client < 4) throw ConfigError("gen_sine_tasks: need at least 4 samples per client");
  TaskSuite suite;
  suite.suite_kind = SuiteKind::SineRegression;
  suite.model_spec = ModelSpec{{1, 16, 16, 1}, Activation::Tanh, LossKind::Mse};
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n_clients; ++i) {
    std::mt19937_64 rng = make_rng(derive_seed(rng_seed, {stream::kTaskData, static_cast<std::uint64_t>(i)}));
    std::uniform_real_distribution<double> amp_dist(0.1, 5.0);
    std::uniform_real_distribution<double> phase_dist(0.0, pi);
    std::uniform_real_distribution<double> x_dist(-5.0, 5.0);
    const double a = amp_dist(rng);
    const double p = phase_dist(rng);
    ClientPartition cp;
    cp.client_id = i;
    cp.descriptor["amplitude"] = a;
    cp.descriptor["phase"] = p;
    const int n_eval = detail::eval_count_for(samples_per_client);
    cp.train = make_batch(samples_per_client, 1, 1);
    cp.eval = make_batch(n_eval, 1, 1);
    for (int s = 0; s < samples_per_client; ++s) {
      const double x = x_dist(rng);
      cp.train.inputs[s] = x;
      cp.train.targets[s] = a * std::sin(x + p);
    }
    for (int s = 0; s < n_eval; ++s) {
      const double x = x_dist(rng);
      cp.eval.inputs[s] = x;
      cp.eval.targets[s] = a * std::sin(x + p);
    }
    suite.clients.push_back(std::move(cp));
  }
  return suite;
}

/// Rotated 2-D Gaussian clusters: three class centers on a circle, rotated
/// per client by u ~ U[0, 2pi). Classification without images.
inline TaskSuite gen_rotated_cluster_tasks(int n_clients, int samples_per_client, std::uint64_t rng_seed) {
  if (n_clients < 2) throw ConfigError("gen_rotated_cluster_tasks: need at least 2 clients");
  if (samples_per_client < 4) throw ConfigError("gen_rotated_cluster_tasks: need at least 4 samples per client");
  constexpr int kClasses = 3;
  TaskSuite suite;
  suite.suite_kind = SuiteKind::RotatedClusters;
  suite.model_spec = ModelSpec{{2, 16, kClasses}, Activation::Tanh, LossKind::SoftmaxCrossEntropy};
  const double pi = 3.14159265358979323846;
  for (int i = 0; i < n_clients; ++i) {
    std::mt19937_64 rng = make_rng(derive_seed(rng_seed, {stream::kTaskData, static_cast<std::uint64_t>(i)}));
    std::uniform_real_distribution<double> angle_dist(0.0, 2.0 * pi);
    std::uniform_int_distribution<int> label_dist(0, kClasses - 1);
    std::normal_distribution<double> noise(0.0, 0.5);
    const double angle = angle_dist(rng);
    ClientPartition cp;
    cp.client_id = i;
    cp.descriptor["angle"] = angle;
    const int n_eval = detail::eval_count_for(samples_per_client);
    cp.train = make_batch(samples_per_client, 2, kClasses);
    cp.eval = make_batch(n_eval, 2, kClasses);
    auto fill = [&](Batch& b) {
      for (int s = 0; s < b.n; ++s) {
        const int lab = label_dist(rng);
        const double base = angle + 2.0 * pi * lab / kClasses;
        b.inputs[static_cast<std::size_t>(s) * 2 + 0] = 2.0 * std::cos(base) + noise(rng);
        b.inputs[static_cast<std::size_t>(s) * 2 + 1] = 2.0 * std::sin(base) + noise(rng);
        b.targets[static_cast<std::size_t>(s) * kClasses + lab] = 1.0;
      }
    };
    fill(cp.train);
    fill(cp.eval);
    suite.clients.push_back(std::move(cp));
  }
  return suite;
}

namespace detail {

/// Eight fixed 8x8 prototypes: horizontal bar, vertical bar, cross, X,
/// main diagonal, anti-diagonal, border box, checkerboard.
inline std::vector<std::vector<double>> glyph_prototypes() {
  std::vector<std::vector<double>> protos(8, std::vector<double>(64, 0.0));
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) {
      const int idx = r * 8 + c;
      if (r == 3 || r == 4) protos[0][idx] = 1.0;
      if (c == 3 || c == 4) protos[1][idx] = 1.0;
      if (r == 3 || r == 4 || c == 3 || c == 4) protos[2][idx] = 1.0;
      if (r == c || r + c == 7) protos[3][idx] = 1.0;
      if (r == c) protos[4][idx] = 1.0;
      if (r + c == 7) protos[5][idx] = 1.0;
      if (r == 0 || r == 7 || c == 0 || c == 7) protos[6][idx] = 1.0;
      if ((r + c) % 2 == 0) protos[7][idx] = 1.0;
    }
  }
  return protos;
}

}  // namespace detail

/// Glyph classification with Dirichlet(alpha) label skew: each client draws a
/// label histogram from Dirichlet(alpha) and samples noisy prototypes
/// (additive Gaussian, clamped to [0,1]). Small alpha = strong skew.
inline TaskSuite gen_glyph_image_tasks(int n_clients, int n_classes, double dirichlet_alpha,
                                       double noise_sigma, std::uint64_t rng_seed,
                                       int samples_per_client = 40) {
  if (n_clients < 2) throw ConfigError("gen_glyph_image_tasks: need at least 2 clients");
  if (n_classes < 2 || n_classes > 8) throw ConfigError("gen_glyph_image_tasks: n_classes must be in [2, 8]");
  if (!(dirichlet_alpha > 0.0)) throw ConfigError("gen_glyph_image_tasks: dirichlet_alpha must be positive");
  if (noise_sigma < 0.0) throw ConfigError("gen_glyph_image_tasks: noise_sigma must be non-negative");
  if (samples_per_client < 4) throw ConfigError("gen_glyph_image_tasks: need at least 4 samples per client");
  const std::vector<std::vector<double>> protos = detail::glyph_prototypes();
  TaskSuite suite;
  suite.suite_kind = SuiteKind::GlyphImages;
  suite.model_spec = ModelSpec{{64, 32, n_classes}, Activation::Tanh, LossKind::SoftmaxCrossEntropy};
  for (int i = 0; i < n_clients; ++i) {
    std::mt19937_64 rng = make_rng(derive_seed(rng_seed, {stream::kTaskData, static_cast<std::uint64_t>(i)}));
    std::gamma_distribution<double> gamma(dirichlet_alpha, 1.0);
    std::vector<double> weights(n_classes);
    double wsum = 0.0;
    for (double& w : weights) {
      w = gamma(rng);
      wsum += w;
    }
    if (wsum <= 0.0) {
      weights.assign(n_classes, 1.0);
      wsum = n_classes;
    }
    for (double& w : weights) w /= wsum;
    std::discrete_distribution<int> label_dist(weights.begin(), weights.end());
    std::normal_distribution<double> noise(0.0, noise_sigma);

    ClientPartition cp;
    cp.client_id = i;
    cp.descriptor["dirichlet_alpha"] = dirichlet_alpha;
    std::vector<int> hist(n_classes, 0);
    const int n_eval = detail::eval_count_for(samples_per_client);
    cp.train = make_batch(samples_per_client, 64, n_classes);
    cp.eval = make_batch(n_eval, 64, n_classes);
    auto fill = [&](Batch& b) {
      for (int s = 0; s < b.n; ++s) {
        const int lab = label_dist(rng);
        ++hist[lab];
        for (int px = 0; px < 64; ++px) {
          const double v = protos[lab][px] + (noise_sigma > 0.0 ? noise(rng) : 0.0);
          b.inputs[static_cast<std::size_t>(s) * 64 + px] = std::clamp(v, 0.0, 1.0);
        }
        b.targets[static_cast<std::size_t>(s) * n_classes + lab] = 1.0;
      }
    };
    fill(cp.train);
    fill(cp.eval);
    for (int k = 0; k < n_classes; ++k) {
      cp.descriptor["label_" + std::to_string(k)] = static_cast<double>(hist[k]);
    }
    suite.clients.push_back(std::move(cp));
  }
  return suite;
}

/// Moves ceil(fraction * n) whole client partitions (train + eval pooled)
/// into the server dataset. Remaining clients keep their ids and data.
inline TaskSuite reserve_server_partitions(TaskSuite suite, double fraction, std::uint64_t rng_seed) {
  if (!(fraction >= 0.0) || fraction >= 1.0) {
    throw ConfigError("reserve_server_partitions: fraction must be in [0, 1)");
  }
  const int n = static_cast<int>(suite.clients.size());
  const int n_res = static_cast<int>(std::ceil(fraction * n));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng = make_rng(derive_seed(rng_seed, {stream::kSplit}));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> reserved(n, false);
  for (int k = 0; k < n_res; ++k) reserved[order[k]] = true;

  TaskSuite out;
  out.suite_kind = suite.suite_kind;
  out.model_spec = suite.model_spec;
  for (int i = 0; i < n; ++i) {
    if (reserved[i]) {
      out.server.reserved_ids.push_back(suite.clients[i].client_id);
      out.server.partitions.push_back(concat_batches({suite.clients[i].train, suite.clients[i].eval}));
    } else {
      out.clients.push_back(std::move(suite.clients[i]));
    }
  }
  std::sort(out.server.reserved_ids.begin(), out.server.reserved_ids.end());
  if (out.server.partitions.empty()) {
    out.server.pooled = make_batch(0, suite.model_spec.input_dim(), suite.model_spec.output_dim());
  } else {
    out.server.pooled = concat_batches(out.server.partitions);
  }
  if (static_cast<int>(out.clients.size()) < 2) {
    throw ConfigError("reserve_server_partitions: fewer than 2 clients would remain");
  }
  return out;
}

/// Populates the support/query fields with a disjoint shuffle split of train:
/// ceil(frac * n) support rows, the rest query.
inline ClientPartition split_support_query(ClientPartition partition, double support_frac,
                                           std::uint64_t rng_seed) {
  if (!(support_frac > 0.0 && support_frac < 1.0)) {
    throw ConfigError("split_support_query: support_frac must be in (0, 1)");
  }
  const int n = partition.train.n;
  const int n_sup = static_cast<int>(std::ceil(support_frac * n));
  if (n_sup < 1 || n - n_sup < 1) {
    throw ConfigError("split_support_query: train set too small for both splits");
  }
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng = make_rng(
      derive_seed(rng_seed, {stream::kSplit, static_cast<std::uint64_t>(partition.client_id)}));
  std::shuffle(order.begin(), order.end(), rng);
  partition.support = take_rows(partition.train, {order.begin(), order.begin() + n_sup});
  partition.query = take_rows(partition.train, {order.begin() + n_sup, order.end()});
  return partition;
}

inline void split_all_support_query(TaskSuite& suite, double support_frac, std::uint64_t rng_seed) {
  for (ClientPartition& cp : suite.clients) {
    cp = split_support_query(std::move(cp), support_frac, rng_seed);
  }
}

}  // namespace fedsim
