// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "fedsim/client.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/model.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/round_record.hpp"
#include "fedsim/server.hpp"
#include "fedsim/strategy.hpp"
#include "fedsim/tasks.hpp"

namespace fedsim {

/// Everything needed to reproduce one experiment: task generation knobs,
/// client and server settings, and the simulation schedule. seeds drive
/// independent repetitions; each seed regenerates the task suite.
struct ExperimentConfig {
  SuiteKind suite = SuiteKind::SineRegression;
  int n_clients = 100;
  int samples_per_client = 20;
  int n_classes = 4;
  double dirichlet_alpha = 0.1;
  double noise_sigma = 0.1;
  double server_fraction = 0.05;
  double support_frac = 0.8;

  LocalConfig local;
  ServerConfig server;
  std::optional<double> beta_local;

  int total_rounds = 200;
  int eval_every = 10;
  int eval_m = 10;
  int finetune_epochs = -1;  // -1: use local.epochs
  std::vector<std::uint64_t> seeds = {1};
  std::string output_path;
};

namespace detail {

inline bool strategy_uses_custom_loss(StrategyKind s) {
  switch (s) {
    case StrategyKind::Fedprox:
    case StrategyKind::PfedmeMode:
    case StrategyKind::Fedsim:
    case StrategyKind::FedsimVar2:
    case StrategyKind::FedsimVar3:
      return true;
    default:
      return false;
  }
}

}  // namespace detail

/// Validates the config and resolves the inherited fields (beta_local,
/// finetune_epochs, total_rounds plumbed into the server schedule). Fails
/// closed before any round runs.
struct ResolvedConfig {
  ExperimentConfig cfg;
  LocalConfig local;
  ServerConfig server;
  int finetune_epochs = 0;
};

inline ResolvedConfig resolve_config(const ExperimentConfig& cfg) {
  ResolvedConfig r;
  r.cfg = cfg;
  r.local = cfg.local;
  r.server = cfg.server;
  r.server.total_rounds = cfg.total_rounds;
  r.local.beta_local = cfg.beta_local.value_or(cfg.server.beta);
  r.finetune_epochs = cfg.finetune_epochs < 0 ? cfg.local.epochs : cfg.finetune_epochs;

  if (cfg.total_rounds < 1) throw ConfigError("ExperimentConfig: total_rounds must be >= 1");
  if (cfg.eval_every < 1) throw ConfigError("ExperimentConfig: eval_every must be >= 1");
  if (cfg.eval_m < 1) throw ConfigError("ExperimentConfig: eval_m must be >= 1");
  if (cfg.seeds.empty()) throw ConfigError("ExperimentConfig: seeds must be nonempty");
  if (cfg.n_clients < 2) throw ConfigError("ExperimentConfig: n_clients must be >= 2");
  if (!(cfg.server_fraction >= 0.0 && cfg.server_fraction < 1.0)) {
    throw ConfigError("ExperimentConfig: server_fraction must be in [0, 1)");
  }
  if (!(cfg.support_frac > 0.0 && cfg.support_frac < 1.0)) {
    throw ConfigError("ExperimentConfig: support_frac must be in (0, 1)");
  }
  r.local.validate();
  if (!(r.local.alpha > 0.0)) throw ConfigError("ExperimentConfig: alpha must be positive");
  if (cfg.samples_per_client < 2 * r.local.batch_size) {
    throw ConfigError("ExperimentConfig: every client needs >= 2*batch_size training samples");
  }
  if (r.local.beta_local < 0.0) throw ConfigError("ExperimentConfig: beta_local must be non-negative");

  const ServerConfig norm = normalize_config(r.server);
  if (detail::strategy_uses_custom_loss(norm.strategy) && !(r.local.lambda > 0.0)) {
    throw ConfigError("ExperimentConfig: custom-loss strategies require lambda > 0");
  }
  const int reserved = static_cast<int>(std::ceil(cfg.server_fraction * cfg.n_clients));
  if (reserved == 0) {
    // No server data. FedSIM degrades to its first-order form (the Hessian
    // estimate needs server batches); the server-data first-order variant
    // cannot run at all.
    if (norm.fo_mode == FoMode::ServerData && is_fedsim_family(norm.strategy)) {
      throw ConfigError("ExperimentConfig: fo_mode=server_data requires server_fraction > 0");
    }
    if (norm.so_mode == SoMode::ServerData && is_fedsim_family(norm.strategy)) {
      r.server.so_mode = SoMode::Off;
    }
  }
  const int remaining = cfg.n_clients - reserved;
  if (remaining < 2) throw ConfigError("ExperimentConfig: fewer than 2 clients after reservation");
  if (norm.m > remaining) throw ConfigError("ExperimentConfig: m exceeds remaining clients");
  if (cfg.eval_m > remaining) throw ConfigError("ExperimentConfig: eval_m exceeds remaining clients");
  r.server.validate(remaining);
  return r;
}

inline TaskSuite build_suite(const ExperimentConfig& cfg, std::uint64_t seed) {
  TaskSuite suite;
  switch (cfg.suite) {
    case SuiteKind::SineRegression:
      suite = gen_sine_tasks(cfg.n_clients, cfg.samples_per_client, seed);
      break;
    case SuiteKind::RotatedClusters:
      suite = gen_rotated_cluster_tasks(cfg.n_clients, cfg.samples_per_client, seed);
      break;
    case SuiteKind::GlyphImages:
      suite = gen_glyph_image_tasks(cfg.n_clients, cfg.n_classes, cfg.dirichlet_alpha,
                                    cfg.noise_sigma, seed, cfg.samples_per_client);
      break;
  }
  suite = reserve_server_partitions(std::move(suite), cfg.server_fraction, seed);
  split_all_support_query(suite, cfg.support_frac, seed);
  return suite;
}

/// Personalized evaluation: sample eval_m fresh clients, fine-tune a copy of
/// theta on each client's training data with the basic loss, and average the
/// eval-set metric (accuracy for classification, mean loss for regression).
/// The fine-tuned models are discarded.
inline double evaluate_personalized(const TaskSuite& suite, const ParamVector& theta,
                                    const LocalConfig& lcfg, int finetune_epochs, int eval_m,
                                    std::uint64_t seed, int round_index) {
  const int n = static_cast<int>(suite.clients.size());
  const std::vector<int> picked = detail::sample_client_indices(
      n, std::min(eval_m, n),
      derive_seed(seed, {stream::kEval, static_cast<std::uint64_t>(round_index)}));
  LocalConfig ft = lcfg;
  ft.loss_mode = LossMode::Basic;
  ft.lambda = 0.0;
  ft.epochs = finetune_epochs;
  double total = 0.0;
  for (int idx : picked) {
    const ClientPartition& cp = suite.clients[idx];
    ParamVector w = theta;
    if (finetune_epochs > 0) {
      w = client_update_basic(
          cp, theta, ft, suite.model_spec,
          derive_seed(seed, {stream::kEval, static_cast<std::uint64_t>(round_index),
                             static_cast<std::uint64_t>(cp.client_id)}));
    }
    total += suite.classification() ? accuracy(suite.model_spec, w, cp.eval)
                                    : forward_loss(suite.model_spec, w, cp.eval);
  }
  return total / static_cast<double>(picked.size());
}

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<RoundRecord> records;
  ParamVector final_theta;
};

struct RunResult {
  bool higher_is_better = false;
  std::vector<SeedRun> runs;
};

/// One simulation at one seed. Records are emitted at evaluation rounds
/// (every eval_every, plus the final round) and carry cumulative gradient
/// evaluation counters.
inline SeedRun simulate_one(const ResolvedConfig& rc, std::uint64_t seed) {
  const TaskSuite suite = build_suite(rc.cfg, seed);
  ParamVector theta = init_params(suite.model_spec, derive_seed(seed, {stream::kModelInit}));
  SeedRun run;
  run.seed = seed;
  long cum_client = 0;
  long cum_server = 0;
  for (int t = 0; t < rc.cfg.total_rounds; ++t) {
    std::pair<ParamVector, RoundRecord> step;
    try {
      step = run_round(theta, suite, rc.server, rc.local, t, seed);
    } catch (const NumericError& e) {
      throw NumericError("round " + std::to_string(t) + ": " + e.what());
    }
    theta = std::move(step.first);
    RoundRecord rec = step.second;
    cum_client += rec.client_grad_evals;
    cum_server += rec.server_grad_evals;
    const bool last = t + 1 == rc.cfg.total_rounds;
    if ((t + 1) % rc.cfg.eval_every == 0 || last) {
      rec.client_grad_evals = cum_client;
      rec.server_grad_evals = cum_server;
      rec.personalized_metric = evaluate_personalized(suite, theta, rc.local, rc.finetune_epochs,
                                                      rc.cfg.eval_m, seed, t);
      run.records.push_back(rec);
    }
  }
  run.final_theta = std::move(theta);
  return run;
}

inline RunResult run_simulation(const ExperimentConfig& cfg) {
  const ResolvedConfig rc = resolve_config(cfg);
  RunResult result;
  result.higher_is_better = cfg.suite != SuiteKind::SineRegression;
  for (std::uint64_t seed : cfg.seeds) result.runs.push_back(simulate_one(rc, seed));
  return result;
}

/// First recorded round whose metric reaches the target (>= when higher is
/// better, <= otherwise).
inline std::optional<int> rounds_to_target(const std::vector<RoundRecord>& records, double target,
                                           bool higher_is_better) {
  for (const RoundRecord& r : records) {
    if (higher_is_better ? r.personalized_metric >= target : r.personalized_metric <= target) {
      return r.round;
    }
  }
  return std::nullopt;
}

// ---- metrics persistence ----

/// Shortest round-trip decimal form; stable across reruns.
inline std::string format_double(double x) {
  char buf[64];
  const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc()) throw NumericError("format_double: conversion failed");
  return std::string(buf, res.ptr);
}

inline std::string records_csv(const RunResult& result) {
  std::string out = "round,strategy,seed,metric,theta_norm,client_grad_evals,server_grad_evals,beta_used\n";
  for (const SeedRun& run : result.runs) {
    for (const RoundRecord& r : run.records) {
      out += std::to_string(r.round);
      out += ',';
      out += strategy_name(r.strategy);
      out += ',';
      out += std::to_string(run.seed);
      out += ',';
      out += format_double(r.personalized_metric);
      out += ',';
      out += format_double(r.theta_norm);
      out += ',';
      out += std::to_string(r.client_grad_evals);
      out += ',';
      out += std::to_string(r.server_grad_evals);
      out += ',';
      out += format_double(r.beta_used);
      out += '\n';
    }
  }
  return out;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open for writing: " + path);
  f << content;
  if (!f) throw ConfigError("write failed: " + path);
}

// ---- experiment grids ----

enum class GridAxis { ServerFraction, LocalEpochs, Strategy };

inline const char* grid_axis_name(GridAxis a) {
  switch (a) {
    case GridAxis::ServerFraction: return "server_fraction";
    case GridAxis::LocalEpochs: return "local_epochs";
    case GridAxis::Strategy: return "strategy";
  }
  return "?";
}

inline GridAxis parse_grid_axis(const std::string& s) {
  if (s == "server_fraction") return GridAxis::ServerFraction;
  if (s == "local_epochs") return GridAxis::LocalEpochs;
  if (s == "strategy") return GridAxis::Strategy;
  throw ConfigError("unknown grid axis: " + s);
}

struct GridCellRun {
  std::uint64_t seed = 0;
  double final_metric = 0.0;
};

struct GridCell {
  std::string value;
  std::vector<GridCellRun> runs;
  double mean = 0.0;
  double stddev = 0.0;
};

struct GridResult {
  GridAxis axis = GridAxis::ServerFraction;
  bool higher_is_better = false;
  std::vector<GridCell> cells;
};

inline ExperimentConfig apply_axis_value(ExperimentConfig cfg, GridAxis axis,
                                         const std::string& value) {
  switch (axis) {
    case GridAxis::ServerFraction:
      cfg.server_fraction = std::stod(value);
      break;
    case GridAxis::LocalEpochs:
      cfg.local.epochs = std::stoi(value);
      break;
    case GridAxis::Strategy:
      cfg.server.strategy = parse_strategy(value);
      break;
  }
  return cfg;
}

/// One run_simulation per (value, seed) pair; per value, the mean and
/// population stddev of the final-round metric across seeds.
inline GridResult run_grid(const ExperimentConfig& base, GridAxis axis,
                           const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("run_grid: values must be nonempty");
  GridResult grid;
  grid.axis = axis;
  for (const std::string& v : values) {
    const ExperimentConfig cfg = apply_axis_value(base, axis, v);
    const RunResult result = run_simulation(cfg);
    grid.higher_is_better = result.higher_is_better;
    GridCell cell;
    cell.value = v;
    double sum = 0.0;
    for (const SeedRun& run : result.runs) {
      if (run.records.empty()) throw NumericError("run_grid: run produced no records");
      const double metric = run.records.back().personalized_metric;
      cell.runs.push_back({run.seed, metric});
      sum += metric;
    }
    cell.mean = sum / static_cast<double>(cell.runs.size());
    double var = 0.0;
    for (const GridCellRun& r : cell.runs) {
      var += (r.final_metric - cell.mean) * (r.final_metric - cell.mean);
    }
    cell.stddev = std::sqrt(var / static_cast<double>(cell.runs.size()));
    grid.cells.push_back(std::move(cell));
  }
  return grid;
}

}  // namespace fedsim
