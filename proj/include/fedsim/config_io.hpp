// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedsim/errors.hpp"
#include "fedsim/harness.hpp"
#include "fedsim/suite_io.hpp"

namespace fedsim {

inline FoMode parse_fo_mode(const std::string& s) {
  if (s == "weight_diff") return FoMode::WeightDiff;
  if (s == "server_data") return FoMode::ServerData;
  throw ConfigError("unknown fo_mode: " + s);
}

inline SoMode parse_so_mode(const std::string& s) {
  if (s == "server_data") return SoMode::ServerData;
  if (s == "off") return SoMode::Off;
  throw ConfigError("unknown so_mode: " + s);
}

inline BetaSchedule parse_schedule(const std::string& s) {
  if (s == "constant") return BetaSchedule::Constant;
  if (s == "linear_decay") return BetaSchedule::LinearDecay;
  throw ConfigError("unknown schedule: " + s);
}

inline ClientOptimizer parse_optimizer(const std::string& s) {
  if (s == "sgd") return ClientOptimizer::Sgd;
  if (s == "adam") return ClientOptimizer::Adam;
  throw ConfigError("unknown optimizer: " + s);
}

namespace detail {

inline int config_int(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
  return v.get<int>();
}

inline double config_double(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  return v.get<double>();
}

inline std::string config_string(const nlohmann::json& v, const std::string& key) {
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

/// Parses a JSON config document into an ExperimentConfig. Every key maps
/// onto one config field; unknown keys are an error.
inline ExperimentConfig config_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig cfg;
  for (const auto& [key, v] : j.items()) {
    if (key == "suite") {
      cfg.suite = parse_suite_kind(detail::config_string(v, key));
    } else if (key == "n_clients") {
      cfg.n_clients = detail::config_int(v, key);
    } else if (key == "samples_per_client") {
      cfg.samples_per_client = detail::config_int(v, key);
    } else if (key == "n_classes") {
      cfg.n_classes = detail::config_int(v, key);
    } else if (key == "dirichlet_alpha") {
      cfg.dirichlet_alpha = detail::config_double(v, key);
    } else if (key == "noise_sigma") {
      cfg.noise_sigma = detail::config_double(v, key);
    } else if (key == "server_fraction") {
      cfg.server_fraction = detail::config_double(v, key);
    } else if (key == "support_frac") {
      cfg.support_frac = detail::config_double(v, key);
    } else if (key == "alpha") {
      cfg.local.alpha = detail::config_double(v, key);
    } else if (key == "lambda") {
      cfg.local.lambda = detail::config_double(v, key);
    } else if (key == "epochs") {
      cfg.local.epochs = detail::config_int(v, key);
    } else if (key == "batch_size") {
      cfg.local.batch_size = detail::config_int(v, key);
    } else if (key == "optimizer") {
      cfg.local.optimizer = parse_optimizer(detail::config_string(v, key));
    } else if (key == "beta_local") {
      cfg.beta_local = detail::config_double(v, key);
    } else if (key == "fd_delta") {
      cfg.local.fd_delta = detail::config_double(v, key);
    } else if (key == "beta") {
      cfg.server.beta = detail::config_double(v, key);
    } else if (key == "delta_fd") {
      cfg.server.delta_fd = detail::config_double(v, key);
    } else if (key == "delta_weight") {
      cfg.server.delta_weight = detail::config_double(v, key);
    } else if (key == "m") {
      cfg.server.m = detail::config_int(v, key);
    } else if (key == "strategy") {
      cfg.server.strategy = parse_strategy(detail::config_string(v, key));
    } else if (key == "fo_mode") {
      cfg.server.fo_mode = parse_fo_mode(detail::config_string(v, key));
    } else if (key == "so_mode") {
      cfg.server.so_mode = parse_so_mode(detail::config_string(v, key));
    } else if (key == "server_batch_size") {
      cfg.server.server_batch_size = detail::config_int(v, key);
    } else if (key == "schedule") {
      cfg.server.schedule = parse_schedule(detail::config_string(v, key));
    } else if (key == "workers") {
      cfg.server.workers = detail::config_int(v, key);
    } else if (key == "total_rounds") {
      cfg.total_rounds = detail::config_int(v, key);
    } else if (key == "eval_every") {
      cfg.eval_every = detail::config_int(v, key);
    } else if (key == "eval_m") {
      cfg.eval_m = detail::config_int(v, key);
    } else if (key == "finetune_epochs") {
      cfg.finetune_epochs = detail::config_int(v, key);
    } else if (key == "seeds") {
      if (!v.is_array() || v.empty()) throw ConfigError("config key 'seeds' must be a nonempty array");
      cfg.seeds.clear();
      for (const nlohmann::json& s : v) {
        if (!s.is_number_integer()) throw ConfigError("config key 'seeds' must hold integers");
        cfg.seeds.push_back(s.get<std::uint64_t>());
      }
    } else if (key == "output_path") {
      cfg.output_path = detail::config_string(v, key);
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }
  return cfg;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Grid summary JSON: per-value mean/stddev plus the per-seed final metrics.
inline std::string grid_json(const GridResult& grid) {
  nlohmann::ordered_json j;
  j["axis"] = grid_axis_name(grid.axis);
  j["higher_is_better"] = grid.higher_is_better;
  nlohmann::ordered_json cells = nlohmann::ordered_json::array();
  for (const GridCell& cell : grid.cells) {
    nlohmann::ordered_json c;
    c["value"] = cell.value;
    c["mean"] = cell.mean;
    c["stddev"] = cell.stddev;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (const GridCellRun& r : cell.runs) {
      nlohmann::ordered_json rr;
      rr["seed"] = r.seed;
      rr["final_metric"] = r.final_metric;
      runs.push_back(std::move(rr));
    }
    c["runs"] = std::move(runs);
    cells.push_back(std::move(c));
  }
  j["cells"] = std::move(cells);
  return j.dump(2) + "\n";
}

}  // namespace fedsim
