// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fedsim/batch.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/model.hpp"
#include "fedsim/tasks.hpp"

namespace fedsim {

inline constexpr const char* kSuiteMagic = "fedsim-tasksuite";
inline constexpr int kSuiteVersion = 1;

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson batch_to_json(const Batch& b) {
  ojson j;
  j["n"] = b.n;
  j["input_dim"] = b.input_dim;
  j["target_dim"] = b.target_dim;
  j["inputs"] = b.inputs;
  j["targets"] = b.targets;
  return j;
}

inline Batch batch_from_json(const nlohmann::json& j) {
  Batch b;
  b.n = j.at("n").get<int>();
  b.input_dim = j.at("input_dim").get<int>();
  b.target_dim = j.at("target_dim").get<int>();
  b.inputs = j.at("inputs").get<std::vector<double>>();
  b.targets = j.at("targets").get<std::vector<double>>();
  validate_batch(b, "suite import");
  return b;
}

inline const char* activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "relu";
}

inline const char* loss_name(LossKind l) {
  return l == LossKind::Mse ? "mse" : "softmax_cross_entropy";
}

}  // namespace detail

inline SuiteKind parse_suite_kind(const std::string& s) {
  if (s == "sine_regression") return SuiteKind::SineRegression;
  if (s == "rotated_clusters") return SuiteKind::RotatedClusters;
  if (s == "glyph_images") return SuiteKind::GlyphImages;
  throw ConfigError("unknown suite kind: " + s);
}

/// Self-describing, exactly replayable export of a TaskSuite.
inline std::string suite_to_json_text(const TaskSuite& suite) {
  detail::ojson j;
  j["magic"] = kSuiteMagic;
  j["version"] = kSuiteVersion;
  j["suite_kind"] = suite_kind_name(suite.suite_kind);
  detail::ojson spec;
  spec["layer_sizes"] = suite.model_spec.layer_sizes;
  spec["activation"] = detail::activation_name(suite.model_spec.activation);
  spec["loss"] = detail::loss_name(suite.model_spec.loss);
  j["model_spec"] = std::move(spec);
  detail::ojson clients = detail::ojson::array();
  for (const ClientPartition& cp : suite.clients) {
    detail::ojson c;
    c["client_id"] = cp.client_id;
    c["descriptor"] = cp.descriptor;
    c["train"] = detail::batch_to_json(cp.train);
    c["eval"] = detail::batch_to_json(cp.eval);
    if (cp.support) c["support"] = detail::batch_to_json(*cp.support);
    if (cp.query) c["query"] = detail::batch_to_json(*cp.query);
    clients.push_back(std::move(c));
  }
  j["clients"] = std::move(clients);
  detail::ojson server;
  server["reserved_ids"] = suite.server.reserved_ids;
  detail::ojson parts = detail::ojson::array();
  for (const Batch& p : suite.server.partitions) parts.push_back(detail::batch_to_json(p));
  server["partitions"] = std::move(parts);
  j["server"] = std::move(server);
  return j.dump(2) + "\n";
}

inline TaskSuite suite_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("suite import: invalid JSON: ") + e.what());
  }
  try {
    if (j.at("magic").get<std::string>() != kSuiteMagic) {
      throw ConfigError("suite import: wrong magic string");
    }
    if (j.at("version").get<int>() != kSuiteVersion) {
      throw ConfigError("suite import: unsupported version");
    }
    TaskSuite suite;
    suite.suite_kind = parse_suite_kind(j.at("suite_kind").get<std::string>());
    const nlohmann::json& spec = j.at("model_spec");
    suite.model_spec.layer_sizes = spec.at("layer_sizes").get<std::vector<int>>();
    const std::string act = spec.at("activation").get<std::string>();
    if (act == "tanh") {
      suite.model_spec.activation = Activation::Tanh;
    } else if (act == "relu") {
      suite.model_spec.activation = Activation::Relu;
    } else {
      throw ConfigError("suite import: unknown activation: " + act);
    }
    const std::string loss = spec.at("loss").get<std::string>();
    if (loss == "mse") {
      suite.model_spec.loss = LossKind::Mse;
    } else if (loss == "softmax_cross_entropy") {
      suite.model_spec.loss = LossKind::SoftmaxCrossEntropy;
    } else {
      throw ConfigError("suite import: unknown loss: " + loss);
    }
    suite.model_spec.validate();
    for (const nlohmann::json& c : j.at("clients")) {
      ClientPartition cp;
      cp.client_id = c.at("client_id").get<int>();
      for (const auto& [k, v] : c.at("descriptor").items()) {
        cp.descriptor[k] = v.get<double>();
      }
      cp.train = detail::batch_from_json(c.at("train"));
      cp.eval = detail::batch_from_json(c.at("eval"));
      if (c.contains("support")) cp.support = detail::batch_from_json(c.at("support"));
      if (c.contains("query")) cp.query = detail::batch_from_json(c.at("query"));
      suite.clients.push_back(std::move(cp));
    }
    const nlohmann::json& server = j.at("server");
    suite.server.reserved_ids = server.at("reserved_ids").get<std::vector<int>>();
    for (const nlohmann::json& p : server.at("partitions")) {
      suite.server.partitions.push_back(detail::batch_from_json(p));
    }
    if (suite.server.partitions.empty()) {
      suite.server.pooled =
          make_batch(0, suite.model_spec.input_dim(), suite.model_spec.output_dim());
    } else {
      suite.server.pooled = concat_batches(suite.server.partitions);
    }
    return suite;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("suite import: malformed document: ") + e.what());
  }
}

}  // namespace fedsim
