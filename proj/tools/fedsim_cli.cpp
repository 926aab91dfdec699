// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: single runs, grids, task-suite export, and the
// server/client similarity analysis.

#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedsim/fedsim.hpp"

namespace {

struct Overrides {
  std::optional<std::string> suite;
  std::optional<std::string> strategy;
  std::optional<double> server_fraction;
  std::optional<int> epochs;
  std::optional<int> rounds;
  std::optional<std::vector<std::uint64_t>> seeds;
  std::optional<int> n_clients;
  std::optional<int> samples_per_client;
  std::optional<int> m;
  std::optional<double> alpha;
  std::optional<double> lambda;
  std::optional<double> beta;
  std::optional<int> batch_size;
  std::optional<int> eval_every;
  std::optional<int> eval_m;
  std::optional<int> workers;
  std::optional<std::string> out;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  cmd->add_option("--suite", ov.suite, "task suite: sine_regression|rotated_clusters|glyph_images");
  cmd->add_option("--strategy", ov.strategy, "strategy name (fedsim, fedavg, ...)");
  cmd->add_option("--server-fraction", ov.server_fraction, "fraction of partitions reserved for the server");
  cmd->add_option("--epochs", ov.epochs, "local epochs E");
  cmd->add_option("--rounds", ov.rounds, "communication rounds");
  cmd->add_option("--seed", ov.seeds, "experiment seed(s)");
  cmd->add_option("--clients", ov.n_clients, "number of clients");
  cmd->add_option("--samples-per-client", ov.samples_per_client, "training samples per client");
  cmd->add_option("--m", ov.m, "clients sampled per round");
  cmd->add_option("--alpha", ov.alpha, "client step size");
  cmd->add_option("--lambda", ov.lambda, "attachment strength");
  cmd->add_option("--beta", ov.beta, "server step size");
  cmd->add_option("--batch-size", ov.batch_size, "client mini-batch size");
  cmd->add_option("--eval-every", ov.eval_every, "evaluation period in rounds");
  cmd->add_option("--eval-m", ov.eval_m, "clients sampled per evaluation");
  cmd->add_option("--workers", ov.workers, "max concurrent client updates");
  cmd->add_option("--out", ov.out, "output file path");
}

fedsim::ExperimentConfig make_config(const std::string& config_path, const Overrides& ov) {
  fedsim::ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = fedsim::config_from_json_text(fedsim::read_text_file(config_path));
  }
  if (ov.suite) cfg.suite = fedsim::parse_suite_kind(*ov.suite);
  if (ov.strategy) cfg.server.strategy = fedsim::parse_strategy(*ov.strategy);
  if (ov.server_fraction) cfg.server_fraction = *ov.server_fraction;
  if (ov.epochs) cfg.local.epochs = *ov.epochs;
  if (ov.rounds) cfg.total_rounds = *ov.rounds;
  if (ov.seeds) cfg.seeds = *ov.seeds;
  if (ov.n_clients) cfg.n_clients = *ov.n_clients;
  if (ov.samples_per_client) cfg.samples_per_client = *ov.samples_per_client;
  if (ov.m) cfg.server.m = *ov.m;
  if (ov.alpha) cfg.local.alpha = *ov.alpha;
  if (ov.lambda) cfg.local.lambda = *ov.lambda;
  if (ov.beta) cfg.server.beta = *ov.beta;
  if (ov.batch_size) cfg.local.batch_size = *ov.batch_size;
  if (ov.eval_every) cfg.eval_every = *ov.eval_every;
  if (ov.eval_m) cfg.eval_m = *ov.eval_m;
  if (ov.workers) cfg.server.workers = *ov.workers;
  if (ov.out) cfg.output_path = *ov.out;
  return cfg;
}

double csv_final_metric_mean(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw fedsim::ConfigError("analyze: empty CSV");
  std::map<std::string, double> last_by_seed;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::istringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() != 8) throw fedsim::ConfigError("analyze: malformed CSV row: " + line);
    last_by_seed[cols[2]] = std::stod(cols[3]);
  }
  if (last_by_seed.empty()) throw fedsim::ConfigError("analyze: CSV has no data rows");
  double sum = 0.0;
  for (const auto& [seed, metric] : last_by_seed) sum += metric;
  return sum / static_cast<double>(last_by_seed.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale personalized federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_ov;
  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment, write a metrics CSV");
  run_cmd->add_option("--config", config_path, "JSON config file");
  add_override_flags(run_cmd, run_ov);

  Overrides grid_ov;
  std::string grid_config_path;
  std::string axis = "server_fraction";
  std::vector<std::string> grid_values;
  CLI::App* grid_cmd = app.add_subcommand("grid", "sweep one axis, write a JSON summary");
  grid_cmd->add_option("--config", grid_config_path, "JSON config file");
  grid_cmd->add_option("--axis", axis, "server_fraction|local_epochs|strategy");
  grid_cmd->add_option("--values", grid_values, "axis values")->required();
  add_override_flags(grid_cmd, grid_ov);

  std::vector<std::string> suite_files;
  std::vector<std::string> csv_files;
  std::vector<double> fractions;
  std::string analyze_out;
  CLI::App* analyze_cmd = app.add_subcommand("analyze", "server/client similarity report from exported suites");
  analyze_cmd->add_option("--suite-file", suite_files, "exported task suite JSON")->required();
  analyze_cmd->add_option("--csv", csv_files, "metrics CSV to join accuracy from (parallel to --suite-file)");
  analyze_cmd->add_option("--fraction", fractions, "server fraction label (parallel to --suite-file)");
  analyze_cmd->add_option("--out", analyze_out, "output JSON path");

  Overrides export_ov;
  std::string export_config_path;
  std::uint64_t export_seed = 1;
  CLI::App* export_cmd = app.add_subcommand("export-tasks", "generate and export a task suite");
  export_cmd->add_option("--config", export_config_path, "JSON config file");
  export_cmd->add_option("--export-seed", export_seed, "generation seed");
  add_override_flags(export_cmd, export_ov);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      const fedsim::ExperimentConfig cfg = make_config(config_path, run_ov);
      const fedsim::RunResult result = fedsim::run_simulation(cfg);
      const std::string csv = fedsim::records_csv(result);
      if (cfg.output_path.empty()) {
        std::cout << csv;
      } else {
        fedsim::write_text_file(cfg.output_path, csv);
        std::cerr << "wrote " << cfg.output_path << "\n";
      }
    } else if (*grid_cmd) {
      const fedsim::ExperimentConfig cfg = make_config(grid_config_path, grid_ov);
      const fedsim::GridResult grid =
          fedsim::run_grid(cfg, fedsim::parse_grid_axis(axis), grid_values);
      const std::string json = fedsim::grid_json(grid);
      if (cfg.output_path.empty()) {
        std::cout << json;
      } else {
        fedsim::write_text_file(cfg.output_path, json);
        std::cerr << "wrote " << cfg.output_path << "\n";
      }
    } else if (*analyze_cmd) {
      nlohmann::ordered_json reports = nlohmann::ordered_json::array();
      for (std::size_t i = 0; i < suite_files.size(); ++i) {
        const fedsim::TaskSuite suite =
            fedsim::suite_from_json_text(fedsim::read_text_file(suite_files[i]));
        fedsim::SimilarityReport rep =
            fedsim::server_client_similarity(suite.server, suite.clients);
        const double denom =
            static_cast<double>(suite.clients.size() + suite.server.reserved_ids.size());
        rep.server_fraction = i < fractions.size()
                                  ? fractions[i]
                                  : static_cast<double>(suite.server.reserved_ids.size()) / denom;
        if (i < csv_files.size()) {
          rep.accuracy_mean = csv_final_metric_mean(fedsim::read_text_file(csv_files[i]));
        }
        nlohmann::ordered_json r;
        r["server_fraction"] = rep.server_fraction;
        r["ssim_variance"] = rep.ssim_variance;
        r["accuracy_mean"] = rep.accuracy_mean;
        nlohmann::ordered_json per = nlohmann::ordered_json::array();
        for (const auto& [id, s] : rep.per_client_ssim) {
          per.push_back(nlohmann::ordered_json::array({id, s}));
        }
        r["per_client_ssim"] = std::move(per);
        reports.push_back(std::move(r));
      }
      const std::string json = reports.dump(2) + "\n";
      if (analyze_out.empty()) {
        std::cout << json;
      } else {
        fedsim::write_text_file(analyze_out, json);
        std::cerr << "wrote " << analyze_out << "\n";
      }
    } else if (*export_cmd) {
      const fedsim::ExperimentConfig cfg = make_config(export_config_path, export_ov);
      fedsim::TaskSuite suite = fedsim::build_suite(cfg, export_seed);
      const std::string json = fedsim::suite_to_json_text(suite);
      if (cfg.output_path.empty()) {
        std::cout << json;
      } else {
        fedsim::write_text_file(cfg.output_path, json);
        std::cerr << "wrote " << cfg.output_path << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
