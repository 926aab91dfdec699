// SPDX-License-Identifier: Apache-2.0
//
// Anatomy of one server-side meta-gradient: run a proximal client update,
// then assemble v, the Hessian-vector correction d, and the damped estimate
// v - delta*d from the server-held batch.
#include <cstdio>

#include "fedsim/fedsim.hpp"

using namespace fedsim;

int main() {
  ExperimentConfig cfg;
  cfg.suite = SuiteKind::SineRegression;
  cfg.n_clients = 20;
  cfg.samples_per_client = 20;
  cfg.server_fraction = 0.1;
  cfg.local.alpha = 0.05;
  cfg.local.lambda = 1.0;
  cfg.local.epochs = 5;
  cfg.local.batch_size = 5;
  cfg.seeds = {7};

  const TaskSuite suite = build_suite(cfg, 7);
  const ParamVector theta = init_params(suite.model_spec, 7);
  const Batch server = detail::sample_server_batch(suite.server.pooled, 32, server_batch_seed(7, 0));

  const double delta = 0.05;
  for (int id : {0, 1, 2}) {
    const ParamVector phi = client_update(suite.clients[id], theta, cfg.local, suite.model_spec,
                                          client_seed(7, 0, static_cast<std::uint64_t>(id)));
    const MetaGradientParts parts =
        compute_meta_parts(suite.model_spec, theta, phi, FoMode::WeightDiff, SoMode::ServerData,
                           delta, 0.25, &server, nullptr);
    const double vn = norm(parts.v);
    const double dn = parts.d ? norm(*parts.d) : 0.0;
    std::printf("client %d: |v| %.4f  |d| %.4f  damping ratio %.3f  |meta grad| %.4f\n", id, vn,
                dn, delta * dn / vn, norm(parts.meta_grad));
  }
  return 0;
}
