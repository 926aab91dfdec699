// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "fedsim/client.hpp"
#include "fedsim/model.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/tasks.hpp"
#include "oracles.hpp"

using namespace fedsim;

namespace {

double attached_objective(const ModelSpec& spec, const ParamVector& phi, const Batch& data,
                          double lambda, const ParamVector& theta) {
  const ParamVector diff = sub(phi, theta);
  return forward_loss(spec, phi, data) + 0.5 * lambda * dot(diff, diff);
}

}  // namespace

TEST_CASE("a zero-gradient start is a fixed point of the attached solve", "[client]") {
  const testor::QuadraticClient q = testor::make_quadratic({0.5, 2.0}, {1.0, -1.0});
  const ClientPartition cp = testor::as_partition(q);
  const ParamVector theta = {1.0, -1.0, 0.0};
  LocalConfig cfg;
  cfg.alpha = 0.1;
  cfg.lambda = 1.0;
  cfg.epochs = 3;
  cfg.batch_size = 1;
  const ParamVector phi = client_update(cp, theta, cfg, q.spec, 99);
  REQUIRE(phi == theta);

  cfg.loss_mode = LossMode::Basic;
  REQUIRE(client_update_basic(cp, theta, cfg, q.spec, 99) == theta);
}

TEST_CASE("the attached solve converges to the proximal point", "[client]") {
  const testor::QuadraticClient q = testor::make_quadratic({0.5}, {1.0});
  const ClientPartition cp = testor::as_partition(q);
  const ParamVector theta = {0.0, 0.0};
  LocalConfig cfg;
  cfg.alpha = 0.5;
  cfg.lambda = 1.0;
  cfg.epochs = 200;
  cfg.batch_size = 2;
  const ParamVector phi = client_update(cp, theta, cfg, q.spec, 3);
  REQUIRE(std::abs(phi[0] - 1.0 / 3.0) <= 1e-10);
  REQUIRE(phi[1] == 0.0);
}

TEST_CASE("lambda zero reproduces the basic update bit for bit", "[client]") {
  const TaskSuite suite = gen_sine_tasks(3, 20, 8);
  const ParamVector theta = init_params(suite.model_spec, 5);
  LocalConfig custom;
  custom.alpha = 0.05;
  custom.lambda = 0.0;
  custom.epochs = 3;
  custom.batch_size = 4;
  LocalConfig basic = custom;
  basic.loss_mode = LossMode::Basic;
  const ParamVector a = client_update(suite.clients[0], theta, custom, suite.model_spec, 12);
  const ParamVector b = client_update_basic(suite.clients[0], theta, basic, suite.model_spec, 12);
  REQUIRE(a == b);
}

TEST_CASE("one full-batch epoch is exactly one gradient step", "[client]") {
  const TaskSuite suite = gen_sine_tasks(2, 10, 4);
  const ClientPartition& cp = suite.clients[1];
  const ParamVector theta = init_params(suite.model_spec, 6);
  LocalConfig cfg;
  cfg.alpha = 0.02;
  cfg.epochs = 1;
  cfg.batch_size = 10;
  cfg.loss_mode = LossMode::Basic;
  const std::uint64_t seed = 41;
  const ParamVector phi = client_update_basic(cp, theta, cfg, suite.model_spec, seed);
  const Batch mb = take_rows(cp.train, detail::epoch_order(cp.train.n, seed, 0));
  const ParamVector expected = axpy(-cfg.alpha, gradient(suite.model_spec, theta, mb), theta);
  REQUIRE(phi == expected);
}

TEST_CASE("stationarity implies the weight-difference identity", "[client]") {
  const testor::QuadraticClient q =
      testor::make_quadratic({0.5, 1.5, 0.8, 2.0}, {1.0, -2.0, 0.5, 3.0});
  const ClientPartition cp = testor::as_partition(q);
  std::mt19937_64 rng = make_rng(23);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  ParamVector theta(5);
  for (double& x : theta) x = dist(rng);
  LocalConfig cfg;
  cfg.alpha = 0.3;
  cfg.lambda = 1.0;
  cfg.epochs = 500;
  cfg.batch_size = 8;
  const ParamVector phi = client_update(cp, theta, cfg, q.spec, 17);
  const ParamVector attached_grad = add(q.grad_at(phi), sub(phi, theta));
  REQUIRE(norm(attached_grad) <= 1e-9);
  const ParamVector diff = sub(theta, phi);
  REQUIRE(norm(sub(diff, q.grad_at(phi))) <= 1e-6);
}

TEST_CASE("full-batch epochs descend the attached objective", "[client]") {
  const testor::QuadraticClient q =
      testor::make_quadratic({0.5, 1.5, 0.8, 2.0}, {1.0, -2.0, 0.5, 3.0});
  const ClientPartition cp = testor::as_partition(q);
  const ParamVector theta = {0.3, 0.1, -0.4, 0.2, 0.5};
  LocalConfig cfg;
  cfg.alpha = 0.3;
  cfg.lambda = 1.0;
  cfg.batch_size = 8;
  double prev = attached_objective(q.spec, theta, q.batch, cfg.lambda, theta);
  for (int e = 1; e <= 8; ++e) {
    cfg.epochs = e;
    const ParamVector phi = client_update(cp, theta, cfg, q.spec, 31);
    const double cur = attached_objective(q.spec, phi, q.batch, cfg.lambda, theta);
    REQUIRE(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("client updates are deterministic and pure", "[client]") {
  const TaskSuite suite = gen_sine_tasks(2, 12, 19);
  const ClientPartition& cp = suite.clients[0];
  const ParamVector theta = init_params(suite.model_spec, 2);
  const ParamVector theta_copy = theta;
  const std::vector<double> train_copy = cp.train.inputs;
  LocalConfig cfg;
  cfg.alpha = 0.05;
  cfg.epochs = 2;
  cfg.batch_size = 5;
  const ParamVector a = client_update(cp, theta, cfg, suite.model_spec, 7);
  const ParamVector b = client_update(cp, theta, cfg, suite.model_spec, 7);
  REQUIRE(a == b);
  REQUIRE(theta == theta_copy);
  REQUIRE(cp.train.inputs == train_copy);
  const ParamVector c = client_update(cp, theta, cfg, suite.model_spec, 8);
  REQUIRE(a != c);
}

TEST_CASE("gradient evaluation counters follow the epoch chunking", "[client]") {
  TaskSuite suite = gen_sine_tasks(2, 20, 25);
  split_all_support_query(suite, 0.8, 25);
  const ClientPartition& cp = suite.clients[0];
  const ParamVector theta = init_params(suite.model_spec, 3);
  LocalConfig cfg;
  cfg.alpha = 0.01;
  cfg.epochs = 3;
  cfg.batch_size = 6;

  long evals = 0;
  client_update(cp, theta, cfg, suite.model_spec, 1, &evals);
  REQUIRE(evals == 3 * 4);  // ceil(20 / 6) = 4 chunks per epoch

  cfg.epochs = 2;
  evals = 0;
  perfedavg_fo_update(cp, theta, cfg, suite.model_spec, 1, &evals);
  REQUIRE(evals == 2 * 2 * 3);  // support has 16 rows: ceil(16 / 6) = 3 chunks

  evals = 0;
  fedmeta_update(cp, theta, cfg, suite.model_spec, 1, &evals);
  REQUIRE(evals == 2 * 4 * 3);
}

TEST_CASE("meta updates return theta when nothing moves", "[client]") {
  const testor::QuadraticClient q = testor::make_quadratic({0.5, 2.0}, {1.0, -1.0});
  ClientPartition cp = testor::as_partition(q);
  cp.support = q.batch;
  cp.query = q.batch;
  const ParamVector theta = {1.0, -1.0, 0.0};
  LocalConfig cfg;
  cfg.alpha = 0.1;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  REQUIRE(perfedavg_fo_update(cp, theta, cfg, q.spec, 9) == theta);
  REQUIRE(fedmeta_update(cp, theta, cfg, q.spec, 9) == theta);
}

TEST_CASE("one first-order meta step matches the hand computation", "[client]") {
  const testor::QuadraticClient qs = testor::make_quadratic({0.8, 1.2}, {0.5, -0.5});
  const testor::QuadraticClient qq = testor::make_quadratic({0.8, 1.2}, {1.5, 0.5});
  ClientPartition cp = testor::as_partition(qs);
  cp.support = qs.batch;
  cp.query = qq.batch;
  const ParamVector theta = {0.2, -0.1, 0.3};
  LocalConfig cfg;
  cfg.alpha = 0.1;
  cfg.beta_local = 0.25;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  const std::uint64_t seed = 77;
  const ParamVector got = perfedavg_fo_update(cp, theta, cfg, qs.spec, seed);

  const Batch mb = take_rows(*cp.support, detail::epoch_order(cp.support->n, seed, 0));
  const ParamVector adapted = axpy(-cfg.alpha, gradient(qs.spec, theta, mb), theta);
  const ParamVector expected =
      axpy(-cfg.beta_local, gradient(qs.spec, adapted, *cp.query), theta);
  REQUIRE(got == expected);
}

TEST_CASE("alpha zero reduces the meta updates to a query step", "[client]") {
  const testor::QuadraticClient q = testor::make_quadratic({0.6}, {1.0});
  ClientPartition cp = testor::as_partition(q);
  cp.support = q.batch;
  const testor::QuadraticClient qq = testor::make_quadratic({0.9}, {-2.0});
  cp.query = qq.batch;
  const ParamVector theta = {0.4, 0.1};
  LocalConfig cfg;
  cfg.alpha = 0.0;
  cfg.beta_local = 0.3;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  const ParamVector fo = perfedavg_fo_update(cp, theta, cfg, q.spec, 5);
  const ParamVector expected = axpy(-cfg.beta_local, gradient(q.spec, theta, *cp.query), theta);
  REQUIRE(fo == expected);
  const ParamVector so = fedmeta_update(cp, theta, cfg, q.spec, 5);
  REQUIRE(so == fo);
}

TEST_CASE("the full meta step matches the exact quadratic meta-gradient", "[client]") {
  const testor::QuadraticClient qs =
      testor::make_quadratic({0.5, 1.5, 0.8}, {1.0, -2.0, 0.5});
  const testor::QuadraticClient qq =
      testor::make_quadratic({0.5, 1.5, 0.8}, {-1.0, 0.5, 2.0});
  ClientPartition cp = testor::as_partition(qs);
  cp.support = qs.batch;
  cp.query = qq.batch;
  const ParamVector theta = {0.2, -0.4, 0.6, 0.1};
  LocalConfig cfg;
  cfg.alpha = 0.1;
  cfg.beta_local = 0.25;
  cfg.fd_delta = 0.25;
  cfg.epochs = 1;
  cfg.batch_size = 6;
  const ParamVector got = fedmeta_update(cp, theta, cfg, qs.spec, 13);

  const ParamVector adapted = axpy(-cfg.alpha, qs.grad_at(theta), theta);
  const ParamVector g_q = qq.grad_at(adapted);
  const ParamVector corrected = axpy(-cfg.alpha, qs.hess_times(g_q), g_q);
  const ParamVector expected = axpy(-cfg.beta_local, corrected, theta);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    REQUIRE(std::abs(got[i] - expected[i]) <= 1e-8);
  }
}

TEST_CASE("a query set minimized at the adapted point leaves theta fixed", "[client]") {
  const testor::QuadraticClient qs = testor::make_quadratic({0.5}, {1.0});
  ClientPartition cp = testor::as_partition(qs);
  cp.support = qs.batch;
  const ParamVector theta = {2.0, 0.0};
  LocalConfig cfg;
  cfg.alpha = 0.1;
  cfg.beta_local = 0.25;
  cfg.epochs = 1;
  cfg.batch_size = 2;
  const ParamVector inner_g = gradient(qs.spec, theta, qs.batch);
  const ParamVector adapted = axpy(-cfg.alpha, inner_g, theta);
  const testor::QuadraticClient qq = testor::make_quadratic({0.7}, {adapted[0]});
  cp.query = qq.batch;
  REQUIRE(perfedavg_fo_update(cp, theta, cfg, qs.spec, 21) == theta);
  REQUIRE(fedmeta_update(cp, theta, cfg, qs.spec, 21) == theta);
}

TEST_CASE("meta updates demand support/query splits", "[client]") {
  const testor::QuadraticClient q = testor::make_quadratic({1.0}, {0.0});
  const ClientPartition cp = testor::as_partition(q);
  const ParamVector theta = {0.0, 0.0};
  LocalConfig cfg;
  REQUIRE_THROWS_AS(perfedavg_fo_update(cp, theta, cfg, q.spec, 1), ConfigError);
  REQUIRE_THROWS_AS(fedmeta_update(cp, theta, cfg, q.spec, 1), ConfigError);
}

TEST_CASE("config validation and divergence reporting", "[client]") {
  LocalConfig bad;
  bad.alpha = -1.0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = LocalConfig{};
  bad.lambda = -0.5;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = LocalConfig{};
  bad.epochs = 0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);
  bad = LocalConfig{};
  bad.batch_size = 0;
  REQUIRE_THROWS_AS(bad.validate(), ConfigError);

  const testor::QuadraticClient q = testor::make_quadratic({2.0}, {1.0});
  const ClientPartition cp = testor::as_partition(q);
  LocalConfig wild;
  wild.alpha = 1e10;
  wild.lambda = 1.0;
  wild.epochs = 400;
  wild.batch_size = 2;
  REQUIRE_THROWS_AS(client_update(cp, {0.5, 0.5}, wild, q.spec, 2), NumericError);
}

TEST_CASE("the Adam option is deterministic and finite", "[client]") {
  const TaskSuite suite = gen_sine_tasks(2, 12, 33);
  const ParamVector theta = init_params(suite.model_spec, 4);
  LocalConfig cfg;
  cfg.alpha = 0.01;
  cfg.epochs = 3;
  cfg.batch_size = 4;
  cfg.optimizer = ClientOptimizer::Adam;
  const ParamVector a = client_update(suite.clients[0], theta, cfg, suite.model_spec, 6);
  const ParamVector b = client_update(suite.clients[0], theta, cfg, suite.model_spec, 6);
  REQUIRE(a == b);
  REQUIRE(all_finite(a));
  REQUIRE(a != theta);
}
