// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fedsim/param_vector.hpp"
#include "fedsim/rng.hpp"

using namespace fedsim;

TEST_CASE("mean of identical vectors returns the vector bit for bit", "[core]") {
  std::mt19937_64 rng = make_rng(7);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int rep = 0; rep < 1000; ++rep) {
    ParamVector x(5);
    for (double& v : x) v = dist(rng);
    for (int k : {2, 3, 5, 7}) {
      const ParamVector m = mean_of(std::vector<ParamVector>(k, x));
      for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(m[i] == x[i]);
    }
  }
}

TEST_CASE("mean matches the plain average within rounding", "[core]") {
  std::mt19937_64 rng = make_rng(8);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<ParamVector> vs(9, ParamVector(4));
  for (ParamVector& v : vs) {
    for (double& x : v) x = dist(rng);
  }
  const ParamVector m = mean_of(vs);
  for (std::size_t i = 0; i < 4; ++i) {
    double s = 0.0;
    for (const ParamVector& v : vs) s += v[i];
    REQUIRE(m[i] == Catch::Approx(s / 9.0).margin(1e-12));
  }
}

TEST_CASE("axpy with zero coefficient returns the addend", "[core]") {
  const ParamVector v = {1.5, -2.25, 3.0};
  const ParamVector w = {0.5, 0.25, -8.0};
  const ParamVector r = axpy(0.0, v, w);
  for (std::size_t i = 0; i < w.size(); ++i) REQUIRE(r[i] == w[i]);
}

TEST_CASE("norm of the zero vector is zero", "[core]") {
  REQUIRE(norm(ParamVector(17, 0.0)) == 0.0);
}

TEST_CASE("vector ops reject length mismatches", "[core]") {
  const ParamVector a(3, 1.0);
  const ParamVector b(4, 1.0);
  REQUIRE_THROWS_AS(add(a, b), ConfigError);
  REQUIRE_THROWS_AS(sub(a, b), ConfigError);
  REQUIRE_THROWS_AS(dot(a, b), ConfigError);
  REQUIRE_THROWS_AS(axpy(1.0, a, b), ConfigError);
  REQUIRE_THROWS_AS(mean_of(std::vector<ParamVector>{a, b}), ConfigError);
  REQUIRE_THROWS_AS(mean_of(std::vector<ParamVector>{}), ConfigError);
}

TEST_CASE("elementwise algebra is exact on representable cases", "[core]") {
  const ParamVector a = {1.0, 2.0, -3.5};
  const ParamVector b = {0.5, -1.0, 2.25};
  const ParamVector s = add(a, b);
  REQUIRE(s[0] == 1.5);
  REQUIRE(s[1] == 1.0);
  REQUIRE(s[2] == -1.25);
  const ParamVector d = sub(a, b);
  REQUIRE(d[0] == 0.5);
  REQUIRE(d[1] == 3.0);
  REQUIRE(d[2] == -5.75);
  const ParamVector sc = scale(2.0, a);
  REQUIRE(sc[0] == 2.0);
  REQUIRE(sc[1] == 4.0);
  REQUIRE(sc[2] == -7.0);
  REQUIRE(dot(a, b) == 0.5 - 2.0 - 7.875);
}

TEST_CASE("check_finite flags NaN and Inf", "[core]") {
  ParamVector v = {1.0, 2.0};
  check_finite(v, "ok");
  v[1] = std::numeric_limits<double>::infinity();
  REQUIRE_THROWS_AS(check_finite(v, "bad"), NumericError);
  v[1] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(check_finite(v, "bad"), NumericError);
}

TEST_CASE("seed derivation separates streams and is order sensitive", "[core]") {
  REQUIRE(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  REQUIRE(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  REQUIRE(derive_seed(1, {stream::kClientLocal, 0, 1}) !=
          derive_seed(1, {stream::kSampling, 0, 1}));
  REQUIRE(client_seed(9, 4, 2) == client_seed(9, 4, 2));
  REQUIRE(client_seed(9, 4, 2) != client_seed(9, 4, 3));
  REQUIRE(client_seed(9, 4, 2) != client_seed(9, 5, 2));
}
