// Copyright 2026 The softcrowd Authors
// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

using namespace softcrowd;

TEST_CASE("property: closed-loop Jacobian has spectral radius below one") {
  const auto r = oracle::spectral_radius_suite(17, 200);
  CHECK(r.instances == 800);
  CHECK(r.violations == 0);
  CHECK(r.worst_radius < 1.0);
  // The step function is exactly the linear map (1 - beta) G + beta S.
  CHECK(r.worst_jacobian_mismatch <= 1e-15);
}

TEST_CASE("property: noiseless step contracts the Euclidean norm by m") {
  const auto r = oracle::contraction_norm_suite(3, 1000);
  CHECK(r.states == 1000);
  CHECK(r.violations == 0);
}

TEST_CASE("property: bounded noise keeps the sup-norm within delta / (1 - m)") {
  const auto r = oracle::bounded_noise_suite(5, 100);
  CHECK(r.configs == 100);
  CHECK(r.violations == 0);
}

TEST_CASE("property: simulated mean MSE respects the one-step bound recursion") {
  CrowdConfig c;
  c.n = 39;
  c.gains = {0.75};
  c.noise_sigma = 60.0;
  c.init = TargetMseInit{72000.0};
  const auto r = oracle::mse_recursion_check(c, {0.0, 0.1, 0.32, 0.6, 0.9}, 30, 5000, 21);
  CHECK(r.worst_excess_in_se <= 3.0);

  c.gains = {0.96};
  c.noise_sigma = 4.0;
  c.n = 50;
  c.state_bound = 50.0;
  c.init = TargetMseInit{16.0 / 0.03, 0.0};
  const auto s = oracle::mse_recursion_check(c, {0.0, 0.35}, 69, 5000, 22);
  CHECK(s.worst_excess_in_se <= 3.0);
}
